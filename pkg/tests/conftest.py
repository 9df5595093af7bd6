import numpy as np
import pytest

from evosample.data import Dataset, make_synthetic


@pytest.fixture
def synth() -> Dataset:
    return make_synthetic(80, 4, 0.2, np.random.default_rng(0))


@pytest.fixture
def synth_csv(tmp_path, synth):
    from evosample.data import write_csv

    path = tmp_path / "synth.csv"
    write_csv(synth, path)
    return path
