import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evosample.data import make_synthetic
from evosample.errors import ConfigError
from evosample.genome import (
    FitnessKind,
    GenomeConfig,
    Individual,
    MemberGenome,
    Mode,
    MutationOp,
    crossover_two_point,
    init_individual,
    member_keys,
    mutate,
)
from evosample.tree import fit


@pytest.fixture
def ds12():
    return make_synthetic(100, 12, 0.1, np.random.default_rng(1))


def test_init_has_k_fitted_members(ds12):
    ind = init_individual(ds12, GenomeConfig(ensemble_size=10), FitnessKind.FEMPO,
                          np.random.default_rng(0))
    assert len(ind.members) == 10
    assert ind.fitness is None
    for m in ind.members:
        assert m.model is not None
        assert m.bag.size == 100
        assert m.features == tuple(range(12))
        assert m.private_test.size == 0


def test_bootstrap_distinct_rows_matches_expectation(ds12):
    expected = 100 * (1 - (1 - 1 / 100) ** 100)  # about 63.4
    cfg = GenomeConfig(ensemble_size=10, max_depth=1)
    counts = []
    for seed in range(40):
        ind = init_individual(ds12, cfg, FitnessKind.FEMPO, np.random.default_rng(seed))
        counts += [np.unique(m.bag).size for m in ind.members]
    assert abs(np.mean(counts) - expected) < 1.0


def test_sub_spacing_feature_count(ds12):
    cfg = GenomeConfig(mode=Mode.SUB_SPACING, feature_fraction=0.5)
    ind = init_individual(ds12, cfg, FitnessKind.FEMPO, np.random.default_rng(0))
    for m in ind.members:
        assert len(m.features) == 6 == len(set(m.features))
        assert set(m.model.feature_ids) == set(m.features)


def test_fempt_reserves_private_rows(ds12):
    cfg = GenomeConfig(private_test_fraction=0.2)
    ind = init_individual(ds12, cfg, FitnessKind.FEMPT, np.random.default_rng(0))
    for m in ind.members:
        assert m.private_test.size == 20
        assert m.bag.size == 80
        assert not set(m.bag.tolist()) & set(m.private_test.tolist())


def test_config_validation():
    with pytest.raises(ConfigError):
        GenomeConfig(ensemble_size=2)
    with pytest.raises(ConfigError):
        GenomeConfig(bag_fraction=0.0)
    with pytest.raises(ConfigError):
        GenomeConfig(feature_fraction=1.5)


def test_bag_below_floor_is_rejected():
    ds = make_synthetic(8, 2, 0.1, np.random.default_rng(0))
    with pytest.raises(ConfigError):
        init_individual(ds, GenomeConfig(floor_rows=10), FitnessKind.FEMPO, np.random.default_rng(0))


def _member(ds, bag, feats, private=()):
    return MemberGenome(np.asarray(bag), tuple(feats), np.asarray(private, dtype=int)).refit(ds, 3)


def test_insert_saturated_features_is_noop_but_refits(ds12):
    cfg = GenomeConfig(mode=Mode.SUB_SPACING, ensemble_size=3)
    members = tuple(_member(ds12, np.arange(100), range(12)) for _ in range(3))
    ind = Individual(members, fitness=1.0)
    out = mutate(ind, ds12, cfg, np.random.default_rng(0), op=MutationOp.INSERT)
    assert out.fitness is None
    changed = [i for i in range(3) if out.members[i] is not ind.members[i]]
    assert len(changed) == 1
    m = out.members[changed[0]]
    assert m.features == tuple(range(12))
    assert m.model is not members[changed[0]].model


def test_delete_rows_arithmetic(ds12):
    cfg = GenomeConfig(ensemble_size=3, mutation_intensity=0.1)
    members = tuple(_member(ds12, np.arange(100), range(12)) for _ in range(3))
    out = mutate(Individual(members), ds12, cfg, np.random.default_rng(0), op=MutationOp.DELETE)
    sizes = sorted(m.bag.size for m in out.members)
    assert sizes == [90, 100, 100]


def test_delete_respects_floors(ds12):
    cfg = GenomeConfig(mode=Mode.SUB_SAMPLING, ensemble_size=3, floor_rows=10, mutation_intensity=1.0)
    members = tuple(_member(ds12, np.arange(12), range(12)) for _ in range(3))
    out = mutate(Individual(members), ds12, cfg, np.random.default_rng(0), op=MutationOp.DELETE)
    assert min(m.bag.size for m in out.members) == 10
    cfg = GenomeConfig(mode=Mode.SUB_SPACING, ensemble_size=3, mutation_intensity=1.0)
    members = tuple(_member(ds12, np.arange(50), [3]) for _ in range(3))
    out = mutate(Individual(members), ds12, cfg, np.random.default_rng(0), op=MutationOp.DELETE)
    assert all(m.features == (3,) for m in out.members)


def test_replace_keeps_size(ds12):
    cfg = GenomeConfig(mode=Mode.SUB_SPACING, ensemble_size=3, mutation_intensity=0.5)
    members = tuple(_member(ds12, np.arange(50), [0, 1, 2, 3]) for _ in range(3))
    out = mutate(Individual(members), ds12, cfg, np.random.default_rng(3), op=MutationOp.REPLACE)
    assert all(len(m.features) == 4 for m in out.members)


def test_untouched_members_keep_trees(ds12):
    cfg = GenomeConfig(ensemble_size=5)
    ind = init_individual(ds12, cfg, FitnessKind.FEMPO, np.random.default_rng(0))
    out = mutate(ind, ds12, cfg, np.random.default_rng(1))
    same = sum(a is b for a, b in zip(ind.members, out.members))
    assert same == 4


def test_mutate_operation_frequencies_end_to_end():
    ds = make_synthetic(40, 1, 0.1, np.random.default_rng(0))
    cfg = GenomeConfig(mode=Mode.SUB_SAMPLING, ensemble_size=3, floor_rows=1,
                       mutation_intensity=0.1, max_depth=1)
    members = tuple(_member(ds, np.arange(40), range(1)) for _ in range(3))
    ind = Individual(members)
    counts = {"delete": 0, "replace": 0, "insert": 0}
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        out = mutate(ind, ds, cfg, rng)
        [m] = [m for a, m in zip(ind.members, out.members) if a is not m]
        if m.bag.size < 40:
            counts["delete"] += 1
        elif m.bag.size > 40:
            counts["insert"] += 1
        else:
            counts["replace"] += 1
    freqs = [c / 10_000 for c in counts.values()]
    assert all(0.31 <= f <= 0.35 for f in freqs), counts


def test_insert_never_uses_private_rows(ds12):
    cfg = GenomeConfig(ensemble_size=3, mutation_intensity=1.0)
    rng = np.random.default_rng(0)
    ind = init_individual(ds12, cfg, FitnessKind.FEMPT, rng)
    for _ in range(50):
        ind = mutate(ind, ds12, cfg, rng, op=MutationOp.INSERT)
    for m in ind.members:
        assert not set(m.bag.tolist()) & set(m.private_test.tolist())


def _labelled(prefix, k):
    return Individual(tuple(
        MemberGenome(np.array([i]), (0,), np.empty(0, dtype=int)) for i in range(k)
    ))


def test_crossover_known_cuts():
    a, b = _labelled("A", 10), _labelled("B", 10)
    ca, cb = crossover_two_point(a, b, np.random.default_rng(0), cuts=(3, 7))
    assert ca.members == a.members[:3] + b.members[3:7] + a.members[7:]
    assert cb.members == b.members[:3] + a.members[3:7] + b.members[7:]
    assert ca.fitness is None and cb.fitness is None


def test_crossover_identical_parents():
    a = _labelled("A", 5)
    ca, cb = crossover_two_point(a, a, np.random.default_rng(0))
    assert ca.members == a.members == cb.members


def test_crossover_cut_distribution_uniform():
    k = 5
    a, b = _labelled("A", k), _labelled("B", k)
    rng = np.random.default_rng(0)
    seen = {}
    for _ in range(6000):
        ca, _ = crossover_two_point(a, b, rng)
        swapped = tuple(i for i in range(k) if ca.members[i] is b.members[i])
        seen[swapped] = seen.get(swapped, 0) + 1
    # (K-1)(K-2)/2 = 6 admissible cut pairs, never touching the ends.
    assert len(seen) == 6
    assert all(0 not in s and k - 1 not in s for s in seen)
    assert all(abs(c / 6000 - 1 / 6) < 0.03 for c in seen.values())


def test_crossover_rejects_small():
    a = Individual(_labelled("A", 2).members)
    with pytest.raises(ConfigError):
        crossover_two_point(a, a, np.random.default_rng(0))


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_crossover_conserves_members(k, seed):
    rng = np.random.default_rng(seed)
    a = Individual(tuple(MemberGenome(rng.integers(0, 9, 3), (0,), np.empty(0, int)) for _ in range(k)))
    b = Individual(tuple(MemberGenome(rng.integers(0, 9, 3), (1,), np.empty(0, int)) for _ in range(k)))
    ca, cb = crossover_two_point(a, b, rng)
    assert member_keys([a, b]) == member_keys([ca, cb])
    assert len(ca) == len(cb) == k


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(list(Mode)), st.sampled_from(list(FitnessKind)))
def test_mutation_sequences_keep_invariants(seed, mode, kind):
    rng = np.random.default_rng(seed)
    ds = make_synthetic(30, 5, 0.1, rng)
    cfg = GenomeConfig(mode=mode, ensemble_size=3, floor_rows=5, mutation_intensity=0.5, max_depth=2)
    ind = init_individual(ds, cfg, kind, rng)
    for _ in range(15):
        ind = mutate(ind, ds, cfg, rng)
    for m in ind.members:
        assert m.bag.size >= cfg.floor_rows
        assert 1 <= len(m.features) == len(set(m.features)) <= ds.n_cols
        assert m.bag.min() >= 0 and m.bag.max() < ds.n_rows
        assert not set(m.bag.tolist()) & set(m.private_test.tolist())
        assert m.model.to_dict() == fit(ds, m.bag, m.features, 2).to_dict()


def test_operators_are_deterministic(ds12):
    cfg = GenomeConfig(mode=Mode.SUB_SPACING)

    def run(seed):
        rng = np.random.default_rng(seed)
        a = init_individual(ds12, cfg, FitnessKind.FEMPO, rng)
        b = init_individual(ds12, cfg, FitnessKind.FEMPO, rng)
        ca, cb = crossover_two_point(a, b, rng)
        return member_keys([mutate(ca, ds12, cfg, rng), cb])

    assert run(5) == run(5)


def test_individual_json_validates(ds12):
    from evosample.schema import validate_individual

    ind = init_individual(ds12, GenomeConfig(ensemble_size=3), FitnessKind.FEMPT, np.random.default_rng(0))
    validate_individual(ind.to_json())
