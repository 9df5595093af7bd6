from evosample.cli import main

raise SystemExit(main())
