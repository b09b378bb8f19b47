#!/usr/bin/env python3
"""Smoke test for the mafd_py extension module.

Builds nothing itself: run `cargo build --release -p mafd-py` first, then
`python3 python/smoke_test.py`. The script copies the cdylib next to itself
under the importable name and exercises the main surface with a tiny budget.
"""

import pathlib
import shutil
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def import_extension():
    candidates = [
        ROOT / "target" / "release" / "libmafd_py.so",
        ROOT / "target" / "debug" / "libmafd_py.so",
        ROOT / "target" / "release" / "libmafd_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build --release -p mafd-py")
    dest = pathlib.Path(__file__).resolve().parent / "mafd_py.so"
    if not dest.exists() or built.stat().st_mtime > dest.stat().st_mtime:
        shutil.copy2(built, dest)
    sys.path.insert(0, str(dest.parent))
    import mafd_py

    return mafd_py


def main():
    mafd_py = import_extension()
    print(f"schemes: {mafd_py.SCHEMES}")

    # Tiny configuration so the whole script stays fast.
    cfg = mafd_py.Config.desk()
    cfg.set_antennas(2)
    cfg.set_users(1, 1, 1)
    cfg.set_budgets(8, 6, 8, 3)
    cfg.seed = 7
    cfg.validate()
    print(f"config: {cfg!r}")

    scenario = mafd_py.Scenario.build(cfg, 42)
    print(f"scenario: {scenario!r}")
    assert len(scenario.ul_positions) == 1
    round_trip = mafd_py.Scenario.from_json(scenario.to_json())
    assert round_trip.seed == scenario.seed

    # A fixed-array run and the full pipeline, deterministic per seed.
    fpa = mafd_py.run_scheme(cfg, scenario, "fpa")
    proposed = mafd_py.run_scheme(cfg, scenario, "proposed")
    again = mafd_py.run_scheme(cfg, scenario, "proposed")
    print(f"fpa: {fpa!r}")
    print(f"proposed: {proposed!r}")
    assert fpa.ssr >= 0.0 and proposed.ssr >= 0.0
    assert proposed.ssr == again.ssr, "same seed must reproduce the same result"
    assert len(proposed.breakdown) == 2  # one uplink + one downlink user

    # Layout evaluation: the returned value is a finite nonnegative rate.
    ssr = mafd_py.evaluate_layout(
        cfg, scenario, [[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [1.0, 1.0]]
    )
    assert ssr >= 0.0
    print(f"evaluate_layout: {ssr:.4f} bits/s/Hz")

    # Aggregates over two trials and two schemes.
    stats = mafd_py.monte_carlo(cfg, ["proposed", "fpa"], 2, 1)
    for row in stats:
        print(
            f"monte_carlo {row['scheme']}: mean {row['mean_ssr']:.4f} "
            f"(n={row['n']}, failures={row['failures']})"
        )
        assert row["n"] == 2 and row["failures"] == 0

    # Built-in property checks.
    failures = [name for name, ok, _ in mafd_py.selftest(1) if not ok]
    assert not failures, f"selftest failures: {failures}"
    print("selftest: all checks passed")

    print("smoke test OK")


if __name__ == "__main__":
    main()
