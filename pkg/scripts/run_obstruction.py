"""Obstruction sweep: certify a gap per T and search the cross-section grid.

    python3 scripts/run_obstruction.py --T 30 50 80 --out runs/obstruction
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field
from pathlib import Path

from lorenz_spec.harness import write_json
from lorenz_spec.params import DEFAULT_PARAMS
from lorenz_spec.specification import ObstructionConfig, run_obstruction_experiment


@dataclass
class Args:
    T: list[float] = field(default_factory=lambda: [30.0, 50.0, 80.0])
    eps_factor: float = 0.5
    h: float = 1e-4
    out: Path = Path("runs/obstruction")


def parse() -> Args:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=float, nargs="+", default=Args().T)
    ap.add_argument("--eps-factor", type=float, default=Args.eps_factor)
    ap.add_argument("--h", type=float, default=Args.h)
    ap.add_argument("--out", type=Path, default=Args.out)
    ns = ap.parse_args()
    return Args(ns.T, ns.eps_factor, ns.h, ns.out)


def main() -> None:
    a = parse()
    cfg = ObstructionConfig(T_sweep=tuple(a.T), eps_factor=a.eps_factor, h=a.h)
    rep = run_obstruction_experiment(DEFAULT_PARAMS, cfg)
    print(f"{'T':>6} {'#proj':>5} {'d*':>9} {'eps':>9} {'outcome':>20} {'best':>9} {'lower bd':>9}")
    for r in rep.rows:
        res = r.result
        if res is None:
            print(f"{r.T:6g}  {r.note}")
            continue
        print(f"{r.T:6g} {r.n_projected:5d} {r.d_star:9.4g} {r.eps:9.4g} {res.outcome.value:>20} {res.deviation:9.4g} {res.meta['min_lower_bound']:9.4g}")
    print("path:", write_json(a.out / "obstruction.json", rep.to_dict()))


if __name__ == "__main__":
    main()
