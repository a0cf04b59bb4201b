"""Command-line entry point: ``lorenz-spec <command> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness as H
from .errors import InvalidParams, ModelError

COMMANDS = (
    "simulate", "return-map", "verify-hyperbolic", "manifolds", "certify-gap",
    "test-spec", "mixing", "control-catmap", "reproduce-all",
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lorenz-spec", description="Geometric Lorenz specification experiments")
    p.add_argument("--config", type=Path, help="key=value config file")
    p.add_argument("--out", type=Path, help="run directory (overrides the config)")
    p.add_argument("--seed", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate")
    s.add_argument("--t-max", type=float, default=100.0)
    s.add_argument("--x0", type=float, default=0.3)
    s.add_argument("--y0", type=float, default=0.1)
    s.add_argument("--dt", type=float, default=0.01)

    s = sub.add_parser("return-map")
    s.add_argument("--n-max", type=int, default=6)

    s = sub.add_parser("verify-hyperbolic")
    s.add_argument("--returns", type=int, default=400)

    sub.add_parser("manifolds")

    s = sub.add_parser("certify-gap")
    s.add_argument("--T", type=float, default=50.0)

    s = sub.add_parser("test-spec")
    s.add_argument("--T-sweep", type=float, nargs="+")
    s.add_argument("--baseline", type=Path, help="compare against (or with --write-baseline, create) this baseline")
    s.add_argument("--write-baseline", action="store_true")

    sub.add_parser("mixing")

    s = sub.add_parser("control-catmap")
    s.add_argument("--instances", type=int)

    sub.add_parser("reproduce-all")
    return p


def _config(args) -> H.RunConfig:
    cfg = H.RunConfig.load(args.config) if args.config else H.RunConfig()
    over = {"out_dir": args.out, "seed": args.seed}
    if getattr(args, "T_sweep", None):
        over["T_sweep"] = tuple(args.T_sweep)
    if getattr(args, "instances", None):
        over["cat_instances"] = args.instances
    return cfg.with_overrides(**over)


def _dispatch(args, cfg: H.RunConfig) -> tuple[dict, int]:
    cmd = args.command
    if cmd == "simulate":
        return H.run_simulate(cfg, args.t_max, args.x0, args.y0, args.dt), H.EXIT_OK
    if cmd == "return-map":
        return H.run_return_map(cfg, args.n_max), H.EXIT_OK
    if cmd == "verify-hyperbolic":
        return H.run_verify_hyperbolic(cfg, args.returns), H.EXIT_OK
    if cmd == "manifolds":
        return H.run_manifolds(cfg), H.EXIT_OK
    if cmd == "certify-gap":
        return H.run_certify_gap(cfg, args.T), H.EXIT_OK
    if cmd == "test-spec":
        rep = H.run_test_spec(cfg)
        code = H.EXIT_OK if rep["all_exhausted"] else H.EXIT_CERT_FAILED
        if args.baseline:
            base = H.baseline_from_report(cfg, rep)
            if args.write_baseline:
                H.write_json(args.baseline, base.to_dict())
            else:
                bad = H.RegressionBaseline.load(args.baseline).compare(base.values, cfg.config_hash())
                rep = {"all_exhausted": rep["all_exhausted"], "baseline_mismatches": bad}
                code = code or (H.EXIT_CERT_FAILED if bad else H.EXIT_OK)
        return rep, code
    if cmd == "mixing":
        rep = H.run_mixing(cfg)
        ok = rep["lorenz"]["mixing"] and rep["catmap"]["mixing"] and not rep["rotation"]["mixing"]
        return rep, H.EXIT_OK if ok else H.EXIT_CERT_FAILED
    if cmd == "control-catmap":
        rep = H.run_control_catmap(cfg)
        return rep, H.EXIT_OK if rep["n_witness"] == rep["n_instances"] else H.EXIT_CERT_FAILED
    if cmd == "reproduce-all":
        rep = H.reproduce_all(cfg)
        return rep, H.EXIT_OK if rep["headline_ok"] else H.EXIT_CERT_FAILED
    raise AssertionError(cmd)


def _brief(rep: dict) -> dict:
    # keep stdout readable; full reports live in the run directory
    return {k: v for k, v in H.to_jsonable(rep).items() if not isinstance(v, list) or len(v) <= 8}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
    except (InvalidParams, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return H.EXIT_BAD_CONFIG
    try:
        rep, code = _dispatch(args, cfg)
    except InvalidParams as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return H.EXIT_BAD_CONFIG
    except ModelError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return H.EXIT_ERROR
    print(json.dumps(_brief(rep), sort_keys=True, indent=2))
    return code


if __name__ == "__main__":
    sys.exit(main())
