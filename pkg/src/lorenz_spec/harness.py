"""Run configuration, artifact writing, pipelines, and regression baselines."""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidParams
from .params import DEFAULT_PARAMS, GeometricLorenzParams, dump_params, params_from_mapping, parse_key_values

log = logging.getLogger("lorenz_spec")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CERT_FAILED = 2
EXIT_BAD_CONFIG = 3


@dataclass
class RunConfig:
    params: GeometricLorenzParams = DEFAULT_PARAMS
    seed: int = 0
    T_sweep: tuple[float, ...] = (30.0, 50.0, 80.0)
    T_short: float = 5.0
    eps_factor: float = 0.5
    h: float = 1e-4
    mu: float = 0.1
    T1: float = 20.0
    T2: float = 20.0
    bowen_samples: int = 1000
    cat_instances: int = 20
    cat_eps: float = 0.05
    mixing_intervals: int = 1024
    out_dir: Path = Path("runs/default")

    _SCALARS = {
        "seed": int, "T_short": float, "eps_factor": float, "h": float, "mu": float, "T1": float, "T2": float,
        "bowen_samples": int, "cat_instances": int, "cat_eps": float, "mixing_intervals": int,
    }

    def validate(self) -> None:
        self.params.validate()
        if not (0 < self.eps_factor < 1):
            raise InvalidParams("eps_factor must lie in (0, 1) so that eps stays below the critical value")
        if self.h <= 0 or self.mu <= 0 or self.cat_eps <= 0:
            raise InvalidParams("h, mu and cat_eps must be positive")
        if not self.T_sweep or min(self.T_sweep) <= 0:
            raise InvalidParams("T_sweep must be a non-empty list of positive times")
        if self.bowen_samples < 1 or self.cat_instances < 1 or self.mixing_intervals < 2:
            raise InvalidParams("sample counts must be positive")

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "RunConfig":
        kw: dict[str, Any] = {"params": params_from_mapping(values)}
        param_keys = set(GeometricLorenzParams.__dataclass_fields__) | {"a"}
        for key, raw in values.items():
            if key in param_keys:
                continue
            try:
                if key in cls._SCALARS:
                    kw[key] = cls._SCALARS[key](raw)
                elif key == "T_sweep":
                    kw[key] = tuple(float(v) for v in raw.replace(",", " ").split())
                elif key == "out_dir":
                    kw[key] = Path(raw)
                else:
                    raise InvalidParams(f"unknown config key {key!r}")
            except ValueError as exc:
                raise InvalidParams(f"{key}: cannot parse {raw!r}") from exc
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_mapping(parse_key_values(Path(path).read_text()))

    def with_overrides(self, **kw) -> "RunConfig":
        cfg = dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})
        cfg.validate()
        return cfg

    def to_text(self) -> str:
        lines = [dump_params(self.params)]
        for key in ("seed", "T_short", "eps_factor", "h", "mu", "T1", "T2", "bowen_samples", "cat_instances", "cat_eps", "mixing_intervals"):
            lines.append(f"{key} = {getattr(self, key)!r}\n")
        lines.append(f"T_sweep = {', '.join(repr(t) for t in self.T_sweep)}\n")
        return "".join(lines)

    def config_hash(self) -> str:
        """Hash of everything that affects results (the output directory does not)."""
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# serialization


def to_jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(obj.to_dict() if hasattr(obj, "to_dict") else dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, enum.Enum):
        return to_jsonable(obj.value)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))
    return path


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return path


def read_csv_columns(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for i, name in enumerate(header):
        try:
            cols[name] = np.array([float(r[i]) for r in body])
        except ValueError:
            cols[name] = np.array([r[i] for r in body])
    return cols


# ---------------------------------------------------------------------------
# regression baselines


@dataclass
class RegressionBaseline:
    """Named scalar outcomes with absolute tolerances, tied to the producing config."""

    config_hash: str
    values: dict[str, float] = field(default_factory=dict)
    tolerances: dict[str, float] = field(default_factory=dict)

    def record(self, name: str, value: float, tol: float) -> None:
        self.values[name] = float(value)
        self.tolerances[name] = float(tol)

    def compare(self, other: dict[str, float], config_hash: str) -> list[str]:
        """Mismatch descriptions; empty when everything agrees."""
        if config_hash != self.config_hash:
            return [f"config hash {config_hash} differs from baseline {self.config_hash}"]
        bad = []
        for name, ref in self.values.items():
            got = other.get(name)
            if got is None or abs(got - ref) > self.tolerances[name]:
                bad.append(f"{name}: got {got}, baseline {ref} +- {self.tolerances[name]}")
        return bad

    def to_dict(self) -> dict:
        return {"config_hash": self.config_hash, "values": self.values, "tolerances": self.tolerances}

    @classmethod
    def load(cls, path: str | Path) -> "RegressionBaseline":
        d = json.loads(Path(path).read_text())
        return cls(d["config_hash"], d["values"], d["tolerances"])


def prepare_run_dir(cfg: RunConfig, sub: str = "") -> Path:
    out = Path(cfg.out_dir) / sub if sub else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (Path(cfg.out_dir) / "config.txt").write_text(cfg.to_text())
    return out


# ---------------------------------------------------------------------------
# pipelines; each writes its artifacts and returns a JSON-ready summary


def run_simulate(cfg: RunConfig, t_max: float = 100.0, x0: float = 0.3, y0: float = 0.1, dt: float = 0.01) -> dict:
    from .flow import State3, sample_orbit
    from .svg import Figure

    out = prepare_run_dir(cfg, "simulate")
    traj = sample_orbit(cfg.params, State3.on_sigma(x0, y0), t_max, dt)
    traj.to_csv(out / "trajectory.csv")
    traj.crossings_to_csv(out / "crossings.csv")
    cols = read_csv_columns(out / "trajectory.csv")
    Figure(title="trajectory, x-z projection").line(cols["x"], cols["z"]).save(out / "trajectory.svg")
    return {"samples": len(traj.times), "crossings": len(traj.crossings), "t_max": t_max, "start": [x0, y0]}


def run_return_map(cfg: RunConfig, n_max: int = 6, n_iter: int = 2000) -> dict:
    from .return_map import find_periodic, iterate, periodic_catalog_csv
    from .svg import Figure

    out = prepare_run_dir(cfg, "return_map")
    catalog = [q for n in range(1, n_max + 1) for q in find_periodic(cfg.params, n, require=False)]
    periodic_catalog_csv(catalog, out / "periodic.csv")
    pts = iterate(cfg.params, (0.3, 0.1), n_iter)
    write_csv(out / "iterates.csv", ["x", "y"], pts.tolist())
    cols = read_csv_columns(out / "iterates.csv")
    Figure(title="return map attractor").scatter(cols["x"], cols["y"]).save(out / "return_map.svg")
    counts = {n: sum(q.period_n == n for q in catalog) for n in range(1, n_max + 1)}
    return {"periodic_counts": counts, "n_iterates": n_iter}


def run_verify_hyperbolic(cfg: RunConfig, n_returns: int = 400, t_max: float = 1000.0) -> dict:
    from .hyperbolicity import splitting_report
    from .return_map import sigma_orbit

    out = prepare_run_dir(cfg, "hyperbolic")
    orbit = sigma_orbit(cfg.params, 0.3, 0.1, n_returns)
    rep = splitting_report(cfg.params, orbit, t_max)
    write_json(out / "splitting.json", rep)
    return rep


def _chart(cfg: RunConfig):
    from .manifolds import bowen_ball_in_stable, build_holonomy_chart
    from .return_map import lowest_period_orbit

    q = lowest_period_orbit(cfg.params)
    bowen = bowen_ball_in_stable(cfg.params, q, n_samples=cfg.bowen_samples, seed=cfg.seed)
    L = max(bowen.L_measured, 1.0) if math.isfinite(bowen.L_measured) else bowen.L_bound
    return q, bowen, build_holonomy_chart(cfg.params, q, mu=cfg.mu, L_const=L)


def run_manifolds(cfg: RunConfig) -> dict:
    from .hyperbolicity import check_tangency_unstable_in_center
    from .svg import Figure

    out = prepare_run_dir(cfg, "manifolds")
    q, bowen, chart = _chart(cfg)
    ok, worst = check_tangency_unstable_in_center(cfg.params, q, curve=chart.curve)
    xs = np.linspace(chart.curve.x_min, chart.curve.x_max, 400)
    write_csv(out / "unstable_curve.csv", ["x", "y"], np.column_stack([xs, chart.curve(xs)]).tolist())
    cols = read_csv_columns(out / "unstable_curve.csv")
    Figure(title="local unstable curve of the cycle").line(cols["x"], cols["y"]).save(out / "unstable_curve.svg")
    rep = {"chart": chart.to_dict(), "bowen": bowen, "tangency_ok": bool(ok), "tangency_worst": worst}
    write_json(out / "manifolds.json", rep)
    return rep


def run_certify_gap(cfg: RunConfig, T: float = 50.0) -> dict:
    from .manifolds import find_gap_interval, project_separatrix
    from .svg import Figure

    out = prepare_run_dir(cfg, "certify_gap")
    _, _, chart = _chart(cfg)
    cert = find_gap_interval(project_separatrix(chart, T), chart, cfg.h)
    rep = cert.to_dict()
    rep["L_const"] = chart.L_const
    rep["eps_crit"] = cert.d_star / (2 * chart.L_const)
    path = write_json(out / f"gap_T{T:g}.json", rep)
    # the figure is drawn from the file just written
    d = json.loads(path.read_text())
    proj = np.asarray(d["projected_points"], float)
    g0, g1 = d["gap_interval"]
    fig = Figure(title=f"projected separatrix points, T={T:g}")
    fig.scatter(proj, np.zeros_like(proj))
    fig.line([g0, g1], [0.0, 0.0]).line([-d["mu"], d["mu"]], [0.05, 0.05], color="#999")
    fig.save(out / f"gap_T{T:g}.svg")
    return rep


def run_test_spec(cfg: RunConfig) -> dict:
    from .specification import ObstructionConfig, run_obstruction_experiment

    out = prepare_run_dir(cfg, "test_spec")
    ocfg = ObstructionConfig(
        T_sweep=tuple(cfg.T_sweep), T_short=cfg.T_short, eps_factor=cfg.eps_factor, mu=cfg.mu, h=cfg.h,
        T1=cfg.T1, T2=cfg.T2, bowen_samples=cfg.bowen_samples, seed=cfg.seed,
    )
    rep = run_obstruction_experiment(cfg.params, ocfg, log=log.info).to_dict()
    rep["resolution_note"] = f"certificates hold at grid spacing h={cfg.h} and the stated T values only"
    write_json(out / "obstruction.json", rep)
    rows = []
    for r in rep["rows"]:
        res = r["result"] or {}
        rows.append([r["T"], r["n_projected"], r["clearance"], r["d_star"], r["eps"], res.get("outcome", "NoGap"), res.get("deviation")])
    write_csv(out / "obstruction.csv", ["T", "n_projected", "clearance", "d_star", "eps", "outcome", "best_deviation"], rows)
    return rep


def run_mixing(cfg: RunConfig) -> dict:
    from .catmap import TorusCatSystem
    from .mixing import catmap_box_graph, lorenz_box_graph, rotation_box_graph, test_mixing

    out = prepare_run_dir(cfg, "mixing")
    rep = {
        "lorenz": test_mixing(lorenz_box_graph(cfg.params, cfg.mixing_intervals)).to_dict(),
        "catmap": test_mixing(catmap_box_graph(TorusCatSystem())).to_dict(),
        "rotation": test_mixing(rotation_box_graph()).to_dict(),
    }
    write_json(out / "mixing.json", rep)
    return rep


def run_control_catmap(cfg: RunConfig) -> dict:
    from .catmap import TorusCatSystem, random_instance, search_gluing_cat

    out = prepare_run_dir(cfg, "catmap")
    system = TorusCatSystem()
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.cat_instances):
        inst = random_instance(system, rng, n=10, eps=cfg.cat_eps)
        res = search_gluing_cat(system, inst)
        log.info("cat instance %d: %s (%.4g)", i, res.outcome.value, res.deviation)
        rows.append({"instance": dataclasses.asdict(inst), "result": res.to_dict()})
    n_wit = sum(r["result"]["outcome"] == "Witness" for r in rows)
    rep = {"n_instances": len(rows), "n_witness": n_wit, "eps": cfg.cat_eps, "rows": rows}
    write_json(out / "catmap.json", rep)
    return rep


def reproduce_all(cfg: RunConfig, timings: dict | None = None) -> dict:
    """Obstruction sweep, cat-map control and mixing checks, plus ``summary.json``.

    Wall-clock times go into ``timings`` when given; they are kept out of
    the JSON so that reports stay byte-identical across runs.
    """
    import time

    timings = {} if timings is None else timings
    out = prepare_run_dir(cfg)
    t0 = time.perf_counter()
    spec = run_test_spec(cfg)
    t1 = time.perf_counter()
    cat = run_control_catmap(cfg)
    t2 = time.perf_counter()
    mix = run_mixing(cfg)
    timings.update(test_spec=t1 - t0, control_catmap=t2 - t1, mixing=time.perf_counter() - t2)
    summary = {
        "config_hash": cfg.config_hash(),
        "mixing": bool(mix["lorenz"]["mixing"]),
        "mixing_catmap": bool(mix["catmap"]["mixing"]),
        "mixing_rotation_control": bool(mix["rotation"]["mixing"]),
        "specification_lorenz": "fail" if spec["all_exhausted"] else "pass",
        "specification_catmap": "pass" if cat["n_witness"] == cat["n_instances"] else "fail",
        "T_sweep": list(cfg.T_sweep),
        "resolution_note": spec["resolution_note"],
    }
    summary["headline_ok"] = (
        summary["mixing"] and summary["specification_lorenz"] == "fail" and summary["specification_catmap"] == "pass"
    )
    write_json(out / "summary.json", summary)
    return summary


def baseline_from_report(cfg: RunConfig, obstruction: dict) -> RegressionBaseline:
    base = RegressionBaseline(cfg.config_hash())
    for row in obstruction["rows"]:
        if row["result"] is None:
            continue
        tag = f"T{row['T']:g}"
        base.record(f"d_star_{tag}", row["d_star"], 1e-6)
        base.record(f"clearance_{tag}", row["clearance"], 1e-6)
        base.record(f"n_projected_{tag}", row["n_projected"], 0.0)
    return base
