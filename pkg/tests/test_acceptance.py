"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the summary alone.
Criteria 6-8 share two full ``reproduce_all`` runs, cached per process.
"""

from __future__ import annotations

import functools
import json
import math
import tempfile
import time
from pathlib import Path

import numpy as np

from lorenz_spec import harness as H
from lorenz_spec.flow import State3, first_return, flow, flow_with_jacobian
from lorenz_spec.hyperbolicity import ConeParams, estimate_splitting, sectional_expansion_check, verify_cone_invariance
from lorenz_spec.manifolds import (
    Side,
    build_holonomy_chart,
    chart_injectivity,
    density_depth,
    find_gap_interval,
    project_separatrix,
    unstable_separatrix,
)
from lorenz_spec.params import DEFAULT_PARAMS, GeometricLorenzParams
from lorenz_spec.return_map import alpha, alpha_prime, beta, lowest_period_orbit, sigma_orbit

P = DEFAULT_PARAMS


def _line(n: int, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    print(line)
    return line


# ---------------------------------------------------------------------------


def criterion_1():
    t = time.perf_counter()
    p = GeometricLorenzParams(lambda1=1, lambda2=2, lambda3=0.8, k=1.9, b=0.3, c=0.6)
    p.validate()
    checks = {
        "k*a=1.52": math.isclose(p.k * p.a, 1.52) and p.k * p.a > math.sqrt(2),
        "alpha(1)=0.9": math.isclose(alpha(p, 1.0), 0.9) and alpha(p, 1.0) < 1,
        "alpha(1e-12)~-1": abs(alpha(p, 1e-12) + 1) < 1e-6,
        "alpha'(1e-6)>20": alpha_prime(p, 1e-6) > 20,
    }
    dt = time.perf_counter() - t
    ok = all(checks.values()) and dt < 1.0
    return ok, f"model validity {checks}, {dt:.3f}s"


def criterion_2():
    t = time.perf_counter()
    rng = np.random.default_rng(2)
    x = rng.uniform(-1, 1, 1000)
    y = rng.uniform(-1, 1, 1000)
    worst_ret = worst_semi = 0.0
    for xi, yi in zip(x, y):
        x1, y1, _, _ = first_return(P, xi, yi)
        worst_ret = max(worst_ret, abs(x1 - alpha(P, xi)), abs(y1 - beta(P, xi, yi)))
        t1, t2 = rng.uniform(0, 5, 2)
        s = State3.on_sigma(xi, yi)
        a = flow(P, flow(P, s, t1), t2).xyz
        b = flow(P, s, t1 + t2).xyz
        worst_semi = max(worst_semi, float(np.abs(a - b).max()))
    dt = time.perf_counter() - t
    ok = worst_ret < 1e-9 and worst_semi < 1e-9 and dt < 10
    return ok, f"|return - L| max {worst_ret:.2e}, semigroup max {worst_semi:.2e}, {dt:.1f}s"


def _fd_jacobian(s, t, h=1e-7):
    J = np.zeros((3, 3))
    for j in range(3):
        d = np.zeros(3)
        d[j] = h
        plus = flow(P, State3(*(s.xyz + d)), t).xyz
        minus = flow(P, State3(*(s.xyz - d)), t).xyz
        J[:, j] = (plus - minus) / (2 * h)
    return J


def criterion_3():
    t = time.perf_counter()
    orbit = sigma_orbit(P, 0.3, 0.1, 10_000)
    sp = estimate_splitting(P, orbit)
    cone = verify_cone_invariance(P, ConeParams(1.0), orbit, 1, splitting=sp)
    sec = sectional_expansion_check(P, orbit, 1000.0)
    fd = 0.0
    for x0, y0, z0, tt in [(0.3, 0.1, 0.9, 0.5), (0.3, 0.1, 0.9, 2.0), (-0.55, -0.4, 0.9, 1.7), (0.8, 0.6, 0.9, 3.1)]:
        s = State3(x0, y0, z0)
        J = flow_with_jacobian(P, s, tt)[1]
        fd = max(fd, float(np.abs(J - _fd_jacobian(s, tt)).max() / max(1.0, np.abs(J).max())))
    dt = time.perf_counter() - t
    ok = (
        sp.lambda_prime < 1 and sp.worst_domination < 1 and cone.margin < 1
        and sec.rate > 0 and sec.residual < 0.05 and fd < 1e-4 and dt < 60
    )
    return ok, (
        f"lambda'={sp.lambda_prime:.3f}, domination={sp.worst_domination:.3f}, cone margin={cone.margin:.3f}, "
        f"sectional rate={sec.rate:.3f} (residual {sec.residual:.1%}), tangent vs FD {fd:.1e}, {dt:.1f}s"
    )


def criterion_4():
    q = lowest_period_orbit(P)
    chart = build_holonomy_chart(P, q)
    rng = np.random.default_rng(4)
    worst_c = 0.0
    for _ in range(200):
        x = rng.uniform(0.01, 1) * rng.choice([-1, 1])
        y1, y2 = rng.uniform(-1, 1, 2)
        _, a1, _, _ = first_return(P, x, y1)
        _, a2, _, _ = first_return(P, x, y2)
        worst_c = max(worst_c, abs(abs(a1 - a2) / abs(y1 - y2) - P.b * abs(x) ** (P.lambda2 / P.lambda1)))
    worst_h = 0.0
    for u, v in rng.uniform(-chart.mu, chart.mu, (20, 2)):
        p = (chart.x_star + u, float(chart.curve(chart.x_star + u)) + v)
        for tt in rng.uniform(-chart.mu, chart.mu, 3):
            worst_h = max(worst_h, abs(chart.pi(flow(P, State3.on_sigma(*p), float(tt))) - chart.pi_pi_s(p)))
    sep = chart_injectivity(chart, n=200)
    N, achieved = density_depth(P, [q.x_star, -q.x_star], delta=1e-2, n_max=30)
    ok = worst_c < 1e-10 and worst_h < 1e-8 and sep > 0 and N is not None and N <= 30
    return ok, f"leaf contraction err {worst_c:.1e}, holonomy err {worst_h:.1e}, 200x200 min sep {sep:.1e}, density N={N}"


def criterion_5():
    t = time.perf_counter()
    q = lowest_period_orbit(P)
    chart = build_holonomy_chart(P, q)
    segs = [unstable_separatrix(P, s, 60.0, dt=0.01) for s in Side]
    cert = find_gap_interval(project_separatrix(chart, 50.0, segs), chart, 1e-4)
    half = find_gap_interval(project_separatrix(chart, 50.0), chart, 5e-5)
    diam = max(cert.arc_diameters, default=0.0)
    change = abs(half.d_star - cert.d_star) / cert.d_star
    dt = time.perf_counter() - t
    ok = len(cert.projected_points) > 0 and diam < 1e-6 and cert.clearance > 0 and cert.d_star > 0 and change < 0.1 and dt < 300
    return ok, (
        f"{len(cert.projected_points)} projected points, max arc diameter {diam:.1e}, clearance {cert.clearance:.4f}, "
        f"d*={cert.d_star:.4f}, change under h/2 {change:.1%}, {dt:.1f}s"
    )


@functools.lru_cache(maxsize=None)
def _reproduce(tag: str):
    out = Path(tempfile.mkdtemp(prefix=f"accept_{tag}_"))
    cfg = H.RunConfig(out_dir=out)
    timings: dict = {}
    summary = H.reproduce_all(cfg, timings)
    return out, summary, timings


def criterion_6():
    out, _, timings = _reproduce("a")
    rep = json.loads((out / "test_spec" / "obstruction.json").read_text())
    rows = {r["T"]: r for r in rep["rows"] if r["note"] != "short"}
    L = rep["L_const"]
    good = []
    for T in (30.0, 50.0, 80.0):
        r = rows.get(T)
        res = r and r["result"]
        good.append(
            bool(res) and r["eps"] < r["d_star"] / (2 * L) and res["outcome"] == "ExhaustedNoWitness"
            and res["deviation"] >= r["eps"] and res["grid_resolution"] == 1e-4
        )
    ok = all(good) and timings["test_spec"] < 1800
    detail = ", ".join(f"T={T:g}: best {rows[T]['result']['deviation']:.4f} >= eps {rows[T]['eps']:.4f}" for T in rows)
    return ok, f"{detail}, {timings['test_spec']:.0f}s"


def criterion_7():
    out, summary, timings = _reproduce("a")
    cat = json.loads((out / "catmap" / "catmap.json").read_text())
    mix = json.loads((out / "mixing" / "mixing.json").read_text())
    gaps = {r["instance"]["gap"] for r in cat["rows"]}
    runtime = timings["control_catmap"] + timings["mixing"]
    ok = (
        cat["n_instances"] == 20 and cat["n_witness"] == 20 and cat["eps"] == 0.05 and gaps == {6}
        and mix["lorenz"]["mixing"] and mix["lorenz"]["n_boxes"] == 1024 and not mix["rotation"]["mixing"]
        and runtime < 300
    )
    return ok, (
        f"cat witnesses {cat['n_witness']}/{cat['n_instances']} (T={sorted(gaps)}), Lorenz mixing={mix['lorenz']['mixing']}, "
        f"rotation mixing={mix['rotation']['mixing']}, {runtime:.0f}s"
    )


def criterion_8():
    a, sa, _ = _reproduce("a")
    b, sb, _ = _reproduce("b")
    files = sorted(p.relative_to(a) for p in a.rglob("*.json"))
    same = all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    ok = bool(files) and same and sa["headline_ok"]
    return ok, f"{len(files)} JSON reports byte-identical={same}; headline mixing={sa['mixing']}, spec Lorenz={sa['specification_lorenz']}, spec cat={sa['specification_catmap']}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8]


def _run(n: int) -> None:
    ok, detail = CRITERIA[n - 1]()
    _line(n, ok, detail)
    assert ok, detail


def test_criterion_1_model_validity():
    _run(1)


def test_criterion_2_flow_return_consistency():
    _run(2)


def test_criterion_3_hyperbolicity():
    _run(3)


def test_criterion_4_foliation_holonomy():
    _run(4)


def test_criterion_5_gap_certificate():
    _run(5)


def test_criterion_6_specification_falsified():
    _run(6)


def test_criterion_7_positive_control():
    _run(7)


def test_criterion_8_determinism():
    _run(8)


if __name__ == "__main__":
    results = []
    for i, crit in enumerate(CRITERIA, 1):
        try:
            ok, detail = crit()
        except Exception as exc:  # report and continue with the next criterion
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(_line(i, ok, detail))
    raise SystemExit(0 if all(r.startswith("[PASS]") for r in results) else 1)
