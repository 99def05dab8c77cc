"""Named, reproducible scenario runners.

Each experiment binds constructions + dynamics into a pass/fail check with a
metric table; verdicts depend only on the declared tolerances, and runs are
deterministic given the same params (randomized ones take explicit seeds).
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .constructions import (
    build_uk,
    build_vj,
    build_vk,
    chain_schedule,
    heis_exact_schedule,
    plan_triangular,
    reversal_sup_error,
    thm3_schedule,
)
from .dynamics import (
    BankSpec,
    FieldSet,
    SwitchingSpec,
    TriangularSpec,
    gronwall_bound,
    heisenberg_fields,
    integrate_plain,
    integrate_play_controls,
    integrate_play_state,
    integrate_switching,
)
from .hysteresis import RelayBank, bank_trace, truncated_play_apply, play_apply
from .signals import (
    DomainError,
    PolylineSignal,
    StepSignal,
    TimeGrid,
    l1_distance,
    sup_distance,
)

__version__ = "0.1.0"

# default scenario constants, shared by the table experiments
FIG3_GRID = (0.0, 1.0, 2.0, 3.0, 4.0)
FIG3_ALPHA = (1.0, -1.0, 0.5, 2.0)
FIG3_W0 = 0.5
DEFAULT_RHO = 0.2
FIG5_KNOTS = ((0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 0.5), (4.0, 2.5))


@dataclass(frozen=True)
class ExperimentReport:
    id: str
    params: dict
    rows: list
    verdict: bool
    runtime: float

    def to_csv(self, path: str) -> None:
        if not self.rows:
            raise DomainError("no rows to write")
        keys = list(self.rows[0].keys())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in self.rows:
                w.writerow(r)

    def manifest(self) -> dict:
        return {
            "id": self.id,
            "version": __version__,
            "params": self.params,
            "verdict": "pass" if self.verdict else "fail",
            "runtime_seconds": self.runtime,
        }

    def to_manifest(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def convergence_fit(rows, xkey: str, ykey: str) -> float:
    """Least-squares slope of log(ykey) against log(xkey); reported, not asserted."""
    xs = np.array([float(r[xkey]) for r in rows])
    ys = np.array([float(r[ykey]) for r in rows])
    if len(xs) < 3:
        raise DomainError("need at least 3 rows for a rate fit")
    if np.any(xs <= 0.0) or np.any(ys <= 0.0):
        raise DomainError("rate fit needs positive columns")
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def _get(params, key, default):
    return params[key] if key in params else default


def _check_keys(params, allowed):
    unknown = set(params) - set(allowed)
    if unknown:
        raise DomainError(f"unknown params: {sorted(unknown)}")


def _fig3_ubar():
    return StepSignal(TimeGrid(FIG3_GRID), FIG3_ALPHA)


# ---------------------------------------------------------------------------
# experiments

def _exp_fig3_surjectivity(params):
    _check_keys(params, {"k", "rho", "w0"})
    ks = _get(params, "k", [10, 20, 40])
    rho = _get(params, "rho", DEFAULT_RHO)
    w0 = _get(params, "w0", FIG3_W0)
    ubar = _fig3_ubar()
    rows = []
    for k in ks:
        uk = build_uk(ubar, w0, k)
        vk = build_vk(ubar, w0, rho, k)
        gap = sup_distance(play_apply(vk, w0, rho), uk)
        rows.append({"k": k, "knot_gap": gap, "l1_uk_ubar": l1_distance(uk, ubar)})
    verdict = all(r["knot_gap"] < 1e-10 for r in rows)
    return rows, verdict


def _exp_thm2_convergence(params):
    _check_keys(params, {"k", "rho", "step"})
    ks = _get(params, "k", [10, 20, 40, 80])
    rho = _get(params, "rho", DEFAULT_RHO)
    step = _get(params, "step", 1e-3)
    u1bar = _fig3_ubar()
    u2bar = StepSignal(TimeGrid(FIG3_GRID), (-1.0, 0.5, 2.0, 1.0))
    w0s = (FIG3_W0, -1.0)
    sysf = heisenberg_fields()
    z0 = (0.0, 0.0, 0.0)
    T = u1bar.horizon
    ref = integrate_plain(sysf, (u1bar, u2bar), z0, step=step)
    ts = np.linspace(0.0, T, int(round(T / step)) + 1)
    ref_s = ref.sample(ts)
    rows = []
    hull_x = [np.abs(ref.states[:, 0]).max()]
    trajs = []
    for k in ks:
        v1 = build_vk(u1bar, w0s[0], rho, k)
        v2 = build_vk(u2bar, w0s[1], rho, k)
        traj = integrate_play_controls(sysf, (v1, v2), w0s, rho, z0, step=step)
        trajs.append((k, traj))
        hull_x.append(np.abs(traj.states[:, 0]).max())
    # field bound on the (inflated) hull of all sampled states
    M_prime = 1.1 * math.sqrt(1.0 + max(hull_x) ** 2)
    M = max(
        max(abs(v) for v in u1bar.values),
        max(abs(v) for v in u2bar.values),
        abs(w0s[0]),
        abs(w0s[1]),
    )
    L = sysf.lipschitz
    for k, traj in trajs:
        gap = float(np.linalg.norm(traj.sample(ts) - ref_s, axis=1).max())
        C_k = M_prime * (
            l1_distance(build_uk(u1bar, w0s[0], k), u1bar)
            + l1_distance(build_uk(u2bar, w0s[1], k), u2bar)
        )
        bound = gronwall_bound(C_k, 2.0, M, L, T)
        rows.append({"k": k, "sup_gap": gap, "C_k": C_k, "gronwall_bound": bound})
    gaps = [r["sup_gap"] for r in rows]
    verdict = (
        all(a > b for a, b in zip(gaps, gaps[1:]))
        and gaps[-1] <= 0.25 * gaps[0]
        and all(r["sup_gap"] <= r["gronwall_bound"] for r in rows)
    )
    return rows, verdict


def _exp_fig5_density(params):
    _check_keys(params, {"j", "rho"})
    js = _get(params, "j", [10, 20, 40])
    rho = _get(params, "rho", DEFAULT_RHO)
    x = PolylineSignal(FIG5_KNOTS)
    rows = []
    for j in js:
        v = build_vj(x, rho, j)
        sup = sup_distance(play_apply(v, x.knots[0][1], rho), x)
        expected = reversal_sup_error(x, j)
        rows.append({"j": j, "sup_error": sup, "expected": expected})
    verdict = all(abs(r["sup_error"] - r["expected"]) < 1e-10 for r in rows)
    return rows, verdict


def _thm3_bound(u2bar, xbar_slopes, L, T, j):
    return L * T * max(abs(v) for v in u2bar.values) * max(abs(s) for s in xbar_slopes) / j


def _exp_thm3_convergence(params):
    _check_keys(params, {"j", "rho", "step", "seed"})
    js = _get(params, "j", [10, 20, 40])
    rho = _get(params, "rho", DEFAULT_RHO)
    step = _get(params, "step", 1e-3)
    seed = _get(params, "seed", 7)
    rng = np.random.default_rng(seed)
    cases = {"id": (lambda x: x, 1.0), "sin": (np.sin, 1.0)}
    rows = []
    verdict = True
    for name, (f, L) in cases.items():
        A = rng.uniform(-1.0, 1.0, 3)
        B = rng.uniform(-1.0, 1.0, 3)
        w0 = float(A[0] + rng.uniform(-rho, rho))
        ubar = plan_triangular(f, A, B)
        spec = TriangularSpec(2, (f,), rho, (w0,))
        xbar_slopes = ubar[0].values
        T = ubar[0].horizon
        ez_prev = None
        for j in js:
            sched = thm3_schedule(ubar, tuple(A), rho, w0, j)
            traj = integrate_play_state(spec, sched.concatenated(), tuple(A), step=step)
            ex, ey, ez = (abs(float(c)) for c in traj.final_state - B)
            bound = _thm3_bound(ubar[1], xbar_slopes, L, T, j)
            rows.append({"f": name, "j": j, "ex": ex, "ey": ey, "ez": ez, "bound": bound})
            verdict &= ex < 1e-8 and ey < 1e-8 and ez <= bound
            if ez_prev is not None:
                verdict &= ez < ez_prev
            ez_prev = ez
    return rows, verdict


def _exp_heis_exact(params):
    _check_keys(params, {"cases", "rho", "step", "seed"})
    n_cases = _get(params, "cases", 20)
    rho = _get(params, "rho", DEFAULT_RHO)
    step = _get(params, "step", 1e-3)
    seed = _get(params, "seed", 11)
    rng = np.random.default_rng(seed)
    rows = []
    for c in range(n_cases):
        A = rng.uniform(-1.0, 1.0, 3)
        B = rng.uniform(-1.0, 1.0, 3)
        w0 = float(A[0] + rng.uniform(-rho, rho))
        sched = heis_exact_schedule(tuple(A), tuple(B), rho, w0)
        spec = TriangularSpec(2, (lambda x: x,), rho, (w0,))
        traj = integrate_play_state(spec, sched.concatenated(), tuple(A), step=step)
        err = float(np.abs(traj.final_state - B).max())
        rows.append({"case": c, "endpoint_error": err})
    verdict = all(r["endpoint_error"] < 1e-8 for r in rows)
    return rows, verdict


def demo_switching_spec() -> SwitchingSpec:
    """Planar two-axis scenario with per-axis field switching."""

    def g1(s):
        return (lambda z: (1.0, 0.0)) if s == 1 else (lambda z: (1.0, 0.5))

    def g2(s):
        return (lambda z: (0.0, 1.0)) if s == 1 else (lambda z: (0.5, 1.0))

    table = {
        (s1, s2): FieldSet(2, 2, (g1(s1), g2(s2)))
        for s1 in (-1, 1)
        for s2 in (-1, 1)
    }
    return SwitchingSpec(xi=((1.0, 0.0), (0.0, 1.0)), eta=0.3, field_table=table)


# hand-computed event script for the demo scenario (constant fields, affine legs)
SWITCHING_EXPECTED = (
    (0.8, "axis1", 1, -1),
    (1.7, "axis2", 1, -1),
    (2.95, "axis1", -1, 1),
)


def _switching_controls():
    grid = TimeGrid((0.0, 1.0, 2.0, 4.0))
    return (StepSignal(grid, (-1.0, 0.0, 1.0)), StepSignal(grid, (0.0, -1.0, 0.0)))


def _exp_switching_demo(params):
    _check_keys(params, {"step"})
    step = _get(params, "step", 1e-3)
    spec = demo_switching_spec()
    controls = _switching_controls()
    z0 = (0.5, 0.5)
    traj = integrate_switching(spec, controls, z0, (1, 1), step=step)
    traj_half = integrate_switching(spec, controls, z0, (1, 1), step=step / 2.0)
    rows = []
    ok = len(traj.events) == len(SWITCHING_EXPECTED)
    for idx, (t_exp, op, old, new) in enumerate(SWITCHING_EXPECTED):
        if idx >= len(traj.events):
            rows.append({"event": idx, "time": float("nan"), "operator": "missing",
                         "expected_time": t_exp, "halving_shift": float("nan")})
            continue
        ev = traj.events[idx]
        shift = abs(ev.time - traj_half.events[idx].time) if idx < len(traj_half.events) else float("nan")
        rows.append({
            "event": idx,
            "time": ev.time,
            "operator": ev.operator,
            "expected_time": t_exp,
            "halving_shift": shift,
        })
        ok &= (
            ev.operator == op
            and ev.old == old
            and ev.new == new
            and abs(ev.time - t_exp) < 1e-9
            and shift < 1e-9
        )
    # oscillation confined to the dead band produces no events
    grid = TimeGrid((0.0, 1.0, 2.0, 3.0, 4.0))
    osc = (StepSignal(grid, (0.25, -0.25, 0.25, -0.25)), StepSignal(grid, (0.0,) * 4))
    quiet = integrate_switching(spec, osc, (0.0, 0.0), (1, 1), step=step)
    ok &= len(quiet.events) == 0
    rows.append({"event": "oscillation", "time": float(len(quiet.events)),
                 "operator": "count", "expected_time": 0.0, "halving_shift": 0.0})
    return rows, ok


def _random_zeta(rng, n_knots=6):
    ts = np.concatenate([[0.0], np.cumsum(rng.uniform(0.3, 1.0, n_knots - 1))])
    vs = rng.uniform(-1.2, 1.2, n_knots)
    return PolylineSignal(tuple(zip(ts, vs)))


def _staircase_seed(zeta0: float, k: int) -> int:
    """n_plus making the staircase bank and the truncated play co-seeded."""
    return max(0, min(k, math.ceil(k * zeta0)))


def _exp_bank_vs_truncated(params):
    _check_keys(params, {"k", "cases", "seed"})
    ks = _get(params, "k", [4, 16, 64])
    n_cases = _get(params, "cases", 100)
    seed = _get(params, "seed", 3)
    rows = []
    verdict = True
    for k in ks:
        rng = np.random.default_rng(seed + k)
        worst = 0.0
        for _ in range(n_cases):
            zeta = _random_zeta(rng)
            zeta0 = zeta.knots[0][1]
            n_plus = _staircase_seed(zeta0, k)
            bank = RelayBank.staircase(k, n_plus)
            w0 = 2.0 * n_plus / k - 1.0
            wk, _, final = bank_trace(bank, zeta)
            tr = truncated_play_apply(zeta, w0)
            worst = max(worst, sup_distance(wk, tr))
            verdict &= final.is_staircase()
        rows.append({"k": k, "max_gap": worst, "budget": 2.0 / k})
        verdict &= worst <= 2.0 / k + 1e-12
    # rising sweep past all upper thresholds of the k=4 bank
    sweep = PolylineSignal(((0.0, -1.25), (1.0, 1.25)))
    _, events, _ = bank_trace(RelayBank.staircase(4, 0), sweep)
    crossings = [sweep(e.time) for e in events]
    expected = [0.25, 0.5, 0.75, 1.0]
    verdict &= len(crossings) == 4 and all(
        abs(c - e) < 1e-12 for c, e in zip(crossings, expected)
    )
    rows.append({"k": 4, "max_gap": float(len(events)), "budget": 4.0})
    return rows, verdict


def _exp_chain_demo(params):
    _check_keys(params, {"j", "rho", "step"})
    js = _get(params, "j", [10, 20, 40])
    rho = _get(params, "rho", DEFAULT_RHO)
    step = _get(params, "step", 1e-3)
    f2 = lambda x1: x1
    f3 = lambda x1, x2: x1 + x2
    A = (0.0, 0.0, 0.0, 0.0, 0.0)
    B = (0.5, -0.3, 0.4, 0.7, -0.6)
    spec = TriangularSpec(3, (f2, f3), rho, (A[0], A[1]))
    rows = []
    verdict = True
    prev4 = prev5 = None
    for j in js:
        sched = chain_schedule(spec, A, B, rho, j)
        traj = integrate_play_state(spec, sched.concatenated(), A, step=step)
        err = np.abs(traj.final_state - np.asarray(B))
        rows.append({
            "j": j,
            "ex1": float(err[0]), "ex2": float(err[1]), "ex3": float(err[2]),
            "ey4": float(err[3]), "ey5": float(err[4]),
        })
        verdict &= bool(err[:3].max() < 1e-8)
        if prev5 is not None:
            verdict &= err[4] < prev5 and err[3] < prev4
        prev4, prev5 = float(err[3]), float(err[4])
    return rows, verdict


EXPERIMENTS = {
    "fig3_surjectivity": _exp_fig3_surjectivity,
    "thm2_convergence": _exp_thm2_convergence,
    "fig5_density": _exp_fig5_density,
    "thm3_convergence": _exp_thm3_convergence,
    "heis_exact": _exp_heis_exact,
    "switching_demo": _exp_switching_demo,
    "bank_vs_truncated": _exp_bank_vs_truncated,
    "chain_demo": _exp_chain_demo,
}


def run_experiment(id: str, params: dict | None = None) -> ExperimentReport:
    if id not in EXPERIMENTS:
        raise ValueError(f"unknown experiment id: {id!r}")
    params = dict(params or {})
    start = time.perf_counter()
    rows, verdict = EXPERIMENTS[id](params)
    runtime = time.perf_counter() - start
    return ExperimentReport(id, params, rows, bool(verdict), runtime)
