"""Trajectory integration for driftless control-affine systems.

Five flavours: plain (no hysteresis), play in the controls, play in the state
(triangular/chain), delayed-relay switching, and relay-bank systems.  The base
scheme is fixed-step classical RK4 with mandatory sub-steps at every control,
play-output, and relay-event breakpoint; relay events are localized by
bisection inside a step.  For triangular systems the x coordinates and the
play outputs are computed in closed form and only the output integrals are
quadratures (Simpson, exact on piecewise-affine integrands).
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .hysteresis import RelayBank, play_apply
from .signals import DomainError, antiderivative, merge_times, sample

NORM_CAP = 1e6
EVENT_TOL = 1e-12


class DivergenceError(RuntimeError):
    """State norm exceeded the compactness cap."""


@dataclass(frozen=True)
class FieldSet:
    """m control vector fields on R^n; fields map a state tuple to a vector."""

    n: int
    m: int
    fields: tuple
    lipschitz: float | None = None
    bound: float | None = None


def heisenberg_fields() -> FieldSet:
    """g1 = d/dx, g2 = d/dy + x d/dz."""
    return FieldSet(
        n=3,
        m=2,
        fields=(lambda z: (1.0, 0.0, 0.0), lambda z: (0.0, 1.0, z[0])),
        lipschitz=1.0,
    )


@dataclass(frozen=True)
class TriangularSpec:
    """Chain system with m controls: dx_i = u_i, dy_{m+i-1} = f_i(plays) u_i.

    fs holds f_2..f_m (f_i takes the first i-1 play outputs); rho and the
    seeds w0 configure the plays on x_1..x_{m-1}.
    """

    m: int
    fs: tuple
    rho: float
    w0: tuple

    def __post_init__(self):
        if self.m < 2:
            raise DomainError("triangular systems need m >= 2")
        if len(self.fs) != self.m - 1 or len(self.w0) != self.m - 1:
            raise DomainError("need one f and one seed per output direction")


@dataclass(frozen=True)
class SwitchingSpec:
    """Each field g_i switches between two versions driven by a relay on z.xi_i.

    field_table maps every m-string in {-1,+1}^m to a FieldSet; thresholds
    defaults to (-eta, eta) on every axis but can be overridden per axis.
    """

    xi: tuple
    eta: float
    field_table: dict
    thresholds: tuple | None = None

    def __post_init__(self):
        m = len(self.xi)
        if len(self.field_table) != 2 ** m:
            raise DomainError("field table must cover all 2^m strings")
        for v in self.xi:
            if abs(math.sqrt(sum(c * c for c in v)) - 1.0) > 1e-9:
                raise DomainError("xi must be unit vectors")

    @property
    def m(self) -> int:
        return len(self.xi)

    def axis_thresholds(self, i: int) -> tuple[float, float]:
        if self.thresholds is not None:
            return self.thresholds[i]
        return (-self.eta, self.eta)


@dataclass(frozen=True)
class BankSpec:
    """Relay-bank system: dz = sum_j g_j(w_k[z.xi_j], z) u_j."""

    xi: tuple
    k: int
    fields: tuple  # g_j(w, z) -> vector

    @property
    def m(self) -> int:
        return len(self.xi)


@dataclass(frozen=True)
class Event:
    time: float
    operator: str
    old: float
    new: float


@dataclass(frozen=True)
class GronwallReport:
    C_k: float
    bound: float
    observed: float


def gronwall_bound(C_k: float, m: float, M: float, L: float, T: float) -> float:
    if min(C_k, m, M, L, T) < 0.0:
        raise DomainError("Gronwall inputs must be nonnegative")
    return C_k * math.exp(m * M * L * T)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    hysteresis_log: dict = field(default_factory=dict)
    events: tuple = ()

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def sample(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        return np.column_stack(
            [np.interp(ts, self.times, self.states[:, i]) for i in range(self.states.shape[1])]
        )

    def to_csv(self, path: str) -> None:
        n = self.states.shape[1]
        log_keys = sorted(self.hysteresis_log)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"z{i + 1}" for i in range(n)] + log_keys)
            for idx in range(len(self.times)):
                row = [self.times[idx]] + list(self.states[idx])
                for key in log_keys:
                    val = self.hysteresis_log[key][idx]
                    if isinstance(val, (tuple, list)):
                        row.append("".join("+" if int(v) > 0 else "-" for v in val))
                    else:
                        row.append(val)
                w.writerow(row)


def events_to_csv(events, path: str) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "operator", "old", "new"])
        for e in events:
            w.writerow([e.time, e.operator, e.old, e.new])


# ---------------------------------------------------------------------------
# core stepping

_ZEROS = {n: (0.0,) * n for n in range(1, 16)}


def _rk4(rhs, z, h):
    k1 = rhs(z)
    k2 = rhs(tuple(zi + 0.5 * h * ki for zi, ki in zip(z, k1)))
    k3 = rhs(tuple(zi + 0.5 * h * ki for zi, ki in zip(z, k2)))
    k4 = rhs(tuple(zi + h * ki for zi, ki in zip(z, k3)))
    return tuple(
        zi + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for zi, a, b, c, d in zip(z, k1, k2, k3, k4)
    )


def _rk4_t(rhs, t, z, h):
    k1 = rhs(t, z)
    k2 = rhs(t + 0.5 * h, tuple(zi + 0.5 * h * ki for zi, ki in zip(z, k1)))
    k3 = rhs(t + 0.5 * h, tuple(zi + 0.5 * h * ki for zi, ki in zip(z, k2)))
    k4 = rhs(t + h, tuple(zi + h * ki for zi, ki in zip(z, k3)))
    return tuple(
        zi + (h / 6.0) * (a + 2.0 * b + 2.0 * c + d)
        for zi, a, b, c, d in zip(z, k1, k2, k3, k4)
    )


def _check_cap(z, cap):
    if max(abs(c) for c in z) > cap:
        raise DivergenceError(f"state norm exceeded cap {cap}")


def _common_horizon(signals, T):
    horizons = [s.horizon for s in signals]
    if T is None:
        T = horizons[0]
    for h in horizons:
        if abs(h - T) > 1e-9 * max(1.0, T):
            raise DomainError("controls must share the horizon [0, T]")
    return T


def _combined_rhs(fields, u, n):
    active = [(ui, g) for ui, g in zip(u, fields) if ui != 0.0]
    if not active:
        return lambda z: _ZEROS[n]
    if len(active) == 1:
        u0, g0 = active[0]

        def rhs1(z):
            return tuple(u0 * c for c in g0(z))

        return rhs1

    def rhs(z):
        acc = [0.0] * n
        for ui, g in active:
            gz = g(z)
            for i in range(n):
                acc[i] += ui * gz[i]
        return acc

    return rhs


# ---------------------------------------------------------------------------
# plain and play-in-controls systems

def integrate_plain(sys: FieldSet, controls, z0, T=None, step=1e-3, cap=NORM_CAP) -> Trajectory:
    """Fixed-step RK4 with sub-steps aligned to every control breakpoint."""
    if len(controls) != sys.m:
        raise DomainError("one control per field required")
    if step <= 0.0:
        raise DomainError("step must be positive")
    _common_horizon(controls, T)
    breaks = merge_times(*(c.grid.points for c in controls))
    z = tuple(float(c) for c in z0)
    times = [breaks[0]]
    states = [z]
    for a, b in zip(breaks, breaks[1:]):
        u = [c(0.5 * (a + b)) for c in controls]
        rhs = _combined_rhs(sys.fields, u, sys.n)
        nsteps = max(1, math.ceil((b - a) / step - 1e-9))
        h = (b - a) / nsteps
        for q in range(nsteps):
            z = _rk4(rhs, z, h)
            _check_cap(z, cap)
            times.append(b if q == nsteps - 1 else a + (q + 1) * h)
            states.append(z)
    return Trajectory(np.asarray(times), np.asarray(states))


def integrate_play_controls(
    sys: FieldSet, v, w0, rho, z0, T=None, step=1e-3, cap=NORM_CAP
) -> Trajectory:
    """System driven by the play outputs of the inputs v (exact polylines)."""
    if len(v) != sys.m or len(w0) != sys.m:
        raise DomainError("one input and one seed per field required")
    if step <= 0.0:
        raise DomainError("step must be positive")
    plays = [play_apply(vi, wi, rho) for vi, wi in zip(v, w0)]
    _common_horizon(plays, T)
    breaks = merge_times(*(p.times for p in plays))
    z = tuple(float(c) for c in z0)
    times = [breaks[0]]
    states = [z]
    fields = sys.fields
    m = sys.m
    n = sys.n
    for a, b in zip(breaks, breaks[1:]):
        p0 = [p(a) for p in plays]
        sl = [(p(b) - q) / (b - a) for p, q in zip(plays, p0)]

        def rhs(t, z, p0=p0, sl=sl, a=a):
            acc = [0.0] * n
            tau = t - a
            for i in range(m):
                ui = p0[i] + sl[i] * tau
                if ui == 0.0:
                    continue
                gz = fields[i](z)
                for q in range(n):
                    acc[q] += ui * gz[q]
            return acc

        nsteps = max(1, math.ceil((b - a) / step - 1e-9))
        h = (b - a) / nsteps
        t = a
        for q in range(nsteps):
            z = _rk4_t(rhs, t, z, h)
            t = b if q == nsteps - 1 else a + (q + 1) * h
            _check_cap(z, cap)
            times.append(t)
            states.append(z)
    times = np.asarray(times)
    log = {f"play{i + 1}": sample(p, times) for i, p in enumerate(plays)}
    return Trajectory(times, np.asarray(states), hysteresis_log=log)


# ---------------------------------------------------------------------------
# play-in-state (triangular / chain) systems

def _vectorized(f, arrays):
    vals = np.asarray(f(*arrays), dtype=float)
    if vals.shape != arrays[0].shape:
        vals = np.broadcast_to(vals, arrays[0].shape).copy()
    return vals


def integrate_play_state(
    spec: TriangularSpec, controls, z0, T=None, step=1e-3, cap=NORM_CAP
) -> Trajectory:
    """Triangular/chain integration: exact x and play paths, Simpson outputs.

    State ordering is (x_1..x_m, y_{m+1}..y_{2m-1}).
    """
    m = spec.m
    if len(controls) != m or len(z0) != 2 * m - 1:
        raise DomainError("control/state dimensions inconsistent with spec")
    if step <= 0.0:
        raise DomainError("step must be positive")
    _common_horizon(controls, T)
    x_polys = [antiderivative(controls[i], float(z0[i])) for i in range(m)]
    plays = [play_apply(x_polys[i], float(spec.w0[i]), spec.rho) for i in range(m - 1)]
    breaks = merge_times(*(c.grid.points for c in controls), *(p.times for p in plays))

    y0 = np.array([float(c) for c in z0[m:]])
    tgrid_parts = [np.array([breaks[0]])]
    y_parts = [y0[None, :]]
    y = y0
    for a, b in zip(breaks, breaks[1:]):
        nsub = max(1, math.ceil((b - a) / step - 1e-9))
        ts = np.linspace(a, b, 2 * nsub + 1)
        p_samp = [sample(p, ts) for p in plays]
        h = (b - a) / (2 * nsub)
        incs = np.zeros((nsub, m - 1))
        for i in range(2, m + 1):
            ui = controls[i - 1](0.5 * (a + b))
            if ui == 0.0:
                continue
            w = _vectorized(spec.fs[i - 2], p_samp[: i - 1]) * ui
            incs[:, i - 2] = (h / 3.0) * (w[0:-1:2] + 4.0 * w[1::2] + w[2::2])
        y_path = y + np.cumsum(incs, axis=0)
        y = y_path[-1]
        tgrid_parts.append(ts[2::2])
        y_parts.append(y_path)
    tgrid = np.concatenate(tgrid_parts)
    y_all = np.vstack(y_parts)
    x_cols = [sample(p, tgrid) for p in x_polys]
    states = np.column_stack(x_cols + [y_all[:, i] for i in range(m - 1)])
    _check_cap(tuple(np.abs(states).max(axis=0)), cap)
    log = {f"play{i + 1}": sample(p, tgrid) for i, p in enumerate(plays)}
    return Trajectory(tgrid, states, hysteresis_log=log)


# ---------------------------------------------------------------------------
# switching and bank systems

def sector_index(z, spec: SwitchingSpec) -> set:
    """All m-strings compatible with z under closure semantics."""
    options = []
    for i, xi in enumerate(spec.xi):
        lo, hi = spec.axis_thresholds(i)
        proj = sum(c * x for c, x in zip(z, xi))
        allowed = []
        if proj >= lo:
            allowed.append(1)
        if proj <= hi:
            allowed.append(-1)
        options.append(allowed)
    return set(itertools.product(*options))


def _bisect_event(rhs, z, h, crossed, proj_of):
    """Smallest step fraction at which `crossed(projection)` first holds.

    Assumes crossed(proj_of(rk4(z, h))) is true; returns (s, z_s) with the
    crossing bracketed to EVENT_TOL and z_s strictly past the threshold.
    """
    lo, hi = 0.0, h
    z_hi = _rk4(rhs, z, h)
    while hi - lo > EVENT_TOL:
        mid = 0.5 * (lo + hi)
        z_mid = _rk4(rhs, z, mid)
        if crossed(proj_of(z_mid)):
            hi, z_hi = mid, z_mid
        else:
            lo = mid
    return hi, z_hi


def integrate_switching(
    spec: SwitchingSpec, controls, z0, w0_string, T=None, step=1e-3, cap=NORM_CAP
) -> Trajectory:
    """Relay-switched system: one delayed relay per axis drives the field choice."""
    m = spec.m
    string = tuple(int(w) for w in w0_string)
    if len(string) != m or any(w not in (-1, 1) for w in string):
        raise DomainError("initial string must be in {-1,+1}^m")
    z = tuple(float(c) for c in z0)
    for i, xi in enumerate(spec.xi):
        lo, hi = spec.axis_thresholds(i)
        proj = sum(c * x for c, x in zip(z, xi))
        if (string[i] == 1 and proj < lo) or (string[i] == -1 and proj > hi):
            raise DomainError(f"initial string inconsistent with z0 on axis {i + 1}")
    if len(controls) != spec.field_table[string].m:
        raise DomainError("one control per field required")
    if step <= 0.0:
        raise DomainError("step must be positive")
    _common_horizon(controls, T)
    breaks = merge_times(*(c.grid.points for c in controls))
    times = [breaks[0]]
    states = [z]
    strings = [string]
    events: list[Event] = []
    for a, b in zip(breaks, breaks[1:]):
        u = [c(0.5 * (a + b)) for c in controls]
        fs = spec.field_table[string]
        rhs = _combined_rhs(fs.fields, u, fs.n)
        t = a
        h_nom = (b - a) / max(1, math.ceil((b - a) / step - 1e-9))
        while t < b - 1e-15 * max(1.0, b):
            h = min(h_nom, b - t)
            z_new = _rk4(rhs, z, h)
            hit = None
            for i, xi in enumerate(spec.xi):
                lo, hi = spec.axis_thresholds(i)
                if string[i] == 1:
                    thr, crossed = lo, (lambda p, lo=lo: p < lo)
                else:
                    thr, crossed = hi, (lambda p, hi=hi: p > hi)
                proj_of = lambda zz, xi=xi: sum(c * x for c, x in zip(zz, xi))
                if crossed(proj_of(z_new)):
                    s, z_s = _bisect_event(rhs, z, h, crossed, proj_of)
                    if hit is None or s < hit[0]:
                        hit = (s, z_s, i)
            if hit is None:
                z = z_new
                t = t + h
            else:
                s, z, i = hit
                t = t + s
                old = string[i]
                string = string[:i] + (-old,) + string[i + 1 :]
                events.append(Event(t, f"axis{i + 1}", old, -old))
                fs = spec.field_table[string]
                rhs = _combined_rhs(fs.fields, u, fs.n)
            _check_cap(z, cap)
            times.append(t)
            states.append(z)
            strings.append(string)
    return Trajectory(
        np.asarray(times),
        np.asarray(states),
        hysteresis_log={"string": strings},
        events=tuple(events),
    )


def integrate_bank(
    spec: BankSpec, controls, z0, banks, T=None, step=1e-3, cap=NORM_CAP
) -> Trajectory:
    """Relay-bank system: each axis carries a k-relay bank whose macroscopic
    output feeds the corresponding field."""
    m = spec.m
    if len(banks) != m or any(bk.k != spec.k for bk in banks):
        raise DomainError("one k-relay bank per axis required")
    if len(controls) != m:
        raise DomainError("one control per field required")
    if step <= 0.0:
        raise DomainError("step must be positive")
    z = tuple(float(c) for c in z0)
    relays = [list(bk.relays) for bk in banks]
    for j, xi in enumerate(spec.xi):
        proj = sum(c * x for c, x in zip(z, xi))
        if not RelayBank(tuple(relays[j])).consistent_with(proj):
            raise DomainError(f"bank on axis {j + 1} inconsistent with z0")
    _common_horizon(controls, T)
    breaks = merge_times(*(c.grid.points for c in controls))
    n = len(z)

    def make_rhs(u):
        wk = [sum(r.out for r in rl) / spec.k for rl in relays]

        def rhs(zz):
            acc = [0.0] * n
            for j in range(m):
                if u[j] == 0.0:
                    continue
                gz = spec.fields[j](wk[j], zz)
                for q in range(n):
                    acc[q] += u[j] * gz[q]
            return acc

        return rhs

    def k_string():
        return tuple(tuple(r.out for r in rl) for rl in relays)

    times = [breaks[0]]
    states = [z]
    strings = [k_string()]
    events: list[Event] = []
    for a, b in zip(breaks, breaks[1:]):
        u = [c(0.5 * (a + b)) for c in controls]
        rhs = make_rhs(u)
        t = a
        h_nom = (b - a) / max(1, math.ceil((b - a) / step - 1e-9))
        while t < b - 1e-15 * max(1.0, b):
            h = min(h_nom, b - t)
            z_new = _rk4(rhs, z, h)
            hit = None
            for j, xi in enumerate(spec.xi):
                proj_of = lambda zz, xi=xi: sum(c * x for c, x in zip(zz, xi))
                pj = proj_of(z_new)
                for idx, r in enumerate(relays[j]):
                    if r.out == 1 and pj < r.lo:
                        crossed = lambda p, lo=r.lo: p < lo
                    elif r.out == -1 and pj > r.hi:
                        crossed = lambda p, hi=r.hi: p > hi
                    else:
                        continue
                    s, z_s = _bisect_event(rhs, z, h, crossed, proj_of)
                    if hit is None or s < hit[0]:
                        hit = (s, z_s, j, idx)
            if hit is None:
                z = z_new
                t = t + h
            else:
                s, z, j, idx = hit
                t = t + s
                old = relays[j][idx].out
                relays[j][idx] = replace(relays[j][idx], out=-old)
                events.append(Event(t, f"axis{j + 1}.relay{idx + 1}", old, -old))
                rhs = make_rhs(u)
            _check_cap(z, cap)
            times.append(t)
            states.append(z)
            strings.append(k_string())
    return Trajectory(
        np.asarray(times),
        np.asarray(states),
        hysteresis_log={"strings": strings},
        events=tuple(events),
    )
