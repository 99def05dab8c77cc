"""Scalar play operator, delayed relays, relay banks and the truncated play.

All operators are exact on piecewise-monotone inputs, which is the only class
we ever feed them (polylines are piecewise monotone).  States are small frozen
value types; updates return new states.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .signals import DomainError, PolylineSignal, StepSignal, TimeGrid

_SEED_SLACK = 1e-12


@dataclass(frozen=True)
class PlayState:
    """Dead-band half-width rho and current output w; |u - w| <= rho always."""

    rho: float
    w: float

    def __post_init__(self):
        if self.rho < 0.0:
            raise DomainError("play half-width rho must be >= 0")


def play_update(state: PlayState, u_next: float) -> PlayState:
    """Advance the play across one monotone input move ending at u_next.

    The clamp w' = min(u+rho, max(u-rho, w)) is the unique rule matching the
    phase portrait: frozen inside the strip, dragged along w = u -+ rho on its
    boundary.
    """
    w = min(u_next + state.rho, max(u_next - state.rho, state.w))
    return replace(state, w=w)


def _check_play_seed(u0: float, w0: float, rho: float) -> None:
    if abs(u0 - w0) > rho + _SEED_SLACK * max(1.0, abs(u0), abs(w0)):
        raise DomainError(
            f"seed (u(0)={u0}, w0={w0}) outside the closed strip of width rho={rho}"
        )


def play_apply(u: PolylineSignal, w0: float, rho: float) -> PolylineSignal:
    """Output polyline of the play operator driven by the polyline u.

    Exact: a knot is inserted wherever the pair (u, w) passes between the
    frozen (interior) and dragged (boundary) regimes, so the output is
    genuinely piecewise linear with no sampling error.
    """
    _check_play_seed(u.knots[0][1], w0, rho)
    w = float(w0)
    out = [(u.knots[0][0], w)]

    def emit(t, v):
        if t > out[-1][0]:
            out.append((t, v))

    for (t0, u0), (t1, u1) in zip(u.knots, u.knots[1:]):
        if u1 > u0:  # rising: only the lower boundary w = u - rho can drag
            if u1 - rho > w:
                if u0 - rho < w:  # frozen first, then dragged
                    tc = t0 + (w + rho - u0) * (t1 - t0) / (u1 - u0)
                    emit(tc, w)
                w = u1 - rho
            emit(t1, w)
        elif u1 < u0:  # falling: upper boundary w = u + rho
            if u1 + rho < w:
                if u0 + rho > w:
                    tc = t0 + (w - rho - u0) * (t1 - t0) / (u1 - u0)
                    emit(tc, w)
                w = u1 + rho
            emit(t1, w)
        else:
            emit(t1, w)
    return PolylineSignal(tuple(out))


# ---------------------------------------------------------------------------
# delayed relay

@dataclass(frozen=True)
class RelayState:
    """Two-threshold switch: output -1/+1, switching strictly beyond lo/hi."""

    lo: float
    hi: float
    out: int

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("relay needs lo < hi")
        if self.out not in (-1, 1):
            raise DomainError("relay output must be -1 or +1")

    def consistent_with(self, z: float) -> bool:
        return z >= self.lo if self.out == 1 else z <= self.hi


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    index: int
    old: int
    new: int


def relay_advance(
    state: RelayState,
    z_prev: float,
    z_next: float,
    t_prev: float = 0.0,
    t_next: float = 1.0,
    index: int = 0,
):
    """Advance a relay across one affine input move; at most one switch.

    Strict inequalities at the thresholds (no switch on touching them); the
    crossing time is affinely interpolated, exact for polyline inputs.
    """
    if not state.consistent_with(z_prev):
        raise DomainError(
            f"relay output {state.out} inconsistent with input {z_prev} "
            f"(thresholds {state.lo}, {state.hi})"
        )
    if state.out == 1 and z_next < state.lo:
        thr, new = state.lo, -1
    elif state.out == -1 and z_next > state.hi:
        thr, new = state.hi, 1
    else:
        return state, None
    frac = (thr - z_prev) / (z_next - z_prev)
    event = SwitchEvent(t_prev + frac * (t_next - t_prev), index, state.out, new)
    return replace(state, out=new), event


# ---------------------------------------------------------------------------
# relay bank (finite Preisach superposition)

@dataclass(frozen=True)
class RelayBank:
    """Ordered bank of k relays, relay i with thresholds (-1+i/k, i/k)."""

    relays: tuple[RelayState, ...]

    @property
    def k(self) -> int:
        return len(self.relays)

    @property
    def output(self) -> float:
        return sum(r.out for r in self.relays) / self.k

    @staticmethod
    def make(k: int, outputs) -> "RelayBank":
        if k < 1:
            raise DomainError("bank needs k >= 1")
        relays = tuple(
            RelayState(-1.0 + i / k, i / k, out)
            for i, out in zip(range(1, k + 1), outputs)
        )
        if len(relays) != k:
            raise DomainError("need one output per relay")
        return RelayBank(relays)

    @staticmethod
    def staircase(k: int, n_plus: int) -> "RelayBank":
        """Bank in the staircase configuration (+1 x n_plus, -1 x rest)."""
        if not 0 <= n_plus <= k:
            raise DomainError("n_plus must be in 0..k")
        return RelayBank.make(k, [1] * n_plus + [-1] * (k - n_plus))

    def is_staircase(self) -> bool:
        outs = [r.out for r in self.relays]
        return all(a >= b for a, b in zip(outs, outs[1:]))

    def consistent_with(self, zeta: float) -> bool:
        return all(r.consistent_with(zeta) for r in self.relays)

    def to_json(self):
        return [{"lo": r.lo, "hi": r.hi, "out": r.out} for r in self.relays]


def bank_trace(bank: RelayBank, zeta: PolylineSignal):
    """(macroscopic step output, switch events, final bank) along zeta.

    Relay switch times inside one monotone segment are sorted, so the update
    order never depends on relay index.
    """
    if not bank.consistent_with(zeta.knots[0][1]):
        raise DomainError("bank relay states inconsistent with zeta(0)")
    relays = list(bank.relays)
    events: list[SwitchEvent] = []
    break_times = [zeta.knots[0][0]]
    levels = [sum(r.out for r in relays) / bank.k]

    for (t0, z0), (t1, z1) in zip(zeta.knots, zeta.knots[1:]):
        seg = []
        for i, r in enumerate(relays):
            _, ev = relay_advance(r, z0, z1, t0, t1, index=i + 1)
            if ev is not None:
                seg.append(ev)
        for ev in sorted(seg, key=lambda e: e.time):
            relays[ev.index - 1] = replace(relays[ev.index - 1], out=ev.new)
            events.append(ev)
            level = sum(r.out for r in relays) / bank.k
            if break_times[-1] < ev.time:
                break_times.append(ev.time)
                levels.append(level)
            else:  # simultaneous switches merge into one breakpoint
                levels[-1] = level
    T = zeta.horizon
    if break_times[-1] >= T:  # event exactly at the horizon: keep grid valid
        break_times.pop()
        levels.pop()
        levels[-1] = sum(r.out for r in relays) / bank.k
    break_times.append(T)
    output = StepSignal(TimeGrid(tuple(break_times)), tuple(levels))
    return output, events, RelayBank(tuple(relays))


def bank_apply(bank: RelayBank, zeta: PolylineSignal) -> StepSignal:
    """Macroscopic staircase output w_k = (1/k) * sum of relay outputs."""
    return bank_trace(bank, zeta)[0]


def saturation_prefix(
    zeta: PolylineSignal, lead: float = 1.0, direction: int = 1
) -> PolylineSignal:
    """Prepend a there-and-back ramp to +-1 so the bank enters its staircase loop.

    The returned input lives on [0, lead + T] and agrees with zeta afterwards.
    """
    if lead <= 0.0:
        raise DomainError("lead time must be positive")
    z0 = zeta.knots[0][1]
    peak = float(direction)
    knots = [(0.0, z0)]
    if peak != z0:
        knots.append((0.5 * lead, peak))
    knots.append((lead, z0))
    knots.extend((t + lead, v) for t, v in zeta.knots[1:])
    return PolylineSignal(tuple(knots))


# ---------------------------------------------------------------------------
# truncated play (continuum relay average, slope 2, width 1)

@dataclass(frozen=True)
class TruncatedPlayState:
    """Output of the continuum relay bank once the staircase condition holds."""

    w: float

    def __post_init__(self):
        if not -1.0 <= self.w <= 1.0:
            raise DomainError("truncated play output must lie in [-1, 1]")


def _trunc_bounds(zeta: float) -> tuple[float, float]:
    lo = min(max(2.0 * zeta - 1.0, -1.0), 1.0)
    hi = max(min(2.0 * zeta + 1.0, 1.0), -1.0)
    return lo, hi


def truncated_play_update(state: TruncatedPlayState, zeta_next: float) -> TruncatedPlayState:
    lo, hi = _trunc_bounds(zeta_next)
    return TruncatedPlayState(min(hi, max(lo, state.w)))


def truncated_play_apply(zeta: PolylineSignal, w0: float) -> PolylineSignal:
    """Exact truncated-play output: rides w = 2*zeta -+ 1, saturates at +-1."""
    lo0, hi0 = _trunc_bounds(zeta.knots[0][1])
    slack = _SEED_SLACK
    if not lo0 - slack <= w0 <= hi0 + slack:
        raise DomainError(f"seed w0={w0} outside [{lo0}, {hi0}] at zeta(0)")
    w = min(hi0, max(lo0, float(w0)))
    out = [(zeta.knots[0][0], w)]

    def emit(t, v):
        if t > out[-1][0]:
            out.append((t, v))

    for (t0, z0), (t1, z1) in zip(zeta.knots, zeta.knots[1:]):
        if z1 > z0:
            # dragged by the lower branch 2*zeta - 1 once it reaches w,
            # saturating at +1 when zeta passes 1
            for zc in ((w + 1.0) / 2.0, 1.0):
                if z0 < zc < z1:
                    tc = t0 + (zc - z0) * (t1 - t0) / (z1 - z0)
                    emit(tc, min(1.0, max(2.0 * zc - 1.0, w)))
            w = min(1.0, max(2.0 * z1 - 1.0, w))
            emit(t1, w)
        elif z1 < z0:
            for zc in ((w - 1.0) / 2.0, -1.0):
                if z1 < zc < z0:
                    tc = t0 + (zc - z0) * (t1 - t0) / (z1 - z0)
                    emit(tc, max(-1.0, min(2.0 * zc + 1.0, w)))
            w = max(-1.0, min(2.0 * z1 + 1.0, w))
            emit(t1, w)
        else:
            emit(t1, w)
    return PolylineSignal(tuple(out))
