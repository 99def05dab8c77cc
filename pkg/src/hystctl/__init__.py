"""hystctl: simulation and verification toolkit for driftless control-affine
systems with rate-independent hysteresis (play operator, delayed relays,
relay banks)."""

from .signals import (
    DomainError,
    PolylineSignal,
    StepSignal,
    TimeGrid,
    antiderivative,
    derivative,
    evaluate,
    l1_distance,
    sample,
    sup_distance,
)
from .hysteresis import (
    PlayState,
    RelayBank,
    RelayState,
    TruncatedPlayState,
    bank_apply,
    bank_trace,
    play_apply,
    play_update,
    relay_advance,
    saturation_prefix,
    truncated_play_apply,
)
from .constructions import (
    ControlSchedule,
    Phase,
    align_schedule,
    build_uk,
    build_vj,
    build_vk,
    chain_schedule,
    heis_exact_schedule,
    heisenberg_loop,
    plan_triangular,
    play_inverse_exact,
    thm3_schedule,
)
from .dynamics import (
    BankSpec,
    DivergenceError,
    Event,
    FieldSet,
    GronwallReport,
    SwitchingSpec,
    Trajectory,
    TriangularSpec,
    gronwall_bound,
    heisenberg_fields,
    integrate_bank,
    integrate_plain,
    integrate_play_controls,
    integrate_play_state,
    integrate_switching,
    sector_index,
)
from .experiments import ExperimentReport, convergence_fit, run_experiment

__version__ = "0.1.0"
