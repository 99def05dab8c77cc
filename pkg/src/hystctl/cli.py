"""Command-line front end.

One subcommand per experiment, small operator utilities (play / relay / bank),
and a free-form `sim` runner driven by a JSON config.  Exit codes: 0 all
verdicts pass, 1 domain error or failed verdict, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from .dynamics import events_to_csv, heisenberg_fields, integrate_plain
from .experiments import EXPERIMENTS, run_experiment
from .hysteresis import RelayBank, RelayState, bank_trace, play_apply, relay_advance
from .signals import DomainError, PolylineSignal, StepSignal, signal_from_json

# flags each experiment accepts (mirrors the experiment param checks)
EXP_PARAMS = {
    "fig3_surjectivity": ("k", "rho", "w0"),
    "thm2_convergence": ("k", "rho", "step"),
    "fig5_density": ("j", "rho"),
    "thm3_convergence": ("j", "rho", "step", "seed"),
    "heis_exact": ("cases", "rho", "step", "seed"),
    "switching_demo": ("step",),
    "bank_vs_truncated": ("k", "cases", "seed"),
    "chain_demo": ("j", "rho", "step"),
}


def _int_list(s):
    return [int(x) for x in str(s).split(",") if x != ""]

FLAG_TYPES = {
    "k": _int_list,
    "j": _int_list,
    "rho": float,
    "w0": float,
    "step": float,
    "seed": int,
    "cases": int,
}


@dataclass
class RunConfig:
    command: str
    experiment: str | None = None
    params: dict = field(default_factory=dict)
    out: str | None = None
    manifest: str | None = None
    extra: dict = field(default_factory=dict)


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hystctl",
        description="Simulation toolkit for driftless control-affine systems "
        "with rate-independent hysteresis.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("play", help="apply the play operator to a polyline input")
    sp.add_argument("--input", required=True, help="JSON signal file (polyline)")
    sp.add_argument("--w0", type=float, required=True)
    sp.add_argument("--rho", type=float, required=True)
    sp.add_argument("--out", help="CSV of output knots")

    sp = sub.add_parser("relay", help="run a delayed relay along a polyline input")
    sp.add_argument("--input", required=True)
    sp.add_argument("--lo", type=float, required=True)
    sp.add_argument("--hi", type=float, required=True)
    sp.add_argument("--out0", type=int, choices=(-1, 1), required=True)
    sp.add_argument("--out", help="CSV of switch events")

    sp = sub.add_parser("bank", help="run a staircase relay bank along a polyline input")
    sp.add_argument("--input", required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--nplus", type=int, default=0)
    sp.add_argument("--out", help="CSV of the macroscopic output")
    sp.add_argument("--events", help="CSV of relay switch events")

    def add_exp_flags(parser, names):
        for name in names:
            parser.add_argument(f"--{name}", type=FLAG_TYPES[name])
        parser.add_argument("--out", help="CSV table path")
        parser.add_argument("--manifest", help="JSON manifest path")
        parser.add_argument("--config", help="JSON config file (flags override it)")

    sp = sub.add_parser("sim", help="run an experiment or a config-driven simulation")
    sp.add_argument("experiment", nargs="?", help="experiment id (unique prefix ok)")
    add_exp_flags(sp, sorted(FLAG_TYPES))

    for exp_id in EXPERIMENTS:
        sp = sub.add_parser(exp_id, help=f"run the {exp_id} experiment")
        add_exp_flags(sp, EXP_PARAMS[exp_id])
    return p


def _resolve_experiment(name: str) -> str:
    if name in EXPERIMENTS:
        return name
    matches = [e for e in EXPERIMENTS if e.startswith(name)]
    if len(matches) != 1:
        raise _UsageError(f"unknown experiment id: {name!r}")
    return matches[0]


def parse_config(argv) -> RunConfig:
    """Parse argv (+ optional JSON config file) into a validated RunConfig."""
    parser = _build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    cfg = RunConfig(command=command)

    if command in ("play", "relay", "bank"):
        cfg.extra = args
        if command == "play" and args["rho"] < 0.0:
            raise _UsageError("rho must be >= 0")
        if command == "relay" and not args["lo"] < args["hi"]:
            raise _UsageError("need lo < hi")
        if command == "bank" and args["k"] < 1:
            raise _UsageError("need k >= 1")
        return cfg

    # experiment-style commands
    cfg.out = args.pop("out", None)
    cfg.manifest = args.pop("manifest", None)
    config_path = args.pop("config", None)
    exp = command if command in EXPERIMENTS else args.pop("experiment", None)

    file_params: dict = {}
    if config_path:
        with open(config_path) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise _UsageError("config file must hold a JSON object")
        file_exp = raw.pop("experiment", None)
        if exp is None:
            exp = file_exp
        cfg.out = cfg.out or raw.pop("out", None)
        cfg.manifest = cfg.manifest or raw.pop("manifest", None)
        cfg.extra = {k: raw.pop(k) for k in ("system", "controls", "z0", "step", "T")
                     if k in raw and exp is None}
        file_params = raw

    if command == "sim" and exp is None:
        if cfg.extra.get("system"):
            if not cfg.out:
                raise _UsageError("config-driven sim needs an --out path")
            return cfg
        raise _UsageError("sim needs an experiment id or a config with one")
    if exp is None:
        raise _UsageError("no experiment selected")
    exp = _resolve_experiment(str(exp))
    cfg.experiment = exp

    allowed = set(EXP_PARAMS[exp])
    params = {}
    for key, val in file_params.items():
        if key not in allowed:
            raise _UsageError(f"unknown config key for {exp}: {key!r}")
        params[key] = val
    for key in FLAG_TYPES:
        if key in args and args[key] is not None:
            if key not in allowed:
                raise _UsageError(f"--{key} is not a parameter of {exp}")
            params[key] = args[key]
    if "rho" in params and not params["rho"] > 0.0:
        raise _UsageError("rho must be positive")
    if "step" in params and not params["step"] > 0.0:
        raise _UsageError("step must be positive")
    cfg.params = params
    return cfg


def _load_polyline(path: str) -> PolylineSignal:
    with open(path) as fh:
        sig = signal_from_json(json.load(fh))
    if not isinstance(sig, PolylineSignal):
        raise DomainError("expected a polyline signal ({'knots': ...})")
    return sig


def _write_or_print(rows, header, out):
    if out:
        import csv

        with open(out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    else:
        print(",".join(header))
        for r in rows:
            print(",".join(str(c) for c in r))


def dispatch(cfg: RunConfig) -> int:
    if cfg.command == "play":
        a = cfg.extra
        out_sig = play_apply(_load_polyline(a["input"]), a["w0"], a["rho"])
        _write_or_print(out_sig.csv_rows(), ["t", "w"], a.get("out"))
        return 0

    if cfg.command == "relay":
        a = cfg.extra
        sig = _load_polyline(a["input"])
        state = RelayState(a["lo"], a["hi"], a["out0"])
        rows = []
        for (t0, z0), (t1, z1) in zip(sig.knots, sig.knots[1:]):
            state, ev = relay_advance(state, z0, z1, t0, t1)
            if ev is not None:
                rows.append((ev.time, ev.old, ev.new))
        _write_or_print(rows, ["time", "old", "new"], a.get("out"))
        return 0

    if cfg.command == "bank":
        a = cfg.extra
        sig = _load_polyline(a["input"])
        bank = RelayBank.staircase(a["k"], a["nplus"])
        output, events, _ = bank_trace(bank, sig)
        _write_or_print(output.csv_rows(), ["t", "w_k"], a.get("out"))
        if a.get("events"):
            rows = [(e.time, e.index, e.new) for e in events]
            _write_or_print(rows, ["time", "relay", "new"], a["events"])
        return 0

    if cfg.command == "sim" and cfg.experiment is None:
        e = cfg.extra
        if e.get("system") != "heisenberg":
            raise DomainError("config-driven sim supports system 'heisenberg'")
        controls = tuple(signal_from_json(c) for c in e["controls"])
        traj = integrate_plain(
            heisenberg_fields(), controls, tuple(e["z0"]), step=e.get("step", 1e-3)
        )
        traj.to_csv(cfg.out)
        return 0

    report = run_experiment(cfg.experiment, cfg.params)
    if cfg.out:
        report.to_csv(cfg.out)
    else:
        keys = list(report.rows[0].keys())
        print(",".join(keys))
        for r in report.rows:
            print(",".join(str(r[k]) for k in keys))
    if cfg.manifest:
        report.to_manifest(cfg.manifest)
    print(f"{report.id}: {'pass' if report.verdict else 'fail'} ({report.runtime:.3f}s)")
    return 0 if report.verdict else 1


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except SystemExit as exc:  # argparse already printed usage
        return int(exc.code or 0)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    try:
        return dispatch(cfg)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
