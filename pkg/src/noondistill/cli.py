"""Command-line front end.

Every command writes data only (CSV or JSON) to stdout or ``--out``;
diagnostics go to stderr. Exit codes: 0 success, 2 usage or validation error,
1 internal error.

``--config file.json`` supplies option values (keys are option names, e.g.
``{"N": 7, "phi": "pi/14", "uniform_rho": 0.31}``); flags given on the command
line take precedence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .cascade import (
    CascadeSpec,
    analytics,
    critical_reflectance,
    efficiency_penalty,
    fig4_sweep,
    optimal_schedule,
    resolving_analytics,
    resolving_optimum,
)
from .fock import as_reflectance
from .montecarlo import DetectorModel, compare, simulate_cascade, simulate_resolving
from .unit import noon_unit_table, prob_closed_form

_ANGLE = re.compile(r"^\s*([+-]?)\s*(\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$")

TABLE_FORMULAS = {
    "I": {
        (0, 0): ("t^4", lambda rho, phi: (1 - rho) ** 2),
        (0, 1): ("t^2 r^2", lambda rho, phi: (1 - rho) * rho),
        (0, 2): ("r^4/2", lambda rho, phi: rho**2 / 2),
        (1, 0): ("t^2 r^2", lambda rho, phi: (1 - rho) * rho),
        (2, 0): ("r^4/2", lambda rho, phi: rho**2 / 2),
    },
    "II": {
        (0, 0): ("t^4", lambda rho, phi: (1 - rho) ** 2),
        (0, 1): ("t^2 r^2", lambda rho, phi: (1 - rho) * rho),
        (0, 2): ("r^4 sin^2(phi)/2", lambda rho, phi: rho**2 * math.sin(phi) ** 2 / 2),
        (1, 0): ("t^2 r^2", lambda rho, phi: (1 - rho) * rho),
        (1, 1): ("r^4 cos^2(phi)", lambda rho, phi: rho**2 * math.cos(phi) ** 2),
        (2, 0): ("r^4 sin^2(phi)/2", lambda rho, phi: rho**2 * math.sin(phi) ** 2 / 2),
    },
}


class UsageError(ValueError):
    pass


def parse_angle(text) -> float:
    """Radians from a float literal or a ``[j]pi[/k]`` token such as ``pi/14``."""
    if isinstance(text, (int, float)):
        return float(text)
    match = _ANGLE.match(text)
    if match:
        sign, coef, denom = match.groups()
        value = (float(coef) if coef not in ("", ".") else 1.0) * math.pi
        if denom:
            if float(denom) == 0.0:
                raise argparse.ArgumentTypeError(f"zero denominator in angle {text!r}")
            value /= float(denom)
        return -value if sign == "-" else value
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an angle: {text!r}") from None


def parse_number(text) -> float:
    """Float literal or exact fraction ``p/q``."""
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_schedule(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [parse_number(x) for x in text]
    return [parse_number(x) for x in text.split(",") if x.strip()]


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


# output helpers

def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _flatten(prefix: str, obj, out: dict) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    elif isinstance(obj, (list, tuple)):
        out[prefix] = ";".join(fmt(v) if not isinstance(v, (list, tuple)) else "-".join(map(fmt, v)) for v in obj)
    else:
        out[prefix] = obj


def _emit(args, payload: dict, table: tuple[list[str], list[list]] | None = None) -> None:
    if args.format == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif table is not None:
        text = _csv(*table)
    else:
        flat: dict = {}
        _flatten("", payload, flat)
        text = _csv(list(flat), [list(flat.values())])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _reflectance_columns(rhos) -> tuple[list[str], list[float]]:
    names = ["rho_1_nearest_output"] + [f"rho_{k}" for k in range(2, len(rhos) + 1)]
    return names, list(rhos)


# commands

def cmd_tables(args) -> None:
    rho = as_reflectance(args.rho).rho
    phi = args.phi
    rows, records = [], []
    for name, erase in (("I", False), ("II", True)):
        oracle = {(o.event.m, o.event.n): o for o in noon_unit_table(2, 2, phi, rho, erase=erase)}
        for event in sorted(TABLE_FORMULAS[name]):
            label, formula = TABLE_FORMULAS[name][event]
            value = formula(rho, phi)
            outcome = oracle.get(event)
            prob = outcome.probability if outcome else 0.0
            if value <= 1e-15 and prob <= 1e-15:
                continue
            rows.append([name, event[0], event[1], label, value, prob])
            records.append({
                "table": name, "m": event[0], "n": event[1], "formula": label,
                "formula_value": value, "probability": prob,
                "transmitted": outcome.transmitted.to_dict() if outcome else None,
            })
    header = ["table", "m", "n", "formula", "formula_value", "probability"]
    _emit(args, {"rho": rho, "phi": phi, "rows": records}, (header, rows))


def cmd_unit(args) -> None:
    rho = as_reflectance(args.rho).rho
    multiplier = args.M if args.M is not None else args.N
    outcomes = noon_unit_table(args.N, multiplier, args.phi, rho, erase=not args.which_way)
    rows, records = [], []
    for o in outcomes:
        closed = prob_closed_form(args.N, multiplier, args.phi, o.event, rho) if not args.which_way else None
        rows.append([o.event.m, o.event.n, o.probability, closed])
        records.append({"m": o.event.m, "n": o.event.n, "probability": o.probability,
                        "closed_form": closed, "transmitted": o.transmitted.to_dict()})
    payload = {"N": args.N, "M": multiplier, "phi": args.phi, "rho": rho,
               "eraser": not args.which_way, "outcomes": records}
    _emit(args, payload, (["m", "n", "probability", "closed_form"], rows))


def _cascade_spec(args) -> CascadeSpec:
    parity = "odd" if args.N % 2 else "even"
    if args.parity and args.parity != parity:
        raise UsageError(f"N={args.N} is {parity}, but --parity {args.parity} was given")
    choices = sum(x is not None and x is not False for x in (args.uniform_rho, args.schedule, args.optimal or None))
    if choices != 1:
        raise UsageError("give exactly one of --uniform-rho, --schedule, --optimal")
    if args.optimal:
        return CascadeSpec.optimal(args.N, args.phi)
    if args.uniform_rho is not None:
        return CascadeSpec.uniform(args.N, args.phi, args.uniform_rho)
    return CascadeSpec.for_photons(args.N, args.phi, args.schedule)


def _detector(args) -> DetectorModel:
    return DetectorModel(args.detector, args.eta)


def cmd_cascade(args) -> None:
    spec = _cascade_spec(args)
    report = analytics(spec, track_herald_phase=args.track_herald_phase)
    payload = {"analytics": report.to_dict(),
               "eta_penalty": efficiency_penalty(spec.parity, spec.photons, args.eta)}
    if args.optimal:
        sched = optimal_schedule(spec.parity, spec.photons)
        payload["optimal"] = {"p_max": sched.p_max, "p_max_exact": str(sched.p_max_exact), "stirling": sched.stirling}
    if args.simulate:
        sim = simulate_cascade(spec, _detector(args), args.shots, args.seed, args.shards)
        payload["simulation"] = sim.to_dict()
        payload["verdict"] = compare(sim, analytics(spec, track_herald_phase=True)).to_dict()
    if args.format == "csv":
        names, values = _reflectance_columns(spec.reflectances)
        keys = ["p_all_11", "p_one_12", "p_one_21", "p_cond", "p_success"]
        d = report.to_dict()
        header = ["parity", "N", "phi"] + names + keys
        row = [spec.parity, spec.photons, spec.phase] + values + [d[k] for k in keys]
        if args.simulate:
            sim_keys = ["shots", "seed", "accepted", "correct", "efficiency_hat", "efficiency_se",
                        "fidelity_hat", "fidelity_se"]
            header += sim_keys + ["status"]
            row += [payload["simulation"][k] for k in sim_keys] + [payload["verdict"]["status"]]
        _emit(args, payload, (header, [row]))
    else:
        _emit(args, payload)


def cmd_resolving(args) -> None:
    if (args.rho is None) == (not args.optimize):
        raise UsageError("give exactly one of --rho, --optimize")
    rho = resolving_optimum(args.N) if args.optimize else as_reflectance(args.rho).rho
    report = resolving_analytics(args.N, rho)
    payload = report.to_dict()
    payload["eta_penalty"] = efficiency_penalty("resolving", args.N, args.eta)
    if args.simulate:
        sim = simulate_resolving(args.N, args.phi, rho, args.eta, args.shots, args.seed, args.shards)
        payload["simulation"] = sim.to_dict()
        payload["verdict"] = compare(sim, report).to_dict()
    _emit(args, payload)


def cmd_sweep(args) -> None:
    if not 2 <= args.N_min <= args.N_max <= 20:
        raise UsageError(f"need 2 <= N_min <= N_max <= 20, got ({args.N_min}, {args.N_max})")
    rows = fig4_sweep(args.N_min, args.N_max)
    payload = {"rows": [{"N": r.photons, "coincidence_max": r.coincidence_max, "resolving_max": r.resolving_max}
                        for r in rows]}
    _emit(args, payload, (["N", "coincidence_max", "resolving_max"],
                          [[r.photons, r.coincidence_max, r.resolving_max] for r in rows]))


def cmd_critical_rho(args) -> None:
    rho_c = critical_reflectance(args.N, args.phi, args.target, args.track_herald_phase)
    spec = CascadeSpec.uniform(args.N, args.phi, rho_c)
    report = analytics(spec, track_herald_phase=args.track_herald_phase)
    _emit(args, {"N": args.N, "phi": args.phi, "target": args.target, "rho_c": rho_c,
                 "p_cond": report.p_cond, "p_all_11": report.p_all_11})


def cmd_simulate(args) -> None:
    if args.protocol == "resolving":
        if args.rho is None:
            raise UsageError("--protocol resolving needs --rho")
        sim = simulate_resolving(args.N, args.phi, args.rho, args.eta, args.shots, args.seed, args.shards)
        reference = resolving_analytics(args.N, args.rho)
        ref_dict = reference.to_dict()
    else:
        if args.rho is not None and args.uniform_rho is None:
            args.uniform_rho = args.rho
        spec = _cascade_spec(args)
        sim = simulate_cascade(spec, _detector(args), args.shots, args.seed, args.shards)
        reference = analytics(spec, track_herald_phase=True)
        ref_dict = reference.to_dict()
    payload = {"simulation": sim.to_dict(), "analytics": ref_dict, "verdict": compare(sim, reference).to_dict()}
    _emit(args, payload)


# parser

def _common(p: argparse.ArgumentParser, fmt_default: str) -> None:
    p.add_argument("--format", choices=("csv", "json"), default=fmt_default)
    p.add_argument("--out", help="write output to this path instead of stdout")
    p.add_argument("--config", help="JSON file with option values")


def _sim_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eta", type=parse_number, default=1.0, help="detector efficiency")
    p.add_argument("--shards", type=int, default=1, help="parallel shot shards (results do not depend on it)")


def _cascade_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--phi", type=parse_angle, default=0.0)
    p.add_argument("--parity", choices=("odd", "even"))
    p.add_argument("--uniform-rho", type=parse_number)
    p.add_argument("--schedule", type=parse_schedule, help="comma-separated rho_1,...,rho_l (unit 1 nearest output)")
    p.add_argument("--optimal", action="store_true")
    p.add_argument("--detector", choices=("threshold", "resolving"), default="threshold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="noondistill", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", help="which-way and eraser detection tables for a 2-photon N00N input")
    p.add_argument("--rho", type=parse_number, required=True)
    p.add_argument("--phi", type=parse_angle, default=0.0)
    _common(p, "csv")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("unit", help="detection table of one unit for a general N00N input")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int)
    p.add_argument("--phi", type=parse_angle, default=0.0)
    p.add_argument("--rho", type=parse_number, required=True)
    p.add_argument("--which-way", action="store_true", help="omit the 50-50 eraser")
    _common(p, "csv")
    p.set_defaults(func=cmd_unit)

    p = sub.add_parser("cascade", help="closed-form figures of merit of a coincidence cascade")
    _cascade_options(p)
    p.add_argument("--track-herald-phase", action="store_true",
                   help="use phase-tracked weights for (1,2)/(2,1) heralds beyond unit 1")
    p.add_argument("--simulate", action="store_true")
    _sim_options(p)
    _common(p, "json")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("resolving", help="one-unit protocol with number-resolving detectors")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--rho", type=parse_number)
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--phi", type=parse_angle, default=0.0)
    p.add_argument("--simulate", action="store_true")
    _sim_options(p)
    _common(p, "json")
    p.set_defaults(func=cmd_resolving)

    p = sub.add_parser("sweep", help="best success probability of both protocols versus N")
    p.add_argument("--N-min", type=int, default=2)
    p.add_argument("--N-max", type=int, default=10)
    _common(p, "csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("critical-rho", help="uniform reflectance reaching a target conditional probability")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--phi", type=parse_angle, default=0.0)
    p.add_argument("--target", type=parse_number, required=True)
    p.add_argument("--track-herald-phase", action="store_true")
    _common(p, "json")
    p.set_defaults(func=cmd_critical_rho)

    p = sub.add_parser("simulate", help="Monte Carlo run compared against the closed forms")
    p.add_argument("--protocol", choices=("cascade", "resolving"), default="cascade")
    _cascade_options(p)
    p.add_argument("--rho", type=parse_number, help="reflectance (resolving) or uniform reflectance (cascade)")
    _sim_options(p)
    _common(p, "json")
    p.set_defaults(func=cmd_simulate)
    return parser


def _config_tokens(path: str) -> list[str]:
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    tokens = []
    for key, value in data.items():
        if key in ("command", "config"):
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            tokens.append(flag)
        elif value is False or value is None:
            continue
        elif isinstance(value, list):
            tokens += [flag, ",".join(str(v) for v in value)]
        else:
            tokens += [flag, str(value)]
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    try:
        cfg = _config_tokens(known.config)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from None
    cmd_pos = next((i for i, tok in enumerate(argv) if not tok.startswith("-")), None)
    if cmd_pos is None:
        return argv
    # config first so explicit flags override it
    return argv[: cmd_pos + 1] + cfg + argv[cmd_pos + 1:]


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_expand_config(argv))
    except UsageError as exc:
        print(f"noondistill: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except ValueError as exc:
        print(f"noondistill: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"noondistill: internal error: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
