"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 zero-probability branch,
4 truncation too small, 5 reference-table reproduction policy failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, asdict

import numpy as np

from . import __version__
from .circular import (
    CircularSpec,
    Parity,
    TargetSpec,
    circular_dim,
    circular_state,
    classify_regime,
    fock_distribution,
    moments_from_partition,
    partition,
    variance_from_partition,
)
from .errors import DegenerateState, ExportError, TruncationTooSmall, ZeroProbabilityBranch
from .fock import TruncationPolicy
from .harness import (
    Tolerances,
    export,
    export_sweep,
    reproduce_table1,
    sweep_radius,
    table1_policy_ok,
)
from .ion import DEFAULT_OMEGA, HamiltonianKind
from .schemes import Mode, Scheme, make_plan, run_sequence, total_time

EXIT_OK, EXIT_USAGE, EXIT_ZERO_BRANCH, EXIT_TRUNCATION, EXIT_POLICY = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


@dataclass
class Config:
    omega: float = DEFAULT_OMEGA
    lambda_: float | None = None
    tail_tol: float = 1e-12
    measurement_overhead_us: float = 0.2
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.lambda_ is None:
            self.lambda_ = self.omega / 10.0
        if not (self.omega > 0 and self.lambda_ > 0):
            raise UsageError("omega and lambda must be positive")
        if not 0 < self.tail_tol < 1:
            raise UsageError("tail_tol must lie in (0, 1)")
        if self.measurement_overhead_us < 0:
            raise UsageError("measurement overhead must be >= 0")
        if self.format not in ("csv", "json"):
            raise UsageError("format must be csv or json")

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy(tail_tol=self.tail_tol)

    def header(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


def _config_from(args) -> Config:
    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if "lambda" in values:
            values["lambda_"] = values.pop("lambda")
        unknown = set(values) - set(Config.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for flag, key in (("omega", "omega"), ("lam", "lambda_"), ("tail_tol", "tail_tol"),
                      ("overhead", "measurement_overhead_us"), ("out", "output"), ("format", "format")):
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    return Config(**values)


def _emit(obj):
    print(json.dumps(obj, indent=2, default=_json_default))


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(type(x))


def _float9(x: float) -> float:
    return float(f"{x:.9g}")


# ---------------------------------------------------------------------------
# commands


def cmd_circular(args, cfg: Config) -> int:
    parity = Parity(args.parity)
    if args.N < 1 or args.a < 0:
        raise UsageError("need N >= 1 and a >= 0")
    if parity is Parity.ODD and (args.N % 2 or args.N < 2):
        raise UsageError("the odd family needs an even N >= 2")
    if parity is Parity.ODD and partition(args.N, parity, args.a) == 0.0:
        raise DegenerateState("odd circular state at a=0 has zero norm")
    spec = CircularSpec.from_a(args.N, args.a, parity)
    dim = circular_dim(spec, cfg.policy)
    report = {"config": cfg.header(), "N": args.N, "parity": parity.value, "a": args.a,
              "r": spec.r, "dim": dim}
    if args.N >= 2:
        reg = classify_regime(args.N, args.a)
        report["regime"] = {"tag": reg.tag.value, "x1": reg.x1, "x2": reg.x2, "x3": reg.x3}
    if args.moments:
        report["mean_n"] = _float9(moments_from_partition(args.N, parity, args.a, 1))
        report["var_n"] = _float9(variance_from_partition(args.N, parity, args.a))
    if args.fock_dist:
        dist = fock_distribution(args.N, parity, args.a, dim)
        # cross-check against the numerically built state
        psi = circular_state(spec, dim, cfg.policy)
        report["fock_dist"] = [
            {"n": n, "p": _float9(p), "p_state": _float9(abs(psi.amps[n]) ** 2)}
            for n, p in enumerate(dist) if p > 1e-15
        ]
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, default=_json_default)
    _emit(report)
    return EXIT_OK


def cmd_scheme(args, cfg: Config) -> int:
    if not 1 <= args.M <= 8:
        raise UsageError("M must lie in 1..8")
    if args.r < 0:
        raise UsageError("r must be >= 0")
    scheme = Scheme(args.id)
    mode = Mode(args.mode)
    ham = HamiltonianKind(args.hamiltonian)
    if mode is Mode.CLOSED_FORM and ham is not HamiltonianKind.KERR:
        raise UsageError("--hamiltonian carrier requires --mode dense")
    try:
        plan = make_plan(scheme, args.M, cfg.omega, cfg.lambda_, args.eta)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.dim is not None and args.dim < 1:
        raise UsageError("dim must be positive")
    result = run_sequence(plan, args.r, mode, ham, cfg.policy, dim=args.dim)
    total, fraction = total_time(plan, cfg.measurement_overhead_us)
    record = result.as_dict()
    record.update({
        "config": cfg.header(),
        "eta": plan.params.eta,
        "target": {"N": plan.target_N, "parity": plan.target_parity.value},
        "dominant_fock": int(np.argmax(result.final_motional.probabilities())),
        "total_time_us": total,
        "overhead_fraction": fraction,
    })
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, default=_json_default)
    _emit(record)
    return EXIT_OK


def cmd_table1(args, cfg: Config) -> int:
    tol = Tolerances().scaled(args.tolerance_scale)
    records = reproduce_table1(tol)
    ok = table1_policy_ok(records)
    out = cfg.output or f"table1.{cfg.format}"
    export(records, cfg.format, out, include_deviations=True)
    summary = {
        "config": cfg.header(),
        "output": out,
        "rows_passing": sum(r.passed for r in records),
        "policy_ok": ok,
        "deviations": {r.label + f" (N={r.N}, a={r.a})": r.deviations for r in records if r.deviations},
    }
    _emit(summary)
    return EXIT_OK if ok else EXIT_POLICY


def _parse_range(text: str):
    try:
        lo, hi, steps = text.split(":")
        return float(lo), float(hi), int(steps)
    except ValueError as exc:
        raise UsageError(f"range must look like min:max:steps, got {text!r}") from exc


def cmd_sweep(args, cfg: Config) -> int:
    lo, hi, steps = _parse_range(args.a)
    if not lo < hi or steps < 2 or lo < 0:
        raise UsageError("need 0 <= min < max and steps >= 2")
    try:
        target = TargetSpec.parse(args.target)
        parity = Parity(args.parity)
        CircularSpec(args.N, parity)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = sweep_radius(args.N, parity, target, lo, hi, steps)
    if cfg.output:
        export_sweep(res, cfg.format, cfg.output)
    _emit({"config": cfg.header(), "N": res.N, "parity": res.parity.value,
           "target": target.label(), "steps": steps,
           "best_a": res.best_a, "best_overlap": res.best_overlap})
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--omega", type=float, help="Rabi frequency, rad/us (default 2 pi)")
    common.add_argument("--lambda", dest="lam", type=float, help="rotation Rabi frequency, rad/us")
    common.add_argument("--tail-tol", type=float)
    common.add_argument("--overhead", type=float, help="measurement time per cycle, us")
    common.add_argument("--out", help="output file")
    common.add_argument("--format", choices=("csv", "json"))

    p = _Parser(prog="circular-ion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("circular", parents=[common], help="analyse a circular state")
    c.add_argument("--N", type=int, required=True)
    c.add_argument("--parity", choices=("even", "odd"), default="even")
    c.add_argument("--a", type=float, required=True, help="a = r^2")
    c.add_argument("--fock-dist", action="store_true")
    c.add_argument("--moments", action="store_true")
    c.set_defaults(func=cmd_circular)

    s = sub.add_parser("scheme", parents=[common], help="run a pulse scheme")
    s.add_argument("--id", type=int, choices=(1, 2, 3), required=True)
    s.add_argument("--M", type=int, required=True)
    s.add_argument("--r", type=float, required=True, help="initial coherent amplitude |alpha0|")
    s.add_argument("--mode", choices=("closed", "dense"), default="closed")
    s.add_argument("--hamiltonian", choices=("kerr", "carrier"), default="kerr")
    s.add_argument("--eta", type=float, help="override the Lamb-Dicke parameter (scheme 1)")
    s.add_argument("--dim", type=int, help="Fock truncation (default: chosen from --tail-tol)")
    s.set_defaults(func=cmd_scheme)

    t = sub.add_parser("table1", parents=[common], help="reproduce the reference table of circular states")
    t.add_argument("--tolerance-scale", type=float, default=1.0,
                   help="multiply every comparison tolerance")
    t.set_defaults(func=cmd_table1)

    w = sub.add_parser("sweep", parents=[common], help="scan a = r^2 for the best overlap")
    w.add_argument("--N", type=int, required=True)
    w.add_argument("--parity", choices=("even", "odd"), default="even")
    w.add_argument("--target", required=True, help="vacuum | fock:n | two:n1,n2")
    w.add_argument("--a", required=True, help="min:max:steps")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config_from(args)
        return args.func(args, cfg)
    except (UsageError, DegenerateState) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ZeroProbabilityBranch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ZERO_BRANCH
    except TruncationTooSmall as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRUNCATION
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
