"""Reference-table regeneration, radius sweeps, model comparisons and export."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circular import (
    CircularSpec,
    Parity,
    TargetSpec,
    circular_dim,
    moments_from_partition,
    target_overlap,
    target_overlap_analytic,
    variance_from_partition,
)
from .errors import ExportError
from .fock import inner_product
from .ion import HamiltonianKind
from .schemes import Mode, PulseSequence, Scheme, run_sequence, success_probability

RECORD_FIELDS = ("label", "N", "a", "overlap", "p_up", "mean_n", "var_n", "dim")
SIG_DIGITS = 9


@dataclass(frozen=True)
class Table1Row:
    label: str
    N: int
    a: float
    target: TargetSpec
    overlap: float
    p_up: float
    mean_n: float
    var_n: float


TABLE1 = (
    Table1Row("(|0>+|8>)/sqrt2", 8, 3.76, TargetSpec.two_fock(0, 8), 0.999960, 0.04635, 4.00322, 16.00497),
    Table1Row("|8>", 8, 6.80, TargetSpec.fock(8), 0.982674, 0.12851, 7.99994, 1.10908),
    Table1Row("(|8>+|16>)/sqrt2", 8, 12.17, TargetSpec.two_fock(8, 16), 0.991848, 0.12016, 11.94293, 16.99720),
    Table1Row("|16>", 8, 15.80, TargetSpec.fock(16), 0.79002, 0.12542, 15.99847, 13.62115),
    Table1Row("(|0>+|16>)/sqrt2", 16, 6.80, TargetSpec.two_fock(0, 16), 0.999999, 0.00261, 7.99560, 63.99998),
    Table1Row("|16>", 16, 12.80, TargetSpec.fock(16), 0.999918, 0.08564, 16.00001, 0.02088),
    Table1Row("(|16>+|32>)/sqrt2", 16, 24.10, TargetSpec.two_fock(16, 32), 0.999807, 0.04295, 24.12047, 64.05677),
    Table1Row("|32>", 16, 31.20, TargetSpec.fock(32), 0.96834, 0.07190, 32.02314, 8.10407),
)

# The printed mean for the first row disagrees with the distribution the same
# row's overlap and variance are computed from; that cell is reported only.
KNOWN_ANOMALIES = frozenset({("(|0>+|8>)/sqrt2", "mean_n")})


@dataclass(frozen=True)
class Tolerances:
    overlap: float = 2e-4  # absolute
    p_up: float = 2e-4  # absolute
    mean_n: float = 0.01  # relative
    var_n: float = 0.01  # relative

    def scaled(self, factor: float) -> "Tolerances":
        return Tolerances(self.overlap * factor, self.p_up * factor,
                          self.mean_n * factor, self.var_n * factor)

    def check(self, name: str, reference: float, computed: float) -> bool:
        delta = abs(computed - reference)
        if name in ("overlap", "p_up"):
            return delta <= getattr(self, name)
        return delta <= getattr(self, name) * abs(reference)


@dataclass
class ResultRecord:
    label: str
    N: int
    a: float
    overlap: float
    p_up: float
    mean_n: float
    var_n: float
    dim: int
    deviations: dict = field(default_factory=dict)
    passed: bool = True
    explained: bool = True

    def row(self) -> dict:
        return {k: getattr(self, k) for k in RECORD_FIELDS}


def table1_record(row: Table1Row, tolerances: Tolerances = Tolerances()) -> ResultRecord:
    M = int(round(math.log2(row.N)))
    spec = CircularSpec.from_a(row.N, row.a)
    dim = max(circular_dim(spec), row.target.max_index + 1)
    rec = ResultRecord(
        label=row.label,
        N=row.N,
        a=row.a,
        overlap=target_overlap(spec, row.target, dim),
        p_up=success_probability(Scheme.S1, M, row.a),
        mean_n=moments_from_partition(row.N, Parity.EVEN, row.a, 1),
        var_n=variance_from_partition(row.N, Parity.EVEN, row.a),
        dim=dim,
    )
    for name in ("overlap", "p_up", "mean_n", "var_n"):
        reference, computed = getattr(row, name), getattr(rec, name)
        known = (row.label, name) in KNOWN_ANOMALIES
        ok = tolerances.check(name, reference, computed)
        if known or not ok:
            rec.deviations[name] = (reference, computed, computed - reference)
        if not ok:
            rec.passed = False
            rec.explained = rec.explained and known
    return rec


def reproduce_table1(tolerances: Tolerances = Tolerances()) -> list[ResultRecord]:
    """All eight rows, each with deviations recorded against the printed values."""
    return [table1_record(row, tolerances) for row in TABLE1]


def table1_policy_ok(records: list[ResultRecord]) -> bool:
    """At least 7 of 8 rows pass and every failing row is a known anomaly."""
    if len(records) != len(TABLE1):
        return False
    passing = sum(r.passed for r in records)
    return passing >= 7 and all(r.passed or r.explained for r in records)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    N: int
    parity: Parity
    target: TargetSpec
    grid: list[tuple[float, float, float]]
    best_a: float
    best_overlap: float


def production_probability(N: int, parity: Parity, a: float) -> float:
    """Success probability of the scheme that prepares this circular state.

    N = 2^M even -> S1, N = 2^M odd -> S3, other even-family N -> S2 with M = N-1.
    """
    M = int(round(math.log2(N))) if N >= 2 else 0
    if N >= 2 and 2**M == N:
        return success_probability(Scheme.S1 if parity is Parity.EVEN else Scheme.S3, M, a)
    if parity is Parity.EVEN and N >= 2:
        return success_probability(Scheme.S2, N - 1, a)
    return float("nan")


def sweep_radius(N: int, parity: Parity, target: TargetSpec, a_min: float, a_max: float,
                 steps: int) -> SweepResult:
    """Overlap and production probability on an even grid of a = r^2."""
    if not a_min < a_max:
        raise ValueError("a_min must be smaller than a_max")
    if steps < 2:
        raise ValueError("steps must be >= 2")
    if a_min < 0:
        raise ValueError("a must be non-negative")
    grid = []
    for a in np.linspace(a_min, a_max, steps):
        a = float(a)
        if a == 0.0 and parity is Parity.ODD:
            ov, pu = 0.0, 0.0
        else:
            ov = target_overlap_analytic(N, parity, a, target)
            pu = production_probability(N, parity, a)
        grid.append((a, ov, pu))
    overlaps = np.array([g[1] for g in grid])
    best = int(np.argmax(overlaps))  # first maximum, i.e. smaller a on ties
    return SweepResult(N, parity, target, grid, grid[best][0], grid[best][1])


# ---------------------------------------------------------------------------
# model comparison


def compare_modes(plan: PulseSequence, alpha0: complex,
                  hamiltonian: HamiltonianKind = HamiltonianKind.KERR) -> float:
    """max |closed-form - dense| conditional probability, plus final-state infidelity."""
    closed = run_sequence(plan, alpha0, Mode.CLOSED_FORM)
    dense = run_sequence(plan, alpha0, Mode.DENSE, hamiltonian, dim=closed.dim)
    dp = max(abs(p - q) for p, q in zip(closed.cycle_probs, dense.cycle_probs))
    fid = abs(inner_product(closed.final_motional, dense.final_motional)) ** 2
    return dp + max(0.0, 1.0 - fid)


# ---------------------------------------------------------------------------
# export


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(f"{float(x):.{SIG_DIGITS}g}")
    return x


def _csv_cell(x):
    if isinstance(x, float):
        return f"{x:.{SIG_DIGITS}g}"
    return str(x)


def _deviation_payload(rec: ResultRecord) -> dict:
    return {k: {"reference": _fmt(p), "computed": _fmt(c), "delta": _fmt(d)}
            for k, (p, c, d) in rec.deviations.items()}


def export(records, fmt: str, path, include_deviations: bool = False) -> Path:
    """Write records as CSV or JSON.

    Columns are exactly ``label,N,a,overlap,p_up,mean_n,var_n,dim``;
    ``include_deviations`` appends a ``deviations`` column/key.  Floats are
    written with 9 significant digits.
    """
    records = list(records)
    if not records:
        raise ExportError("nothing to export")
    fmt = fmt.lower()
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            if fmt == "csv":
                fields = list(RECORD_FIELDS) + (["deviations"] if include_deviations else [])
                writer = csv.writer(fh)
                writer.writerow(fields)
                for rec in records:
                    row = [_csv_cell(_fmt(v)) for v in rec.row().values()]
                    if include_deviations:
                        row.append(json.dumps(_deviation_payload(rec), sort_keys=True))
                    writer.writerow(row)
            else:
                out = []
                for rec in records:
                    obj = {k: _fmt(v) for k, v in rec.row().items()}
                    if include_deviations:
                        obj["deviations"] = _deviation_payload(rec)
                    out.append(obj)
                json.dump(out, fh, indent=2)
                fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        if tmp.exists():
            tmp.unlink()
        raise ExportError(f"could not write {path}: {exc}") from exc
    return path


def load_records(path) -> list[ResultRecord]:
    """Read records written by ``export`` (either format)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json" or text.lstrip().startswith("["):
        rows = json.loads(text)
    else:
        rows = list(csv.DictReader(text.splitlines()))
    out = []
    for row in rows:
        out.append(ResultRecord(
            label=row["label"], N=int(row["N"]), a=float(row["a"]),
            overlap=float(row["overlap"]), p_up=float(row["p_up"]),
            mean_n=float(row["mean_n"]), var_n=float(row["var_n"]), dim=int(row["dim"]),
        ))
    return out


def export_sweep(result: SweepResult, fmt: str, path) -> Path:
    fmt = fmt.lower()
    path = Path(path)
    try:
        if fmt == "csv":
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["a", "overlap", "p_up"])
                for a, ov, pu in result.grid:
                    writer.writerow([_csv_cell(_fmt(a)), _csv_cell(_fmt(ov)), _csv_cell(_fmt(pu))])
        elif fmt == "json":
            payload = {
                "N": result.N,
                "parity": result.parity.value,
                "target": result.target.label(),
                "best_a": _fmt(result.best_a),
                "best_overlap": _fmt(result.best_overlap),
                "grid": [{"a": _fmt(a), "overlap": _fmt(ov), "p_up": _fmt(pu)}
                         for a, ov, pu in result.grid],
            }
            path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise ExportError(f"could not write {path}: {exc}") from exc
    return path
