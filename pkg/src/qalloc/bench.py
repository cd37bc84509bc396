"""Benchmark harness: run allocation methods over circuit suites.

Every (circuit, method) cell re-validates its allocation before being
reported; failures are recorded in the report rather than dropped.  When
a set of random circuits is benchmarked, their per-method mean is
appended as a "Random Avg" aggregate row.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .allocator import (
    AllocationError,
    allocate_ensemble,
    allocate_parallel,
    allocate_sequential,
    validate_allocation,
)
from .baseline import hqa_allocate
from .circuits import SlicedCircuit, UnslicedCircuit, slice_circuit
from .hardware import Hardware
from .policy import AllocationPolicy
from .trainer import normalized_cost

__all__ = ["METHODS", "BenchmarkCell", "BenchmarkReport", "benchmark_suite",
           "report_to_csv", "report_to_table", "RANDOM_AVG_NAME"]

METHODS = ("sequential", "parallel", "ensemble", "hqa")
RANDOM_AVG_NAME = "Random Avg"

CSV_HEADER = ["circuit", "qubits", "slices", "method", "total_cost",
              "normalized_cost", "wall_time_s", "valid", "error"]


@dataclass
class BenchmarkCell:
    circuit: str
    qubits: int
    slices: int
    method: str
    total_cost: float | None
    normalized_cost: float | None
    wall_time_s: float | None
    valid: bool
    error: str = ""


@dataclass
class BenchmarkReport:
    rows: list[BenchmarkCell]

    def cells(self, method: str | None = None) -> list[BenchmarkCell]:
        return [r for r in self.rows if method is None or r.method == method]


def _run_method(method, circuit, hardware, policy):
    if method == "hqa":
        return hqa_allocate(circuit, hardware)
    if policy is None:
        raise ValueError(f"method {method!r} needs a policy")
    if method == "sequential":
        return allocate_sequential(circuit, hardware, policy, collect_trace=False)[0]
    if method == "parallel":
        return allocate_parallel(circuit, hardware, policy, collect_trace=False)[0]
    if method == "ensemble":
        return allocate_ensemble(circuit, hardware, policy)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def benchmark_suite(
    circuits: list[tuple[str, UnslicedCircuit]],
    hardware: Hardware,
    methods: tuple[str, ...],
    policy: AllocationPolicy | None = None,
    random_group: frozenset[str] | set[str] = frozenset(),
) -> BenchmarkReport:
    """Run every method over every circuit.

    ``random_group`` names the circuits whose rows are additionally
    averaged into a per-method aggregate.
    """
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    rows: list[BenchmarkCell] = []
    for name, circuit in circuits:
        sliced = circuit if isinstance(circuit, SlicedCircuit) else slice_circuit(circuit)
        for method in methods:
            try:
                allocation = _run_method(method, sliced, hardware, policy)
            except AllocationError as exc:
                rows.append(BenchmarkCell(
                    name, sliced.num_qubits, sliced.num_slices, method,
                    None, None, None, valid=False, error=str(exc),
                ))
                continue
            report = validate_allocation(allocation.assignment, sliced, hardware)
            rows.append(BenchmarkCell(
                name, sliced.num_qubits, sliced.num_slices, method,
                allocation.total_cost,
                normalized_cost(allocation, sliced),
                allocation.elapsed_seconds,
                valid=report.ok,
                error="" if report.ok else report.describe(),
            ))
    if random_group:
        for method in methods:
            members = [
                r for r in rows
                if r.method == method and r.circuit in random_group and r.valid
            ]
            if not members:
                continue
            rows.append(BenchmarkCell(
                RANDOM_AVG_NAME,
                0,
                0,
                method,
                float(np.mean([r.total_cost for r in members])),
                float(np.mean([r.normalized_cost for r in members
                               if r.normalized_cost is not None])),
                float(np.sum([r.wall_time_s for r in members])),
                valid=True,
            ))
    return BenchmarkReport(rows)


def _fmt(value, digits=4) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def report_to_csv(report: BenchmarkReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in report.rows:
        writer.writerow([
            r.circuit, r.qubits, r.slices, r.method,
            _fmt(r.total_cost), _fmt(r.normalized_cost, 6),
            _fmt(r.wall_time_s, 6), _fmt(r.valid), r.error,
        ])
    return buf.getvalue()


def report_to_table(report: BenchmarkReport) -> str:
    """Aligned text table of the report."""
    header = ["circuit", "Q", "T", "method", "cost", "norm", "time(s)", "ok"]
    body = [
        [
            r.circuit, _fmt(r.qubits), _fmt(r.slices), r.method,
            _fmt(r.total_cost, 1), _fmt(r.normalized_cost, 4),
            _fmt(r.wall_time_s, 3), "yes" if r.valid else f"NO ({r.error})",
        ]
        for r in report.rows
    ]
    widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]
    lines = [
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in [header] + body
    ]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"
