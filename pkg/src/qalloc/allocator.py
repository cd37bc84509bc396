"""Constructing and scoring allocations.

An allocation assigns every qubit to a core in every time slice; its cost
is the summed inter-core movement cost between consecutive slices.  Two
construction procedures are provided: sequential (units placed in a
heuristic order) and parallel (the policy itself prioritizes units via a
flattened unit-by-core distribution), plus an ensemble that keeps the
cheaper of the two.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .circuits import SlicedCircuit, TimeSlice, UnslicedCircuit, slice_circuit
from .encoding import SliceFeatureStream
from .hardware import Hardware
from .policy import (
    AllocationPolicy,
    StepContext,
    action_distribution,
    build_feature_batch,
    greedy_action,
    sample_action,
)

__all__ = [
    "AllocationError",
    "AllocationUnit",
    "Allocation",
    "TraceStep",
    "ValidationReport",
    "allocation_cost",
    "validate_allocation",
    "sequential_order",
    "allocate_sequential",
    "allocate_parallel",
    "allocate_ensemble",
]


class AllocationError(RuntimeError):
    """Raised when an instance admits no legal action for some unit."""


@dataclass(frozen=True)
class AllocationUnit:
    """One placement decision: a gate pair or a single free qubit."""

    qubits: tuple[int, ...]
    score: float = 0.0

    @property
    def is_pair(self) -> bool:
        return len(self.qubits) == 2


@dataclass
class Allocation:
    """A complete core assignment, slices by qubits, with its total cost."""

    assignment: np.ndarray  # [T, Q] core indices
    total_cost: float
    mode: str
    elapsed_seconds: float = 0.0


@dataclass
class TraceStep:
    """One policy decision, recorded for training and inspection.

    Sequential steps store [C, Q, F] features and a core-index action;
    parallel steps store the whole pool batch [U, C, Q, F] and a flat
    unit-by-core action index.
    """

    slice_index: int
    unit: tuple[int, ...]
    key: np.ndarray
    query: np.ndarray
    legal_mask: np.ndarray | None
    action: int
    log_prob: float
    legal: bool


@dataclass
class ValidationReport:
    colocation_violations: list[tuple[int, int]] = field(default_factory=list)
    capacity_violations: list[tuple[int, int, int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.colocation_violations and not self.capacity_violations

    def describe(self) -> str:
        if self.ok:
            return "allocation satisfies all constraints"
        parts = [
            f"gate {g} in slice {t} spans two cores" for t, g in self.colocation_violations
        ] + [
            f"slice {t} puts {n} qubits in core {c} (capacity {cap})"
            for t, c, n, cap in self.capacity_violations
        ]
        return "; ".join(parts)


def allocation_cost(assignment: np.ndarray, cost_matrix: np.ndarray) -> float:
    """Total movement cost between consecutive slices; the first slice is free."""
    moves = np.asarray(assignment)
    if moves.ndim != 2:
        raise ValueError("assignment must be a [slices, qubits] matrix")
    if moves.shape[0] < 2:
        return 0.0
    return float(np.asarray(cost_matrix)[moves[:-1], moves[1:]].sum())


def validate_allocation(
    assignment: np.ndarray, circuit: SlicedCircuit, hardware: Hardware
) -> ValidationReport:
    """Check gate co-location and core capacities, reporting every violation."""
    moves = np.asarray(assignment)
    if moves.shape != (circuit.num_slices, circuit.num_qubits):
        raise ValueError(
            f"assignment shape {moves.shape} does not match circuit "
            f"({circuit.num_slices} slices, {circuit.num_qubits} qubits)"
        )
    report = ValidationReport()
    for t, ts in enumerate(circuit.slices):
        for g, gate in enumerate(ts.gates):
            if moves[t, gate.a] != moves[t, gate.b]:
                report.colocation_violations.append((t, g))
        counts = np.bincount(moves[t], minlength=hardware.num_cores)
        for core in np.flatnonzero(counts > hardware.capacities):
            report.capacity_violations.append(
                (t, int(core), int(counts[core]), int(hardware.capacities[core]))
            )
    return report


def sequential_order(ts: TimeSlice, embedding: np.ndarray) -> list[AllocationUnit]:
    """Units of a slice in placement order.

    Gate pairs come first, by their embedding entry descending; free
    qubits follow, by their largest embedding-row entry descending.  Ties
    fall back to the smallest qubit (then partner) index.
    """
    num_qubits = embedding.shape[0]
    pairs = []
    in_gate: set[int] = set()
    for gate in ts.gates:
        a, b = gate.sorted()
        pairs.append(AllocationUnit((a, b), float(embedding[a, b])))
        in_gate.update((a, b))
    pairs.sort(key=lambda u: (-u.score, u.qubits))
    singles = [
        AllocationUnit((q,), float(embedding[q].max()))
        for q in range(num_qubits)
        if q not in in_gate
    ]
    singles.sort(key=lambda u: (-u.score, u.qubits))
    return pairs + singles


def _log_prob_of(logits: np.ndarray, legal_mask: np.ndarray | None, action: int) -> float:
    """Log-probability of ``action`` under the (masked) softmax of ``logits``."""
    shifted = logits - logits.max()
    if legal_mask is None:
        return float(shifted[action] - np.log(np.exp(shifted).sum()))
    if not legal_mask[action]:
        return -np.inf
    return float(shifted[action] - np.log(np.exp(shifted)[legal_mask].sum()))


def _as_sliced(circuit: UnslicedCircuit | SlicedCircuit) -> SlicedCircuit:
    return circuit if isinstance(circuit, SlicedCircuit) else slice_circuit(circuit)


def _check_mode(mode: str, rng) -> bool:
    if mode not in ("greedy", "sample"):
        raise ValueError(f"mode must be 'greedy' or 'sample', not {mode!r}")
    if mode == "sample" and rng is None:
        raise ValueError("sample mode requires an rng")
    return mode == "sample"


def _sequential_episodes(
    circuit: SlicedCircuit,
    hardware: Hardware,
    policy: AllocationPolicy,
    *,
    group: int = 1,
    sample: bool = False,
    noise_alpha: float = 0.0,
    rng: np.random.Generator | None = None,
    masked: bool = True,
    want_trace: bool = True,
):
    """Run ``group`` lockstep sequential episodes on one instance.

    The unit order depends only on the circuit, so all episodes share the
    same step sequence and the policy is evaluated once per step with the
    group as the batch.  With masking off (training), an illegal action
    leaves the unit's qubits at their previous-slice cores (first slice:
    lowest-index core with room) so the episode stays finishable.
    """
    num_qubits = circuit.num_qubits
    num_cores = hardware.num_cores
    num_slices = circuit.num_slices
    if hardware.total_capacity < num_qubits:
        raise AllocationError(
            f"hardware holds {hardware.total_capacity} qubits "
            f"but the circuit needs {num_qubits}"
        )
    stream = SliceFeatureStream(circuit)
    assignment = np.zeros((group, num_slices, num_qubits), dtype=np.int64)
    traces: list[list[TraceStep]] = [[] for _ in range(group)]
    prev: np.ndarray | None = None
    cost_matrix = hardware.cost_matrix
    for t in range(num_slices):
        embedding, proximity = stream.matrices_at(t)
        units = sequential_order(circuit.slices[t], embedding)
        current = np.full((group, num_qubits), -1, dtype=np.int64)
        free = np.tile(hardware.capacities, (group, 1))
        for unit in units:
            need = len(unit.qubits)
            contexts = [
                StepContext(
                    slice_index=t,
                    qubit_a=unit.qubits[0],
                    qubit_b=unit.qubits[1] if need == 2 else None,
                    prev_assignment=None if prev is None else prev[b],
                    current_assignment=current[b],
                    free_capacity=free[b],
                    cost_matrix=cost_matrix,
                    embedding=embedding,
                    proximity=proximity,
                )
                for b in range(group)
            ]
            features = build_feature_batch(contexts)
            logits = policy.logits(features)
            legal_rows = free >= need
            for b in range(group):
                row_mask = legal_rows[b] if masked else None
                if masked and not row_mask.any():
                    raise AllocationError(
                        f"no core has room for qubits {unit.qubits} in slice {t}"
                    )
                probs = action_distribution(logits[b], row_mask, noise_alpha, rng)
                action = sample_action(probs, rng) if sample else greedy_action(probs)
                legal = bool(legal_rows[b, action])
                if legal:
                    for q in unit.qubits:
                        current[b, q] = action
                    free[b, action] -= need
                elif prev is not None:
                    for q in unit.qubits:
                        core = int(prev[b, q])
                        current[b, q] = core
                        free[b, core] -= 1
                else:
                    fits = np.flatnonzero(free[b] >= need)
                    core = int(fits[0]) if fits.size else int(np.argmax(free[b]))
                    for q in unit.qubits:
                        current[b, q] = core
                    free[b, core] -= need
                if want_trace:
                    traces[b].append(
                        TraceStep(
                            slice_index=t,
                            unit=unit.qubits,
                            key=features.key[b],
                            query=features.query[b],
                            legal_mask=None if row_mask is None else row_mask.copy(),
                            action=action,
                            log_prob=_log_prob_of(logits[b], row_mask, action),
                            legal=legal,
                        )
                    )
        assignment[:, t, :] = current
        prev = current
    return assignment, traces


def allocate_sequential(
    circuit: UnslicedCircuit | SlicedCircuit,
    hardware: Hardware,
    policy: AllocationPolicy,
    mode: str = "greedy",
    noise_alpha: float = 0.0,
    rng: np.random.Generator | None = None,
    collect_trace: bool = True,
) -> tuple[Allocation, list[TraceStep]]:
    """Heuristic-ordered unit-by-unit allocation with legality masking."""
    sample = _check_mode(mode, rng)
    sliced = _as_sliced(circuit)
    start = time.perf_counter()
    assignment, traces = _sequential_episodes(
        sliced, hardware, policy,
        group=1, sample=sample, noise_alpha=noise_alpha, rng=rng,
        masked=True, want_trace=collect_trace,
    )
    elapsed = time.perf_counter() - start
    cost = allocation_cost(assignment[0], hardware.cost_matrix)
    return Allocation(assignment[0], cost, "sequential", elapsed), traces[0]


def allocate_parallel(
    circuit: UnslicedCircuit | SlicedCircuit,
    hardware: Hardware,
    policy: AllocationPolicy,
    mode: str = "greedy",
    noise_alpha: float = 0.0,
    rng: np.random.Generator | None = None,
    collect_trace: bool = True,
) -> tuple[Allocation, list[TraceStep]]:
    """Policy-prioritized allocation over a flattened unit-by-core distribution.

    Per slice, gate pairs and then free qubits are drained from a pool:
    the policy scores every remaining unit against every core, the
    flattened legal distribution picks one (unit, core) commitment, and
    the pool is re-evaluated.
    """
    sample = _check_mode(mode, rng)
    sliced = _as_sliced(circuit)
    num_qubits = sliced.num_qubits
    num_cores = hardware.num_cores
    if hardware.total_capacity < num_qubits:
        raise AllocationError(
            f"hardware holds {hardware.total_capacity} qubits "
            f"but the circuit needs {num_qubits}"
        )
    start = time.perf_counter()
    stream = SliceFeatureStream(sliced)
    assignment = np.zeros((sliced.num_slices, num_qubits), dtype=np.int64)
    trace: list[TraceStep] = []
    prev: np.ndarray | None = None
    cost_matrix = hardware.cost_matrix
    for t in range(sliced.num_slices):
        embedding, proximity = stream.matrices_at(t)
        ordered = sequential_order(sliced.slices[t], embedding)
        pairs = [u for u in ordered if u.is_pair]
        singles = [u for u in ordered if not u.is_pair]
        current = np.full(num_qubits, -1, dtype=np.int64)
        free = hardware.capacities.copy()
        for pool in (pairs, singles):
            pool = list(pool)
            while pool:
                contexts = [
                    StepContext(
                        slice_index=t,
                        qubit_a=u.qubits[0],
                        qubit_b=u.qubits[1] if u.is_pair else None,
                        prev_assignment=prev,
                        current_assignment=current,
                        free_capacity=free,
                        cost_matrix=cost_matrix,
                        embedding=embedding,
                        proximity=proximity,
                    )
                    for u in pool
                ]
                features = build_feature_batch(contexts)
                logits = policy.logits(features)  # [U, C]
                needs = np.array([len(u.qubits) for u in pool])
                legal = free[None, :] >= needs[:, None]
                if not legal.any():
                    raise AllocationError(
                        f"no core has room for any remaining unit in slice {t}"
                    )
                flat_logits = logits.reshape(-1)
                flat_mask = legal.reshape(-1)
                probs = action_distribution(flat_logits, flat_mask, noise_alpha, rng)
                choice = sample_action(probs, rng) if sample else greedy_action(probs)
                unit_index, core = divmod(choice, num_cores)
                unit = pool.pop(unit_index)
                for q in unit.qubits:
                    current[q] = core
                free[core] -= len(unit.qubits)
                if collect_trace:
                    trace.append(
                        TraceStep(
                            slice_index=t,
                            unit=unit.qubits,
                            key=features.key,
                            query=features.query,
                            legal_mask=legal,
                            action=choice,
                            log_prob=_log_prob_of(flat_logits, flat_mask, choice),
                            legal=True,
                        )
                    )
        assignment[t] = current
        prev = current
    elapsed = time.perf_counter() - start
    cost = allocation_cost(assignment, hardware.cost_matrix)
    return Allocation(assignment, cost, "parallel", elapsed), trace


def allocate_ensemble(
    circuit: UnslicedCircuit | SlicedCircuit,
    hardware: Hardware,
    policy: AllocationPolicy,
) -> Allocation:
    """Greedy sequential and greedy parallel; keep the cheaper result.

    Ties go to the sequential result; the reported runtime is the sum of
    both runs.
    """
    sliced = _as_sliced(circuit)
    seq, _ = allocate_sequential(sliced, hardware, policy, collect_trace=False)
    par, _ = allocate_parallel(sliced, hardware, policy, collect_trace=False)
    winner = seq if seq.total_cost <= par.total_cost else par
    return Allocation(
        winner.assignment,
        winner.total_cost,
        "ensemble",
        seq.elapsed_seconds + par.elapsed_seconds,
    )
