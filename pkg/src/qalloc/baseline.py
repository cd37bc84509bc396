"""Non-learning baseline: per-slice assignment via the Kuhn-Munkres solver.

Each slice is solved as two rectangular assignment problems (gate pairs
first, then free qubits) over per-core slots, with cell costs combining
the movement cost from the previous slice minus the attraction toward a
core's occupants.  This is a comparator stand-in driven by the same
attraction signal as the policy, not a certified reimplementation of any
particular published allocator.
"""

from __future__ import annotations

import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from .allocator import Allocation, AllocationError, AllocationUnit, allocation_cost, sequential_order
from .circuits import SlicedCircuit, UnslicedCircuit, slice_circuit
from .encoding import SliceFeatureStream, attraction_matrix
from .hardware import Hardware

__all__ = ["hungarian", "hqa_allocate", "ATTRACTION_WEIGHT"]

ATTRACTION_WEIGHT = 1.0


def hungarian(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-cost assignment of rows to distinct columns.

    Requires an n x m matrix with n <= m and finite entries; returns the
    column chosen for each row and the total cost.
    """
    matrix = np.asarray(cost, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("assignment cost must be a 2-D matrix")
    rows, cols = matrix.shape
    if rows > cols:
        raise ValueError(f"more agents ({rows}) than tasks ({cols})")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("assignment cost entries must be finite")
    row_ind, col_ind = linear_sum_assignment(matrix)
    assignment = np.empty(rows, dtype=np.int64)
    assignment[row_ind] = col_ind
    return assignment, float(matrix[row_ind, col_ind].sum())


def _solve_phase(
    units: list[AllocationUnit],
    slot_cores: np.ndarray,
    prev_row: np.ndarray | None,
    occupancy: np.ndarray,
    embedding: np.ndarray,
    cost_matrix: np.ndarray,
    t: int,
) -> np.ndarray:
    """Assign each unit a core via one rectangular Hungarian solve."""
    if len(units) > slot_cores.size:
        raise AllocationError(
            f"slice {t}: {len(units)} units but only {slot_cores.size} fitting slots"
        )
    attr = attraction_matrix(embedding, occupancy)  # [Q, C]
    cells = np.zeros((len(units), slot_cores.size))
    for i, unit in enumerate(units):
        per_core = np.zeros(cost_matrix.shape[0])
        for q in unit.qubits:
            if prev_row is not None:
                per_core += cost_matrix[prev_row[q], :]
            per_core -= ATTRACTION_WEIGHT * attr[q]
        cells[i] = per_core[slot_cores]
    chosen_slots, _ = hungarian(cells)
    return slot_cores[chosen_slots]


def _slots_for(free: np.ndarray, per_unit: int) -> np.ndarray:
    """Core index repeated once per group of ``per_unit`` free spots."""
    reps = free // per_unit
    return np.repeat(np.arange(free.size), reps)


def hqa_allocate(
    circuit: UnslicedCircuit | SlicedCircuit, hardware: Hardware
) -> Allocation:
    """Attraction-driven per-slice Hungarian assignment baseline."""
    sliced = circuit if isinstance(circuit, SlicedCircuit) else slice_circuit(circuit)
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
    prev: np.ndarray | None = None
    for t in range(sliced.num_slices):
        embedding, _ = stream.matrices_at(t)
        ordered = sequential_order(sliced.slices[t], embedding)
        pairs = [u for u in ordered if u.is_pair]
        singles = [u for u in ordered if not u.is_pair]
        free = hardware.capacities.copy()
        current = np.full(num_qubits, -1, dtype=np.int64)
        # attraction reference: previous-slice occupancy, except on the first
        # slice where the singles phase sees the freshly placed pairs
        if prev is None:
            occupancy = np.zeros((num_qubits, num_cores))
        else:
            occupancy = np.zeros((num_qubits, num_cores))
            occupancy[np.arange(num_qubits), prev] = 1.0
        if pairs:
            cores = _solve_phase(
                pairs, _slots_for(free, 2), prev, occupancy, embedding,
                hardware.cost_matrix, t,
            )
            for unit, core in zip(pairs, cores):
                for q in unit.qubits:
                    current[q] = core
                free[core] -= 2
        if singles:
            if prev is None:
                placed = current >= 0
                occupancy = np.zeros((num_qubits, num_cores))
                occupancy[np.flatnonzero(placed), current[placed]] = 1.0
            cores = _solve_phase(
                singles, _slots_for(free, 1), prev, occupancy, embedding,
                hardware.cost_matrix, t,
            )
            for unit, core in zip(singles, cores):
                current[unit.qubits[0]] = core
                free[core] -= 1
        assignment[t] = current
        prev = current
    elapsed = time.perf_counter() - start
    return Allocation(
        assignment, allocation_cost(assignment, hardware.cost_matrix), "hqa", elapsed
    )
