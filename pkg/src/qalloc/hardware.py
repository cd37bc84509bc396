"""Multi-core hardware description and sampling.

A device is a set of cores with per-core qubit capacities and a matrix of
inter-core communication costs.  Partially-specified cost matrices are
completed to all-pairs cheapest-path costs, so every entry reflects the
most efficient route even between cores with no direct link.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import shortest_path

__all__ = [
    "HardwareError",
    "Hardware",
    "complete_cost_matrix",
    "random_hardware",
    "uniform_hardware",
    "parse_hardware",
    "serialize_hardware",
    "load_hardware",
]


class HardwareError(ValueError):
    """Raised for invalid hardware descriptions."""


@dataclass(frozen=True)
class Hardware:
    """``num_cores`` cores with ``capacities`` qubit slots and completed cost matrix."""

    capacities: np.ndarray
    cost_matrix: np.ndarray

    def __post_init__(self):
        caps = np.asarray(self.capacities, dtype=np.int64)
        costs = np.asarray(self.cost_matrix, dtype=np.float64)
        # single-core devices are degenerate but allocatable (cost is always 0)
        if caps.ndim != 1 or caps.size < 1:
            raise HardwareError("need a 1-D capacity vector with at least 1 core")
        if np.any(caps < 1):
            raise HardwareError("every core capacity must be >= 1")
        if costs.shape != (caps.size, caps.size):
            raise HardwareError("cost matrix shape must match the core count")
        if np.any(np.diag(costs) != 0.0):
            raise HardwareError("cost matrix must have a zero diagonal")
        if not np.array_equal(costs, costs.T):
            raise HardwareError("completed cost matrix must be symmetric")
        if not np.all(np.isfinite(costs)) or np.any(costs < 0):
            raise HardwareError("cost matrix entries must be finite and non-negative")
        caps.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "capacities", caps)
        object.__setattr__(self, "cost_matrix", costs)

    @property
    def num_cores(self) -> int:
        return int(self.capacities.size)

    @property
    def total_capacity(self) -> int:
        return int(self.capacities.sum())


def complete_cost_matrix(raw: np.ndarray) -> np.ndarray:
    """Complete a partial cost matrix to all-pairs cheapest-path costs.

    Absent links are marked with ``nan`` or ``inf``.  Rejects negative
    costs, asymmetric inputs, and disconnected core graphs (naming one
    unreachable pair).
    """
    costs = np.array(raw, dtype=np.float64)
    if costs.ndim != 2 or costs.shape[0] != costs.shape[1]:
        raise HardwareError("cost matrix must be square")
    costs[np.isnan(costs)] = np.inf
    np.fill_diagonal(costs, 0.0)
    finite = np.isfinite(costs)
    if np.any(costs[finite] < 0):
        raise HardwareError("link costs must be non-negative")
    if not np.array_equal(finite, finite.T) or not np.array_equal(
        costs[finite & finite.T], costs.T[finite & finite.T]
    ):
        raise HardwareError("link costs must be symmetric")
    # masked entries are non-edges; an explicit 0 stays a real zero-cost link
    graph = np.ma.masked_array(costs, mask=~finite)
    completed = shortest_path(graph, method="FW", directed=False, unweighted=False)
    unreachable = np.argwhere(np.isinf(completed))
    if unreachable.size:
        i, j = unreachable[0]
        raise HardwareError(f"core graph is disconnected: no path between cores {i} and {j}")
    return completed


def uniform_hardware(num_cores: int, capacity: int) -> Hardware:
    """Equal-capacity cores with unit cost between every pair."""
    costs = np.ones((num_cores, num_cores)) - np.eye(num_cores)
    return Hardware(np.full(num_cores, capacity, dtype=np.int64), costs)


def random_hardware(
    rng: np.random.Generator,
    core_range: tuple[int, int],
    capacity_range: tuple[int, int],
    required_capacity: int,
    max_resamples: int = 10_000,
) -> Hardware:
    """Sample training hardware with unit inter-core costs.

    Core count and per-core capacities are uniform over the given ranges,
    resampled until total capacity leaves two spare slots beyond
    ``required_capacity`` so a gate pair can always fit somewhere
    mid-allocation.
    """
    c_lo, c_hi = core_range
    k_lo, k_hi = capacity_range
    if c_lo < 2 or c_hi < c_lo or k_lo < 1 or k_hi < k_lo:
        raise HardwareError(f"invalid sampling ranges {core_range}, {capacity_range}")
    for _ in range(max_resamples):
        num_cores = int(rng.integers(c_lo, c_hi + 1))
        caps = rng.integers(k_lo, k_hi + 1, size=num_cores)
        if caps.sum() >= required_capacity + 2:
            costs = np.ones((num_cores, num_cores)) - np.eye(num_cores)
            return Hardware(caps, costs)
    raise HardwareError(
        f"could not sample hardware with total capacity >= {required_capacity + 2} "
        f"from cores {core_range} x capacities {capacity_range}"
    )


# ---------------------------------------------------------------------------
# JSON interface:
#   {"capacities": [<int>...], "cost_matrix": [[<num>...], ...] | "uniform"}
# Absent links in an explicit matrix are null; the matrix is completed on load.
# ---------------------------------------------------------------------------

def parse_hardware(data: bytes | str) -> Hardware:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise HardwareError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"capacities", "cost_matrix"}:
        raise HardwareError('hardware document needs exactly "capacities" and "cost_matrix"')
    caps = doc["capacities"]
    if not isinstance(caps, list) or not all(
        isinstance(c, int) and not isinstance(c, bool) for c in caps
    ):
        raise HardwareError('"capacities" must be a list of integers')
    num_cores = len(caps)
    spec = doc["cost_matrix"]
    if spec == "uniform":
        costs = np.ones((num_cores, num_cores)) - np.eye(num_cores)
    elif isinstance(spec, list):
        if len(spec) != num_cores or any(
            not isinstance(row, list) or len(row) != num_cores for row in spec
        ):
            raise HardwareError('"cost_matrix" must be square and match "capacities"')
        raw = np.array(
            [[np.nan if v is None else float(v) for v in row] for row in spec],
            dtype=np.float64,
        )
        costs = complete_cost_matrix(raw)
    else:
        raise HardwareError('"cost_matrix" must be a matrix or the string "uniform"')
    return Hardware(np.asarray(caps, dtype=np.int64), costs)


def serialize_hardware(hardware: Hardware) -> bytes:
    doc = {
        "capacities": [int(c) for c in hardware.capacities],
        "cost_matrix": [[float(v) for v in row] for row in hardware.cost_matrix],
    }
    return json.dumps(doc).encode("utf-8")


def load_hardware(path) -> Hardware:
    with open(path, "rb") as fh:
        return parse_hardware(fh.read())
