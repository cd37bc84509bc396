"""Quantum circuit representation, time slicing, and JSON ingestion.

Only two-qubit interactions matter for allocation, so a circuit is an
ordered list of two-qubit gates.  Slicing greedily groups consecutive
gates that share no qubits into time slices that could execute
simultaneously.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CircuitFormatError",
    "Gate",
    "UnslicedCircuit",
    "TimeSlice",
    "SlicedCircuit",
    "slice_circuit",
    "parse_circuit",
    "serialize_circuit",
    "load_circuit",
    "save_circuit",
    "random_circuit",
]


class CircuitFormatError(ValueError):
    """Raised for malformed circuit documents or invalid gate data."""


@dataclass(frozen=True)
class Gate:
    """A two-qubit gate acting on distinct qubits ``a`` and ``b``."""

    a: int
    b: int

    def __post_init__(self):
        if self.a == self.b:
            raise CircuitFormatError(f"self-gate on qubit {self.a}")
        if self.a < 0 or self.b < 0:
            raise CircuitFormatError(f"negative qubit index in gate ({self.a}, {self.b})")

    @property
    def qubits(self) -> tuple[int, int]:
        return (self.a, self.b)

    def sorted(self) -> tuple[int, int]:
        """The gate's qubit pair in canonical (low, high) order."""
        return (self.a, self.b) if self.a < self.b else (self.b, self.a)


def _check_gate_range(gate: Gate, num_qubits: int, position: int) -> None:
    if gate.a >= num_qubits or gate.b >= num_qubits:
        raise CircuitFormatError(
            f"gate at index {position} uses qubit {max(gate.a, gate.b)} "
            f"but circuit has {num_qubits} qubits"
        )


@dataclass(frozen=True)
class UnslicedCircuit:
    """An ordered (chronological) list of two-qubit gates on ``num_qubits`` qubits."""

    num_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        if self.num_qubits < 2:
            raise CircuitFormatError("a circuit needs at least 2 qubits")
        object.__setattr__(self, "gates", tuple(self.gates))
        for pos, gate in enumerate(self.gates):
            _check_gate_range(gate, self.num_qubits, pos)

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class TimeSlice:
    """Gates with pairwise-disjoint qubits, executable simultaneously."""

    gates: tuple[Gate, ...]

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        seen: set[int] = set()
        for gate in self.gates:
            if gate.a in seen or gate.b in seen:
                raise CircuitFormatError(f"qubit repeated within a time slice: {gate}")
            seen.update(gate.qubits)

    @property
    def qubits(self) -> set[int]:
        used: set[int] = set()
        for gate in self.gates:
            used.update(gate.qubits)
        return used

    def __len__(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class SlicedCircuit:
    """A circuit partitioned into time slices, preserving gate order."""

    num_qubits: int
    slices: tuple[TimeSlice, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "slices", tuple(self.slices))
        if len(self.slices) < 1:
            raise CircuitFormatError("a sliced circuit needs at least one slice")
        for ts in self.slices:
            for pos, gate in enumerate(ts.gates):
                _check_gate_range(gate, self.num_qubits, pos)

    @property
    def num_slices(self) -> int:
        return len(self.slices)

    @property
    def num_gates(self) -> int:
        return sum(len(ts) for ts in self.slices)

    def gate_sequence(self) -> tuple[Gate, ...]:
        """All gates in chronological order (the slicing is order-preserving)."""
        out: list[Gate] = []
        for ts in self.slices:
            out.extend(ts.gates)
        return tuple(out)

    def to_unsliced(self) -> UnslicedCircuit:
        return UnslicedCircuit(self.num_qubits, self.gate_sequence())


def slice_circuit(circuit: UnslicedCircuit) -> SlicedCircuit:
    """Partition a gate list into time slices.

    Gates are aggregated left to right; a new slice starts exactly when an
    incoming gate reuses a qubit already present in the current slice.
    """
    if len(circuit.gates) == 0:
        raise CircuitFormatError("cannot slice a circuit with no gates")
    slices: list[TimeSlice] = []
    current: list[Gate] = []
    used: set[int] = set()
    for gate in circuit.gates:
        if gate.a in used or gate.b in used:
            slices.append(TimeSlice(tuple(current)))
            current = []
            used = set()
        current.append(gate)
        used.update(gate.qubits)
    slices.append(TimeSlice(tuple(current)))
    return SlicedCircuit(circuit.num_qubits, tuple(slices))


# ---------------------------------------------------------------------------
# JSON interface
#
# Unsliced: {"num_qubits": <int>, "gates": [[a, b], ...]}
# Sliced:   {"num_qubits": <int>, "slices": [[[a, b], ...], ...]}
# ---------------------------------------------------------------------------

def _parse_gate(entry, position: int, num_qubits: int) -> Gate:
    if (
        not isinstance(entry, list)
        or len(entry) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in entry)
    ):
        raise CircuitFormatError(f"gate at index {position} is not a pair of integers: {entry!r}")
    a, b = entry
    if a == b:
        raise CircuitFormatError(f"self-gate at index {position}")
    if not (0 <= a < num_qubits) or not (0 <= b < num_qubits):
        raise CircuitFormatError(
            f"gate at index {position} uses qubit {max(a, b)} "
            f"but circuit has {num_qubits} qubits"
        )
    return Gate(a, b)


def parse_circuit(data: bytes | str) -> UnslicedCircuit:
    """Parse a circuit JSON document.

    Accepts both the unsliced ("gates") and sliced ("slices") schemas;
    sliced input is flattened back to its chronological gate order.
    Unknown keys are rejected.
    """
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise CircuitFormatError("circuit document must be a JSON object")
    keys = set(doc)
    if keys == {"num_qubits", "gates"}:
        gate_entries = doc["gates"]
        if not isinstance(gate_entries, list):
            raise CircuitFormatError('"gates" must be a list')
    elif keys == {"num_qubits", "slices"}:
        if not isinstance(doc["slices"], list) or not all(
            isinstance(s, list) for s in doc["slices"]
        ):
            raise CircuitFormatError('"slices" must be a list of gate lists')
        gate_entries = [g for s in doc["slices"] for g in s]
    else:
        unknown = keys - {"num_qubits", "gates", "slices"}
        if unknown:
            raise CircuitFormatError(f"unknown keys in circuit document: {sorted(unknown)}")
        raise CircuitFormatError('circuit document needs "num_qubits" and "gates" (or "slices")')
    num_qubits = doc["num_qubits"]
    if not isinstance(num_qubits, int) or isinstance(num_qubits, bool) or num_qubits < 2:
        raise CircuitFormatError('"num_qubits" must be an integer >= 2')
    gates = tuple(_parse_gate(g, i, num_qubits) for i, g in enumerate(gate_entries))
    return UnslicedCircuit(num_qubits, gates)


def serialize_circuit(circuit: UnslicedCircuit | SlicedCircuit) -> bytes:
    """Serialize a circuit to JSON bytes (sliced circuits keep their slice structure)."""
    if isinstance(circuit, SlicedCircuit):
        doc = {
            "num_qubits": circuit.num_qubits,
            "slices": [[[g.a, g.b] for g in ts.gates] for ts in circuit.slices],
        }
    else:
        doc = {
            "num_qubits": circuit.num_qubits,
            "gates": [[g.a, g.b] for g in circuit.gates],
        }
    return json.dumps(doc).encode("utf-8")


def load_circuit(path) -> UnslicedCircuit:
    with open(path, "rb") as fh:
        return parse_circuit(fh.read())


def save_circuit(circuit: UnslicedCircuit | SlicedCircuit, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_circuit(circuit))


# ---------------------------------------------------------------------------
# Random circuit sampling
# ---------------------------------------------------------------------------

def random_circuit(
    num_qubits: int, target_slices: int, rng: np.random.Generator
) -> UnslicedCircuit:
    """Sample a circuit that slices into exactly ``target_slices`` time slices.

    Gates are drawn uniformly over unordered distinct qubit pairs and
    appended while the running slice count stays within the target; the
    single gate that would open slice ``target_slices + 1`` is dropped.
    """
    if num_qubits < 2:
        raise ValueError("num_qubits must be >= 2")
    if target_slices < 1:
        raise ValueError("target_slices must be >= 1")
    gates: list[Gate] = []
    used: set[int] = set()
    slice_count = 1
    while True:
        a = int(rng.integers(num_qubits))
        b = int(rng.integers(num_qubits - 1))
        if b >= a:
            b += 1
        if a in used or b in used:
            if slice_count == target_slices:
                break  # this gate would open one slice too many
            slice_count += 1
            used = set()
        gates.append(Gate(a, b))
        used.update((a, b))
    return UnslicedCircuit(num_qubits, tuple(gates))
