"""Two-qubit-gate skeletons of well-known circuit families.

Single-qubit gates never influence allocation cost, so generators emit
only the two-qubit interaction pattern of each construction.  Three-qubit
primitives (Toffoli) are expanded with the standard six-CNOT decomposition
so the result is a plain two-qubit gate list.
"""

from __future__ import annotations

import numpy as np

from .circuits import CircuitFormatError, Gate, UnslicedCircuit

__all__ = ["CIRCUIT_KINDS", "generate_named_circuit", "graph_state_circuit"]

CIRCUIT_KINDS = ("qft", "graph_state", "deutsch_jozsa", "cuccaro_adder", "draper_adder")


def _qft_pairs(qubits: list[int]) -> list[tuple[int, int]]:
    # Controlled-phase ladder; the optional terminal swap network is omitted
    # because relabeling outputs costs nothing in this cost model.
    pairs = []
    for i in range(len(qubits)):
        for j in range(i + 1, len(qubits)):
            pairs.append((qubits[i], qubits[j]))
    return pairs


def qft(num_qubits: int) -> UnslicedCircuit:
    """Quantum Fourier transform skeleton: n(n-1)/2 controlled-phase gates."""
    if num_qubits < 2:
        raise CircuitFormatError("qft needs at least 2 qubits")
    gates = [Gate(a, b) for a, b in _qft_pairs(list(range(num_qubits)))]
    return UnslicedCircuit(num_qubits, tuple(gates))


def graph_state_circuit(num_qubits: int, edges) -> UnslicedCircuit:
    """Graph state from an explicit edge set: one CZ per edge, lexicographic order."""
    canon = sorted({(min(a, b), max(a, b)) for a, b in edges})
    if not canon:
        raise CircuitFormatError("graph state needs at least one edge")
    gates = [Gate(a, b) for a, b in canon]
    return UnslicedCircuit(num_qubits, tuple(gates))


def graph_state(num_qubits: int, rng: np.random.Generator) -> UnslicedCircuit:
    """Random graph state: each of the n(n-1)/2 edges included with probability 1/2."""
    if num_qubits < 2:
        raise CircuitFormatError("graph_state needs at least 2 qubits")
    while True:
        edges = [
            (i, j)
            for i in range(num_qubits)
            for j in range(i + 1, num_qubits)
            if rng.random() < 0.5
        ]
        if edges:
            return graph_state_circuit(num_qubits, edges)


def deutsch_jozsa(num_qubits: int) -> UnslicedCircuit:
    """Deutsch-Jozsa with the all-ones balanced oracle.

    Qubits 0..n-2 are inputs, qubit n-1 the oracle target; the oracle is a
    CNOT from every input onto the target.
    """
    if num_qubits < 2:
        raise CircuitFormatError("deutsch_jozsa needs at least 2 qubits")
    target = num_qubits - 1
    gates = [Gate(i, target) for i in range(num_qubits - 1)]
    return UnslicedCircuit(num_qubits, tuple(gates))


def _toffoli_pairs(c1: int, c2: int, target: int) -> list[tuple[int, int]]:
    # Two-qubit skeleton of the standard 6-CNOT Toffoli decomposition.
    return [
        (c2, target),
        (c1, target),
        (c2, target),
        (c1, target),
        (c1, c2),
        (c1, c2),
    ]


def cuccaro_adder(num_qubits: int) -> UnslicedCircuit:
    """Ripple-carry adder skeleton on registers (carry, a[m], b[m], out).

    Requires ``num_qubits = 2m + 2`` with m >= 1.  Each majority /
    un-majority block contributes two CNOTs plus a decomposed Toffoli.
    """
    if num_qubits < 4 or num_qubits % 2 != 0:
        raise CircuitFormatError(
            "cuccaro_adder needs an even qubit count >= 4 (carry + a[m] + b[m] + out)"
        )
    m = (num_qubits - 2) // 2
    carry_in = 0
    a = [1 + i for i in range(m)]
    b = [1 + m + i for i in range(m)]
    carry_out = num_qubits - 1

    def maj(x, y, z):
        return [(z, y), (z, x), *_toffoli_pairs(x, y, z)]

    def uma(x, y, z):
        return [*_toffoli_pairs(x, y, z), (z, x), (x, y)]

    pairs: list[tuple[int, int]] = []
    chain = [(carry_in, b[0], a[0])]
    for i in range(1, m):
        chain.append((a[i - 1], b[i], a[i]))
    for x, y, z in chain:
        pairs.extend(maj(x, y, z))
    pairs.append((a[m - 1], carry_out))
    for x, y, z in reversed(chain):
        pairs.extend(uma(x, y, z))
    return UnslicedCircuit(num_qubits, tuple(Gate(p, q) for p, q in pairs))


def draper_adder(num_qubits: int) -> UnslicedCircuit:
    """Fourier-basis adder skeleton on two equal registers.

    QFT on the target register, controlled-phase additions from the source
    register, then the inverse QFT.  Requires an even qubit count >= 4.
    """
    if num_qubits < 4 or num_qubits % 2 != 0:
        raise CircuitFormatError("draper_adder needs an even qubit count >= 4")
    m = num_qubits // 2
    src = list(range(m))
    dst = list(range(m, num_qubits))
    pairs = _qft_pairs(dst)
    for i in range(m):
        for j in range(i + 1):
            pairs.append((src[j], dst[i]))
    pairs.extend(reversed(_qft_pairs(dst)))
    return UnslicedCircuit(num_qubits, tuple(Gate(a, b) for a, b in pairs))


def generate_named_circuit(
    kind: str, num_qubits: int, rng: np.random.Generator | None = None
) -> UnslicedCircuit:
    """Build one of the named circuit families; ``rng`` is required for graph_state."""
    if kind == "qft":
        return qft(num_qubits)
    if kind == "graph_state":
        if rng is None:
            raise ValueError("graph_state sampling requires an rng")
        return graph_state(num_qubits, rng)
    if kind == "deutsch_jozsa":
        return deutsch_jozsa(num_qubits)
    if kind == "cuccaro_adder":
        return cuccaro_adder(num_qubits)
    if kind == "draper_adder":
        return draper_adder(num_qubits)
    raise ValueError(f"unsupported circuit kind {kind!r}; expected one of {CIRCUIT_KINDS}")
