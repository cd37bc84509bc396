"""Hand-crafted circuit features driving the allocation policy.

Per time slice the circuit is summarized by three Q x Q matrices: the
slice adjacency, an exponentially-decaying lookahead sum of future
adjacencies (the circuit embedding), and a linearly-decaying proximity of
each pair's next shared gate.  Qubit-to-core attraction weights a qubit's
embedding row by a core's current occupants.
"""

from __future__ import annotations

import numpy as np

from .circuits import SlicedCircuit, TimeSlice

__all__ = [
    "adjacency",
    "circuit_embedding",
    "next_interaction",
    "attraction",
    "attraction_matrix",
    "SliceFeatureStream",
]

# Future-slice contributions halve per step, so anything beyond 53 slices
# ahead is below float64 resolution of an entry that interacts sooner.
_EMBEDDING_WINDOW = 53


def adjacency(ts: TimeSlice, num_qubits: int) -> np.ndarray:
    """Symmetric 0/1 matrix with ones at the slice's interacting pairs."""
    a = np.zeros((num_qubits, num_qubits))
    for gate in ts.gates:
        a[gate.a, gate.b] = 1.0
        a[gate.b, gate.a] = 1.0
    return a


def circuit_embedding(circuit: SlicedCircuit) -> np.ndarray:
    """Per-slice lookahead embedding, shape [T, Q, Q].

    Entry (t, i, j) sums 2^-(k-t+1) over every slice k >= t where the pair
    (i, j) interacts; computed right-to-left so each slice costs O(Q^2).
    """
    q = circuit.num_qubits
    t_total = circuit.num_slices
    emb = np.zeros((t_total, q, q))
    ahead = np.zeros((q, q))
    for t in range(t_total - 1, -1, -1):
        emb[t] = 0.5 * adjacency(circuit.slices[t], q) + 0.5 * ahead
        ahead = emb[t]
    return emb


def next_interaction(circuit: SlicedCircuit) -> np.ndarray:
    """Per-slice next-interaction proximity, shape [T, Q, Q].

    Entry (t, i, j) is (T - k) / (T - t) for the earliest slice k >= t
    where the pair interacts, 1 when it interacts at t itself, and 0 when
    it never interacts again.
    """
    q = circuit.num_qubits
    t_total = circuit.num_slices
    out = np.zeros((t_total, q, q))
    # earliest interaction slice >= t; start from "never" and sweep backwards
    nxt = np.full((q, q), t_total, dtype=np.int64)
    for t in range(t_total - 1, -1, -1):
        for gate in circuit.slices[t].gates:
            nxt[gate.a, gate.b] = t
            nxt[gate.b, gate.a] = t
        active = nxt < t_total
        out[t][active] = (t_total - nxt[active]) / (t_total - t)
    return out


def attraction(embedding_t: np.ndarray, occupancy: np.ndarray, qubit: int, core: int) -> float:
    """Sum of the qubit's embedding toward the core's current occupants.

    ``occupancy`` is the Q x C binary matrix with a one where a qubit is
    currently assigned to a core.
    """
    return float(embedding_t[qubit] @ occupancy[:, core])


def attraction_matrix(embedding_t: np.ndarray, occupancy: np.ndarray) -> np.ndarray:
    """All qubit-to-core attractions at once, shape [Q, C]."""
    return embedding_t @ occupancy


class SliceFeatureStream:
    """Iterates (embedding_t, next_interaction_t) forward over the slices.

    The full [T, Q, Q] arrays are quadratic in circuit length and blow up
    on deep circuits, so each slice's matrices are materialized on demand:
    the embedding from its ``_EMBEDDING_WINDOW``-slice lookahead (exact in
    float64) and the proximity from an incrementally-advanced
    next-interaction-slice matrix.
    """

    def __init__(self, circuit: SlicedCircuit):
        self.circuit = circuit
        self.num_qubits = circuit.num_qubits
        self.num_slices = circuit.num_slices
        # next interaction slice >= current t per pair; sentinel T = never
        self._next = np.full(
            (self.num_qubits, self.num_qubits), self.num_slices, dtype=np.int64
        )
        # per-pair interaction slices let the sentinel advance in O(1) amortized
        self._later: dict[tuple[int, int], list[int]] = {}
        for t in range(self.num_slices - 1, -1, -1):
            for gate in circuit.slices[t].gates:
                key = gate.sorted()
                self._later.setdefault(key, []).append(t)
                self._next[key[0], key[1]] = t
                self._next[key[1], key[0]] = t
        self._t = 0

    def matrices_at(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        """Dense (embedding, next-interaction) matrices for slice ``t``.

        Slices must be requested in non-decreasing order.
        """
        if t < self._t:
            raise ValueError("feature stream only advances forward")
        while self._t < t:
            self._consume(self._t)
            self._t += 1
        q = self.num_qubits
        emb = np.zeros((q, q))
        hi = min(t + _EMBEDDING_WINDOW, self.num_slices)
        for k in range(t, hi):
            weight = 2.0 ** -(k - t + 1)
            for gate in self.circuit.slices[k].gates:
                emb[gate.a, gate.b] += weight
                emb[gate.b, gate.a] += weight
        nxt = self._next
        active = nxt < self.num_slices
        prox = np.zeros((q, q))
        prox[active] = (self.num_slices - nxt[active]) / (self.num_slices - t)
        return emb, prox

    def _consume(self, t: int) -> None:
        # after leaving slice t, pairs interacting there point at their next use
        for gate in self.circuit.slices[t].gates:
            key = gate.sorted()
            stack = self._later[key]
            if stack and stack[-1] == t:
                stack.pop()
            upcoming = stack[-1] if stack else self.num_slices
            self._next[key[0], key[1]] = upcoming
            self._next[key[1], key[0]] = upcoming
