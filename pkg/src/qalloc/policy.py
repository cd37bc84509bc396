"""The allocation policy: per-step features and the core-scoring network.

Each allocation step scores every core for the qubit (or gate pair) being
placed.  A step is summarized as a key tensor of ten features per
(core, qubit) and a query tensor holding the rows of the qubits under
allocation; the network aggregates qubits per core with attention and
lets cores attend to one another, so one parameter set serves any core
count and qubit count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import (
    EncoderBlock,
    Linear,
    MultiHeadAttention,
    ParameterStore,
    Tensor,
    load_checkpoint,
    masked_softmax,
    no_grad,
    save_checkpoint,
)

__all__ = [
    "FEATURE_DIM",
    "PolicyConfig",
    "StepContext",
    "FeatureTensor",
    "build_features",
    "build_feature_batch",
    "AllocationPolicy",
    "action_distribution",
    "sample_action",
    "greedy_action",
]

FEATURE_DIM = 10


@dataclass(frozen=True)
class PolicyConfig:
    hidden_dim: int = 64
    encoder_layers: int = 2
    attention_heads: int = 2
    feature_dim: int = FEATURE_DIM

    def __post_init__(self):
        if self.feature_dim != FEATURE_DIM:
            raise ValueError(f"feature_dim is fixed at {FEATURE_DIM}")
        if self.hidden_dim % self.attention_heads != 0:
            raise ValueError("hidden_dim must be divisible by attention_heads")
        if self.encoder_layers < 1:
            raise ValueError("need at least one encoder layer")

    def to_dict(self) -> dict:
        return {
            "hidden_dim": self.hidden_dim,
            "encoder_layers": self.encoder_layers,
            "attention_heads": self.attention_heads,
            "feature_dim": self.feature_dim,
        }

    @staticmethod
    def from_dict(doc: dict) -> "PolicyConfig":
        return PolicyConfig(**doc)


@dataclass
class StepContext:
    """Everything a single allocation step can see.

    ``qubit_b`` is None for single-qubit steps.  The pair is stored in
    canonical (low, high) order, which makes the features independent of
    how the gate's qubits were listed.
    """

    slice_index: int
    qubit_a: int
    qubit_b: int | None
    prev_assignment: np.ndarray | None  # [Q] core per qubit, None on the first slice
    current_assignment: np.ndarray  # [Q] core per qubit, -1 while unallocated
    free_capacity: np.ndarray  # [C] free spots per core at this step
    cost_matrix: np.ndarray  # [C, C]
    embedding: np.ndarray  # [Q, Q] lookahead embedding for this slice
    proximity: np.ndarray  # [Q, Q] next-interaction proximity for this slice

    def __post_init__(self):
        if self.qubit_b is not None:
            if self.qubit_a == self.qubit_b:
                raise ValueError("a pair step needs two distinct qubits")
            if self.qubit_b < self.qubit_a:
                self.qubit_a, self.qubit_b = self.qubit_b, self.qubit_a
        for q in (self.qubit_a, self.qubit_b):
            if q is not None and self.current_assignment[q] >= 0:
                raise ValueError(f"qubit {q} is already allocated in this slice")
        if self.slice_index > 0 and self.prev_assignment is None:
            raise ValueError("non-initial slices need the previous assignment row")


@dataclass(frozen=True)
class FeatureTensor:
    key: np.ndarray  # [B, C, Q, FEATURE_DIM]
    query: np.ndarray  # [B, C, 2, FEATURE_DIM]


def _step_features(ctx: StepContext) -> tuple[np.ndarray, np.ndarray]:
    num_cores = ctx.free_capacity.size
    num_qubits = ctx.current_assignment.size
    key = np.zeros((num_cores, num_qubits, FEATURE_DIM))
    qubits = np.arange(num_qubits)

    # 0: one-hot over the qubits being allocated
    key[:, ctx.qubit_a, 0] = 1.0
    if ctx.qubit_b is not None:
        key[:, ctx.qubit_b, 0] = 1.0
    # 1: previous-slice occupancy
    if ctx.prev_assignment is not None:
        key[ctx.prev_assignment, qubits, 1] = 1.0
    # 2: occupancy committed so far in the current slice
    placed = ctx.current_assignment >= 0
    key[ctx.current_assignment[placed], qubits[placed], 2] = 1.0
    # 3: free spots per core, squashed to (0, 1]
    free = np.maximum(ctx.free_capacity, 0)
    key[:, :, 3] = (1.0 / (free + 1.0))[:, None]
    # 4: cost of moving the allocated qubits to each core, squashed
    if ctx.prev_assignment is None:
        move = np.zeros(num_cores)
    else:
        move = ctx.cost_matrix[ctx.prev_assignment[ctx.qubit_a], :].copy()
        if ctx.qubit_b is not None:
            move += ctx.cost_matrix[ctx.prev_assignment[ctx.qubit_b], :]
    key[:, :, 4] = (1.0 / (move + 1.0))[:, None]
    # 5: attraction of the allocated qubits to each core's current occupants
    attr = np.bincount(
        ctx.current_assignment[placed],
        weights=ctx.embedding[ctx.qubit_a][placed],
        minlength=num_cores,
    )
    if ctx.qubit_b is not None:
        attr_b = np.bincount(
            ctx.current_assignment[placed],
            weights=ctx.embedding[ctx.qubit_b][placed],
            minlength=num_cores,
        )
        attr = 0.5 * (attr + attr_b)
    key[:, :, 5] = attr[:, None]
    # 6-9: embedding and proximity rows of the allocated qubits
    key[:, :, 6] = ctx.embedding[ctx.qubit_a][None, :]
    key[:, :, 8] = ctx.proximity[ctx.qubit_a][None, :]
    if ctx.qubit_b is not None:
        key[:, :, 7] = ctx.embedding[ctx.qubit_b][None, :]
        key[:, :, 9] = ctx.proximity[ctx.qubit_b][None, :]

    query = np.zeros((num_cores, 2, FEATURE_DIM))
    query[:, 0, :] = key[:, ctx.qubit_a, :]
    if ctx.qubit_b is not None:
        query[:, 1, :] = key[:, ctx.qubit_b, :]
    return key, query


def build_features(ctx: StepContext) -> FeatureTensor:
    """Feature tensors for one allocation step (batch axis of 1)."""
    key, query = _step_features(ctx)
    return FeatureTensor(key[None], query[None])


def build_feature_batch(contexts: list[StepContext]) -> FeatureTensor:
    """Stack the features of several allocation steps along the batch axis."""
    keys, queries = zip(*(_step_features(ctx) for ctx in contexts))
    return FeatureTensor(np.stack(keys), np.stack(queries))


class AllocationPolicy:
    """Size-agnostic core-scoring network.

    Key and query features are projected to the hidden width, qubits
    attend to one another within each core, a per-core query summarizes
    each core's qubits through cross attention, cores attend to one
    another, and a linear head emits one logit per core.
    """

    def __init__(self, config: PolicyConfig | None = None, seed: int = 0):
        self.config = config or PolicyConfig()
        self.store = ParameterStore()
        rng = np.random.default_rng(seed)
        h = self.config.hidden_dim
        heads = self.config.attention_heads
        self.key_proj = Linear(self.store, "key_proj", FEATURE_DIM, h, rng)
        self.query_proj = Linear(self.store, "query_proj", FEATURE_DIM, h, rng)
        self.qubit_encoder = [
            EncoderBlock(self.store, f"qubit_encoder.{i}", h, heads, 2 * h, rng)
            for i in range(self.config.encoder_layers)
        ]
        self.cross_attention = MultiHeadAttention(self.store, "cross_attention", h, heads, rng)
        self.core_encoder = [
            EncoderBlock(self.store, f"core_encoder.{i}", h, heads, 2 * h, rng)
            for i in range(self.config.encoder_layers)
        ]
        self.head = Linear(self.store, "head", h, 1, rng)

    def parameter_count(self) -> int:
        return self.store.parameter_count()

    def forward(self, features: FeatureTensor) -> Tensor:
        """Logits over cores, shape [B, C]; differentiable."""
        key = features.key
        if key.ndim != 4 or key.shape[-1] != FEATURE_DIM:
            raise ValueError(f"bad key tensor shape {key.shape}")
        batch, num_cores, num_qubits, _ = key.shape
        h = self.config.hidden_dim
        k = self.key_proj(Tensor(key))  # [B, C, Q, H]
        q = self.query_proj(Tensor(features.query)).sum(axis=2)  # [B, C, H]
        k = k.reshape(batch * num_cores, num_qubits, h)
        for block in self.qubit_encoder:
            k = block(k)
        q = q.reshape(batch * num_cores, 1, h)
        core_repr = self.cross_attention(q, k, k).reshape(batch, num_cores, h)
        for block in self.core_encoder:
            core_repr = block(core_repr)
        return self.head(core_repr).reshape(batch, num_cores)

    def logits(self, features: FeatureTensor) -> np.ndarray:
        """Inference-only forward pass, shape [B, C]."""
        with no_grad():
            return self.forward(features).data

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        save_checkpoint(self.store, self.config.to_dict(), path)

    @staticmethod
    def load(path) -> "AllocationPolicy":
        from .nn import CheckpointError

        loaded, config_doc = load_checkpoint(path)
        try:
            config = PolicyConfig.from_dict(config_doc)
        except (TypeError, ValueError) as exc:
            raise CheckpointError(f"bad policy config in checkpoint: {exc}") from exc
        policy = AllocationPolicy(config)
        if set(loaded.names()) != set(policy.store.names()):
            raise CheckpointError("checkpoint parameters do not match the architecture")
        # layers hold references into the fresh store; fill it with the
        # loaded values instead of swapping the store object out
        for name, tensor in policy.store.items():
            if loaded[name].data.shape != tensor.data.shape:
                raise CheckpointError(f"shape mismatch for parameter {name!r}")
            tensor.data = loaded[name].data
            policy.store.moment1[name] = loaded.moment1[name]
            policy.store.moment2[name] = loaded.moment2[name]
        policy.store.step_count = loaded.step_count
        return policy


def action_distribution(
    logits: np.ndarray,
    legal_mask: np.ndarray | None = None,
    noise_alpha: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Probabilities over cores for one step, optionally masked and noised.

    The softmax (masked when a legality mask is given) is mixed with a
    uniform random vector: ``noise_alpha * x + (1 - noise_alpha) * p``,
    renormalized to sum to one.  Masked entries stay exactly zero; with
    ``noise_alpha`` zero the softmax is returned unchanged.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ValueError("action_distribution expects a 1-D logit vector")
    if not 0.0 <= noise_alpha <= 1.0:
        raise ValueError("noise_alpha must lie in [0, 1]")
    if legal_mask is None:
        shifted = logits - logits.max()
        e = np.exp(shifted)
        probs = e / e.sum()
    else:
        probs = masked_softmax(Tensor(logits), np.asarray(legal_mask, dtype=bool)).data
    if noise_alpha > 0.0:
        if rng is None:
            raise ValueError("noise injection requires an rng")
        noise = rng.random(logits.size)
        if legal_mask is not None:
            noise = noise * np.asarray(legal_mask, dtype=np.float64)
        probs = noise_alpha * noise + (1.0 - noise_alpha) * probs
        probs = probs / probs.sum()
    return probs


def sample_action(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Draw an index from a probability vector (inverse-CDF, one uniform)."""
    cdf = np.cumsum(probs)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"),
                   probs.size - 1))


def greedy_action(probs: np.ndarray) -> int:
    """Highest-probability index; exact ties resolve to the lowest index."""
    return int(np.argmax(probs))
