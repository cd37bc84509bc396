"""Policy-gradient training on randomly sampled instances.

Each iteration samples a circuit and hardware, rolls out a group of
sequential episodes with masking disabled (illegal actions are permitted
but tagged), standardizes the episode costs against the group, and pushes
the action log-probabilities of cheap episodes up, expensive episodes and
illegal actions down.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .allocator import (
    Allocation,
    TraceStep,
    _sequential_episodes,
    allocate_sequential,
    allocation_cost,
)
from .circuits import SlicedCircuit, UnslicedCircuit, random_circuit, slice_circuit
from .hardware import Hardware, random_hardware
from .nn import Tensor, adam_step, log_softmax
from .policy import AllocationPolicy, FeatureTensor

__all__ = [
    "TrainingError",
    "TrainConfig",
    "RolloutRecord",
    "MetricsRow",
    "TrainResult",
    "normalized_advantage",
    "rollout_group",
    "grpo_reinforce_loss",
    "train",
    "normalized_cost",
]

_DEGENERATE_STD = 1e-8


class TrainingError(RuntimeError):
    """Raised when training cannot continue (divergence, non-finite loss)."""


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters and sampling ranges for a training run."""

    iterations: int = 2000
    group_size: int = 32
    qubit_range: tuple[int, int] = (8, 20)
    slice_range: tuple[int, int] = (4, 16)
    core_range: tuple[int, int] = (2, 8)
    capacity_range: tuple[int, int] = (2, 10)
    illegal_penalty_schedule: tuple[tuple[int, float], ...] = ((0, 0.3), (16000, 0.5))
    noise_initial: float = 0.2
    noise_decay: float = 0.999
    noise_resets: tuple[tuple[int, float], ...] = ((16000, 0.05),)
    discount: float = 1.0  # stored for completeness; one advantage spans the episode
    learning_rate: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    validation_period: int = 25
    validation_size: int = 32
    divergence_grace: int = 200
    divergence_threshold: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError("group_size must be >= 2 (the advantage needs a spread)")
        if not 0.0 <= self.noise_initial <= 1.0:
            raise ValueError("noise_initial must lie in [0, 1]")
        for _, beta in self.illegal_penalty_schedule:
            if not 0.0 < beta < 1.0:
                raise ValueError("illegal penalties must lie strictly in (0, 1)")
        if self.qubit_range[0] < 2 or self.slice_range[0] < 1:
            raise ValueError("bad circuit sampling ranges")

    def to_json(self) -> str:
        doc = {
            name: list(value) if isinstance(value, tuple) else value
            for name, value in self.__dict__.items()
        }
        doc["illegal_penalty_schedule"] = [list(p) for p in self.illegal_penalty_schedule]
        doc["noise_resets"] = [list(p) for p in self.noise_resets]
        return json.dumps(doc, indent=2)

    @staticmethod
    def from_json(data: str | bytes) -> "TrainConfig":
        doc = json.loads(data)
        if not isinstance(doc, dict):
            raise ValueError("training config must be a JSON object")
        known = set(TrainConfig.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown training config keys: {sorted(unknown)}")
        kwargs = {}
        for name, value in doc.items():
            if name in ("illegal_penalty_schedule", "noise_resets"):
                kwargs[name] = tuple((int(i), float(v)) for i, v in value)
            elif isinstance(value, list):
                kwargs[name] = tuple(value)
            else:
                kwargs[name] = value
        return TrainConfig(**kwargs)


@dataclass
class RolloutRecord:
    """One sampled episode: its steps, final cost, and legality."""

    steps: list[TraceStep]
    cost: float
    valid: bool


def normalized_advantage(costs: np.ndarray) -> np.ndarray:
    """Standardize episode costs against their group.

    Uses the population standard deviation; a spread below 1e-8 marks an
    uninformative group and yields all-zero advantages.
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.size < 2:
        raise ValueError("advantage normalization needs at least 2 episodes")
    std = costs.std()
    if std < _DEGENERATE_STD:
        return np.zeros_like(costs)
    return (costs - costs.mean()) / std


def rollout_group(
    circuit: UnslicedCircuit | SlicedCircuit,
    hardware: Hardware,
    policy: AllocationPolicy,
    group_size: int,
    noise_alpha: float,
    rng: np.random.Generator,
) -> list[RolloutRecord]:
    """Sample ``group_size`` sequential episodes with masking disabled.

    Illegal actions are permitted (the unit stays at its previous-slice
    core, or the lowest-index core with room on the first slice) and
    tagged per step; every episode therefore finishes and is costed.
    """
    if group_size < 2:
        raise ValueError("rollout groups need at least 2 episodes")
    sliced = circuit if isinstance(circuit, SlicedCircuit) else slice_circuit(circuit)
    assignment, traces = _sequential_episodes(
        sliced, hardware, policy,
        group=group_size, sample=True, noise_alpha=noise_alpha, rng=rng,
        masked=False, want_trace=True,
    )
    records = []
    for b in range(group_size):
        steps = traces[b]
        records.append(
            RolloutRecord(
                steps=steps,
                cost=allocation_cost(assignment[b], hardware.cost_matrix),
                valid=all(s.legal for s in steps),
            )
        )
    return records


def grpo_reinforce_loss(
    policy: AllocationPolicy,
    records: list[RolloutRecord],
    advantages: np.ndarray,
    illegal_penalty: float,
) -> tuple[float, dict[str, np.ndarray]]:
    """Group loss and its parameter gradients.

    Legal steps contribute ``(1 - beta) * advantage * log pi(a|s)`` and
    illegal steps ``beta * log pi(a|s)``; the loss is minimized, so
    below-mean (negative-advantage) episodes have their actions pushed up
    and illegal actions are always pushed down.  States are replayed from
    the recorded features, batched across the group per step.
    """
    if len(records) != len(advantages):
        raise ValueError("one advantage per episode is required")
    n_steps = len(records[0].steps)
    if any(len(r.steps) != n_steps for r in records):
        raise ValueError("episodes in a group must share the same step sequence")
    policy.store.zero_grad()
    total: Tensor | None = None
    advantages = np.asarray(advantages, dtype=np.float64)
    for i in range(n_steps):
        key = np.stack([r.steps[i].key for r in records])
        query = np.stack([r.steps[i].query for r in records])
        actions = np.array([r.steps[i].action for r in records])
        legal = np.array([r.steps[i].legal for r in records])
        weights = np.where(legal, (1.0 - illegal_penalty) * advantages, illegal_penalty)
        logits = policy.forward(FeatureTensor(key, query))
        log_probs = log_softmax(logits, axis=-1).gather(actions[:, None]).reshape(len(records))
        contribution = (log_probs * Tensor(weights)).sum()
        total = contribution if total is None else total + contribution
    loss = float(total.item())
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite loss {loss!r}")
    total.backward()
    grads = policy.store.gradients()
    return loss, grads


def normalized_cost(allocation: Allocation, circuit: UnslicedCircuit | SlicedCircuit) -> float | None:
    """Movement cost per gate, excluding first-slice gates.

    Single-slice circuits never move a qubit, so the metric is undefined
    for them and None is returned.
    """
    sliced = circuit if isinstance(circuit, SlicedCircuit) else slice_circuit(circuit)
    later_gates = sum(len(ts) for ts in sliced.slices[1:])
    if later_gates == 0:
        return None
    return allocation.total_cost / later_gates


@dataclass
class MetricsRow:
    iteration: int
    mean_group_cost: float
    validation_cost: float | None
    valid_move_ratio: float
    alpha: float
    beta: float


@dataclass
class TrainResult:
    metrics: list[MetricsRow]
    validation_history: list[tuple[int, float]]
    initial_validation_cost: float
    final_validation_cost: float
    parameter_count: int


_METRICS_HEADER = ["iteration", "mean_group_cost", "validation_cost",
                   "valid_move_ratio", "alpha", "beta"]


def metrics_to_csv(rows: list[MetricsRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_METRICS_HEADER)
    for row in rows:
        writer.writerow([
            row.iteration,
            f"{row.mean_group_cost:.6f}",
            "" if row.validation_cost is None else f"{row.validation_cost:.6f}",
            f"{row.valid_move_ratio:.6f}",
            f"{row.alpha:.6f}",
            f"{row.beta:.6f}",
        ])
    return buf.getvalue()


def _beta_at(schedule: tuple[tuple[int, float], ...], iteration: int) -> float:
    value = schedule[0][1]
    for start, beta in schedule:
        if iteration >= start:
            value = beta
    return value


def _sample_instance(config: TrainConfig, rng: np.random.Generator):
    num_qubits = int(rng.integers(config.qubit_range[0], config.qubit_range[1] + 1))
    num_slices = int(rng.integers(config.slice_range[0], config.slice_range[1] + 1))
    circuit = random_circuit(num_qubits, num_slices, rng)
    hardware = random_hardware(
        rng, config.core_range, config.capacity_range, required_capacity=num_qubits
    )
    return circuit, hardware


def _validation_cost(
    validation_set, policy: AllocationPolicy
) -> float:
    """Mean normalized cost of greedy masked sequential allocation."""
    from .allocator import AllocationError

    values = []
    for circuit, hardware in validation_set:
        try:
            allocation, _ = allocate_sequential(
                circuit, hardware, policy, collect_trace=False
            )
        except AllocationError:
            # a rare myopic-mask dead end; skip rather than poison the mean
            continue
        value = normalized_cost(allocation, circuit)
        if value is not None:
            values.append(value)
    if not values:
        raise TrainingError("validation set produced no measurable episodes")
    return float(np.mean(values))


def train(
    config: TrainConfig,
    policy: AllocationPolicy,
    metrics_path=None,
    checkpoint_path=None,
    log_every: int = 0,
) -> TrainResult:
    """Run the training loop; the policy is updated in place.

    A frozen validation set is sampled up front from the config's ranges;
    greedy masked allocation over it is measured before training and every
    ``validation_period`` iterations.  Aborts if the valid-move ratio
    stays below the divergence threshold after the grace period.
    """
    root = np.random.SeedSequence(config.seed)
    train_seq, val_seq = root.spawn(2)
    rng = np.random.default_rng(train_seq)
    val_rng = np.random.default_rng(val_seq)
    validation_set = []
    for _ in range(config.validation_size):
        validation_set.append(_sample_instance(config, val_rng))

    initial_validation = _validation_cost(validation_set, policy)
    validation_history = [(0, initial_validation)]
    metrics: list[MetricsRow] = []
    alpha = config.noise_initial
    recent_ratios: list[float] = []
    for iteration in range(config.iterations):
        for reset_at, reset_value in config.noise_resets:
            if iteration == reset_at:
                alpha = reset_value
        beta = _beta_at(config.illegal_penalty_schedule, iteration)
        circuit, hardware = _sample_instance(config, rng)
        records = rollout_group(
            circuit, hardware, policy, config.group_size, alpha, rng
        )
        costs = np.array([r.cost for r in records])
        advantages = normalized_advantage(costs)
        loss, grads = grpo_reinforce_loss(policy, records, advantages, beta)
        adam_step(
            policy.store, grads,
            lr=config.learning_rate,
            beta1=config.adam_beta1,
            beta2=config.adam_beta2,
            eps=config.adam_eps,
        )
        n_steps = sum(len(r.steps) for r in records)
        n_legal = sum(sum(s.legal for s in r.steps) for r in records)
        ratio = n_legal / n_steps
        recent_ratios.append(ratio)
        if len(recent_ratios) > 25:
            recent_ratios.pop(0)
        if (
            iteration >= config.divergence_grace
            and float(np.mean(recent_ratios)) < config.divergence_threshold
        ):
            raise TrainingError(
                f"valid-move ratio collapsed to {np.mean(recent_ratios):.3f} "
                f"at iteration {iteration}"
            )
        validation_value = None
        if (iteration + 1) % config.validation_period == 0:
            validation_value = _validation_cost(validation_set, policy)
            validation_history.append((iteration + 1, validation_value))
        metrics.append(
            MetricsRow(
                iteration=iteration,
                mean_group_cost=float(costs.mean()),
                validation_cost=validation_value,
                valid_move_ratio=ratio,
                alpha=alpha,
                beta=beta,
            )
        )
        alpha *= config.noise_decay
        if log_every and (iteration + 1) % log_every == 0:
            print(
                f"iter {iteration + 1}/{config.iterations} "
                f"cost {costs.mean():.2f} valid {ratio:.2%} "
                f"val {validation_history[-1][1]:.4f} alpha {alpha:.4f}"
            )
    result = TrainResult(
        metrics=metrics,
        validation_history=validation_history,
        initial_validation_cost=initial_validation,
        final_validation_cost=validation_history[-1][1],
        parameter_count=policy.parameter_count(),
    )
    if metrics_path is not None:
        with open(metrics_path, "w") as fh:
            fh.write(metrics_to_csv(metrics))
    if checkpoint_path is not None:
        policy.save(checkpoint_path)
    return result
