"""Qubit allocation for multi-core quantum hardware.

A library for distributing a circuit's qubits across interconnected
quantum cores while minimizing inter-core communication: circuit slicing
and feature encodings, a size-agnostic attention-based allocation policy
with policy-gradient training, sequential/parallel/ensemble construction
procedures, and a Hungarian-assignment baseline with a benchmark harness.
"""

from .circuits import (
    CircuitFormatError,
    Gate,
    SlicedCircuit,
    TimeSlice,
    UnslicedCircuit,
    load_circuit,
    parse_circuit,
    random_circuit,
    save_circuit,
    serialize_circuit,
    slice_circuit,
)
from .library import CIRCUIT_KINDS, generate_named_circuit, graph_state_circuit
from .hardware import (
    Hardware,
    HardwareError,
    complete_cost_matrix,
    load_hardware,
    parse_hardware,
    random_hardware,
    serialize_hardware,
    uniform_hardware,
)
from .encoding import (
    SliceFeatureStream,
    adjacency,
    attraction,
    attraction_matrix,
    circuit_embedding,
    next_interaction,
)
from .policy import (
    FEATURE_DIM,
    AllocationPolicy,
    FeatureTensor,
    PolicyConfig,
    StepContext,
    action_distribution,
    build_feature_batch,
    build_features,
    greedy_action,
    sample_action,
)
from .allocator import (
    Allocation,
    AllocationError,
    AllocationUnit,
    TraceStep,
    ValidationReport,
    allocate_ensemble,
    allocate_parallel,
    allocate_sequential,
    allocation_cost,
    sequential_order,
    validate_allocation,
)
from .baseline import hqa_allocate, hungarian
from .trainer import (
    RolloutRecord,
    TrainConfig,
    TrainResult,
    TrainingError,
    grpo_reinforce_loss,
    normalized_advantage,
    normalized_cost,
    rollout_group,
    train,
)
from .bench import BenchmarkReport, benchmark_suite, report_to_csv, report_to_table

__version__ = "0.1.0"
