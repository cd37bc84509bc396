"""Command-line surface: slice, gen, allocate, train, bench.

Exit codes: 2 for configuration/usage errors, 3 for file I/O problems,
4 for infeasible allocation instances, 5 for checkpoint errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .allocator import (
    Allocation,
    AllocationError,
    allocate_ensemble,
    allocate_parallel,
    allocate_sequential,
)
from .baseline import hqa_allocate
from .bench import benchmark_suite, report_to_csv, report_to_table
from .circuits import (
    CircuitFormatError,
    parse_circuit,
    random_circuit,
    serialize_circuit,
    slice_circuit,
)
from .hardware import HardwareError, parse_hardware
from .library import CIRCUIT_KINDS, generate_named_circuit
from .nn import CheckpointError
from .policy import AllocationPolicy, PolicyConfig
from .trainer import TrainConfig, TrainingError, normalized_cost, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INFEASIBLE = 4
EXIT_CHECKPOINT = 5


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _write_text(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write {path}: {exc}") from exc


def _load_circuit_arg(path: str):
    try:
        return parse_circuit(_read_bytes(path))
    except CircuitFormatError as exc:
        raise _CliError(EXIT_CONFIG, f"bad circuit {path}: {exc}") from exc


def _load_hardware_arg(path: str):
    try:
        return parse_hardware(_read_bytes(path))
    except HardwareError as exc:
        raise _CliError(EXIT_CONFIG, f"bad hardware {path}: {exc}") from exc


def _load_policy_arg(checkpoint: str | None, seed: int) -> AllocationPolicy:
    if checkpoint is None:
        return AllocationPolicy(PolicyConfig(), seed=seed)
    if not Path(checkpoint).exists():
        raise _CliError(EXIT_IO, f"checkpoint not found: {checkpoint}")
    try:
        return AllocationPolicy.load(checkpoint)
    except CheckpointError as exc:
        raise _CliError(EXIT_CHECKPOINT, f"bad checkpoint {checkpoint}: {exc}") from exc


def _allocation_json(allocation: Allocation, circuit) -> str:
    norm = normalized_cost(allocation, circuit)
    doc = {
        "cost": allocation.total_cost,
        "normalized_cost": norm,
        "mode": allocation.mode,
        "assignment": [[int(c) for c in row] for row in allocation.assignment],
    }
    return json.dumps(doc) + "\n"


def _cmd_slice(args) -> int:
    circuit = _load_circuit_arg(args.circuit)
    sliced = slice_circuit(circuit)
    _write_text(args.output, serialize_circuit(sliced).decode("utf-8") + "\n")
    return EXIT_OK


def _cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.kind == "random":
        if args.slices is None:
            raise _CliError(EXIT_CONFIG, "random circuits need --slices")
        circuit = random_circuit(args.qubits, args.slices, rng)
    else:
        try:
            circuit = generate_named_circuit(args.kind, args.qubits, rng)
        except (CircuitFormatError, ValueError) as exc:
            raise _CliError(EXIT_CONFIG, str(exc)) from exc
    _write_text(args.output, serialize_circuit(circuit).decode("utf-8") + "\n")
    return EXIT_OK


def _cmd_allocate(args) -> int:
    circuit = _load_circuit_arg(args.circuit)
    hardware = _load_hardware_arg(args.hardware)
    rng = np.random.default_rng(args.seed)
    try:
        if args.mode == "hqa":
            allocation = hqa_allocate(circuit, hardware)
        else:
            policy = _load_policy_arg(args.checkpoint, args.seed)
            if args.mode == "seq":
                allocation, _ = allocate_sequential(
                    circuit, hardware, policy, collect_trace=False
                )
            elif args.mode == "par":
                allocation, _ = allocate_parallel(
                    circuit, hardware, policy, collect_trace=False
                )
            else:
                allocation = allocate_ensemble(circuit, hardware, policy)
    except AllocationError as exc:
        raise _CliError(EXIT_INFEASIBLE, f"infeasible instance: {exc}") from exc
    _write_text(args.output, _allocation_json(allocation, circuit))
    return EXIT_OK


def _cmd_train(args) -> int:
    try:
        config = TrainConfig.from_json(_read_bytes(args.config))
    except (ValueError, TypeError) as exc:
        raise _CliError(EXIT_CONFIG, f"bad training config: {exc}") from exc
    out_dir = Path(args.out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot create {out_dir}: {exc}") from exc
    policy = AllocationPolicy(PolicyConfig(), seed=config.seed)
    try:
        result = train(
            config,
            policy,
            metrics_path=out_dir / "metrics.csv",
            checkpoint_path=out_dir / "policy.ckpt",
            log_every=args.log_every,
        )
    except TrainingError as exc:
        raise _CliError(EXIT_INFEASIBLE, f"training aborted: {exc}") from exc
    print(
        f"trained {result.parameter_count} parameters for {config.iterations} "
        f"iterations; validation cost {result.initial_validation_cost:.4f} -> "
        f"{result.final_validation_cost:.4f}"
    )
    return EXIT_OK


def _cmd_bench(args) -> int:
    hardware = _load_hardware_arg(args.hardware)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    circuits = []
    if args.circuits is not None:
        directory = Path(args.circuits)
        if not directory.is_dir():
            raise _CliError(EXIT_IO, f"not a circuit directory: {directory}")
        files = sorted(directory.glob("*.json"))
        if not files:
            raise _CliError(EXIT_IO, f"no .json circuits in {directory}")
        for path in files:
            try:
                circuits.append((path.stem, parse_circuit(path.read_bytes())))
            except CircuitFormatError as exc:
                raise _CliError(EXIT_CONFIG, f"bad circuit {path}: {exc}") from exc
    random_group = set()
    if args.random:
        rng = np.random.default_rng(args.seed)
        for i in range(args.random):
            name = f"random_{i:02d}"
            circuits.append(
                (name, random_circuit(args.random_qubits, args.random_slices, rng))
            )
            random_group.add(name)
    if not circuits:
        raise _CliError(EXIT_CONFIG, "nothing to benchmark: give --circuits or --random")
    policy = None
    if any(m != "hqa" for m in methods):
        policy = _load_policy_arg(args.checkpoint, args.seed)
    try:
        report = benchmark_suite(circuits, hardware, methods, policy, random_group)
    except ValueError as exc:
        raise _CliError(EXIT_CONFIG, str(exc)) from exc
    _write_text(args.output, report_to_csv(report))
    if args.output is not None:
        sys.stdout.write(report_to_table(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qalloc",
        description="Qubit allocation for multi-core quantum hardware.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("slice", help="slice a circuit JSON into time slices")
    p.add_argument("circuit")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_slice)

    p = sub.add_parser("gen", help="generate a named or random circuit")
    p.add_argument("--kind", required=True, choices=CIRCUIT_KINDS + ("random",))
    p.add_argument("--qubits", type=int, required=True)
    p.add_argument("--slices", type=int, default=None, help="target slices (random only)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("allocate", help="allocate a circuit onto hardware")
    p.add_argument("--circuit", required=True)
    p.add_argument("--hardware", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--mode", choices=("seq", "par", "ensemble", "hqa"), default="ensemble")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=_cmd_allocate)

    p = sub.add_parser("train", help="train a policy from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--log-every", type=int, default=100)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("bench", help="benchmark methods over a circuit suite")
    p.add_argument("--circuits", default=None, help="directory of circuit .json files")
    p.add_argument("--hardware", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--methods", default="ensemble,hqa")
    p.add_argument("--random", type=int, default=0, help="add N seeded random circuits")
    p.add_argument("--random-qubits", type=int, default=50)
    p.add_argument("--random-slices", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default=None, help="CSV path (table to stdout)")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
