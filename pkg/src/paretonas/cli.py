"""Command-line entry point.

Subcommands::

    paretonas search --config cfg.json --out rundir
    paretonas resume --out rundir
    paretonas decode <space>:<bits>
    paretonas front  --out rundir --generation N [--all]
    paretonas genes  --out rundir

Exit codes: 0 success, 2 invalid configuration/arguments, 3 evaluator
failure (checkpoint stays intact), 4 missing or corrupt checkpoint.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .archive import RunWriter, load_archive, load_checkpoint, load_run_config
from .config import SearchConfig
from .cost import CostModel, cost_report
from .engine import EvolutionEngine
from .errors import (
    CheckpointError,
    CodecError,
    ConfigError,
    EvaluationError,
    TransportError,
)
from .genome import MobileNetV2Arch, XceptionArch, decode, parse_genome
from .pareto import ParetoFront, labeled_gene_frequency

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EVALUATOR = 3
EXIT_CHECKPOINT = 4


def _progress(engine: EvolutionEngine, record) -> None:
    print(
        f"generation {record.generation:3d}/{engine.config.generations}"
        f"  evals={engine.unique_evaluations}"
        f"  front={record.front_size}"
        f"  hypervolume={record.hypervolume:.6f}",
        flush=True,
    )


def cmd_search(config_path: str, out_dir: str) -> int:
    config = SearchConfig.from_file(config_path)
    writer = RunWriter(out_dir, config, fresh=True)
    engine = EvolutionEngine(config, writer=writer)
    archive = engine.run(on_generation=_progress)
    print(f"status: {archive.status} after {len(archive.records)} generations")
    return EXIT_OK


def cmd_resume(out_dir: str) -> int:
    config, run_hash = load_run_config(out_dir)
    state = load_checkpoint(out_dir)
    if state["config_hash"] != run_hash or run_hash != config.config_hash():
        raise ConfigError(
            f"config in {out_dir} changed since the run started; refusing to resume"
        )
    if state["status"] != "in_progress":
        print(f"run already {state['status']}; nothing to do")
        return EXIT_OK
    writer = RunWriter(out_dir, config, fresh=False)
    writer.trim_to(state["generation"])
    engine = EvolutionEngine(config, writer=writer)
    engine.load_state(state)
    archive = engine.run(on_generation=_progress)
    print(f"status: {archive.status} after generation {engine.generation}")
    return EXIT_OK


def cmd_decode(genome_text: str) -> int:
    genome = parse_genome(genome_text)
    arch = decode(genome)
    model = CostModel()
    report = cost_report(model.graph(arch), model.throughput)
    print(f"space: {genome.space.value}")
    print(f"genome: {genome.text}")
    if isinstance(arch, XceptionArch):
        mask = "".join(str(b) for b in arch.middle_blocks)
        print(f"entry_stride: {arch.entry_stride}")
        print(f"middle_atrous: {arch.middle_atrous}")
        print(f"exit_atrous: {arch.exit_atrous}")
        print(f"aspp_rates: {arch.aspp_rates}")
        print(f"middle_blocks: {mask} ({arch.active_blocks} active)")
    else:
        assert isinstance(arch, MobileNetV2Arch)
        groups = " ".join("".join(str(b) for b in g) for g in arch.group_layers)
        print(f"strides(l2,l3,l14,l17): {arch.strides}")
        print(f"dilations(l12..l17): {arch.dilations}")
        print(f"group_layers(24/32/64/96/160): {groups} ({arch.active_group_layers} active)")
    print(f"params: {report.params}")
    print(f"flops: {report.flops}")
    print(f"latency_cycles: {report.latency_cycles:.6f}")
    return EXIT_OK


def _front_rows(record, objective_names: Sequence[str]) -> list[tuple[float, float]]:
    error_like = [n for n in objective_names if n == "error"]
    if error_like:
        cost_name = next(n for n in objective_names if n != "error")
        pairs = [(p["objectives"][cost_name], p["objectives"]["error"])
                 for p in record.front]
    else:
        a, b = objective_names
        pairs = [(p["objectives"][a], p["objectives"][b]) for p in record.front]
    return sorted(pairs)


def cmd_front(out_dir: str, generation: int | None, show_all: bool) -> int:
    archive = load_archive(out_dir)
    if not archive.records:
        raise ConfigError(f"{out_dir} holds no recorded generations")
    names = archive.config.objectives
    cost_name = next((n for n in names if n != "error"), names[0])
    error_name = "error" if "error" in names else names[1]
    if show_all:
        print(f"generation,{cost_name},{error_name}")
        for record in archive.records:
            for cost, err in _front_rows(record, names):
                print(f"{record.generation},{cost:.6f},{err:.6f}")
        return EXIT_OK
    by_generation = {r.generation: r for r in archive.records}
    if generation is None:
        generation = archive.records[-1].generation
    if generation not in by_generation:
        raise ConfigError(f"generation {generation} is not recorded in {out_dir}")
    print(f"{cost_name},{error_name}")
    for cost, err in _front_rows(by_generation[generation], names):
        print(f"{cost:.6f},{err:.6f}")
    return EXIT_OK


def cmd_genes(out_dir: str) -> int:
    archive = load_archive(out_dir)
    if not archive.records:
        raise ConfigError(f"{out_dir} holds no recorded generations")
    record = archive.records[-1]
    names = archive.config.objectives
    points = tuple(
        (tuple(p["objectives"][n] for n in names), p["genome"]) for p in record.front
    )
    front = ParetoFront(points, record.generation, tuple(names))
    print("bit,label,frequency")
    for index, label, freq in labeled_gene_frequency(front):
        print(f"{index},{label},{freq:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paretonas",
        description="Multi-objective evolutionary search over supernet subnetworks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("search", help="run a search from a config file")
    p.add_argument("--config", required=True, help="path to the JSON config")
    p.add_argument("--out", required=True, help="run directory to create/overwrite")

    p = sub.add_parser("resume", help="continue an interrupted run")
    p.add_argument("--out", required=True, help="run directory with a checkpoint")

    p = sub.add_parser("decode", help="decode a genome and report its cost")
    p.add_argument("genome", help="canonical text form, e.g. xception:0101...")

    p = sub.add_parser("front", help="emit a generation's Pareto front as CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--generation", type=int, default=None)
    p.add_argument("--all", action="store_true", dest="show_all",
                   help="emit every generation, tagged by generation")

    p = sub.add_parser("genes", help="per-bit activation frequency of the final front")
    p.add_argument("--out", required=True)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "search":
            return cmd_search(args.config, args.out)
        if args.command == "resume":
            return cmd_resume(args.out)
        if args.command == "decode":
            return cmd_decode(args.genome)
        if args.command == "front":
            return cmd_front(args.out, args.generation, args.show_all)
        if args.command == "genes":
            return cmd_genes(args.out)
        parser.error(f"unknown command {args.command!r}")
    except (ConfigError, CodecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (TransportError, EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
