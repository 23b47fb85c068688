"""Command-line surface: rank, compare, bench, synth and history."""

import argparse
import dataclasses
import json
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .bench import BenchRunner
from .config import Config
from .curves import class_means_curve, cv_curve, indegree_curve
from .database import ResultsStore
from .errors import NodeSetMismatch
from .gmres import KrylovConfig
from .graph import DirectedGraph, GroupAssignment
from .ingest import NodeIdMap, load_dataset, read_scores, write_records, write_scores
from .logging_config import get_logger
from .metrics import DEFAULT_BIN_FACTOR, DEFAULT_TOPK, compare_scores
from .scores import FairnessSpec
from .solvers import METHODS, run_method
from .synth import SynthSpec, generate_detailed

logger = get_logger(__name__)


@dataclass
class RunConfig:
    """Everything one ``rank`` invocation needs.

    Attributes:
        edges: Edge-list path (with ``labels``), or None when ``synth`` is set.
        labels: Label-file path.
        synth: Synthetic graph recipe used instead of files.
        method: One of METHODS.
        fairness: Teleport probability and target.
        krylov: GMRES settings.
        out_dir: Directory receiving output files.
        output_format: csv or json.
        dense_cap: Largest N for the exact method.
        dedup: Drop duplicate input edges instead of failing.
        results_db: Optional SQLite ledger path.
        check_projection: Cross-check exact projections against Dykstra.
    """

    method: str
    out_dir: Path
    edges: Path | None = None
    labels: Path | None = None
    synth: SynthSpec | None = None
    fairness: FairnessSpec = field(default_factory=FairnessSpec)
    krylov: KrylovConfig = field(default_factory=KrylovConfig)
    output_format: str = "csv"
    dense_cap: int = 5000
    dedup: bool = False
    results_db: str = ""
    check_projection: bool = False

    def __post_init__(self) -> None:
        from_files = self.edges is not None or self.labels is not None
        if from_files == (self.synth is not None):
            raise ValueError("give either --edges/--labels or --synth, not both or neither")
        if from_files and (self.edges is None or self.labels is None):
            raise ValueError("--edges and --labels must be given together")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.output_format not in ("csv", "json"):
            raise ValueError(f"unknown output format {self.output_format!r}")


def _synth_ids(node_count: int) -> NodeIdMap:
    ids = NodeIdMap()
    for i in range(node_count):
        ids.add(str(i))
    return ids


def load_input(run: RunConfig) -> tuple[DirectedGraph, GroupAssignment, NodeIdMap]:
    """Load the graph named by ``run`` from files or the generator."""
    if run.synth is not None:
        result = generate_detailed(run.synth)
        return result.graph, result.groups, _synth_ids(result.graph.node_count)
    dataset = load_dataset(run.edges, run.labels, dedup=run.dedup)
    return dataset.graph, dataset.groups, dataset.ids


def cmd_rank(run: RunConfig) -> dict[str, Path]:
    """Rank one graph and write ``scores`` and ``report`` files.

    Returns:
        Mapping of output kind to written path.
    """
    g, groups, ids = load_input(run)
    scores, report, _ = run_method(
        run.method, g, groups, run.fairness, run.krylov, run.dense_cap, run.check_projection
    )
    fmt = run.output_format
    record: dict[str, Any] = {
        "nodes": g.node_count,
        "edges": g.edge_count,
        "nu": run.fairness.nu,
        "phi": groups.phi,
        "graph_fingerprint": g.fingerprint,
    }
    record.update(report.to_dict())
    outputs = {
        "scores": write_scores(run.out_dir / f"scores.{fmt}", ids, g, groups, scores, fmt),
        "report": write_records(run.out_dir / f"report.{fmt}", [record], fmt),
    }
    if run.results_db:
        ResultsStore(run.results_db).record_run(
            run.method,
            g.fingerprint,
            g.node_count,
            g.edge_count,
            run.fairness.nu,
            report,
            target=run.fairness.resolve_target(groups),
        )
    logger.info(
        "Ranking written",
        method=run.method,
        protected_mass=report.achieved_protected_mass,
        out=str(run.out_dir),
    )
    return outputs


def cmd_compare(
    baseline_path: Path,
    approx_path: Path,
    out_dir: Path,
    nu: float,
    target: float | None = None,
    output_format: str = "csv",
    ks: Sequence[int] = DEFAULT_TOPK,
    factor: float = DEFAULT_BIN_FACTOR,
) -> dict[str, Path]:
    """Compare two score files and write the metrics and curve data.

    Group labels and degrees come from the baseline file.

    Raises:
        NodeSetMismatch: If the files do not cover the same node ids.
    """
    baseline = read_scores(baseline_path)
    approx = read_scores(approx_path)
    if set(baseline.node_ids) != set(approx.node_ids):
        raise NodeSetMismatch(
            f"{baseline_path} and {approx_path} describe different node sets "
            f"({len(baseline)} vs {len(approx)} nodes)"
        )
    approx = approx.reorder(baseline.node_ids)
    groups = _groups_from_table(baseline.group, baseline.k_in)

    base_scores = baseline.scores.scores
    approx_scores = approx.scores.scores
    report = compare_scores(
        base_scores, approx_scores, groups, target, baseline.k_in, ks, factor
    )
    fmt = output_format
    outputs = {
        "comparison": write_records(out_dir / f"comparison.{fmt}", [report.to_dict()], fmt),
        "class_means": write_records(
            out_dir / f"curve_class_means.{fmt}",
            class_means_curve(
                baseline.k_in, baseline.k_out, baseline.group, base_scores, approx_scores
            ),
            fmt,
        ),
        "indegree": write_records(
            out_dir / f"curve_indegree.{fmt}",
            indegree_curve(baseline.k_in, baseline.group, base_scores, nu, target, factor),
            fmt,
        ),
        "cv": write_records(
            out_dir / f"curve_cv.{fmt}",
            cv_curve(baseline.k_in, baseline.k_out, base_scores, nu, factor),
            fmt,
        ),
    }
    logger.info(
        "Comparison written",
        pearson=report.pearson,
        kendall_tau=report.kendall_tau,
        utility_loss=report.utility_loss,
    )
    return outputs


def _groups_from_table(group: np.ndarray, k_in: np.ndarray) -> GroupAssignment:
    protected = np.asarray(group).astype(bool)
    d_protected = int(np.asarray(k_in)[protected].sum())
    return GroupAssignment(
        protected=protected,
        phi=float(protected.mean()),
        d_protected=d_protected,
        d_unprotected=int(np.asarray(k_in).sum()) - d_protected,
    )


def cmd_bench(
    synth_specs: Sequence[SynthSpec],
    methods: Sequence[str],
    out_dir: Path,
    fairness: FairnessSpec,
    krylov: KrylovConfig,
    dense_cap: int,
    output_format: str = "csv",
    results_db: str = "",
) -> dict[str, Path]:
    """Time every method on every synthetic graph and write ``bench``."""
    store = ResultsStore(results_db) if results_db else None
    runner = BenchRunner(methods, fairness, krylov, dense_cap, store)
    rows = runner.run(synth_specs)
    path = write_records(
        out_dir / f"bench.{output_format}", [row.to_dict() for row in rows], output_format
    )
    return {"bench": path}


def cmd_synth(synth_spec: SynthSpec, out_dir: Path) -> dict[str, Path]:
    """Write a synthetic graph as ``edges.tsv``, ``labels.tsv`` and metadata."""
    result = generate_detailed(synth_spec)
    out_dir.mkdir(parents=True, exist_ok=True)
    edges_path = out_dir / "edges.tsv"
    labels_path = out_dir / "labels.tsv"
    meta_path = out_dir / "synth_meta.json"
    edge_lines = [f"{s}\t{t}\n" for s, t in result.graph.edge_array().tolist()]
    edges_path.write_text("".join(edge_lines), encoding="utf-8")
    label_lines = [f"{i}\t{label}\n" for i, label in enumerate(result.groups.as_int().tolist())]
    labels_path.write_text("".join(label_lines), encoding="utf-8")
    metadata = dict(result.metadata, graph_fingerprint=result.graph.fingerprint)
    meta_path.write_text(json.dumps(metadata, indent=2) + "\n", encoding="utf-8")
    return {"edges": edges_path, "labels": labels_path, "metadata": meta_path}


def cmd_history(
    results_db: str, limit: int = 20, graph: str | None = None, timings: bool = False
) -> list[dict]:
    """Ledger rows as records, most recent first unless filtered by graph.

    With ``timings`` the per-method benchmark summary is returned instead.
    """
    store = ResultsStore(results_db)
    if timings:
        return store.timing_summary()
    runs = store.runs_for_graph(graph) if graph else store.recent_runs(limit)
    return [
        {
            "id": run.id,
            "created_at": run.created_at.isoformat() if run.created_at else "",
            "method": run.method,
            "graph_fingerprint": run.graph_fingerprint,
            "nodes": run.node_count,
            "edges": run.edge_count,
            "nu": run.nu,
            "outer_iterations": run.outer_iterations,
            "inner_iterations_total": run.inner_iterations_total,
            "final_residual": run.final_residual,
            "achieved_protected_mass": run.achieved_protected_mass,
            "wall_time_seconds": run.wall_time_seconds,
        }
        for run in runs
    ]


def _add_solver_arguments(parser: argparse.ArgumentParser, config: Config) -> None:
    parser.add_argument("--nu", type=float, default=config.nu, help="teleport probability")
    parser.add_argument(
        "--target", type=float, default=None, help="protected mass target (default: phi)"
    )
    parser.add_argument(
        "--tol", type=float, default=config.gmres_tol, help="GMRES relative residual tolerance"
    )
    parser.add_argument(
        "--restart", type=int, default=config.gmres_restart, help="GMRES restart dimension"
    )
    parser.add_argument(
        "--dense-cap", type=int, default=config.dense_cap, help="largest N for --method exact"
    )


def _add_output_arguments(parser: argparse.ArgumentParser, config: Config) -> None:
    parser.add_argument("--out", type=Path, default=Path("."), help="output directory")
    parser.add_argument(
        "--format", choices=("csv", "json"), default=config.output_format, dest="output_format"
    )


def build_parser(config: Config | None = None) -> argparse.ArgumentParser:
    """Argument parser with defaults taken from ``config``."""
    config = config or Config()
    parser = argparse.ArgumentParser(
        prog="fairrank", description="Fairness-sensitive PageRank solvers."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    commands = parser.add_subparsers(dest="command", required=True)

    rank = commands.add_parser("rank", help="rank a graph with one method")
    source = rank.add_mutually_exclusive_group(required=True)
    source.add_argument("--edges", type=Path, help="edge list (source<TAB>target)")
    source.add_argument("--synth", type=str, help="synthetic graph spec, e.g. n=1000,phi=0.3")
    rank.add_argument("--labels", type=Path, help="label file (node_id<TAB>0|1)")
    rank.add_argument("--method", choices=METHODS, default="gmres")
    rank.add_argument("--seed", type=int, default=None, help="override the synth seed")
    rank.add_argument("--dedup", action="store_true", help="drop duplicate input edges")
    rank.add_argument("--results-db", default=config.results_db, help="SQLite run ledger")
    rank.add_argument(
        "--check-projection",
        action="store_true",
        help="cross-check exact projections against Dykstra (debug)",
    )
    _add_solver_arguments(rank, config)
    _add_output_arguments(rank, config)

    compare = commands.add_parser("compare", help="compare two score files")
    compare.add_argument("--baseline", type=Path, required=True, help="reference scores")
    compare.add_argument("--approx", type=Path, required=True, help="approximate scores")
    compare.add_argument("--nu", type=float, default=config.nu, help="teleport probability")
    compare.add_argument("--target", type=float, default=None, help="protected mass target")
    compare.add_argument(
        "--topk", type=int, nargs="+", default=list(DEFAULT_TOPK), help="top-K sizes"
    )
    compare.add_argument(
        "--bin-factor", type=float, default=DEFAULT_BIN_FACTOR, help="log-bin edge factor"
    )
    _add_output_arguments(compare, config)

    bench = commands.add_parser("bench", help="time methods on synthetic graphs")
    bench.add_argument("--synth", nargs="+", required=True, help="one or more synth specs")
    bench.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    bench.add_argument("--results-db", default=config.results_db, help="SQLite run ledger")
    _add_solver_arguments(bench, config)
    _add_output_arguments(bench, config)

    synth = commands.add_parser("synth", help="write a synthetic graph to disk")
    synth.add_argument("--synth", required=True, help="synth spec")
    synth.add_argument("--seed", type=int, default=None, help="override the synth seed")
    synth.add_argument("--out", type=Path, default=Path("."), help="output directory")

    history = commands.add_parser("history", help="show the run ledger")
    history.add_argument("--results-db", default=config.results_db, help="SQLite run ledger")
    history.add_argument("--limit", type=int, default=20)
    history.add_argument("--graph", default=None, help="only runs on this graph fingerprint")
    history.add_argument(
        "--timings", action="store_true", help="mean bench time per method instead of runs"
    )
    return parser


def _synth_spec(text: str, seed: int | None) -> SynthSpec:
    spec = SynthSpec.parse(text)
    return spec if seed is None else dataclasses.replace(spec, seed=seed)


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Build a RunConfig from parsed ``rank`` arguments."""
    return RunConfig(
        method=args.method,
        out_dir=args.out,
        edges=args.edges,
        labels=args.labels,
        synth=_synth_spec(args.synth, args.seed) if args.synth else None,
        fairness=FairnessSpec(nu=args.nu, target=args.target),
        krylov=KrylovConfig(restart_dim=args.restart, tol=args.tol),
        output_format=args.output_format,
        dense_cap=args.dense_cap,
        dedup=args.dedup,
        results_db=args.results_db,
        check_projection=args.check_projection,
    )


def dispatch(args: argparse.Namespace) -> dict[str, Path] | list[dict]:
    """Run the subcommand selected in ``args``."""
    if args.command == "rank":
        return cmd_rank(run_config_from_args(args))
    if args.command == "compare":
        return cmd_compare(
            args.baseline,
            args.approx,
            args.out,
            args.nu,
            args.target,
            args.output_format,
            args.topk,
            args.bin_factor,
        )
    if args.command == "bench":
        return cmd_bench(
            [SynthSpec.parse(text) for text in args.synth],
            args.methods,
            args.out,
            FairnessSpec(nu=args.nu, target=args.target),
            KrylovConfig(restart_dim=args.restart, tol=args.tol),
            args.dense_cap,
            args.output_format,
            args.results_db,
        )
    if args.command == "synth":
        return cmd_synth(_synth_spec(args.synth, args.seed), args.out)
    if args.command == "history":
        if not args.results_db:
            raise ValueError("history needs --results-db or FAIRRANK_RESULTS_DB")
        return cmd_history(args.results_db, args.limit, args.graph, args.timings)
    raise ValueError(f"unknown command {args.command!r}")
