# cli.py
"""
Command-line entry point.

    python cli.py distances DATASET      pairwise distance matrix (+ component matrices)
    python cli.py cluster MATRIX --k K   agglomerative / spectral assignment (+ ARI)
    python cli.py knn DATASET            cross-validated kNN, optionally with weight tuning
    python cli.py inspect-tree DATASET   dump one neighbourhood tree
    python cli.py sweep DATASET          component relevance sweep

Exit codes: 0 success, 1 data error, 2 usage error.
"""
import logging
from pathlib import Path
from typing import Any, Dict, Optional

import click
from pydantic import BaseModel, Field

from clustering import LINKAGES, agglomerative, spectral
from core.config import get_settings, setup_logging
from core.errors import IdMismatch, MissingLabels, RelsimError
from data_ingest import (
    parse_dataset,
    parse_labels,
    parse_matrix,
    write_assignment,
    write_matrix,
    write_report,
)
from dissimilarity import compute_components, pairwise_matrix
from evaluation import (
    DEFAULT_FOLDS,
    DEFAULT_GRID_STEP,
    DEFAULT_K,
    ari,
    check_knn_params,
    component_sweep,
    cross_validate,
    default_grid,
    tune_weights,
)
from models import COMPONENTS, DEFAULT_WEIGHTS, DissimilarityConfig, EvaluationReport, SpectralParams
from neighbourhood_tree import ExpansionRule, build_tree, format_tree

logger = logging.getLogger(__name__)

RULES = [rule.value for rule in ExpansionRule]


class RunConfig(BaseModel):
    """Validated flags of one invocation; recorded in reports."""
    subcommand: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    dissimilarity: Optional[DissimilarityConfig] = None
    options: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    workers: int = 1


class RelsimGroup(click.Group):
    """Maps domain errors to their exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except RelsimError as e:
            logger.debug("Command failed", exc_info=True)
            click.echo(f"error: {e}", err=True)
            ctx.exit(e.exit_code)


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, path: Optional[str]):
    if path is None:
        click.echo(text, nl=False)
    else:
        Path(path).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")


def _workers(workers: Optional[int]) -> int:
    workers = workers if workers is not None else get_settings().workers
    if workers < 1:
        raise click.BadParameter(f"must be >= 1, got {workers}", param_hint="--workers")
    return workers


def _seed(seed: Optional[int]) -> int:
    return seed if seed is not None else get_settings().seed


def _dissimilarity_config(weights, depth: int) -> DissimilarityConfig:
    return DissimilarityConfig(weights=tuple(weights), depth=depth)


def _report_config(run: RunConfig) -> Dict[str, Any]:
    return run.model_dump(mode="json", exclude_none=True)


# ===============================
# Group
# ===============================
@click.group(cls=RelsimGroup)
@click.option("--log-level", default=None, help="Logging level (default: RELSIM_LOG_LEVEL or INFO).")
@click.option("--progress/--no-progress", default=False, help="Show a progress bar for pair loops.")
@click.pass_context
def cli(ctx, log_level, progress):
    """Relational neighbourhood-tree similarity."""
    setup_logging(log_level)
    ctx.obj = {"progress": progress}


weights_option = click.option(
    "--weights", nargs=5, type=float, default=DEFAULT_WEIGHTS, show_default=True,
    help="Weights of ad nad cd nd ed; must sum to 1.",
)
depth_option = click.option("--depth", default=1, show_default=True, type=int, help="Neighbourhood tree depth.")
workers_option = click.option(
    "--workers", type=int, default=None, envvar="RELSIM_WORKERS", show_envvar=True,
    help="Worker processes for the pair loop.",
)
seed_option = click.option("--seed", type=int, default=None, help="Random seed (default: RELSIM_SEED or 0).")
rule_option = click.option(
    "--rule", type=click.Choice(RULES), default=ExpansionRule.SET_FRONTIER.value, show_default=True,
    help="How repeated vertices of a level are expanded.",
)


# ===============================
# distances
# ===============================
@cli.command("distances")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@depth_option
@weights_option
@rule_option
@click.option("--emit-components", is_flag=True, help="Also write <stem>.<component>.csv next to the output.")
@workers_option
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="Matrix file (default: stdout).")
@click.pass_context
def cmd_distances(ctx, dataset, depth, weights, rule, emit_components, workers, output):
    """Compute the pairwise distance matrix of the target vertices."""
    cfg = _dissimilarity_config(weights, depth)
    workers = _workers(workers)
    if emit_components and output is None:
        raise click.UsageError("--emit-components needs --output")

    data = parse_dataset(_read(dataset))
    matrix, components = pairwise_matrix(data, cfg, workers=workers, rule=ExpansionRule(rule),
                                         progress=ctx.obj["progress"])
    _emit(write_matrix(matrix), output)

    if emit_components:
        stem = Path(output).with_suffix("")
        for name in COMPONENTS:
            _emit(write_matrix(components.matrix(name), header=components.ids), f"{stem}.{name}.csv")


# ===============================
# cluster
# ===============================
@cli.command("cluster")
@click.argument("matrix", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k", type=int, required=True, help="Number of clusters.")
@click.option("--method", type=click.Choice(["agglomerative", "spectral"]), default="agglomerative", show_default=True)
@click.option("--linkage", type=click.Choice(LINKAGES), default="average", show_default=True)
@click.option("--affinity", type=click.Choice(["one_minus", "gaussian"]), default="one_minus", show_default=True)
@click.option("--sigma", type=float, default=None, help="Bandwidth of the gaussian affinity.")
@click.option("--restarts", type=int, default=10, show_default=True, help="k-means restarts.")
@seed_option
@click.option("--labels", "labels_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File with `label <id> <class>` lines.")
@click.option("--ari", "want_ari", is_flag=True, help="Require an ARI score (needs --labels).")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None, help="Assignment file (default: stdout).")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="JSON report file.")
def cmd_cluster(matrix, k, method, linkage, affinity, sigma, restarts, seed, labels_path, want_ari, output, report_path):
    """Cluster the targets of a distance matrix file."""
    if want_ari and labels_path is None:
        raise click.UsageError("--ari needs --labels")
    seed = _seed(seed)
    params = SpectralParams(affinity=affinity, sigma=sigma, kmeans_restarts=restarts, seed=seed)
    run = RunConfig(
        subcommand="cluster",
        inputs={"matrix": matrix, **({"labels": labels_path} if labels_path else {})},
        outputs={name: path for name, path in (("assignment", output), ("report", report_path)) if path},
        options={"k": k, "method": method, "linkage": linkage, "affinity": affinity, "sigma": sigma,
                 "restarts": restarts},
        seed=seed,
    )

    distances, _ = parse_matrix(_read(matrix))
    if method == "spectral":
        assignment = spectral(distances, k, params)
    else:
        assignment = agglomerative(distances, k, linkage)
    _emit(write_assignment(assignment), output)

    if labels_path is None:
        return
    labels = parse_labels(_read(labels_path))
    unknown = sorted(set(labels) - set(assignment.ids))
    if unknown:
        raise IdMismatch(f"labels reference ids missing from the matrix: {unknown[:5]}")
    found = assignment.as_dict()
    score = ari({vid: found[vid] for vid in labels}, labels)
    logger.info(f"ARI against {len(labels)} labels: {score:.4f}")

    report = EvaluationReport(task="clustering", metric="ari", fold_values=[], value=score,
                              config=_report_config(run), details={"labeled": len(labels)})
    if report_path is not None:
        _emit(write_report(report), report_path)
    else:
        click.echo(write_report(report), err=True, nl=False)


# ===============================
# knn
# ===============================
@cli.command("knn")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k", type=int, default=DEFAULT_K, show_default=True, help="Neighbours per vote.")
@click.option("--folds", type=int, default=DEFAULT_FOLDS, show_default=True)
@click.option("--tune/--no-tune", default=True, show_default=True, help="Tune weights by inner cross-validation.")
@click.option("--grid-step", type=float, default=DEFAULT_GRID_STEP, show_default=True)
@depth_option
@weights_option
@seed_option
@workers_option
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="JSON report (default: stdout).")
@click.pass_context
def cmd_knn(ctx, dataset, k, folds, tune, grid_step, depth, weights, seed, workers, report_path):
    """Cross-validated kNN classification of the labeled targets."""
    check_knn_params(k, folds)
    cfg = _dissimilarity_config(weights, depth)
    grid = default_grid(grid_step) if tune else None
    workers, seed = _workers(workers), _seed(seed)
    run = RunConfig(subcommand="knn", inputs={"dataset": dataset}, dissimilarity=cfg,
                    options={"k": k, "folds": folds, "tune": tune, "grid_step": grid_step},
                    seed=seed, workers=workers)

    data = parse_dataset(_read(dataset))
    components = compute_components(data, cfg, workers=workers, progress=ctx.obj["progress"])
    if tune:
        _, report = tune_weights(data, grid, folds=folds, k=k, seed=seed, cfg=cfg, workers=workers,
                                 components=components)
    else:
        report = cross_validate(data, cfg, folds=folds, k=k, seed=seed, components=components)
    report.config = {**_report_config(run), **report.config}
    _emit(write_report(report), report_path)


# ===============================
# inspect-tree
# ===============================
@cli.command("inspect-tree")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--vertex", required=True, help="Root vertex id.")
@depth_option
@rule_option
def cmd_inspect_tree(dataset, vertex, depth, rule):
    """Print the per-level multisets of one neighbourhood tree."""
    data = parse_dataset(_read(dataset))
    if vertex not in data.hypergraph.vertices:
        raise click.BadParameter(f"unknown vertex '{vertex}'", param_hint="--vertex")
    tree = build_tree(data.hypergraph, vertex, depth, ExpansionRule(rule))
    click.echo(format_tree(tree), nl=False)


# ===============================
# sweep
# ===============================
@cli.command("sweep")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k", type=int, default=None, help="Clusters (default: number of label classes).")
@click.option("--depth", "depths", type=int, multiple=True, default=(1,), show_default=True,
              help="Tree depth; repeat for several.")
@click.option("--method", "methods", type=click.Choice(["agglomerative", "spectral"]), multiple=True,
              default=("agglomerative", "spectral"), show_default=True)
@click.option("--linkage", type=click.Choice(LINKAGES), default="average", show_default=True)
@seed_option
@workers_option
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None, help="JSON report (default: stdout).")
@click.pass_context
def cmd_sweep(ctx, dataset, k, depths, methods, linkage, seed, workers, report_path):
    """ARI of each single-component weighting, per depth and clusterer."""
    configs = {depth: DissimilarityConfig(depth=depth) for depth in sorted(set(depths))}
    workers, seed = _workers(workers), _seed(seed)
    data = parse_dataset(_read(dataset))
    if not data.labels:
        raise MissingLabels("sweep needs labeled targets")
    k = k if k is not None else len(set(data.labels.values()))

    components = {
        depth: compute_components(data, cfg, workers=workers, progress=ctx.obj["progress"])
        for depth, cfg in configs.items()
    }
    report = component_sweep(components, data.labels, k, methods=methods, linkage=linkage,
                             spectral_params=SpectralParams(seed=seed))
    run = RunConfig(subcommand="sweep", inputs={"dataset": dataset},
                    options={"k": k, "depths": sorted(configs), "methods": list(methods), "linkage": linkage},
                    seed=seed, workers=workers)
    report.config = {**_report_config(run), **report.config}
    _emit(write_report(report), report_path)


def main():
    cli()


if __name__ == "__main__":
    main()
