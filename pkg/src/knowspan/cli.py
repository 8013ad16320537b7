"""Command-line orchestrator: corpus → embedding → metrics → models → curves.

Each subcommand reads prior-stage artifacts from a shared output directory and
writes its own, so stages can be run one at a time or all at once via
``pipeline``.  Every run updates ``manifest.json`` with config hashes and
content digests of inputs and outputs; reruns with the same seed and inputs
are byte-identical.  Failures print one structured JSON line to stderr and
exit nonzero.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import importlib.metadata
import json
import math
import os
import sys
from dataclasses import dataclass, field

import click
import numpy as np
import scipy
from click.core import ParameterSource

from . import __version__
from .corpus import (
    CitationGraph,
    Corpus,
    CorpusError,
    InvalidCodeError,
    ParseConfig,
    build_citation_graph,
    citation_count,
    log_citation_count,
    parse_corpus,
    team_size,
)
from .disruption import VARIANTS, score_corpus
from .embedding import (
    EmbeddingMatrix,
    TrainingConfig,
    build_training_pairs,
    cosine_distance,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .geometry import article_distance, paper_vector
from .stats import (
    AnalysisTable,
    RankDeficiencyError,
    RegressionSpec,
    fit_model,
    pearson_matrix,
    predicted_curve,
)
from .synthgen import PlantedEffect, SynthConfig, write_corpus
from .tree import build_tree, export_edges, network_distance

# Artifact names are fixed so stages can find each other's outputs.
CORPUS_RAW = "corpus.jsonl"
CORPUS_PARSED = "corpus.parsed.jsonl"
PARSE_REPORT = "parse_report.json"
EMBEDDING = "embedding.txt"
LOSS_LOG = "loss_log.csv"
TREE_EDGES = "tree_edges.csv"
METRICS_SPACE = "metrics_space.csv"
DISRUPTION = "disruption.csv"
METRICS = "metrics.csv"
CORRELATIONS = "correlations.csv"
MANIFEST = "manifest.json"

METRIC_COLUMNS = (
    "paper_id",
    "journal_distance",
    "article_distance",
    "article_distance_log",
    "network_distance",
    "team_size",
    "citation_count",
    "log_citations",
    "d_score",
    "d_percentile",
    "d_n_i",
    "d_n_j",
    "d_n_k",
    "years",
    "n_pages",
    "title_length",
)

SPACE_COLUMNS = tuple(
    c for c in METRIC_COLUMNS if not c.startswith("d_")
)
DISRUPTION_COLUMNS = ("paper_id", "d_score", "d_percentile", "d_n_i", "d_n_j", "d_n_k")

CONTROLS = ("n_pages", "years", "title_length")
MODERATOR = "team_size"

DEFAULT_MODELS: dict[str, RegressionSpec] = {}
for _name, _outcome, _predictors in (
    ("model1", "log_citations", ("network_distance",)),
    ("model2", "log_citations", ("article_distance_log",)),
    ("model3", "log_citations", ("journal_distance",)),
    ("model4", "log_citations", ("network_distance", "article_distance_log", "journal_distance")),
    ("model5", "d_percentile", ("network_distance",)),
    ("model6", "d_percentile", ("article_distance_log",)),
    ("model7", "d_percentile", ("journal_distance",)),
    ("model8", "d_percentile", ("network_distance", "article_distance_log", "journal_distance")),
):
    DEFAULT_MODELS[_name] = RegressionSpec(
        outcome=_outcome, predictors=_predictors, controls=CONTROLS, moderator=MODERATOR
    )

DEFAULT_CORRELATION_COLUMNS = (
    "journal_distance",
    "article_distance",
    "article_distance_log",
    "network_distance",
    "team_size",
    "citation_count",
    "log_citations",
    "d_score",
    "d_percentile",
    "years",
    "n_pages",
    "title_length",
)


# ---------------------------------------------------------------------------
# failure reporting


class StageFailure(SystemExit):
    """Raised after the structured error line has been written."""


def _fail(kind: str, message: str, **fields) -> None:
    payload = {"error": kind, "message": message}
    payload.update(fields)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    raise StageFailure(1)


def _structured_errors(fn):
    """Convert library errors at the command boundary into JSON lines."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StageFailure:
            raise
        except (CorpusError, InvalidCodeError) as exc:
            _fail("corpus_error", str(exc))
        except RankDeficiencyError as exc:
            _fail("rank_deficient", str(exc))
        except (ValueError, KeyError) as exc:
            _fail("stage_failed", str(exc))
        except OSError as exc:
            _fail("io_error", str(exc))

    return wrapper


def _require(outdir: str, filename: str, producer: str | tuple[str, ...]) -> str:
    """Path of a prior-stage artifact, or a structured missing-file error."""
    path = os.path.join(outdir, filename)
    if not os.path.exists(path):
        producers = (producer,) if isinstance(producer, str) else producer
        phrase = " and ".join(f"'{p}'" for p in producers)
        plural = "subcommands" if len(producers) > 1 else "subcommand"
        _fail(
            "missing_artifact",
            f"required file '{filename}' is missing; run the {phrase} "
            f"{plural} to produce it",
            path=filename,
            producer=",".join(producers),
        )
    return path


# ---------------------------------------------------------------------------
# manifest


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _update_manifest(
    outdir: str,
    stage: str,
    config: dict,
    inputs: dict[str, str],
    outputs: dict[str, str],
    seed: int | None = None,
    **extra,
) -> None:
    """Replace one stage entry; digests keyed by artifact basename only."""
    path = os.path.join(outdir, MANIFEST)
    manifest = {"tool": "knowspan", "stages": {}}
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    manifest["versions"] = {
        "knowspan": __version__,
        "python": "%d.%d.%d" % sys.version_info[:3],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "click": importlib.metadata.version("click"),
    }
    entry = {
        "config": config,
        "config_hash": _config_hash(config),
        "inputs": {os.path.basename(k): _digest(v) for k, v in inputs.items()},
        "outputs": {os.path.basename(k): _digest(v) for k, v in outputs.items()},
    }
    if seed is not None:
        entry["seed"] = seed
    entry.update(extra)
    manifest.setdefault("stages", {})[stage] = entry
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# config file and option resolution


def _read_config(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; '#' starts a comment; blanks ignored."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                _fail(
                    "bad_config",
                    f"{path}:{lineno}: expected 'key = value', got {line!r}",
                )
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _as_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    _fail("bad_config", f"expected a boolean, got {raw!r}")
    raise AssertionError  # unreachable


def _as_list(raw: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in raw.split(",") if part.strip())


class Options:
    """Flag > config file > declared default, per option name."""

    def __init__(self, ctx: click.Context, config: dict[str, str]):
        self.ctx = ctx
        self.config = config

    def get(self, name: str, cast=str):
        if self.ctx.get_parameter_source(name) == ParameterSource.COMMANDLINE:
            return self.ctx.params[name]
        if name in self.config:
            raw = self.config[name]
            if cast is bool:
                return _as_bool(raw)
            return cast(raw)
        return self.ctx.params[name]


def _model_specs(config: dict[str, str]) -> dict[str, RegressionSpec]:
    """Built-in model presets, overridable per field from the config file."""
    specs = dict(DEFAULT_MODELS)
    for name, base in DEFAULT_MODELS.items():
        outcome = config.get(f"{name}.outcome", base.outcome)
        predictors = config.get(f"{name}.predictors")
        controls = config.get(f"{name}.controls")
        moderator = config.get(f"{name}.moderator", base.moderator)
        if moderator in ("none", ""):
            moderator = None
        specs[name] = RegressionSpec(
            outcome=outcome,
            predictors=_as_list(predictors) if predictors else base.predictors,
            controls=_as_list(controls) if controls is not None else base.controls,
            moderator=moderator,
            centering=base.centering,
        )
    return specs


@dataclass
class PipelineConfig:
    """Everything the full run needs; one stage consumes one slice of it."""

    input_path: str | None
    outdir: str
    training: TrainingConfig
    parse: ParseConfig
    models: dict[str, RegressionSpec] = field(default_factory=lambda: dict(DEFAULT_MODELS))
    seed: int = 0
    exclude_self: bool = False
    d_variant: str = "disjoint"
    center: str = "none"
    loss_log: bool = False
    export_tree: bool = False
    curve_points: int = 41


# ---------------------------------------------------------------------------
# CSV helpers


def _cell(value) -> str:
    """Empty string for undefined values — never a stand-in zero."""
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path: str, header: tuple[str, ...], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _load_metrics_table(path: str) -> tuple[list[str], AnalysisTable]:
    """(paper ids, numeric table) from the merged metrics CSV; blanks → NaN."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if header[0] != "paper_id":
        _fail("bad_artifact", f"{path} does not look like a metrics table")
    ids = [row[0] for row in rows]
    columns = {}
    for j, name in enumerate(header[1:], start=1):
        columns[name] = np.array(
            [float(row[j]) if row[j] != "" else math.nan for row in rows]
        )
    return ids, AnalysisTable(columns)


def _read_corpus(path: str, parse: ParseConfig | None = None) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        corpus, _ = parse_corpus(fh, parse)
    return corpus


# ---------------------------------------------------------------------------
# stage bodies (plain functions so `pipeline` can chain them)


def _stage_synth(outdir: str, config: SynthConfig) -> str:
    out_path = os.path.join(outdir, CORPUS_RAW)
    write_corpus(config, out_path)
    planted = config.planted_effect
    _update_manifest(
        outdir,
        "synth",
        config={
            "n_papers": config.n_papers,
            "n_codes": config.n_codes,
            "n_blocks": config.n_blocks,
            "codes_per_paper": config.codes_per_paper,
            "n_journals": config.n_journals,
            "year_range": list(config.year_range),
            "citation_density": config.citation_density,
            "cross_block_leakage": config.cross_block_leakage,
            "planted": None
            if planted is None
            else {
                "quadratic_sign": planted.quadratic_sign,
                "moderator_sign": planted.moderator_sign,
                "quadratic_strength": planted.quadratic_strength,
                "moderator_strength": planted.moderator_strength,
            },
        },
        inputs={},
        outputs={CORPUS_RAW: out_path},
        seed=config.seed,
    )
    return out_path


def _stage_ingest(outdir: str, input_path: str, parse: ParseConfig) -> None:
    parsed_path = os.path.join(outdir, CORPUS_PARSED)
    report_path = os.path.join(outdir, PARSE_REPORT)
    with open(input_path, encoding="utf-8") as fh:
        corpus, report = parse_corpus(fh, parse)
    with open(parsed_path, "w", encoding="utf-8", newline="\n") as fh:
        for paper in corpus:
            fh.write(
                json.dumps(paper.to_record(), sort_keys=True, separators=(",", ":"))
            )
            fh.write("\n")
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    _update_manifest(
        outdir,
        "ingest",
        config={
            "input": os.path.basename(input_path),
            "min_year": parse.min_year,
            "max_year": parse.max_year,
            "dataset_end_year": parse.dataset_end_year,
            "pad_short_codes": parse.pad_short_codes,
        },
        inputs={CORPUS_RAW: input_path},
        outputs={CORPUS_PARSED: parsed_path, PARSE_REPORT: report_path},
        n_parsed=report.n_parsed,
        n_skipped=report.n_skipped,
        end_year=corpus.dataset_end_year,
    )


def _stage_train(outdir: str, config: TrainingConfig, loss_log: bool) -> None:
    parsed_path = _require(outdir, CORPUS_PARSED, "ingest")
    corpus = _read_corpus(parsed_path)
    matrix = train_embeddings(build_training_pairs(corpus), config)
    embedding_path = os.path.join(outdir, EMBEDDING)
    save_embeddings(matrix, embedding_path)
    outputs = {EMBEDDING: embedding_path}
    if loss_log:
        loss_path = os.path.join(outdir, LOSS_LOG)
        _write_csv(
            loss_path,
            ("epoch", "mean_loss"),
            [(e + 1, loss) for e, loss in enumerate(matrix.loss_by_epoch)],
        )
        outputs[LOSS_LOG] = loss_path
    _update_manifest(
        outdir,
        "train",
        config={
            "dim": config.dim,
            "negatives_per_positive": config.negatives_per_positive,
            "epochs": config.epochs,
            "initial_learning_rate": config.initial_learning_rate,
            "final_learning_rate": config.final_learning_rate,
            "noise_exponent": config.noise_exponent,
            "deterministic": config.deterministic,
            "loss_log": loss_log,
        },
        inputs={CORPUS_PARSED: parsed_path},
        outputs=outputs,
        seed=config.seed,
        vocabulary=len(matrix.vocabulary),
    )


def _space_rows(
    corpus: Corpus, graph: CitationGraph, emb: EmbeddingMatrix, exclude_self: bool
) -> tuple[list[tuple], int]:
    """Per-paper metric rows; embedding-derived cells are empty when a code
    is missing from the trained vocabulary or a journal-year cell has no
    usable reference point."""
    tree = build_tree(corpus.distinct_codes())
    vectors: dict[str, np.ndarray | None] = {}
    for pid, paper in corpus.papers.items():
        if all(code in emb for code in paper.pacs_codes):
            vectors[pid] = paper_vector(paper, emb).vector
        else:
            vectors[pid] = None
    cells: dict[tuple[str, int], tuple[np.ndarray, int] | None] = {}
    for key, member_ids in corpus.journal_year_index.items():
        stacked = [vectors[pid] for pid in member_ids if vectors[pid] is not None]
        cells[key] = (np.mean(stacked, axis=0), len(stacked)) if stacked else None

    rows = []
    n_missing = 0
    for pid, paper in corpus.papers.items():
        vec = vectors[pid]
        journal_dist = None
        article_dist = None
        article_dist_log = None
        if vec is None:
            n_missing += 1
        else:
            article_dist = article_distance(paper, emb)
            article_dist_log = float(np.log1p(article_dist))
            cell = cells[(paper.journal, paper.year)]
            if cell is not None:
                mean_vec, n_members = cell
                if exclude_self:
                    if n_members >= 2:
                        reference = (mean_vec * n_members - vec) / (n_members - 1)
                        journal_dist = cosine_distance(vec, reference)
                else:
                    journal_dist = cosine_distance(vec, mean_vec)
        rows.append(
            (
                pid,
                journal_dist,
                article_dist,
                article_dist_log,
                network_distance(paper, tree),
                team_size(paper),
                citation_count(paper, graph),
                log_citation_count(paper, graph),
                corpus.paper_age(paper),
                paper.n_pages,
                paper.title_length,
            )
        )
    return rows, n_missing


def _merge_metrics(outdir: str) -> None:
    """Join the space and disruption tables on paper_id into metrics.csv.

    Runs whenever both inputs exist, from whichever stage finished second,
    so the merged artifact never mixes generations.
    """
    space_path = os.path.join(outdir, METRICS_SPACE)
    disruption_path = os.path.join(outdir, DISRUPTION)
    if not (os.path.exists(space_path) and os.path.exists(disruption_path)):
        return
    with open(disruption_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        disruption_by_id = {row[0]: row[1:] for row in reader}
    merged_path = os.path.join(outdir, METRICS)
    empty = [""] * (len(DISRUPTION_COLUMNS) - 1)
    with open(space_path, encoding="utf-8", newline="") as src, open(
        merged_path, "w", encoding="utf-8", newline=""
    ) as dst:
        reader = csv.reader(src)
        writer = csv.writer(dst, lineterminator="\n")
        next(reader)
        writer.writerow(METRIC_COLUMNS)
        for row in reader:
            head, tail = row[:8], row[8:]
            writer.writerow(head + disruption_by_id.get(row[0], empty) + tail)
    _update_manifest(
        outdir,
        "merge",
        config={"columns": list(METRIC_COLUMNS)},
        inputs={METRICS_SPACE: space_path, DISRUPTION: disruption_path},
        outputs={METRICS: merged_path},
    )


def _stage_metrics(outdir: str, exclude_self: bool, export_tree: bool) -> None:
    parsed_path = _require(outdir, CORPUS_PARSED, "ingest")
    embedding_path = _require(outdir, EMBEDDING, "train")
    corpus = _read_corpus(parsed_path)
    graph = build_citation_graph(corpus)
    emb = load_embeddings(embedding_path)
    rows, n_missing = _space_rows(corpus, graph, emb, exclude_self)
    space_path = os.path.join(outdir, METRICS_SPACE)
    _write_csv(space_path, SPACE_COLUMNS, rows)
    outputs = {METRICS_SPACE: space_path}
    if export_tree:
        tree_path = os.path.join(outdir, TREE_EDGES)
        export_edges(build_tree(corpus.distinct_codes()), tree_path)
        outputs[TREE_EDGES] = tree_path
    _update_manifest(
        outdir,
        "metrics",
        config={"exclude_self": exclude_self, "export_tree": export_tree},
        inputs={CORPUS_PARSED: parsed_path, EMBEDDING: embedding_path},
        outputs=outputs,
        n_papers=len(corpus.papers),
        n_missing_vocabulary=n_missing,
    )
    _merge_metrics(outdir)


def _stage_disrupt(outdir: str, variant: str) -> None:
    parsed_path = _require(outdir, CORPUS_PARSED, "ingest")
    corpus = _read_corpus(parsed_path)
    graph = build_citation_graph(corpus)
    scored = score_corpus(corpus, graph, variant)
    rows = []
    n_defined = 0
    for pid in corpus.papers:
        counts, score = scored[pid]
        n_defined += score.d is not None
        rows.append((pid, score.d, score.percentile, counts.n_i, counts.n_j, counts.n_k))
    disruption_path = os.path.join(outdir, DISRUPTION)
    _write_csv(disruption_path, DISRUPTION_COLUMNS, rows)
    _update_manifest(
        outdir,
        "disrupt",
        config={"d_variant": variant},
        inputs={CORPUS_PARSED: parsed_path},
        outputs={DISRUPTION: disruption_path},
        n_defined=n_defined,
        n_undefined=len(rows) - n_defined,
    )
    _merge_metrics(outdir)


MERGED_PRODUCER = ("metrics", "disrupt")  # both stages feed the merged table


def _stage_correlate(outdir: str, columns: tuple[str, ...]) -> None:
    metrics_path = _require(outdir, METRICS, MERGED_PRODUCER)
    _, table = _load_metrics_table(metrics_path)
    matrix = pearson_matrix(table, columns)
    correlations_path = os.path.join(outdir, CORRELATIONS)
    with open(correlations_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("",) + tuple(matrix.columns))
        # r above the diagonal, p below, unity on it
        for i, name in enumerate(matrix.columns):
            row = [name]
            for j in range(len(matrix.columns)):
                if j > i:
                    row.append(repr(float(matrix.r[i, j])))
                elif j < i:
                    row.append(repr(float(matrix.p[i, j])))
                else:
                    row.append("1.0")
            writer.writerow(row)
    _update_manifest(
        outdir,
        "correlate",
        config={"columns": list(columns)},
        inputs={METRICS: metrics_path},
        outputs={CORRELATIONS: correlations_path},
        df=matrix.df,
        n_complete=matrix.df + 2,
    )


def _fit_named_model(
    name: str, spec: RegressionSpec, table: AnalysisTable, center: str
):
    missing = [c for c in spec.base_columns() if c not in table.columns]
    if missing:
        _fail(
            "unknown_column",
            f"{name} references columns absent from the metrics table: "
            + ", ".join(sorted(missing)),
        )
    if center != spec.centering:
        spec = RegressionSpec(
            outcome=spec.outcome,
            predictors=spec.predictors,
            controls=spec.controls,
            moderator=spec.moderator,
            centering=center,
        )
    return fit_model(spec, table)


def _stage_regress(
    outdir: str, models: dict[str, RegressionSpec], names: tuple[str, ...], center: str
) -> None:
    metrics_path = _require(outdir, METRICS, MERGED_PRODUCER)
    _, table = _load_metrics_table(metrics_path)
    outputs = {}
    summaries = {}
    for name in names:
        result = _fit_named_model(name, models[name], table, center)
        out_path = os.path.join(outdir, f"regression_{name}.csv")
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("term", "coefficient", "std_error", "t", "p", "stars"))
            for term in result.terms:
                writer.writerow(
                    (
                        term.name,
                        repr(term.coefficient),
                        repr(term.std_error),
                        repr(term.t),
                        repr(term.p),
                        term.stars,
                    )
                )
            writer.writerow(("adjusted_r2", repr(result.adjusted_r2), "", "", "", ""))
            writer.writerow(("n", str(result.n), "", "", "", ""))
        outputs[f"regression_{name}.csv"] = out_path
        summaries[name] = {
            "n": result.n,
            "adjusted_r2": result.adjusted_r2,
            "terms": len(result.terms),
        }
    _update_manifest(
        outdir,
        "regress",
        config={"models": list(names), "center": center},
        inputs={METRICS: metrics_path},
        outputs=outputs,
        fits=summaries,
    )


def _moderator_levels(spec: RegressionSpec, table: AnalysisTable) -> list[float]:
    """Mean and mean ± 1 SD of the moderator over the listwise sample."""
    sample = table.listwise(spec.base_columns())
    assert spec.moderator is not None
    values = sample.column(spec.moderator)
    mean, sd = float(values.mean()), float(values.std(ddof=1))
    return [mean - sd, mean, mean + sd]


def _stage_curves(
    outdir: str,
    models: dict[str, RegressionSpec],
    names: tuple[str, ...],
    center: str,
    points: int,
    levels: tuple[float, ...] | None,
) -> None:
    metrics_path = _require(outdir, METRICS, MERGED_PRODUCER)
    _, table = _load_metrics_table(metrics_path)
    outputs = {}
    for name in names:
        spec = models[name]
        result = _fit_named_model(name, spec, table, center)
        model_levels: list[float] | None
        if spec.moderator is None:
            model_levels = None
        else:
            model_levels = list(levels) if levels else _moderator_levels(spec, table)
        rows = []
        for predictor in spec.predictors:
            low, high = result.design.base_ranges[predictor]
            grid = np.linspace(low, high, points)
            for point in predicted_curve(
                result, predictor, grid, moderator_levels=model_levels
            ):
                rows.append(
                    (
                        point.predictor,
                        point.value,
                        point.moderator_level,
                        point.prediction,
                        point.extrapolated,
                    )
                )
        out_path = os.path.join(outdir, f"curves_{name}.csv")
        _write_csv(
            out_path,
            ("predictor", "predictor_value", "moderator_level", "prediction", "extrapolated"),
            rows,
        )
        outputs[f"curves_{name}.csv"] = out_path
    _update_manifest(
        outdir,
        "curves",
        config={
            "models": list(names),
            "center": center,
            "points": points,
            "levels": list(levels) if levels else "mean±sd",
        },
        inputs={METRICS: metrics_path},
        outputs=outputs,
    )


# ---------------------------------------------------------------------------
# click wiring


def _outdir_option(fn):
    return click.option(
        "--outdir",
        default=".",
        show_default=True,
        type=click.Path(file_okay=False),
        help="Directory holding all stage artifacts.",
    )(fn)


def _config_option(fn):
    return click.option(
        "--config",
        "config_path",
        default=None,
        type=click.Path(exists=True, dir_okay=False),
        help="Plain key = value config file; flags given explicitly win.",
    )(fn)


def _prepare(ctx, outdir: str, config_path: str | None) -> Options:
    os.makedirs(outdir, exist_ok=True)
    config = _read_config(config_path) if config_path else {}
    return Options(ctx, config)


def _parse_config_from(opts: Options) -> ParseConfig:
    end_year = opts.get("end_year", int)
    return ParseConfig(
        min_year=opts.get("min_year", int),
        max_year=opts.get("max_year", int),
        dataset_end_year=end_year if end_year else None,
        pad_short_codes=opts.get("pad_short_codes", bool),
    )


def _training_config_from(opts: Options) -> TrainingConfig:
    return TrainingConfig(
        dim=opts.get("dim", int),
        negatives_per_positive=opts.get("negatives", int),
        epochs=opts.get("epochs", int),
        initial_learning_rate=opts.get("initial_lr", float),
        final_learning_rate=opts.get("final_lr", float),
        seed=opts.get("seed", int),
        deterministic=not opts.get("non_deterministic", bool),
    )


def _synth_config_from(opts: Options) -> SynthConfig:
    planted_shape = opts.get("planted")
    moderation = opts.get("planted_moderator")
    if planted_shape == "none":
        effect = None
    else:
        effect = PlantedEffect(
            quadratic_sign=-1 if planted_shape == "inverted-u" else 1,
            moderator_sign={"none": 0, "amplify": 1, "dampen": -1}[moderation],
        )
    return SynthConfig(
        seed=opts.get("seed", int),
        n_papers=opts.get("papers", int),
        n_codes=opts.get("codes", int),
        n_blocks=opts.get("blocks", int),
        codes_per_paper=opts.get("codes_per_paper", int),
        n_journals=opts.get("journals", int),
        citation_density=opts.get("density", float),
        cross_block_leakage=opts.get("leakage", float),
        planted_effect=effect,
    )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(version=__version__, prog_name="knowspan")
def main() -> None:
    """Category-embedding analytics for citation corpora.

    Stages share one output directory: synth/ingest prepare the corpus,
    train fits code vectors, metrics and disrupt emit the per-paper table,
    correlate/regress/curves fit and export the statistical models.
    """


@main.command()
@_outdir_option
@_config_option
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--papers", default=5000, show_default=True, type=int)
@click.option("--codes", default=60, show_default=True, type=int)
@click.option("--blocks", default=6, show_default=True, type=int)
@click.option("--codes-per-paper", default=5, show_default=True, type=int)
@click.option("--journals", default=8, show_default=True, type=int)
@click.option("--density", default=12.0, show_default=True, type=float)
@click.option("--leakage", default=0.15, show_default=True, type=float)
@click.option(
    "--planted",
    type=click.Choice(["none", "inverted-u", "u"]),
    default="none",
    show_default=True,
    help="Optionally bias citations by a quadratic in block spread.",
)
@click.option(
    "--planted-moderator",
    type=click.Choice(["none", "amplify", "dampen"]),
    default="none",
    show_default=True,
)
@click.pass_context
@_structured_errors
def synth(ctx, outdir, config_path, **_):
    """Generate a seeded synthetic corpus as corpus.jsonl."""
    opts = _prepare(ctx, outdir, config_path)
    _stage_synth(outdir, _synth_config_from(opts))


@main.command()
@_outdir_option
@_config_option
@click.option(
    "--input",
    "input_path",
    default=None,
    type=click.Path(dir_okay=False),
    help="Corpus JSONL to ingest [default: <outdir>/corpus.jsonl].",
)
@click.option("--min-year", default=1800, show_default=True, type=int)
@click.option("--max-year", default=2100, show_default=True, type=int)
@click.option("--end-year", default=0, type=int, help="Dataset end year [default: max observed].")
@click.option("--pad-short-codes", is_flag=True, default=False)
@click.pass_context
@_structured_errors
def ingest(ctx, outdir, config_path, input_path, **_):
    """Validate and normalize a corpus into corpus.parsed.jsonl."""
    opts = _prepare(ctx, outdir, config_path)
    if input_path is None:
        input_path = _require(outdir, CORPUS_RAW, "synth")
    elif not os.path.exists(input_path):
        _fail("missing_input", f"input file {input_path!r} does not exist")
    _stage_ingest(outdir, input_path, _parse_config_from(opts))


@main.command()
@_outdir_option
@_config_option
@click.option("--dim", default=50, show_default=True, type=int)
@click.option("--negatives", default=5, show_default=True, type=int)
@click.option("--epochs", default=5, show_default=True, type=int)
@click.option("--initial-lr", default=0.025, show_default=True, type=float)
@click.option("--final-lr", default=1e-4, show_default=True, type=float)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--non-deterministic", is_flag=True, default=False)
@click.option("--loss-log", is_flag=True, default=False, help="Also write loss_log.csv.")
@click.pass_context
@_structured_errors
def train(ctx, outdir, config_path, **_):
    """Fit code vectors on co-assignment pairs; writes embedding.txt."""
    opts = _prepare(ctx, outdir, config_path)
    _stage_train(outdir, _training_config_from(opts), opts.get("loss_log", bool))


@main.command()
@_outdir_option
@_config_option
@click.option("--exclude-self", is_flag=True, default=False, help="Drop the focal paper from its journal-year mean.")
@click.option("--export-tree", is_flag=True, default=False, help="Also write tree_edges.csv.")
@click.pass_context
@_structured_errors
def metrics(ctx, outdir, config_path, **_):
    """Per-paper distances and covariates; writes metrics_space.csv."""
    opts = _prepare(ctx, outdir, config_path)
    _stage_metrics(
        outdir, opts.get("exclude_self", bool), opts.get("export_tree", bool)
    )


@main.command()
@_outdir_option
@_config_option
@click.option(
    "--d-variant",
    type=click.Choice(list(VARIANTS)),
    default="disjoint",
    show_default=True,
)
@click.pass_context
@_structured_errors
def disrupt(ctx, outdir, config_path, **_):
    """Disruption counts, scores, and percentiles; writes disruption.csv."""
    opts = _prepare(ctx, outdir, config_path)
    _stage_disrupt(outdir, opts.get("d_variant"))


@main.command()
@_outdir_option
@_config_option
@click.option(
    "--columns",
    default=",".join(DEFAULT_CORRELATION_COLUMNS),
    show_default=False,
    help="Comma-separated metric columns [default: all numeric metrics].",
)
@click.pass_context
@_structured_errors
def correlate(ctx, outdir, config_path, **_):
    """Pairwise correlations; writes correlations.csv (r above, p below)."""
    opts = _prepare(ctx, outdir, config_path)
    _stage_correlate(outdir, _as_list(opts.get("columns")))


def _selected_models(opts: Options) -> tuple[dict[str, RegressionSpec], tuple[str, ...]]:
    models = _model_specs(opts.config)
    requested = opts.get("model")
    if requested == "all":
        return models, tuple(models)
    if requested not in models:
        _fail(
            "unknown_model",
            f"unknown model {requested!r}; choose from {', '.join(models)} or 'all'",
        )
    return models, (requested,)


@main.command()
@_outdir_option
@_config_option
@click.option("--model", default="all", show_default=True, help="Preset name or 'all'.")
@click.option(
    "--center",
    type=click.Choice(["none", "mean"]),
    default="none",
    show_default=True,
    help="Mean-center predictors and moderator before products.",
)
@click.pass_context
@_structured_errors
def regress(ctx, outdir, config_path, **_):
    """Fit model presets; writes regression_<model>.csv term tables."""
    opts = _prepare(ctx, outdir, config_path)
    models, names = _selected_models(opts)
    _stage_regress(outdir, models, names, opts.get("center"))


@main.command()
@_outdir_option
@_config_option
@click.option("--model", default="all", show_default=True, help="Preset name or 'all'.")
@click.option("--center", type=click.Choice(["none", "mean"]), default="none", show_default=True)
@click.option("--points", default=41, show_default=True, type=int)
@click.option(
    "--levels",
    default=None,
    help="Comma-separated moderator levels [default: mean and mean±1 SD].",
)
@click.pass_context
@_structured_errors
def curves(ctx, outdir, config_path, **_):
    """Predicted-outcome grids per predictor; writes curves_<model>.csv."""
    opts = _prepare(ctx, outdir, config_path)
    models, names = _selected_models(opts)
    raw_levels = opts.get("levels")
    levels = tuple(float(v) for v in _as_list(raw_levels)) if raw_levels else None
    _stage_curves(
        outdir, models, names, opts.get("center"), opts.get("points", int), levels
    )


@main.command()
@_outdir_option
@_config_option
@click.option("--input", "input_path", default=None, type=click.Path(dir_okay=False))
@click.option("--synth", "use_synth", is_flag=True, default=False, help="Generate the corpus first.")
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--papers", default=5000, show_default=True, type=int)
@click.option("--dim", default=50, show_default=True, type=int)
@click.option("--negatives", default=5, show_default=True, type=int)
@click.option("--epochs", default=5, show_default=True, type=int)
@click.option("--initial-lr", default=0.025, show_default=True, type=float)
@click.option("--final-lr", default=1e-4, show_default=True, type=float)
@click.option("--non-deterministic", is_flag=True, default=False)
@click.option("--min-year", default=1800, show_default=True, type=int)
@click.option("--max-year", default=2100, show_default=True, type=int)
@click.option("--end-year", default=0, type=int)
@click.option("--pad-short-codes", is_flag=True, default=False)
@click.option("--exclude-self", is_flag=True, default=False)
@click.option("--export-tree", is_flag=True, default=False)
@click.option("--d-variant", type=click.Choice(list(VARIANTS)), default="disjoint", show_default=True)
@click.option("--center", type=click.Choice(["none", "mean"]), default="none", show_default=True)
@click.option("--loss-log", is_flag=True, default=False)
@click.option("--points", default=41, show_default=True, type=int)
@click.pass_context
@_structured_errors
def pipeline(ctx, outdir, config_path, input_path, use_synth, **_):
    """Run every stage in order on one corpus.

    With --synth, first generates the default 5,000-paper corpus with a
    planted inverted-U citation effect (amplified by team size).
    """
    opts = _prepare(ctx, outdir, config_path)
    seed = opts.get("seed", int)
    cfg = PipelineConfig(
        input_path=input_path,
        outdir=outdir,
        training=_training_config_from(opts),
        parse=_parse_config_from(opts),
        models=_model_specs(opts.config),
        seed=seed,
        exclude_self=opts.get("exclude_self", bool),
        d_variant=opts.get("d_variant"),
        center=opts.get("center"),
        loss_log=opts.get("loss_log", bool),
        export_tree=opts.get("export_tree", bool),
        curve_points=opts.get("points", int),
    )
    if use_synth:
        if input_path is not None:
            _fail("bad_arguments", "--input and --synth are mutually exclusive")
        synth_config = SynthConfig(
            seed=seed,
            n_papers=opts.get("papers", int),
            planted_effect=PlantedEffect(quadratic_sign=-1, moderator_sign=1),
        )
        source = _stage_synth(outdir, synth_config)
    elif input_path is not None:
        if not os.path.exists(input_path):
            _fail("missing_input", f"input file {input_path!r} does not exist")
        source = input_path
    else:
        source = _require(outdir, CORPUS_RAW, "synth")
    _stage_ingest(outdir, source, cfg.parse)
    _stage_train(outdir, cfg.training, cfg.loss_log)
    _stage_metrics(outdir, cfg.exclude_self, cfg.export_tree)
    _stage_disrupt(outdir, cfg.d_variant)
    model_names = tuple(cfg.models)
    _stage_correlate(outdir, DEFAULT_CORRELATION_COLUMNS)
    _stage_regress(outdir, cfg.models, model_names, cfg.center)
    _stage_curves(outdir, cfg.models, model_names, cfg.center, cfg.curve_points, None)


if __name__ == "__main__":
    main()
