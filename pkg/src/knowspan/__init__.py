"""Knowledge-spanning distances, disruption scores, and moderated quadratic
regressions for category-coded bibliographic corpora."""

__version__ = "0.1.0"

from .corpus import (
    CitationGraph,
    Corpus,
    CorpusError,
    InvalidCodeError,
    PacsCode,
    Paper,
    ParseConfig,
    ParseReport,
    build_citation_graph,
    citation_count,
    log_citation_count,
    parse_corpus,
    team_size,
)
from .disruption import (
    DisruptionCounts,
    DisruptionScore,
    d_score,
    disruption_counts,
    percentile_ranks,
    score_corpus,
)
from .embedding import (
    EmbeddingMatrix,
    MissingCodeError,
    TrainingConfig,
    build_training_pairs,
    cosine_distance,
    load_embeddings,
    save_embeddings,
    train_embeddings,
)
from .geometry import (
    JournalVector,
    PaperVector,
    article_distance,
    article_distance_log,
    journal_distance,
    journal_vector,
    paper_vector,
)
from .stats import (
    AnalysisTable,
    CorrelationMatrix,
    CurvePoint,
    RankDeficiencyError,
    RegressionResult,
    RegressionSpec,
    build_design,
    fit_model,
    mean_response,
    ols_fit,
    pearson_matrix,
    pearson_r,
    predicted_curve,
    star_label,
)
from .synthgen import PlantedEffect, SynthConfig, block_of_code, generate, write_corpus
from .tree import (
    KnowledgeTree,
    build_tree,
    export_edges,
    lca_level,
    network_distance,
    path_length,
)
