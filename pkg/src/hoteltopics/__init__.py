"""Quality-of-service topic discovery in hotel customer reviews.

Library surface: corpus ingestion and synthesis, text preprocessing, Gibbs
LDA, sliding-window topic coherence with a model-selection sweep, subword
CBOW embeddings, 2D neighborhood projection, score statistics, and SVG
report rendering. The ``hoteltopics`` CLI drives the full pipeline.
"""

from .coherence import (
    CoherenceConfig,
    CoherenceReport,
    DegenerateTopicError,
    SweepResult,
    WindowCounts,
    ZeroMarginalError,
    context_vector,
    model_coherence,
    npmi,
    select_best_k,
    sweep_k,
    topic_coherence,
    window_counts,
    write_sweep_csv,
)
from .config import ConfigError, PipelineConfig, derive_seed
from .corpus import (
    CorpusError,
    DocumentSet,
    LoadError,
    Review,
    ReviewSet,
    SyntheticSpec,
    SynthTruth,
    load_reviews,
    partition,
    save_reviews,
    synth_corpus,
)
from .embedding import (
    ChainVocabulary,
    EmbedConfig,
    SubwordEmbedding,
    cbow_exact_grads,
    cbow_exact_loss,
    ngram_chains,
)
from .lda import GibbsLda, LdaConfig
from .pipeline import StageError, run_pipeline
from .projection import (
    NeighborProjection,
    ProjectConfig,
    Projection2D,
    knn_fuzzy_graph,
    layout2d,
    neighbor_scales,
    trustworthiness,
)
from .render import render_boxplots, render_coherence_curve, render_scatter
from .stats import (
    AnalysisConfig,
    AnovaResult,
    ScoreBox,
    TopicMagnitude,
    TukeyPair,
    TukeyResult,
    anova_oneway,
    box_stats,
    representative,
    representative_share,
    studentized_range_sf,
    topic_magnitude,
    tukey_hsd,
)
from .textprep import (
    BowCorpus,
    BowVectorizer,
    EmptyVocabularyError,
    PrepResources,
    TextNormalizer,
    TokenDoc,
    Vocabulary,
    build_bow_corpus,
    build_vocab,
    load_lemmas,
    load_resources,
    load_stopwords,
    preprocess,
    preprocess_set,
    to_bow,
)

__version__ = "0.1.0"
