"""Topic-routed priority prediction for Bugzilla-style bug reports.

The pipeline ingests issue-tracker exports, topic-models the training
corpus with collapsed-Gibbs LDA, trains one priority classifier per topic
(naive Bayes natively, or any external classifier over a line protocol),
and scores predictions with micro/macro-averaged multiclass metrics.
"""

from .corpus import (
    BugReport,
    ColumnMap,
    DatasetFormat,
    Ordering,
    Priority,
    Resolution,
    SplitSpec,
    Status,
    chronological_split,
    filter_training_eligible,
    parse_dataset,
)
from .textprep import (
    CountVector,
    TokenizerConfig,
    Vocabulary,
    build_vocabulary,
    tokenize,
    vectorize,
)
from .topics import (
    LdaConfig,
    LdaModel,
    TopicAssignment,
    assign_topic,
    fit_lda,
    infer_theta,
    topic_histogram,
)
from .classify import (
    ClassifierKind,
    GaussianNbModel,
    MultinomialNbModel,
    Prediction,
    TopicRoutedClassifier,
    predict,
    predict_routed,
    train_gaussian_nb,
    train_multinomial_nb,
    train_topic_routed,
)
from .evaluate import (
    ConfusionMatrix,
    Metrics,
    MetricsReport,
    ZeroDivision,
    confusion,
    distribution_report,
    macro_metrics,
    metrics_report,
    micro_metrics,
    timing_report,
)
from .bridge import (
    EpochPolicy,
    WorkerRecord,
    predict_remote,
    spawn_worker,
    train_remote,
)

__version__ = "0.1.0"
