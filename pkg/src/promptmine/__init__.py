"""promptmine: mobility prompt mining and evaluation.

Turns hourly POI visit records into natural-language forecasting prompts
(variants V1-V4), gates generated prompts by a classifier plus character
entropy, segments daily series by an information-gain objective, drives a
pluggable generation backend, and scores forecasts parsed back out of
generated sentences.
"""

from promptmine.backend import (
    GenerationRequest,
    GenerationResult,
    HttpBackend,
    MockBackend,
    TrainingPair,
    emit_training_pairs,
    filter_generations,
    make_backend,
)
from promptmine.data import (
    DatasetSplit,
    DayRecord,
    ForecastWindow,
    PoiRecord,
    SynthConfig,
    load_records,
    make_windows,
    split_dataset,
    synthesize_corpus,
)
from promptmine.errors import (
    AlignmentError,
    BackendError,
    ConfigError,
    DataError,
    DegenerateCorpusError,
    EmptyTextError,
    GateRejectedError,
    IoError,
    NoExpressionsFound,
    PromptMineError,
    RenderError,
    SchemaError,
    ShapeError,
    TemplateSyntaxError,
)
from promptmine.evaluate import (
    ForecastOutcome,
    MetricReport,
    compute_metrics,
    parse_forecast,
    render_report,
)
from promptmine.kernels import backend_name as kernel_backend_name
from promptmine.quality import (
    ClassifierModel,
    EntropyReport,
    LossReport,
    QualityVerdict,
    char_entropy,
    classify,
    entropy_weighted_loss,
    gate,
    load_model,
    save_model,
    train_classifier,
)
from promptmine.refinery import (
    CotLine,
    DiurnalSplit,
    build_v1,
    build_v2,
    build_v3,
    build_v4,
    build_variant,
    diurnal_split,
    render_future,
    synthesize_cot,
    verify_cot,
)
from promptmine.segmentation import (
    SegmentPlan,
    hist_entropy,
    segment,
    segment_bruteforce,
    segment_sums,
)
from promptmine.templates import (
    PromptPair,
    PromptTemplate,
    build_classifier_corpus,
    load_pool,
    parse_template,
    render_initial,
    render_pool,
)

__version__ = "0.1.0"
