"""moodpipe: subword tokenizer, transformer encoder, boosted-tree classifier."""

from .corpus import (
    DatasetError,
    DatasetTable,
    LabelVocabulary,
    StatementRecord,
    encode_labels,
    load_dataset,
    parse_dataset,
    parse_dataset_csv,
    stratified_split,
)
from .encoder import (
    EncoderConfig,
    EncoderWeights,
    attention,
    encoder_forward,
    init_weights,
    load_weights,
    save_weights,
    softmax,
)
from .evaluation import (
    ClassificationReport,
    ConfusionMatrix,
    classification_report,
    confusion_matrix,
    render_report,
)
from .gbdt import (
    BoostConfig,
    BoostedEnsemble,
    best_split,
    leaf_weight,
    load_model,
    predict_proba,
    save_model,
    softmax_grad_hess,
    train_ensemble,
)
from .gradcheck import gradient_check
from .pipeline import (
    PipelineConfig,
    load_config,
    load_trained_model,
    predict_statement,
    train_pipeline,
)
from .text_features import (
    TextMetrics,
    class_distribution,
    extract_text_metrics,
    pearson_correlation,
)
from .tokenizer import SubwordVocabulary, TokenSequence, build_vocab, normalize, tokenize

__version__ = "0.1.0"
