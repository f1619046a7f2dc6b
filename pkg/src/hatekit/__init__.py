"""hatekit: hate speech classification for code-mixed social media text.

Preprocessing for mixed Roman/Devanagari tweets, hand-crafted feature
fusion, CNN/MLP classification heads over pluggable sentence encoders,
imbalance-aware losses, stratified K-fold training with early stopping,
and fold/model ensembling. The compiled convolution kernels are used
when built; a numpy fallback keeps everything working without them.
"""

from .corpus import (
    COARSE_LABELS,
    FINE_LABELS,
    ClassDistribution,
    LabeledExample,
    Thread,
    ThreadNode,
    class_distribution,
    load_flat_dataset,
    load_threads,
)
from .context import ContextualInput, build_contextual_input, flatten_threads
from .encoder import EncoderOutput, EncoderSpec, ToyEncoder, concat_last_k_layers, encode
from .ensemble import EnsembleSpec, ensemble_predict, majority_vote, soft_average
from .features import (
    FeatureVector,
    ProfanityLexicon,
    build_feature_vector,
    load_lexicon,
    profanity_fraction,
    punctuation_and_case_features,
    sentiment_features,
)
from .heads import KimCnnConfig, KimCnnHead, MlpConfig, MlpHead
from .kernels import backend_name as kernels_backend
from .losses import LossConfig, inverse_frequency_weights, loss_gradient, loss_value
from .preprocess import PreprocessConfig, apply_emoji_mode, clean_text, normalize_indic_script
from .training import (
    FoldRun,
    TrainConfig,
    accuracy,
    average_fold_probs,
    macro_f1,
    stratified_kfold,
    train_fold,
)

__version__ = "0.1.0"

__all__ = [
    "COARSE_LABELS",
    "FINE_LABELS",
    "ClassDistribution",
    "ContextualInput",
    "EncoderOutput",
    "EncoderSpec",
    "EnsembleSpec",
    "FeatureVector",
    "FoldRun",
    "KimCnnConfig",
    "KimCnnHead",
    "LabeledExample",
    "LossConfig",
    "MlpConfig",
    "MlpHead",
    "PreprocessConfig",
    "ProfanityLexicon",
    "Thread",
    "ThreadNode",
    "ToyEncoder",
    "TrainConfig",
    "accuracy",
    "apply_emoji_mode",
    "average_fold_probs",
    "build_contextual_input",
    "build_feature_vector",
    "class_distribution",
    "clean_text",
    "concat_last_k_layers",
    "encode",
    "ensemble_predict",
    "flatten_threads",
    "inverse_frequency_weights",
    "kernels_backend",
    "load_flat_dataset",
    "load_lexicon",
    "load_threads",
    "loss_gradient",
    "loss_value",
    "macro_f1",
    "majority_vote",
    "normalize_indic_script",
    "profanity_fraction",
    "punctuation_and_case_features",
    "sentiment_features",
    "soft_average",
    "stratified_kfold",
    "train_fold",
]
