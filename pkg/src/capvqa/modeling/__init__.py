from .text import (
    CAPTION_PREFIX,
    CLS_TOKEN,
    QUESTION_PREFIX,
    SEP_TOKEN,
    TokenizedInput,
    format_pair_input,
    token_id,
    tokenize_pair,
)
from .head import (
    ClassifierHeadParams,
    classifier_head_forward,
    gelu,
    gelu_grad,
    init_head_params,
    layer_norm,
    sce_gradient,
    sce_loss,
    softmax,
)
from .regions import (
    MultimodalInput,
    RegionFeatureSet,
    assemble_multimodal_input,
    load_region_features,
    save_region_features,
)
from .adapters import (
    ADAPTER_CLASSES,
    AnswerClassifier,
    AnswerGenerator,
    CaptionGenerator,
    ClassifierInput,
    ConstantAnswerGenerator,
    ConstantClassifier,
    FileAnswerGenerator,
    FileCaptionGenerator,
    FileDistributionClassifier,
    ToyClassifierAdapter,
    build_adapter,
    build_classifier_input,
    validate_distribution,
)
from .toy import (
    AdamWState,
    ToyModelConfig,
    ToyTrainResult,
    TrainSettings,
    adamw_step,
    encode_tokens,
    learning_rate_at,
    load_toy_model,
    predict_proba,
    save_toy_model,
    toy_forward,
    toy_loss_and_grads,
    train_toy_classifier,
)
