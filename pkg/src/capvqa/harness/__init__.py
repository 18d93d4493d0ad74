from .config import DATA_ROOT_ENV, PRESETS, RunConfig
from .experiment import (
    ExperimentData,
    RunArtifacts,
    encode_for_training,
    evaluate_examples,
    evaluate_saved_model,
    load_experiment_data,
    predict_answers,
    predict_distributions,
    run_experiment,
    select_training_steps,
)
from .files import (
    read_distributions,
    read_predictions,
    read_report,
    write_distributions,
    write_predictions,
    write_report,
)
