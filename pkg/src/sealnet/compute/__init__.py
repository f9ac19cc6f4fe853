from .dataset import Dataset, ParseError, parse_csv, to_csv, concat_datasets
from .trainers import (
    DimensionMismatch,
    EmptyDataset,
    Model,
    TrainerSpec,
    UnknownLabel,
    UnknownTrainer,
    evaluate,
    parse_trainer_spec,
    predict,
    train,
)
from .worker import (
    CustodianUnavailable,
    ReportRejected,
    WorkerKilled,
    WorkerRunError,
    WorkerState,
    provision,
    report_and_destroy,
    run_task,
    spawn_worker,
)

__all__ = [
    "Dataset",
    "ParseError",
    "parse_csv",
    "to_csv",
    "concat_datasets",
    "TrainerSpec",
    "Model",
    "train",
    "predict",
    "evaluate",
    "parse_trainer_spec",
    "EmptyDataset",
    "DimensionMismatch",
    "UnknownLabel",
    "UnknownTrainer",
    "WorkerState",
    "spawn_worker",
    "provision",
    "report_and_destroy",
    "run_task",
    "WorkerRunError",
    "WorkerKilled",
    "ReportRejected",
    "CustodianUnavailable",
]
