"""Built-in deterministic trainers.

Algorithm submissions are specs naming one of these trainers, not arbitrary
code; the closed set keeps workers sandbox-free while preserving the
benchmark and contributivity mechanics.

Determinism contract: identical (dataset, spec, prior model) produce
bitwise-identical parameters across runs and module instances. For the
logistic trainer this pins the exact update sequence

    p  = sigmoid(X w + b)
    gw = X^T (p - y) / n
    gb = sum(p - y) / n
    w -= lr gw ;  b -= lr gb

full batch, no shuffling, zero (or warm-start) initialization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..canon import canonical_json
from ..errors import SealnetError
from .dataset import Dataset

TRAINER_CENTROID = "centroid"
TRAINER_LOGREG = "logreg"
DEFAULT_LEARNING_RATE = 0.1
DEFAULT_EPOCHS = 100


class EmptyDataset(SealnetError):
    pass


class DimensionMismatch(SealnetError):
    pass


class UnknownLabel(SealnetError):
    pass


class UnknownTrainer(SealnetError):
    pass


@dataclass(frozen=True)
class TrainerSpec:
    name: str
    learning_rate: float = DEFAULT_LEARNING_RATE
    epochs: int = DEFAULT_EPOCHS

    def to_dict(self) -> dict:
        if self.name == TRAINER_LOGREG:
            hyper = {"learning_rate": self.learning_rate, "epochs": self.epochs}
        else:
            hyper = {}
        return {"name": self.name, "hyperparameters": hyper}

    def canonical(self) -> bytes:
        return canonical_json(self.to_dict())


def parse_trainer_spec(source: str | bytes | dict) -> TrainerSpec:
    """Parse a {name, hyperparameters} JSON document; only built-ins pass."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise UnknownTrainer(f"not a trainer spec: {exc}") from exc
    else:
        doc = source
    name = doc.get("name")
    if name not in (TRAINER_CENTROID, TRAINER_LOGREG):
        raise UnknownTrainer(f"no built-in trainer named {name!r}")
    hyper = doc.get("hyperparameters") or {}
    return TrainerSpec(
        name=name,
        learning_rate=float(hyper.get("learning_rate", DEFAULT_LEARNING_RATE)),
        epochs=int(hyper.get("epochs", DEFAULT_EPOCHS)),
    )


@dataclass
class Model:
    """Trained parameters, JSON-serializable for sealing and storage.

    kind=centroid: classes maps label -> mean feature vector.
    kind=logreg:   classes maps label -> {"w": vector, "b": bias}, one-vs-rest.
    """

    kind: str
    dimension: int
    classes: dict
    algorithm_id: str = ""
    trained_on: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        if self.kind == TRAINER_CENTROID:
            classes = {label: [float(v) for v in vec] for label, vec in self.classes.items()}
        else:
            classes = {
                label: {"w": [float(v) for v in p["w"]], "b": float(p["b"])}
                for label, p in self.classes.items()
            }
        return {
            "kind": self.kind,
            "dimension": self.dimension,
            "classes": classes,
            "algorithm_id": self.algorithm_id,
            "trained_on": list(self.trained_on),
        }

    def canonical(self) -> bytes:
        return canonical_json(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Model":
        if d["kind"] == TRAINER_CENTROID:
            classes = {
                label: np.array(vec, dtype=np.float64) for label, vec in d["classes"].items()
            }
        else:
            classes = {
                label: {"w": np.array(p["w"], dtype=np.float64), "b": np.float64(p["b"])}
                for label, p in d["classes"].items()
            }
        return cls(
            kind=d["kind"],
            dimension=int(d["dimension"]),
            classes=classes,
            algorithm_id=d.get("algorithm_id", ""),
            trained_on=tuple(d.get("trained_on", ())),
        )


# ---------------------------------------------------------------------------
# Logistic pieces, exposed for the finite-difference check
# ---------------------------------------------------------------------------


def logreg_loss(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float) -> float:
    """Mean binary cross-entropy of sigmoid(Xw + b) against y in {0,1}."""
    z = X @ w + b
    p = 1.0 / (1.0 + np.exp(-z))
    eps = 1e-12
    return float(-np.mean(y * np.log(p + eps) + (1.0 - y) * np.log(1.0 - p + eps)))


def logreg_gradient(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float):
    """Analytic gradient of logreg_loss with respect to (w, b)."""
    n = X.shape[0]
    p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
    gw = X.T @ (p - y) / n
    gb = np.sum(p - y) / n
    return gw, gb


def _fit_logreg_binary(X, y, lr, epochs, w0=None, b0=0.0):
    n = X.shape[0]
    w = np.zeros(X.shape[1], dtype=np.float64) if w0 is None else np.asarray(w0, np.float64).copy()
    b = np.float64(b0)
    for _ in range(epochs):
        p = 1.0 / (1.0 + np.exp(-(X @ w + b)))
        gw = X.T @ (p - y) / n
        gb = np.sum(p - y) / n
        w = w - lr * gw
        b = b - lr * gb
    return w, b


# ---------------------------------------------------------------------------
# Train / predict / evaluate
# ---------------------------------------------------------------------------


def train(dataset: Dataset, spec: TrainerSpec, prior_model: Model | None = None) -> Model:
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on zero rows")
    if dataset.labels is None:
        raise EmptyDataset("training data must be labeled")
    X = np.asarray(dataset.features, dtype=np.float64)
    labels = list(dataset.labels)
    class_names = sorted(set(labels))

    if prior_model is not None:
        if prior_model.dimension != dataset.dimension:
            raise DimensionMismatch(
                f"prior model dimension {prior_model.dimension} != data {dataset.dimension}"
            )
        missing = [c for c in class_names if c not in prior_model.classes]
        if missing:
            raise UnknownLabel(f"prior model has no parameters for {missing}")

    if spec.name == TRAINER_CENTROID:
        # Warm start is a no-op for centroids: the mean depends only on data.
        classes = {}
        for c in class_names:
            mask = np.array([lab == c for lab in labels])
            classes[c] = X[mask].mean(axis=0)
        return Model(kind=TRAINER_CENTROID, dimension=dataset.dimension, classes=classes)

    if spec.name == TRAINER_LOGREG:
        classes = {}
        for c in class_names:
            y = np.array([1.0 if lab == c else 0.0 for lab in labels], dtype=np.float64)
            if prior_model is not None:
                prior = prior_model.classes[c]
                w, b = _fit_logreg_binary(
                    X, y, spec.learning_rate, spec.epochs, w0=prior["w"], b0=float(prior["b"])
                )
            else:
                w, b = _fit_logreg_binary(X, y, spec.learning_rate, spec.epochs)
            classes[c] = {"w": w, "b": b}
        return Model(kind=TRAINER_LOGREG, dimension=dataset.dimension, classes=classes)

    raise UnknownTrainer(f"no built-in trainer named {spec.name!r}")


def predict(model: Model, features) -> str:
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (model.dimension,):
        raise DimensionMismatch(f"expected {model.dimension} features, got {x.shape}")
    if model.kind == TRAINER_CENTROID:
        best_label, best_d2 = None, None
        for label in sorted(model.classes):
            d2 = float(np.sum((model.classes[label] - x) ** 2))
            if best_d2 is None or d2 < best_d2:
                best_label, best_d2 = label, d2
        return best_label
    if model.kind == TRAINER_LOGREG:
        best_label, best_z = None, None
        for label in sorted(model.classes):
            p = model.classes[label]
            z = float(p["w"] @ x + p["b"])
            if best_z is None or z > best_z:
                best_label, best_z = label, z
        return best_label
    raise UnknownTrainer(f"model kind {model.kind!r}")


def evaluate(model: Model, validation: Dataset) -> float:
    """Accuracy of the model on a labeled held-out set."""
    if len(validation) == 0:
        raise EmptyDataset("validation set is empty")
    if validation.labels is None:
        raise EmptyDataset("validation set must be labeled")
    correct = sum(
        1
        for i in range(len(validation))
        if predict(model, validation.features[i]) == validation.labels[i]
    )
    return correct / len(validation)
