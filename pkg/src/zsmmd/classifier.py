"""Per-pixel linear classification layer (a 1x1 convolution over feature maps)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError
from .losses import softmax, softmax_cross_entropy
from .tensor import Layer, MlpModel, mlp_backward, mlp_forward


@dataclass
class Prediction:
    labels: np.ndarray  # (N,) argmax, ties -> lowest id
    confidence: np.ndarray  # (N,) softmax at the argmax
    probs: np.ndarray  # (N, C)


class PixelClassifier:
    def __init__(self, mlp: MlpModel):
        if len(mlp.layers) != 1 or mlp.layers[0].activation != "identity":
            raise ShapeError("pixel classifier must be a single identity-activation layer")
        self.mlp = mlp

    @classmethod
    def init(cls, d_f: int, num_classes: int, rng: np.random.Generator) -> "PixelClassifier":
        return cls(MlpModel.init([d_f, num_classes], ["identity"], rng))

    @classmethod
    def zeros(cls, d_f: int, num_classes: int) -> "PixelClassifier":
        return cls(MlpModel([Layer(np.zeros((d_f, num_classes)), np.zeros(num_classes))]))

    @property
    def d_f(self) -> int:
        return self.mlp.input_dim

    @property
    def num_classes(self) -> int:
        return self.mlp.output_dim

    def logits(self, feats) -> np.ndarray:
        return mlp_forward(self.mlp, feats)[0]


def classify(clf: PixelClassifier, feats) -> Prediction:
    probs = softmax(clf.logits(feats))
    labels = np.argmax(probs, axis=1)  # first maximum wins
    conf = probs[np.arange(probs.shape[0]), labels]
    return Prediction(labels, conf, probs)


def train_classifier_step(clf: PixelClassifier, feats, labels, opt) -> float:
    logits, cache = mlp_forward(clf.mlp, feats)
    loss, dlogits = softmax_cross_entropy(logits, labels)
    grads, _ = mlp_backward(clf.mlp, cache, dlogits)
    opt.step(clf.mlp, grads)
    return loss
