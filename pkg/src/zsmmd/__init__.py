"""Confidence-weighted moment matching and recursive training for zero-shot pseudo-feature generation."""
from .classifier import PixelClassifier, Prediction, classify, train_classifier_step
from .generator import ClassEmbedding, GeneratorModel, generate, train_generator_recursive, train_generator_seen
from .losses import (FeatureSet, KernelSpec, WeightedFeatureSet, kernel_eval, mmd2, mmd2_grad,
                     softmax_cross_entropy, zs_mmd2, zs_mmd2_grad)
from .metrics import ConfusionMatrix, accumulate, compute_metrics, hiou
from .trainer import TrainConfig, run_training, select_high_confidence, train_epoch

__version__ = "0.1.0"
