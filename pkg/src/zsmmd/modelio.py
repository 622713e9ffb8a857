"""Binary persistence for a (generator, classifier) pair.

Layout, all little-endian::

    b"ZSMD"  u16 version  u32 d_e  u32 d_f  u32 num_classes
    generator MLP, classifier MLP

where an MLP is ``u32 n_layers`` followed, per layer, by
``u32 fan_in  u32 fan_out  u8 activation  f64[fan_in*fan_out] weight  f64[fan_out] bias``
(weights row-major, shape ``(fan_in, fan_out)``).
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .classifier import PixelClassifier
from .errors import CorruptModelError, DimensionError, VersionMismatchError
from .generator import GeneratorModel
from .tensor import ACTIVATIONS, Layer, MlpModel

MAGIC = b"ZSMD"
VERSION = 1


def _pack_mlp(mlp: MlpModel) -> bytes:
    parts = [struct.pack("<I", len(mlp.layers))]
    for layer in mlp.layers:
        fan_in, fan_out = layer.weight.shape
        parts.append(struct.pack("<IIB", fan_in, fan_out, ACTIVATIONS.index(layer.activation)))
        parts.append(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())
    return b"".join(parts)


def save_model(path, generator: GeneratorModel, classifier: PixelClassifier) -> None:
    if generator.d_f != classifier.d_f:
        raise DimensionError(f"generator emits d_f={generator.d_f}, classifier expects {classifier.d_f}")
    blob = MAGIC + struct.pack("<HIII", VERSION, generator.d_e, generator.d_f, classifier.num_classes)
    blob += _pack_mlp(generator.mlp) + _pack_mlp(classifier.mlp)
    Path(path).write_bytes(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptModelError(f"model file truncated at byte {len(self.data)} (needed {self.pos + n})")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def floats(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * n), dtype="<f8").astype(np.float64)


def _read_mlp(r: _Reader) -> MlpModel:
    (n_layers,) = r.unpack("<I")
    if n_layers < 1 or n_layers > 64:
        raise CorruptModelError(f"implausible layer count {n_layers}")
    layers = []
    for _ in range(n_layers):
        fan_in, fan_out, act = r.unpack("<IIB")
        if act >= len(ACTIVATIONS):
            raise CorruptModelError(f"unknown activation code {act}")
        w = r.floats(fan_in * fan_out).reshape(fan_in, fan_out)
        layers.append(Layer(w, r.floats(fan_out), ACTIVATIONS[act]))
    try:
        return MlpModel(layers)
    except ValueError as exc:
        raise CorruptModelError(str(exc)) from None


def load_model(path, expect_d_f: int | None = None, expect_classes: int | None = None):
    """Returns ``(generator, classifier)``; raises on corrupt files or dimension mismatches."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise CorruptModelError("bad magic bytes, not a ZSMD model file")
    version, d_e, d_f, n_cls = r.unpack("<HIII")
    if version != VERSION:
        raise VersionMismatchError(f"model format version {version}, this build reads {VERSION}")
    gen_mlp = _read_mlp(r)
    clf_mlp = _read_mlp(r)
    if r.pos != len(r.data):
        raise CorruptModelError(f"{len(r.data) - r.pos} trailing bytes after model data")
    if gen_mlp.input_dim != 2 * d_e or gen_mlp.output_dim != d_f:
        raise DimensionError(f"generator is {gen_mlp.input_dim}->{gen_mlp.output_dim}, header says d_e={d_e}, d_f={d_f}")
    if clf_mlp.input_dim != d_f or clf_mlp.output_dim != n_cls:
        raise DimensionError(f"classifier is {clf_mlp.input_dim}->{clf_mlp.output_dim}, header says {d_f}->{n_cls}")
    if expect_d_f is not None and d_f != expect_d_f:
        raise DimensionError(f"model feature dim {d_f} does not match task feature dim {expect_d_f}")
    if expect_classes is not None and n_cls != expect_classes:
        raise DimensionError(f"model has {n_cls} classes, task has {expect_classes}")
    try:
        clf = PixelClassifier(clf_mlp)
    except ValueError as exc:
        raise CorruptModelError(str(exc)) from None
    return GeneratorModel(gen_mlp, d_e), clf
