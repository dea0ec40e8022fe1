"""Fully connected tanh networks over a flat parameter vector.

Layout of the flat vector: for each layer in order, the weight matrix of
shape ``(fan_in, fan_out)`` in row-major order followed by the bias of
length ``fan_out``.  The output layer is affine.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autodiff import Jet, ops

CHECKPOINT_MAGIC = b"PINNCKPT"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int = 2
    hidden: tuple = (32, 32, 32)
    output_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if min((self.input_dim, self.output_dim, *self.hidden)) < 1:
            raise ValueError(f"all layer widths must be >= 1, got {self.widths}")

    @property
    def widths(self):
        return (self.input_dim, *self.hidden, self.output_dim)

    @property
    def n_params(self):
        w = self.widths
        return sum((a + 1) * b for a, b in zip(w[:-1], w[1:]))

    def layout(self):
        """``[(weight_offset, (fan_in, fan_out), bias_offset), ...]`` per layer."""
        out, off = [], 0
        w = self.widths
        for a, b in zip(w[:-1], w[1:]):
            out.append((off, (a, b), off + a * b))
            off += (a + 1) * b
        return out


@dataclass(frozen=True, eq=False)
class ParamVector:
    """Flat parameters of an :class:`MlpSpec` network."""

    spec: MlpSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.spec.n_params,):
            raise ValueError(f"expected {self.spec.n_params} parameters, got shape {values.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.spec.n_params

    def layers(self):
        return unflatten(self.spec, self.values)

    @classmethod
    def from_layers(cls, spec, layers):
        return cls(spec, flatten(layers))


def unflatten(spec, flat):
    """Split a flat vector (numpy or JAX) into ``[(W, b), ...]``."""
    layers = []
    for w_off, (a, b), b_off in spec.layout():
        layers.append((flat[w_off:w_off + a * b].reshape(a, b), flat[b_off:b_off + b]))
    return layers


def flatten(layers):
    return np.concatenate([np.concatenate([np.ravel(W), np.ravel(b)]) for W, b in layers])


def init(spec, seed):
    """Glorot-uniform weights and zero biases, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    layers = []
    for _, (a, b), _ in spec.layout():
        bound = np.sqrt(6.0 / (a + b))
        layers.append((rng.uniform(-bound, bound, size=(a, b)), np.zeros(b)))
    return ParamVector.from_layers(spec, layers)


def _flat(theta):
    return theta.values if isinstance(theta, ParamVector) else theta


def forward(spec, theta, x):
    """Raw network output at a single point."""
    h = np.asarray(x, dtype=np.float64)
    layers = unflatten(spec, np.asarray(_flat(theta)))
    for W, b in layers[:-1]:
        h = np.tanh(h @ W + b)
    W, b = layers[-1]
    return float((h @ W + b)[0])


def forward_batch(spec, theta, X):
    """Raw outputs for a batch ``X`` of shape ``(n, input_dim)``; numpy or JAX."""
    layers = unflatten(spec, _flat(theta))
    h = X
    for W, b in layers[:-1]:
        h = ops.tanh(h @ W + b)
    W, b = layers[-1]
    return (h @ W + b)[..., 0]


def forward_jets(spec, theta, X):
    """Batched raw output with first/second derivatives along each input axis.

    Returns a :class:`Jet` whose components have shape ``(n,)``.
    """
    layers = unflatten(spec, _flat(theta))
    W, b = layers[0]
    jet = Jet(X @ W + b, (W[i] for i in range(spec.input_dim)), (0.0,) * spec.input_dim)
    for W, b in layers[1:]:
        jet = jet.tanh().map(lambda c, W=W: c @ W)
        jet = jet + b
    return jet.map(lambda c: c[..., 0])


def forward_generic(spec, params, inputs):
    """Network output built from scalar arithmetic only.

    ``params`` is any sequence of numbers in flat layout (floats, tape
    Scalars, ...), ``inputs`` a sequence of coordinates (floats or Jets).
    Used by the tape engine; far too slow for training.
    """
    h = list(inputs)
    for li, (w_off, (a, b), b_off) in enumerate(spec.layout()):
        z = []
        for j in range(b):
            acc = params[b_off + j]
            for i in range(a):
                acc = h[i] * params[w_off + i * b + j] + acc
            z.append(acc)
        last = li == len(spec.hidden)
        h = z if last else [ops.tanh(v) for v in z]
    return h[0]


def save_checkpoint(path, theta, seed):
    """Write ``theta`` as a little-endian float64 array behind a small header.

    Header: magic ``PINNCKPT``, u32 version, i64 seed, u32 layer-width count,
    that many u32 widths, u64 parameter count.
    """
    spec = theta.spec
    widths = spec.widths
    header = CHECKPOINT_MAGIC + struct.pack(
        f"<IqI{len(widths)}IQ", CHECKPOINT_VERSION, int(seed), len(widths), *widths, spec.n_params
    )
    Path(path).write_bytes(header + theta.values.astype("<f8").tobytes())


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; returns ``(ParamVector, seed)``."""
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a parameter checkpoint")
    off = len(CHECKPOINT_MAGIC)
    version, seed, n_widths = struct.unpack_from("<IqI", data, off)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    off += struct.calcsize("<IqI")
    widths = struct.unpack_from(f"<{n_widths}I", data, off)
    off += 4 * n_widths
    (n_params,) = struct.unpack_from("<Q", data, off)
    off += 8
    spec = MlpSpec(widths[0], tuple(widths[1:-1]), widths[-1])
    if n_params != spec.n_params or len(data) - off != 8 * n_params:
        raise ValueError(f"{path}: parameter count does not match header")
    values = np.frombuffer(data, dtype="<f8", count=n_params, offset=off)
    return ParamVector(spec, values), seed
