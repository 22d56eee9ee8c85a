"""Fully connected ReLU network with inverted dropout, trained on MSLE with Adam.

Weights are stored as (out, in) matrices, so a batch of row vectors ``a``
maps to ``a @ W.T + b``. Dropout acts on hidden-layer activations only.
"""
import logging
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .dsp import StftConfig, stft

logger = logging.getLogger(__name__)

DEFAULT_ARCH = (257, 2048, 2048, 2048, 257)
MAGIC = b"MCDN"
FORMAT_VERSION = 1
ACTIVATIONS = ("relu", "linear")


@dataclass
class MlpModel:
    weights: list
    biases: list
    dropout_rate: float = 0.2
    activation: str = "relu"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} do not agree")
            if i and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i} expects {w.shape[1]} inputs, previous layer gives "
                                 f"{self.weights[i - 1].shape[0]}")

    @property
    def arch(self):
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def dtype(self):
        return self.weights[0].dtype

    @property
    def hidden_sizes(self):
        return self.arch[1:-1]

    def params(self):
        """Flat parameter list [W0, b0, W1, b1, ...] (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self, dropout_rate=None):
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        self.dropout_rate if dropout_rate is None else dropout_rate,
                        self.activation, dict(self.meta))

    def with_dropout(self, rate):
        """Same parameters (shared, not copied) under a different dropout rate."""
        return MlpModel(self.weights, self.biases, rate, self.activation, self.meta)


def init_model(arch=DEFAULT_ARCH, dropout_rate=0.2, seed=0, dtype=np.float32, activation="relu"):
    """He-uniform weights (bound sqrt(6 / fan_in)), zero biases."""
    if len(arch) < 2:
        raise ValueError("arch needs at least input and output sizes")
    rng = np.random.default_rng([seed, 0])
    weights, biases = [], []
    for fan_in, fan_out in zip(arch[:-1], arch[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)).astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return MlpModel(weights, biases, dropout_rate, activation)


# -- dropout masks ---------------------------------------------------------

def draw_masks(model, rng, rows=1):
    """Inverted-dropout scale matrices, one per hidden layer.

    Each has shape (rows, width); entries are 0 (dropped) or 1/(1-p) (kept).
    ``rows=1`` gives a mask shared by every row of a batch.
    """
    p = model.dropout_rate
    keep_scale = 1.0 / (1.0 - p)
    masks = []
    for width in model.hidden_sizes:
        keep = rng.random((rows, width)) >= p
        masks.append((keep * keep_scale).astype(model.dtype))
    return masks


def pass_masks(model, seed, index, stream=0):
    """Shared mask for MC pass ``index``; reproducible from (seed, stream, index)."""
    return draw_masks(model, np.random.default_rng([seed, stream, index]), rows=1)


# -- forward / loss / backward --------------------------------------------

def _check_input(model, x):
    x = np.asarray(x)
    single = x.ndim == 1
    x2 = np.atleast_2d(x).astype(model.dtype, copy=False)
    if x2.ndim != 2 or x2.shape[1] != model.arch[0]:
        raise ValueError(f"input has {x2.shape[-1]} features, model expects {model.arch[0]}")
    return np.ascontiguousarray(x2), single


def _forward(model, x, masks, keep):
    acts = [x]
    a = x
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w.T
        z += b
        if i < last:
            if model.activation == "relu":
                if masks is None:
                    np.maximum(z, 0, out=z)
                else:
                    _backend.relu_dropout(z, masks[i])
            elif masks is not None:
                z *= masks[i]
        elif model.activation == "relu":
            np.maximum(z, 0, out=z)
        a = z
        if keep:
            acts.append(a)
    return acts if keep else a


def forward(model, x, masks=None):
    """Network output for one 257-vector or a (n, 257) batch.

    ``masks=None`` switches dropout off; otherwise ``masks`` comes from
    :func:`draw_masks` (per-row or shared).
    """
    x2, single = _check_input(model, x)
    if masks is not None and len(masks) != len(model.hidden_sizes):
        raise ValueError(f"expected {len(model.hidden_sizes)} masks, got {len(masks)}")
    out = _forward(model, x2, masks, keep=False)
    return out[0] if single else out


def msle_loss(estimate, reference):
    """(1/R) sum_k (log(S_k + 1) - log(S^_k + 1))^2; batches give the mean over rows."""
    est = np.asarray(estimate, dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    if np.any(est < 0) or np.any(ref < 0):
        raise ValueError("msle_loss needs nonnegative inputs")
    d = np.log1p(ref) - np.log1p(est)
    return float(np.mean(d * d))


def backward(model, x, target, masks=None):
    """Loss and gradients of the batch-mean MSLE.

    Returns ``(loss, grads)`` with grads ordered like :meth:`MlpModel.params`.
    ``masks`` are per-sample (rows == batch size) or shared.
    """
    x2, _ = _check_input(model, x)
    t2 = np.ascontiguousarray(np.atleast_2d(target).astype(model.dtype, copy=False))
    if t2.shape != (x2.shape[0], model.arch[-1]):
        raise ValueError(f"target shape {t2.shape} does not match output ({x2.shape[0]}, {model.arch[-1]})")
    if model.activation != "relu":
        raise ValueError("backward supports the relu network only")
    acts = _forward(model, x2, masks, keep=True)
    loss, g = _backend.msle_and_grad(acts[-1], t2)
    grads = [None] * (2 * len(model.weights))
    for i in range(len(model.weights) - 1, -1, -1):
        a_prev = acts[i]
        grads[2 * i] = g.T @ a_prev
        grads[2 * i + 1] = g.sum(axis=0)
        if i == 0:
            break
        g = np.ascontiguousarray(g @ model.weights[i])
        if masks is None:
            g[a_prev <= 0] = 0
        else:
            _backend.relu_dropout_backward(g, a_prev, masks[i - 1])
    return loss, grads


# -- optimisers ------------------------------------------------------------

@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    batch_size: int = 128
    epochs: int = 20
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    seed: int = 0
    dropout_rate: float = 0.2
    hidden: tuple = (2048, 2048, 2048)
    optimizer: str = "adam"

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params, grads, state, cfg):
    """One bias-corrected Adam update, in place. Returns ``state``."""
    state.t += 1
    lr, b1, b2 = cfg.learning_rate, cfg.beta1, cfg.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if cfg.weight_decay:
            g = g + cfg.weight_decay * p
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= (lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)).astype(p.dtype, copy=False)
    return state


def sgd_step(params, grads, cfg):
    for p, g in zip(params, grads):
        if cfg.weight_decay:
            g = g + cfg.weight_decay * p
        p -= (cfg.learning_rate * g).astype(p.dtype, copy=False)


# -- training --------------------------------------------------------------

def fit(noisy, clean, cfg, model=None, progress=None):
    """Train on aligned (noisy, clean) magnitude frames, one frame in, one out.

    Rows are reshuffled every epoch and every sample gets its own dropout
    mask; both come from one generator seeded by ``cfg.seed``. The returned
    model's ``meta["loss_log"]`` holds the sample-weighted mean training loss
    of each epoch.
    """
    noisy = np.asarray(noisy)
    clean = np.asarray(clean)
    if noisy.ndim != 2 or noisy.shape != clean.shape:
        raise ValueError(f"noisy {noisy.shape} and clean {clean.shape} frames must be equal 2-D arrays")
    n = len(noisy)
    if n == 0:
        raise ValueError("empty training set")
    if model is None:
        arch = (noisy.shape[1],) + cfg.hidden + (clean.shape[1],)
        model = init_model(arch, cfg.dropout_rate, cfg.seed)
    elif model.dropout_rate != cfg.dropout_rate:
        raise ValueError("model dropout rate differs from the training config")
    if cfg.learning_rate == 0:
        logger.warning("learning rate is 0: parameters will not change")
    noisy = noisy.astype(model.dtype)
    clean = clean.astype(model.dtype)
    params = model.params()
    state = AdamState.zeros_like(params)
    rng = np.random.default_rng([cfg.seed, 1])
    use_dropout = model.dropout_rate > 0
    log = list(model.meta.get("loss_log", []))
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            masks = draw_masks(model, rng, rows=len(idx)) if use_dropout else None
            loss, grads = backward(model, noisy[idx], clean[idx], masks)
            if cfg.optimizer == "adam":
                adam_step(params, grads, state, cfg)
            else:
                sgd_step(params, grads, cfg)
            total += loss * len(idx)
        log.append(total / n)
        if progress is not None:
            progress(epoch + 1, log[-1])
        logger.info("epoch %d/%d  loss %.6g", epoch + 1, cfg.epochs, log[-1])
    model.meta.update(loss_log=log, train_config=cfg.to_dict(), n_frames=n)
    return model


def manifest_frames(manifest, stft_cfg=None, seed=0):
    """Synthesize every mix job in ``manifest`` and return stacked (noisy, clean) magnitudes."""
    from .mixer import enumerate_jobs, synthesize

    stft_cfg = stft_cfg or StftConfig()
    noisy_frames, clean_frames = [], []
    for _, clean, noisy in synthesize(enumerate_jobs(manifest, seed)):
        noisy_frames.append(stft(noisy, stft_cfg)[0])
        clean_frames.append(stft(clean, stft_cfg)[0])
    if not noisy_frames:
        raise ValueError("empty training set: manifest has no mix jobs")
    return np.concatenate(noisy_frames), np.concatenate(clean_frames)


def train(manifest, stft_cfg=None, train_cfg=None, progress=None):
    train_cfg = train_cfg or TrainConfig()
    noisy, clean = manifest_frames(manifest, stft_cfg, train_cfg.seed)
    return fit(noisy, clean, train_cfg, progress=progress)


# -- serialisation ---------------------------------------------------------

class ModelFormatError(ValueError):
    pass


def save_model(model, path):
    """Little-endian: magic, u32 version, u32 arch length, u32 dims, f64 dropout,
    then per layer row-major f32 weights (out x in) followed by f32 biases."""
    if model.activation != "relu":
        raise ValueError("only relu networks can be serialised")
    arch = model.arch
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(arch)),
              struct.pack(f"<{len(arch)}I", *arch), struct.pack("<d", model.dropout_rate)]
    for w, b in zip(model.weights, model.biases):
        chunks.append(np.ascontiguousarray(w, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(b, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_model(path):
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    version, n_arch = struct.unpack_from("<II", data, 4)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported model format version {version}")
    if n_arch < 2 or n_arch > 64:
        raise ModelFormatError(f"{path}: implausible architecture length {n_arch}")
    header = 12 + 4 * n_arch + 8
    if len(data) < header:
        raise ModelFormatError(f"{path}: truncated model file (header)")
    arch = struct.unpack_from(f"<{n_arch}I", data, 12)
    (dropout,) = struct.unpack_from("<d", data, 12 + 4 * n_arch)
    if min(arch) < 1:
        raise ModelFormatError(f"{path}: architecture has an empty layer {arch}")
    expected = header + 4 * sum(o * i + o for i, o in zip(arch[:-1], arch[1:]))
    if len(data) < expected:
        raise ModelFormatError(f"{path}: truncated model file ({len(data)} bytes, architecture needs {expected})")
    if len(data) > expected:
        raise ModelFormatError(f"{path}: payload size {len(data)} does not match architecture {arch} ({expected})")
    weights, biases, off = [], [], header
    for fan_in, fan_out in zip(arch[:-1], arch[1:]):
        w = np.frombuffer(data, "<f4", fan_out * fan_in, off).reshape(fan_out, fan_in)
        off += 4 * fan_out * fan_in
        b = np.frombuffer(data, "<f4", fan_out, off)
        off += 4 * fan_out
        weights.append(w.astype(np.float32))
        biases.append(b.astype(np.float32))
    if not all(np.all(np.isfinite(p)) for p in weights + biases):
        raise ModelFormatError(f"{path}: non-finite parameters")
    try:
        return MlpModel(weights, biases, float(dropout))
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None
