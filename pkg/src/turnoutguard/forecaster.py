"""Sequence-to-one LSTM forecaster for switch-operation power curves.

One curve is one timestep: the recurrence consumes a window of consecutive
curves (oldest first, each normalized per sample position) and a linear
readout of the final hidden state yields the next expected curve.  Training
is mean-squared error with full backpropagation through time and Adam
updates; everything is plain numpy, seeded and bit-reproducible.

Gate blocks are stored stacked side by side, columns ordered
``[input | forget | output | candidate]``, which keeps the hot path in a
few large matmuls.  The persisted weights file exposes the conventional
per-gate matrices.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .curvegen import OP_PERIOD_S, PowerCurve
from .dataio import CurveWindow, SupervisedPair

MODEL_FORMAT_VERSION = 1
GATES = ("input", "forget", "output", "candidate")

# chunk of pairs processed per pass; bounds memory, order is fixed so
# accumulated full-batch gradients stay bit-reproducible
_CHUNK = 256

# positions whose spread is mere summation dust (std of N equal values can
# round to ~2e-16 * |mean|) count as constant and keep a unit scale
_SCALE_RTOL = 1e-9


class ModelFormatError(ValueError):
    """Weights file is corrupt, incomplete, or of an unsupported version."""


class TrainingDiverged(RuntimeError):
    """Non-finite values appeared during training."""


@dataclass
class TrainConfig:
    hidden: int = 64
    epochs: int = 100
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    batch_size: int | None = None    # None: full-batch (chunked accumulation)
    clip_norm: float = 5.0
    dtype: str = "float64"           # "float32" roughly halves training time
    target_val_mse: float | None = None   # stop early once validation reaches this


@dataclass
class TrainReport:
    train_losses: list[float]
    val_losses: list[float]
    wall_seconds: float
    epochs_run: int

    def to_dict(self) -> dict:
        return {
            "train_losses": self.train_losses,
            "val_losses": self.val_losses,
            "wall_seconds": self.wall_seconds,
            "epochs_run": self.epochs_run,
        }


@dataclass
class ForecastModel:
    """Single-layer LSTM plus linear readout and normalization stats."""

    w_x: np.ndarray        # (length, 4*hidden) input weights, gate-stacked
    w_h: np.ndarray        # (hidden, 4*hidden) recurrent weights
    b: np.ndarray          # (4*hidden,) gate biases
    v_out: np.ndarray      # (length, hidden) readout
    b_out: np.ndarray      # (length,) readout bias
    norm_mean: np.ndarray  # (length,) per-position mean of the training data
    norm_scale: np.ndarray # (length,) per-position scale, > 0
    window: int            # curves per input sequence
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.norm_mean = np.asarray(self.norm_mean, dtype=np.float64)
        self.norm_scale = np.asarray(self.norm_scale, dtype=np.float64)
        if np.any(self.norm_scale <= 0.0):
            raise ValueError("normalization scale must be > 0")
        length, four_h = self.w_x.shape
        hidden = four_h // 4
        if self.w_h.shape != (hidden, four_h) or self.b.shape != (four_h,):
            raise ValueError("inconsistent gate parameter shapes")
        if self.v_out.shape != (length, hidden) or self.b_out.shape != (length,):
            raise ValueError("inconsistent readout shapes")
        if self.norm_mean.shape != (length,) or self.norm_scale.shape != (length,):
            raise ValueError("normalization stats do not match the curve length")

    @property
    def length(self) -> int:
        return self.w_x.shape[0]

    @property
    def hidden(self) -> int:
        return self.w_h.shape[0]

    def params(self) -> dict[str, np.ndarray]:
        return {
            "w_x": self.w_x, "w_h": self.w_h, "b": self.b,
            "v_out": self.v_out, "b_out": self.b_out,
        }

    def _gate_slice(self, gate: str) -> slice:
        k = GATES.index(gate)
        return slice(k * self.hidden, (k + 1) * self.hidden)

    def gate_weights(self, gate: str) -> np.ndarray:
        """(hidden, length) input weight matrix of one gate."""
        return self.w_x[:, self._gate_slice(gate)].T

    def recurrent_weights(self, gate: str) -> np.ndarray:
        """(hidden, hidden) recurrent weight matrix of one gate."""
        return self.w_h[:, self._gate_slice(gate)].T

    def gate_bias(self, gate: str) -> np.ndarray:
        return self.b[self._gate_slice(gate)]

    def normalize(self, raw: np.ndarray) -> np.ndarray:
        return (raw - self.norm_mean) / self.norm_scale

    def denormalize(self, normed: np.ndarray) -> np.ndarray:
        return normed * self.norm_scale + self.norm_mean


# ---------------------------------------------------------------------------
# numerics
# ---------------------------------------------------------------------------

def _sigmoid(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def mse(predicted, target) -> float:
    """Mean over the curve of squared pointwise differences."""
    a = predicted.samples if isinstance(predicted, PowerCurve) else np.asarray(predicted, dtype=np.float64)
    b = target.samples if isinstance(target, PowerCurve) else np.asarray(target, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"curve lengths differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.mean(d * d))


def _forward_seq(params: dict, x: np.ndarray, need_cache: bool = False):
    """Run the recurrence over x (batch, steps, length).

    Returns (readout, last_hidden, caches); caches hold per-step gate
    activations when requested (for backprop and for gate-range checks).
    """
    batch, steps, length = x.shape
    hidden = params["w_h"].shape[0]
    a_x = x.reshape(batch * steps, length) @ params["w_x"] + params["b"]
    a_x = a_x.reshape(batch, steps, 4 * hidden)

    h = np.zeros((batch, hidden), dtype=x.dtype)
    c = np.zeros((batch, hidden), dtype=x.dtype)
    caches = []
    for t in range(steps):
        a = a_x[:, t, :] + h @ params["w_h"]
        i = _sigmoid(a[:, :hidden])
        f = _sigmoid(a[:, hidden:2 * hidden])
        o = _sigmoid(a[:, 2 * hidden:3 * hidden])
        g = np.tanh(a[:, 3 * hidden:])
        c_prev = c
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h_prev = h
        h = o * tc
        if need_cache:
            caches.append((i, f, o, g, c_prev, tc, h_prev))
    y = h @ params["v_out"].T + params["b_out"]
    return y, h, caches


def _loss_and_grads(params: dict, x: np.ndarray, y_true: np.ndarray, scale: float):
    """Squared-error loss and gradients for one chunk.

    ``scale`` is 1 / (total pairs * length); summing chunk contributions
    reproduces the full-batch mean loss and its gradient.  Overflow is not
    trapped here; the train loop's finite checks abort a diverging run.
    """
    batch, steps, length = x.shape
    hidden = params["w_h"].shape[0]
    y, h_last, caches = _forward_seq(params, x, need_cache=True)
    diff = y - y_true
    loss = float(np.sum(diff * diff)) * scale

    d_y = (2.0 * scale) * diff
    grads = {
        "v_out": d_y.T @ h_last,
        "b_out": d_y.sum(axis=0),
        "w_h": np.zeros_like(params["w_h"]),
        "b": np.zeros_like(params["b"]),
    }
    dh = d_y @ params["v_out"]
    dc = np.zeros((batch, hidden), dtype=x.dtype)
    d_a = np.empty((batch, steps, 4 * hidden), dtype=x.dtype)
    for t in reversed(range(steps)):
        i, f, o, g, c_prev, tc, h_prev = caches[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        da = d_a[:, t, :]
        da[:, :hidden] = dc * g * i * (1.0 - i)
        da[:, hidden:2 * hidden] = dc * c_prev * f * (1.0 - f)
        da[:, 2 * hidden:3 * hidden] = do * o * (1.0 - o)
        da[:, 3 * hidden:] = dc * i * (1.0 - g * g)
        grads["w_h"] += h_prev.T @ da
        grads["b"] += da.sum(axis=0)
        dh = da @ params["w_h"].T
        dc = dc * f
    grads["w_x"] = x.reshape(batch * steps, length).T @ d_a.reshape(batch * steps, 4 * hidden)
    return loss, grads


@dataclass
class AdamState:
    """Adam moments; update uses bias correction m/(1-b1^t), v/(1-b2^t)."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0

    @classmethod
    def for_params(cls, params: dict, config: TrainConfig) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            learning_rate=config.learning_rate,
            beta1=config.beta1,
            beta2=config.beta2,
            eps=config.eps,
        )

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for k, p in params.items():
            g = grads[k]
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * (g * g)
            m_hat = self.m[k] / bc1
            v_hat = self.v[k] / bc2
            p -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients down to a global norm of max_norm. Returns the norm."""
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.asarray(g, dtype=np.float64) ** 2))
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        factor = max_norm / norm
        for g in grads.values():
            g *= factor
    return norm


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def _init_params(length: int, hidden: int, rng: np.random.Generator, dtype) -> dict:
    bound = 1.0 / np.sqrt(hidden)
    params = {
        "w_x": rng.uniform(-bound, bound, size=(length, 4 * hidden)),
        "w_h": rng.uniform(-bound, bound, size=(hidden, 4 * hidden)),
        "b": np.zeros(4 * hidden),
        "v_out": rng.uniform(-bound, bound, size=(length, hidden)),
        "b_out": np.zeros(length),
    }
    params["b"][hidden:2 * hidden] = 1.0   # open forget gates at start
    return {k: v.astype(dtype) for k, v in params.items()}


def _index_pairs(pairs: list[SupervisedPair]):
    """Deduplicate the curves behind the pairs into one matrix plus indices."""
    rows: dict[int, np.ndarray] = {}
    for pair in pairs:
        for curve in list(pair.window) + [pair.target]:
            rows.setdefault(curve.op_index, curve.samples)
    order = sorted(rows)
    lookup = {op: k for k, op in enumerate(order)}
    matrix = np.stack([rows[op] for op in order])
    win_idx = np.array(
        [[lookup[c.op_index] for c in pair.window] for pair in pairs], dtype=np.intp
    )
    tgt_idx = np.array([lookup[pair.target.op_index] for pair in pairs], dtype=np.intp)
    return matrix, win_idx, tgt_idx


def _check_pairs(pairs: list[SupervisedPair]):
    if not pairs:
        raise ValueError("no training pairs")
    window = pairs[0].window.size
    length = len(pairs[0].target)
    for pair in pairs:
        if pair.window.size != window:
            raise ValueError("pairs mix window sizes")
        if len(pair.target) != length:
            raise ValueError("pairs mix curve lengths")
    return window, length


def _dataset_loss(params, matrix, win_idx, tgt_idx, length) -> float:
    total = 0.0
    n = win_idx.shape[0]
    for lo in range(0, n, _CHUNK):
        hi = min(lo + _CHUNK, n)
        x = matrix[win_idx[lo:hi]]
        y, _, _ = _forward_seq(params, x)
        diff = y - matrix[tgt_idx[lo:hi]]
        total += float(np.sum(diff * diff))
    return total / (n * length)


def train(
    pairs: list[SupervisedPair],
    config: TrainConfig | None = None,
    val_pairs: list[SupervisedPair] | None = None,
) -> tuple[ForecastModel, TrainReport]:
    """Fit the forecaster on supervised pairs.

    Deterministic for a fixed seed: fixed initialization, fixed chunk and
    batch order, no shuffling.  With ``batch_size=None`` the gradient of the
    whole dataset is accumulated (in fixed chunk order) before each Adam
    step; otherwise one step is taken per consecutive mini-batch.  When no
    validation pairs are given the reported validation losses repeat the
    training losses.
    """
    config = config or TrainConfig()
    window, length = _check_pairs(pairs)
    dtype = np.dtype(config.dtype)
    t0 = time.perf_counter()

    raw, win_idx, tgt_idx = _index_pairs(pairs)
    norm_mean = raw.mean(axis=0)
    std = raw.std(axis=0)
    tol = _SCALE_RTOL * np.maximum(np.abs(norm_mean), 1.0)
    norm_scale = np.where(std <= tol, 1.0, std)
    matrix = ((raw - norm_mean) / norm_scale).astype(dtype)

    val_set = None
    if val_pairs is not None:
        v_window, v_length = _check_pairs(val_pairs)
        if (v_window, v_length) != (window, length):
            raise ValueError("validation pairs do not match training dimensions")
        v_raw, v_win, v_tgt = _index_pairs(val_pairs)
        val_set = (((v_raw - norm_mean) / norm_scale).astype(dtype), v_win, v_tgt)

    rng = np.random.default_rng(config.seed)
    params = _init_params(length, config.hidden, rng, dtype)
    adam = AdamState.for_params(params, config)

    n = len(pairs)
    step = config.batch_size or _CHUNK
    full_batch = config.batch_size is None
    scale_full = 1.0 / (n * length)

    train_losses: list[float] = []
    val_losses: list[float] = []
    # saturated gates overflow exp() harmlessly, and a diverging run would
    # flood the log with numpy warnings before the finite checks abort it
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            if full_batch:
                acc = {k: np.zeros_like(p) for k, p in params.items()}
                loss = 0.0
                for lo in range(0, n, step):
                    hi = min(lo + step, n)
                    part, grads = _loss_and_grads(
                        params, matrix[win_idx[lo:hi]], matrix[tgt_idx[lo:hi]], scale_full
                    )
                    loss += part
                    for k in acc:
                        acc[k] += grads[k]
                clip_gradients(acc, config.clip_norm)
                adam.step(params, acc)
            else:
                loss = 0.0
                for lo in range(0, n, step):
                    hi = min(lo + step, n)
                    batch_scale = 1.0 / ((hi - lo) * length)
                    part, grads = _loss_and_grads(
                        params, matrix[win_idx[lo:hi]], matrix[tgt_idx[lo:hi]], batch_scale
                    )
                    loss += part * (hi - lo) / n
                    clip_gradients(grads, config.clip_norm)
                    adam.step(params, grads)

            if not np.isfinite(loss):
                raise TrainingDiverged(f"epoch {epoch}: training loss is not finite")
            for k, p in params.items():
                if not np.all(np.isfinite(p)):
                    raise TrainingDiverged(f"epoch {epoch}: non-finite values in {k}")

            train_losses.append(loss)
            if val_set is not None:
                val_losses.append(_dataset_loss(params, *val_set, length))
            else:
                val_losses.append(loss)
            if config.target_val_mse is not None and val_losses[-1] < config.target_val_mse:
                break

    model = ForecastModel(
        **params,
        norm_mean=norm_mean,
        norm_scale=norm_scale,
        window=window,
        meta={
            "format_version": MODEL_FORMAT_VERSION,
            "window": window,
            "length": length,
            "hidden": config.hidden,
            "seed": config.seed,
            "epochs": len(train_losses),
            "dtype": config.dtype,
            "input_order": "oldest_first",
            "training_pairs": n,
        },
    )
    report = TrainReport(
        train_losses=train_losses,
        val_losses=val_losses,
        wall_seconds=time.perf_counter() - t0,
        epochs_run=len(train_losses),
    )
    return model, report


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------

def forward_samples(model: ForecastModel, window_matrix: np.ndarray) -> np.ndarray:
    """Predict the next curve (raw watts) from a (window, length) matrix."""
    x = np.asarray(window_matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape != (model.window, model.length):
        raise ValueError(
            f"expected a window of {model.window} curves of {model.length} "
            f"samples, got array of shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite value in forecaster input")
    dtype = np.dtype(model.meta.get("dtype", "float64"))
    normed = model.normalize(x).astype(dtype)[np.newaxis]
    y, _, _ = _forward_seq(model.params(), normed)
    return model.denormalize(y[0].astype(np.float64))


def forward(model: ForecastModel, window: CurveWindow) -> PowerCurve:
    """Predict the curve expected at the operation after the window.

    The readout is clipped at 0 W so the prediction is itself a valid
    power curve.
    """
    if window.size != model.window:
        raise ValueError(
            f"expected window of {model.window} curves, got {window.size}"
        )
    samples = np.clip(forward_samples(model, window.as_matrix()), 0.0, None)
    return PowerCurve(
        samples=samples,
        op_index=window.last.op_index + 1,
        timestamp=window.last.timestamp + OP_PERIOD_S,
    )


# ---------------------------------------------------------------------------
# gradient verification
# ---------------------------------------------------------------------------

def gradient_check(
    model: ForecastModel,
    pair: SupervisedPair,
    step: float = 1e-5,
    tolerance: float | None = None,
) -> float:
    """Compare analytic BPTT gradients with central finite differences.

    Runs in float64 over every parameter element and returns the maximum
    relative error |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).  Intended for
    small models; cost grows with the parameter count times the forward
    cost.  When ``tolerance`` is given, a failure raises AssertionError.
    """
    params = {k: p.astype(np.float64).copy() for k, p in model.params().items()}
    x = model.normalize(pair.window.as_matrix())[np.newaxis]
    y_true = model.normalize(pair.target.samples)[np.newaxis]
    scale = 1.0 / y_true.size

    _, analytic = _loss_and_grads(params, x, y_true, scale)

    def loss_at() -> float:
        y, _, _ = _forward_seq(params, x)
        d = y - y_true
        return float(np.sum(d * d)) * scale

    worst = 0.0
    for name, p in params.items():
        flat = p.ravel()
        g_a = analytic[name].ravel()
        for idx in range(flat.size):
            keep = flat[idx]
            flat[idx] = keep + step
            up = loss_at()
            flat[idx] = keep - step
            down = loss_at()
            flat[idx] = keep
            g_n = (up - down) / (2.0 * step)
            rel = abs(g_a[idx] - g_n) / max(abs(g_a[idx]), abs(g_n), 1e-8)
            worst = max(worst, rel)
    if tolerance is not None and worst > tolerance:
        raise AssertionError(f"gradient check failed: max relative error {worst:.3e}")
    return worst


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def save_model(model: ForecastModel, path):
    """Write a versioned JSON weights file (full-precision decimal floats)."""
    blocks = {}
    for gate in GATES:
        blocks[f"w_{gate}"] = model.gate_weights(gate)
        blocks[f"u_{gate}"] = model.recurrent_weights(gate)
        blocks[f"b_{gate}"] = model.gate_bias(gate)
    blocks["v_out"] = model.v_out
    blocks["b_out"] = model.b_out
    hyper = {
        "window": model.window,
        "length": model.length,
        "hidden": model.hidden,
        "dtype": model.meta.get("dtype", str(model.w_x.dtype)),
    }
    for key in ("seed", "epochs", "training_pairs"):
        if key in model.meta:
            hyper[key] = model.meta[key]
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "hyper": hyper,
        "input_order": "oldest_first",
        "normalization": {
            "mean": model.norm_mean.tolist(),
            "scale": model.norm_scale.tolist(),
        },
        "parameters": {
            name: {"shape": list(arr.shape), "data": np.asarray(arr, dtype=np.float64).ravel().tolist()}
            for name, arr in blocks.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_model(path) -> ForecastModel:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"not a valid weights file: {exc.msg}") from exc
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError("not a weights file (missing format_version)")
    if doc["format_version"] != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported weights format version {doc['format_version']} "
            f"(expected {MODEL_FORMAT_VERSION})"
        )
    try:
        hyper = doc["hyper"]
        window = int(hyper["window"])
        length = int(hyper["length"])
        hidden = int(hyper["hidden"])
        dtype = np.dtype(hyper.get("dtype") or "float64")
        norm = doc["normalization"]
        raw = {
            name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
            for name, entry in doc["parameters"].items()
        }
        w_x = np.empty((length, 4 * hidden))
        w_h = np.empty((hidden, 4 * hidden))
        b = np.empty(4 * hidden)
        for k, gate in enumerate(GATES):
            sl = slice(k * hidden, (k + 1) * hidden)
            w_x[:, sl] = raw[f"w_{gate}"].T
            w_h[:, sl] = raw[f"u_{gate}"].T
            b[sl] = raw[f"b_{gate}"]
        model = ForecastModel(
            w_x=w_x.astype(dtype),
            w_h=w_h.astype(dtype),
            b=b.astype(dtype),
            v_out=raw["v_out"].astype(dtype),
            b_out=raw["b_out"].astype(dtype),
            norm_mean=np.asarray(norm["mean"], dtype=np.float64),
            norm_scale=np.asarray(norm["scale"], dtype=np.float64),
            window=window,
            meta={"format_version": MODEL_FORMAT_VERSION, **hyper,
                  "input_order": doc.get("input_order", "oldest_first")},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed weights file: {exc}") from exc
    return model
