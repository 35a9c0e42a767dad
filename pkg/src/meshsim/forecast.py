"""Univariate traffic-load forecasting with a small hand-written LSTM.

Standard gates without peepholes::

    z_t = [x_t, h_{t-1}]
    f, i, o = sigmoid(W_{f,i,o} z_t + b_{f,i,o})
    g = tanh(W_c z_t + b_c)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)
    y = w_y . h_T + b_y

Gate weights are kept stacked in one ``(4H, 1+H)`` array in f, i, o, c
order; ``W_f`` and friends are views into it.  Training is plain
per-sample SGD with gradient-norm clipping over sliding windows of a
series normalised to zero mean and unit variance.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceDetected, InsufficientData, WindowMismatch

GATES = ("f", "i", "o", "c")
MODEL_FORMAT = "meshsim-lstm v1"


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True)
class ForecastConfig:
    window: int = 30
    horizon: int = 5
    hidden_dim: int = 8
    lr: float = 0.05
    epochs: int = 20
    seed: int = 0
    clip: float = 5.0

    def __post_init__(self):
        if self.window < 1 or self.horizon < 1:
            raise ValueError("window and horizon must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.hidden_dim < 1 or self.epochs < 1:
            raise ValueError("hidden_dim and epochs must be >= 1")


@dataclass
class LstmModel:
    W: np.ndarray          # (4H, 1+H) stacked f, i, o, c
    b: np.ndarray          # (4H,)
    w_y: np.ndarray        # (H,)
    b_y: float = 0.0
    mean: float = 0.0
    std: float = 1.0
    window: int = 1
    horizon: int = 1
    train_mse: float = math.nan

    @property
    def hidden_dim(self) -> int:
        return self.w_y.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] - self.hidden_dim

    def _gate(self, k: int) -> slice:
        H = self.hidden_dim
        return slice(k * H, (k + 1) * H)

    W_f = property(lambda s: s.W[s._gate(0)])
    W_i = property(lambda s: s.W[s._gate(1)])
    W_o = property(lambda s: s.W[s._gate(2)])
    W_c = property(lambda s: s.W[s._gate(3)])
    b_f = property(lambda s: s.b[s._gate(0)])
    b_i = property(lambda s: s.b[s._gate(1)])
    b_o = property(lambda s: s.b[s._gate(2)])
    b_c = property(lambda s: s.b[s._gate(3)])

    @classmethod
    def init(cls, hidden_dim: int, rng: np.random.Generator, scale: float = 0.1,
             forget_bias: float = 1.0) -> "LstmModel":
        """Weights uniform in [-scale, scale], gate biases zero except forget."""
        H = hidden_dim
        W = rng.uniform(-scale, scale, (4 * H, 1 + H))
        b = np.zeros(4 * H)
        b[:H] = forget_bias
        w_y = rng.uniform(-scale, scale, H)
        return cls(W=W, b=b, w_y=w_y, b_y=0.0)

    @classmethod
    def zeros(cls, hidden_dim: int) -> "LstmModel":
        H = hidden_dim
        return cls(W=np.zeros((4 * H, 1 + H)), b=np.zeros(4 * H), w_y=np.zeros(H))

    def params(self) -> dict[str, np.ndarray]:
        """Named parameter views (b_y as a 0-d array)."""
        out = {f"W_{g}": getattr(self, f"W_{g}") for g in GATES}
        out.update({f"b_{g}": getattr(self, f"b_{g}") for g in GATES})
        out["w_y"] = self.w_y
        out["b_y"] = np.asarray(self.b_y)
        return out

    def copy(self) -> "LstmModel":
        return LstmModel(self.W.copy(), self.b.copy(), self.w_y.copy(), float(self.b_y),
                         self.mean, self.std, self.window, self.horizon, self.train_mse)

    def normalize(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.std

    def denormalize(self, z):
        return np.asarray(z, dtype=float) * self.std + self.mean

    def to_text(self) -> str:
        buf = io.StringIO()
        buf.write(f"{MODEL_FORMAT}\n")
        buf.write(f"input_dim={self.input_dim}\nhidden_dim={self.hidden_dim}\n")
        buf.write(f"window={self.window}\nhorizon={self.horizon}\n")
        buf.write(f"mean={self.mean!r}\nstd={self.std!r}\ntrain_mse={self.train_mse!r}\n")
        for name, arr in (("W", self.W), ("b", self.b), ("w_y", self.w_y),
                          ("b_y", np.array([self.b_y]))):
            rows = np.atleast_2d(arr)
            buf.write(f"block={name} rows={rows.shape[0]}\n")
            for row in rows:
                buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "LstmModel":
        lines = text.splitlines()
        if not lines or lines[0] != MODEL_FORMAT:
            raise ValueError("not a meshsim LSTM model file")
        head, blocks, i = {}, {}, 1
        while i < len(lines):
            line = lines[i]
            if line.startswith("block="):
                meta = dict(tok.split("=") for tok in line.split())
                n = int(meta["rows"])
                blocks[meta["block"]] = np.array(
                    [[float(v) for v in ln.split(",")] for ln in lines[i + 1:i + 1 + n]])
                i += 1 + n
            else:
                key, _, val = line.partition("=")
                head[key] = val
                i += 1
        return cls(W=blocks["W"], b=blocks["b"].ravel(), w_y=blocks["w_y"].ravel(),
                   b_y=float(blocks["b_y"].ravel()[0]), mean=float(head["mean"]),
                   std=float(head["std"]), window=int(head["window"]),
                   horizon=int(head["horizon"]), train_mse=float(head["train_mse"]))


@dataclass
class ForwardCache:
    z: list = field(default_factory=list)
    gates: list = field(default_factory=list)   # (f, i, o, g)
    c_prev: list = field(default_factory=list)
    tanh_c: list = field(default_factory=list)
    h_last: np.ndarray | None = None


def lstm_forward(model: LstmModel, sequence) -> tuple[float, ForwardCache]:
    """Run one (already normalised) sequence; returns prediction and cache."""
    seq = np.asarray(sequence, dtype=float).ravel()
    H = model.hidden_dim
    W, b = model.W, model.b
    h = np.zeros(H)
    c = np.zeros(H)
    cache = ForwardCache()
    z = np.empty(1 + H)
    for x in seq:
        z = np.empty(1 + H)
        z[0] = x
        z[1:] = h
        a = W @ z + b
        f = _sigmoid(a[:H])
        i = _sigmoid(a[H:2 * H])
        o = _sigmoid(a[2 * H:3 * H])
        g = np.tanh(a[3 * H:])
        cache.z.append(z)
        cache.gates.append((f, i, o, g))
        cache.c_prev.append(c)
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        cache.tanh_c.append(tc)
    cache.h_last = h
    return float(model.w_y @ h + model.b_y), cache


def lstm_forward_batch(model: LstmModel, sequences) -> np.ndarray:
    """Vectorised forward pass over a (batch, window) array of sequences."""
    X = np.atleast_2d(np.asarray(sequences, dtype=float))
    B = X.shape[0]
    H = model.hidden_dim
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    Wx, Wh = model.W[:, 0], model.W[:, 1:]
    for t in range(X.shape[1]):
        a = np.outer(X[:, t], Wx) + h @ Wh.T + model.b
        f = _sigmoid(a[:, :H])
        i = _sigmoid(a[:, H:2 * H])
        o = _sigmoid(a[:, 2 * H:3 * H])
        g = np.tanh(a[:, 3 * H:])
        c = f * c + i * g
        h = o * np.tanh(c)
    return h @ model.w_y + model.b_y


@dataclass
class LstmGrads:
    W: np.ndarray
    b: np.ndarray
    w_y: np.ndarray
    b_y: float

    def named(self) -> dict[str, np.ndarray]:
        H = self.w_y.shape[0]
        out = {f"W_{g}": self.W[k * H:(k + 1) * H] for k, g in enumerate(GATES)}
        out.update({f"b_{g}": self.b[k * H:(k + 1) * H] for k, g in enumerate(GATES)})
        out["w_y"] = self.w_y
        out["b_y"] = np.asarray(self.b_y)
        return out

    def norm(self) -> float:
        parts = (self.W.ravel(), self.b, self.w_y, np.atleast_1d(np.float64(self.b_y)))
        with np.errstate(over="ignore", invalid="ignore"):
            return float(np.sqrt(sum(np.sum(a * a) for a in parts)))


def _backward(model: LstmModel, cache: ForwardCache, residual: float) -> LstmGrads:
    H = model.hidden_dim
    dW = np.zeros_like(model.W)
    db = np.zeros_like(model.b)
    dw_y = residual * cache.h_last
    dh = residual * model.w_y
    dc = np.zeros(H)
    Wh_T = model.W[:, 1:].T
    da = np.empty(4 * H)
    for t in range(len(cache.z) - 1, -1, -1):
        f, i, o, g = cache.gates[t]
        tc = cache.tanh_c[t]
        dc = dc + dh * o * (1.0 - tc * tc)
        da[:H] = dc * cache.c_prev[t] * f * (1.0 - f)
        da[H:2 * H] = dc * g * i * (1.0 - i)
        da[2 * H:3 * H] = dh * tc * o * (1.0 - o)
        da[3 * H:] = dc * i * (1.0 - g * g)
        dW += np.outer(da, cache.z[t])
        db += da
        dh = Wh_T @ da
        dc = dc * f
    return LstmGrads(dW, db, dw_y, float(residual))


def lstm_gradients(model: LstmModel, sequence, target: float) -> LstmGrads:
    """Exact BPTT gradients of 0.5 * (prediction - target)**2."""
    pred, cache = lstm_forward(model, sequence)
    return _backward(model, cache, pred - target)


def sliding_pairs(series_n: np.ndarray, window: int, horizon: int):
    """Inputs ``x[s:s+window]`` and targets ``x[s+window-1+horizon]``."""
    n = len(series_n) - window - horizon + 1
    X = np.lib.stride_tricks.sliding_window_view(series_n, window)[:n]
    y = series_n[window - 1 + horizon:window - 1 + horizon + n]
    return X, y


@dataclass
class LossCurve:
    mse: list[float] = field(default_factory=list)

    def to_csv(self) -> str:
        return "epoch,mse\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(self.mse))


def train_forecaster(series, cfg: ForecastConfig = ForecastConfig()) -> tuple[LstmModel, LossCurve]:
    """Fit an LSTM to predict the value ``horizon`` ticks after each window.

    Samples are visited one at a time in a seeded shuffled order each
    epoch.  ``loss_curve.mse[e]`` is the mean per-sample loss seen during
    epoch ``e``; ``model.train_mse`` is a clean pass after training, both
    in normalised units.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise ValueError("series must be a finite 1-D sequence")
    if len(x) < cfg.window + cfg.horizon + 1:
        raise InsufficientData(
            f"series length {len(x)} < window + horizon + 1 = {cfg.window + cfg.horizon + 1}")
    rng = np.random.default_rng(cfg.seed)
    model = LstmModel.init(cfg.hidden_dim, rng)
    model.window, model.horizon = cfg.window, cfg.horizon
    model.mean = float(np.mean(x))
    std = float(np.std(x))
    model.std = std if std > 1e-12 else 1.0
    X, y = sliding_pairs(model.normalize(x), cfg.window, cfg.horizon)

    curve = LossCurve()
    with np.errstate(over="ignore", invalid="ignore"):
        _fit(model, X, y, cfg, rng, curve)
    model.train_mse = float(np.mean((lstm_forward_batch(model, X) - y) ** 2))
    return model, curve


def _fit(model, X, y, cfg, rng, curve):
    for _ in range(cfg.epochs):
        total = 0.0
        for s in rng.permutation(len(y)):
            pred, cache = lstm_forward(model, X[s])
            r = pred - y[s]
            total += 0.5 * r * r
            gr = _backward(model, cache, r)
            step = cfg.lr
            gn = gr.norm()
            if gn > cfg.clip:
                step *= cfg.clip / gn
            model.W -= step * gr.W
            model.b -= step * gr.b
            model.w_y -= step * gr.w_y
            model.b_y -= step * gr.b_y
        epoch_mse = 2.0 * total / len(y)
        if not math.isfinite(epoch_mse):
            raise DivergenceDetected(f"non-finite training loss at epoch {len(curve.mse)}")
        curve.mse.append(float(epoch_mse))


def predict(model: LstmModel, recent_window) -> float:
    """Denormalised forecast ``horizon`` ticks ahead, clamped at zero."""
    w = np.asarray(recent_window, dtype=float).ravel()
    if w.shape[0] != model.window:
        raise WindowMismatch(f"window of {w.shape[0]} values, model expects {model.window}")
    z, _ = lstm_forward(model, model.normalize(w))
    return max(0.0, float(model.denormalize(z)))


def predict_batch(model: LstmModel, windows) -> np.ndarray:
    W = np.atleast_2d(np.asarray(windows, dtype=float))
    if W.shape[1] != model.window:
        raise WindowMismatch(f"window of {W.shape[1]} values, model expects {model.window}")
    return np.maximum(0.0, model.denormalize(lstm_forward_batch(model, model.normalize(W))))


def persistence_baseline(recent_window) -> float:
    w = np.asarray(recent_window, dtype=float).ravel()
    if w.size == 0:
        raise ValueError("window must be non-empty")
    return float(w[-1])


def persistence_mse_sinusoid(horizon: int, period: float, amplitude: float = 1.0) -> float:
    """Long-run MSE of last-value forecasting on ``A sin(2 pi t / T)``: 2 A^2 sin^2(pi h / T)."""
    return 2.0 * amplitude ** 2 * math.sin(math.pi * horizon / period) ** 2
