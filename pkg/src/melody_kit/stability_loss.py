"""Differentiable penalties for short vocal / non-vocal bursts.

The voicing column ``a_1..a_T`` of a prediction grid is cut into every
subsequence of length ``m`` (stride 1) for ``3 <= m <= M``. A window scores

    L^m = (1 - a_1)(1 - a_m)(1 - prod_{i=2}^{m-1} (1 - a_i))

which is 1 on a binary window that is 0 at both ends with some 1 inside,
and 0 whenever an end is 1 or the interior is all 0. Each window score goes
through the S-curve ``x^r / (x^r + (1-x)^r)`` and the aggregate is the mean
over all windows of all lengths pooled together. The non-vocal penalty is
the same thing applied to ``1 - a``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BCE_EPS = 1e-7


@dataclass(frozen=True)
class LossParams:
    M_v: int = 30
    M_nv: int = 7
    r: float = 5.0
    weight_v: float = 1.0
    weight_nv: float = 1.0
    eps: float = BCE_EPS

    def __post_init__(self):
        if self.M_v < 3 or self.M_nv < 3:
            raise ValueError(f"M_v and M_nv must be >= 3, got {self.M_v}, {self.M_nv}")
        if not self.r > 1:
            raise ValueError(f"r must be > 1, got {self.r}")


@dataclass
class LossBreakdown:
    total: float
    bce: float
    l_v: float
    l_nv: float
    per_window: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"total": self.total, "bce": self.bce, "l_v": self.l_v, "l_nv": self.l_nv}


def _check_window(seq: np.ndarray) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.float64)
    if seq.shape[-1] < 3:
        raise ValueError(f"window length must be >= 3, got {seq.shape[-1]}")
    return seq


def window_loss_v(seq) -> np.ndarray | float:
    """Vocal-burst score of a window (or of each row of a 2-D array)."""
    seq = _check_window(seq)
    interior = np.prod(1.0 - seq[..., 1:-1], axis=-1)
    out = (1.0 - seq[..., 0]) * (1.0 - seq[..., -1]) * (1.0 - interior)
    return float(out) if np.ndim(out) == 0 else out


def window_loss_nv(seq) -> np.ndarray | float:
    """Non-vocal-burst score: :func:`window_loss_v` of the flipped window."""
    return window_loss_v(1.0 - _check_window(seq))


def s_curve(x, r: float):
    """Sharpening map ``x^r / (x^r + (1-x)^r)`` on [0, 1]."""
    if not r > 1:
        raise ValueError(f"r must be > 1, got {r}")
    x = np.asarray(x, dtype=np.float64)
    num = x**r
    out = num / (num + (1.0 - x) ** r)
    return float(out) if out.ndim == 0 else out


def s_curve_grad(x, r: float):
    x = np.asarray(x, dtype=np.float64)
    num = x**r
    den = num + (1.0 - x) ** r
    return r * x ** (r - 1) * (1.0 - x) ** (r - 1) / den**2


def n_windows(T: int, M: int) -> int:
    return sum(max(T - m + 1, 0) for m in range(3, M + 1))


def _aggregate(a: np.ndarray, M: int, r: float, want_grad: bool):
    """Mean S-curved window score over m in [3, M]; optional gradient.

    Works on all start positions at once and grows the window one frame at
    a time, so the interior product of window (t, m) is that of (t, m-1)
    times one factor. The gradient runs the same recursion backwards.
    """
    T = len(a)
    total_windows = n_windows(T, M)
    per_window = {}
    if total_windows == 0:
        return 0.0, per_window, (np.zeros(T) if want_grad else None)

    M_eff = min(M, T)
    apad = np.concatenate([a, np.zeros(M_eff)])
    starts = np.arange(T)
    head = 1.0 - a
    prods = [np.ones(T)]  # prods[m - 2]: interior product of windows of length m
    tails, factors, coefs = {}, {}, {}
    acc = 0.0
    for m in range(3, M_eff + 1):
        factor = 1.0 - apad[m - 2:m - 2 + T]
        prod = prods[-1] * factor
        prods.append(prod)
        tail = 1.0 - apad[m - 1:m - 1 + T]
        raw = head * tail * (1.0 - prod)
        n = T - m + 1
        scored = s_curve(raw[:n], r)
        per_window[m] = scored
        acc += float(np.sum(scored))
        if want_grad:
            ds = np.zeros(T)
            ds[:n] = s_curve_grad(raw[:n], r)
            tails[m], factors[m], coefs[m] = tail, factor, ds

    value = acc / total_windows
    if not want_grad:
        return value, per_window, None

    grad = np.zeros(T + M_eff)
    prod_adj = np.zeros(T)
    for m in range(M_eff, 2, -1):
        ds, tail, prod = coefs[m], tails[m], prods[m - 2]
        outer = 1.0 - prod
        grad[:T] -= ds * tail * outer
        grad[m - 1:m - 1 + T] -= ds * head * outer
        # adjoint of the interior product, own term plus the longer windows
        if m < M_eff:
            prod_adj = prod_adj * factors[m + 1]
        prod_adj = prod_adj - ds * head * tail
        grad[m - 2:m - 2 + T] -= prod_adj * prods[m - 3]
    return value, per_window, grad[:T] / total_windows


def _voicing(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError(f"voicing sequence must be 1-D, got shape {a.shape}")
    if a.size and (a.min() < 0 or a.max() > 1):
        raise ValueError("voicing values must lie in [0, 1]")
    return a


def aggregate_loss_v(a, p: LossParams = LossParams()) -> tuple[float, dict]:
    """Vocal-burst loss over a voicing sequence.

    Returns the mean over all windows and a dict ``{m: S-curved scores}``.
    Sequences shorter than 3 frames have no windows and score 0.
    """
    value, per_window, _ = _aggregate(_voicing(a), p.M_v, p.r, False)
    return value, per_window


def aggregate_loss_nv(a, p: LossParams = LossParams()) -> tuple[float, dict]:
    value, per_window, _ = _aggregate(1.0 - _voicing(a), p.M_nv, p.r, False)
    return value, per_window


def grad_aggregate_loss_v(a, p: LossParams = LossParams()) -> np.ndarray:
    return _aggregate(_voicing(a), p.M_v, p.r, True)[2]


def grad_aggregate_loss_nv(a, p: LossParams = LossParams()) -> np.ndarray:
    return -_aggregate(1.0 - _voicing(a), p.M_nv, p.r, True)[2]


# ----------------------------------------------------------------------
# BCE and the full objective
# ----------------------------------------------------------------------


def _pair(pred, label):
    pred = np.asarray(pred, dtype=np.float64)
    label = np.asarray(label, dtype=np.float64)
    if pred.shape != label.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs label {label.shape}")
    return pred, label


def bce(pred, label, eps: float = BCE_EPS) -> float:
    """Mean binary cross entropy over every cell, predictions clamped to [eps, 1-eps]."""
    pred, label = _pair(pred, label)
    p = np.clip(pred, eps, 1.0 - eps)
    cells = -(label * np.log(p) + (1.0 - label) * np.log1p(-p))
    return float(np.mean(cells))


def grad_bce(pred, label, eps: float = BCE_EPS) -> np.ndarray:
    """Gradient of :func:`bce`; zero where the clamp is active."""
    pred, label = _pair(pred, label)
    inside = (pred >= eps) & (pred <= 1.0 - eps)
    p = np.clip(pred, eps, 1.0 - eps)
    g = (p - label) / (p * (1.0 - p)) / pred.size
    return np.where(inside, g, 0.0)


def _excerpts(pred, label):
    pred, label = _pair(pred, label)
    if pred.ndim == 2:
        return pred[None], label[None]
    if pred.ndim == 3:
        return pred, label
    raise ValueError(f"prediction grid must be T x (F+1) or B x T x (F+1), got {pred.shape}")


def total_loss(pred, label, p: LossParams = LossParams()) -> LossBreakdown:
    """``bce + weight_v * L_v + weight_nv * L_nv`` with column 0 as voicing.

    A 3-D batch is scored per excerpt and the components averaged.
    """
    preds, labels = _excerpts(pred, label)
    parts = np.zeros(3)
    per_window: dict = {}
    for pr, lb in zip(preds, labels):
        voicing = _voicing(pr[:, 0])
        l_v, win_v = aggregate_loss_v(voicing, p)
        l_nv, win_nv = aggregate_loss_nv(voicing, p)
        parts += (bce(pr, lb, p.eps), p.weight_v * l_v, p.weight_nv * l_nv)
        for kind, wins in (("v", win_v), ("nv", win_nv)):
            for m, vals in wins.items():
                key = (kind, m)
                per_window[key] = np.concatenate([per_window[key], vals]) if key in per_window else vals
    parts /= len(preds)
    b, lv, lnv = (float(x) for x in parts)
    return LossBreakdown(total=b + lv + lnv, bce=b, l_v=lv, l_nv=lnv, per_window=per_window)


def grad_total_loss(pred, label, p: LossParams = LossParams()) -> np.ndarray:
    """Analytic gradient of ``total_loss(pred, label, p).total`` w.r.t. ``pred``."""
    pred_arr, _ = _pair(pred, label)
    preds, labels = _excerpts(pred, label)
    grads = np.empty_like(preds)
    for i, (pr, lb) in enumerate(zip(preds, labels)):
        g = grad_bce(pr, lb, p.eps)
        voicing = _voicing(pr[:, 0])
        g[:, 0] += p.weight_v * grad_aggregate_loss_v(voicing, p)
        g[:, 0] += p.weight_nv * grad_aggregate_loss_nv(voicing, p)
        grads[i] = g
    grads /= len(preds)
    return grads.reshape(pred_arr.shape)


# ----------------------------------------------------------------------
# toy optimisation
# ----------------------------------------------------------------------


@dataclass
class SmoothResult:
    trajectory: np.ndarray  # (steps + 1, T)
    losses: np.ndarray  # (steps + 1,)

    @property
    def final(self) -> np.ndarray:
        return self.trajectory[-1]


def _sigmoid(u):
    return 0.5 * (1.0 + np.tanh(0.5 * u))


def _logit(a):
    a = np.clip(a, 1e-12, 1.0 - 1e-12)
    return np.log(a) - np.log1p(-a)


def demo_smooth(a0, label, p: LossParams = LossParams(), steps: int = 500,
                lr: float = 0.5) -> SmoothResult:
    """Gradient descent on voicing logits against ``bce + L_v + L_nv``.

    ``a0`` is mapped to logits ``u`` and iterates are ``sigmoid(u)``, so they
    stay strictly inside (0, 1). The BCE term sees only the voicing column.
    """
    a0 = _voicing(a0)
    label = np.asarray(label, dtype=np.float64)
    if label.shape != a0.shape:
        raise ValueError(f"shape mismatch: a0 {a0.shape} vs label {label.shape}")

    u = _logit(a0)
    traj = np.empty((steps + 1, len(a0)))
    losses = np.empty(steps + 1)
    for step in range(steps + 1):
        a = _sigmoid(u)
        traj[step] = a
        losses[step], g = _voicing_objective(a, label, p)
        if step < steps:
            u = u - lr * g * a * (1.0 - a)
    return SmoothResult(traj, losses)


def _voicing_objective(a, label, p: LossParams):
    """Value and gradient of the total loss on a single voicing column."""
    l_v, _, g_v = _aggregate(a, p.M_v, p.r, True)
    l_nv, _, g_nv = _aggregate(1.0 - a, p.M_nv, p.r, True)
    value = bce(a, label, p.eps) + p.weight_v * l_v + p.weight_nv * l_nv
    grad = grad_bce(a, label, p.eps) + p.weight_v * g_v - p.weight_nv * g_nv
    return value, grad
