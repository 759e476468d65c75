"""Reverse-mode autodiff kernel on float64 numpy arrays.

Implements exactly the operations the disaggregation nets need: valid 1-D
convolution, dense layers, relu/sigmoid/softmax, mean squared error and
categorical cross entropy. Every operation records a backward closure on a
tape; calling ``backward()`` on a scalar result walks the tape in reverse
topological order and accumulates gradients into ``Tensor.grad``.

Inputs may be ``Tensor`` instances or anything ``np.asarray`` accepts;
plain arrays are lifted to constant tensors (they still receive gradients,
which are simply never read).
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Tensor",
    "conv1d",
    "dense",
    "relu",
    "sigmoid",
    "softmax",
    "reshape",
    "add",
    "scale",
    "mse_loss",
    "cross_entropy_loss",
    "CROSS_ENTROPY_CLIP",
]

CROSS_ENTROPY_CLIP = 1e-12


class Tensor:
    """A float64 array plus an optional gradient of the same shape."""

    __slots__ = ("values", "grad", "_parents", "_backward")

    def __init__(self, values, _parents=(), _backward=None):
        v = np.asarray(values, dtype=np.float64)
        if not v.flags["C_CONTIGUOUS"]:  # ascontiguousarray would promote 0-d
            v = np.ascontiguousarray(v)
        self.values = v
        self.grad = None
        self._parents = tuple(_parents)
        self._backward = _backward

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    def __repr__(self):
        return f"Tensor(shape={self.values.shape})"

    def backward(self):
        """Backpropagate from a scalar: fills ``grad`` on every ancestor."""
        if self.values.size != 1:
            raise ValueError(
                f"backward() needs a scalar, got shape {self.values.shape}"
            )
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        # iterative DFS: recursion depth would scale with graph depth
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self.grad = np.ones_like(self.values)
        for node in reversed(order):
            if node._backward is not None:
                node._backward()


def _lift(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    t.grad = g if t.grad is None else t.grad + g


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{op}: input contains NaN or Inf")


def conv1d(x, kernels, bias, stride: int = 1) -> Tensor:
    """Valid (no padding) 1-D convolution.

    x: [channels_in, length] or [batch, channels_in, length]
    kernels: [channels_out, channels_in, k], bias: [channels_out]
    out[c, t] = bias[c] + sum_{ci, j} kernels[c, ci, j] * x[ci, t * stride + j]
    """
    x, kernels, bias = _lift(x), _lift(kernels), _lift(bias)
    if not isinstance(stride, int) or stride < 1:
        raise ValueError(f"conv1d: stride must be a positive int, got {stride!r}")
    xv, kv, bv = x.values, kernels.values, bias.values
    if xv.ndim == 2:
        single = True
        x3 = xv[None]
    elif xv.ndim == 3:
        single = False
        x3 = xv
    else:
        raise ValueError(f"conv1d: input must be 2-D or 3-D, got shape {xv.shape}")
    if kv.ndim != 3:
        raise ValueError(f"conv1d: kernels must be 3-D, got shape {kv.shape}")
    batch, cin, length = x3.shape
    cout, kcin, k = kv.shape
    if kcin != cin:
        raise ValueError(
            f"conv1d: input shape {xv.shape} has {cin} channels but kernels "
            f"shape {kv.shape} expect {kcin}"
        )
    if bv.shape != (cout,):
        raise ValueError(
            f"conv1d: bias shape {bv.shape} does not match {cout} output channels"
        )
    if k > length:
        raise ValueError(f"conv1d: kernel size {k} exceeds input length {length}")
    out_len = (length - k) // stride + 1
    # im2col: gather every receptive field, then one GEMM per layer
    win = sliding_window_view(x3, k, axis=2)[:, :, ::stride, :]  # [B,cin,T,k]
    cols = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(
        batch, out_len, cin * k
    )
    wmat = kv.reshape(cout, cin * k)
    out_btc = cols @ wmat.T + bv  # [B,T,cout]
    out_vals = np.ascontiguousarray(out_btc.transpose(0, 2, 1))
    out = Tensor(out_vals[0] if single else out_vals, (x, kernels, bias))

    def _bwd():
        g = out.grad[None] if single else out.grad  # [B,cout,T]
        g_btc = np.ascontiguousarray(g.transpose(0, 2, 1))  # [B,T,cout]
        _accumulate(bias, g.sum(axis=(0, 2)))
        g_w = np.tensordot(g_btc, cols, axes=([0, 1], [0, 1]))  # [cout, cin*k]
        _accumulate(kernels, g_w.reshape(cout, cin, k))
        g_cols = (g_btc @ wmat).reshape(batch, out_len, cin, k)
        g_x = np.zeros_like(x3)
        for j in range(k):  # scatter each tap back onto the input
            g_x[:, :, j : j + stride * out_len : stride] += g_cols[
                :, :, :, j
            ].transpose(0, 2, 1)
        _accumulate(x, g_x[0] if single else g_x)

    out._backward = _bwd
    return out


def dense(x, weights, bias) -> Tensor:
    """Affine layer: out = weights @ x + bias. x may be [n] or [batch, n]."""
    x, weights, bias = _lift(x), _lift(weights), _lift(bias)
    xv, wv, bv = x.values, weights.values, bias.values
    if wv.ndim != 2:
        raise ValueError(f"dense: weights must be 2-D, got shape {wv.shape}")
    m, n = wv.shape
    if bv.shape != (m,):
        raise ValueError(f"dense: bias shape {bv.shape} does not match out width {m}")
    if xv.ndim == 1:
        single = True
        x2 = xv[None]
    elif xv.ndim == 2:
        single = False
        x2 = xv
    else:
        raise ValueError(f"dense: input must be 1-D or 2-D, got shape {xv.shape}")
    if x2.shape[1] != n:
        raise ValueError(
            f"dense: input shape {xv.shape} does not match weights shape {wv.shape}"
        )
    out_vals = x2 @ wv.T + bv
    out = Tensor(out_vals[0] if single else out_vals, (x, weights, bias))

    def _bwd():
        g2 = out.grad[None] if single else out.grad
        _accumulate(weights, g2.T @ x2)
        _accumulate(bias, g2.sum(axis=0))
        gx = g2 @ wv
        _accumulate(x, gx[0] if single else gx)

    out._backward = _bwd
    return out


def relu(x) -> Tensor:
    x = _lift(x)
    _check_finite(x.values, "relu")
    out = Tensor(np.maximum(x.values, 0.0), (x,))

    def _bwd():
        _accumulate(x, out.grad * (x.values > 0.0))

    out._backward = _bwd
    return out


def sigmoid(x) -> Tensor:
    x = _lift(x)
    _check_finite(x.values, "sigmoid")
    xv = x.values
    vals = np.empty_like(xv)
    pos = xv >= 0
    vals[pos] = 1.0 / (1.0 + np.exp(-xv[pos]))
    e = np.exp(xv[~pos])
    vals[~pos] = e / (1.0 + e)
    out = Tensor(vals, (x,))

    def _bwd():
        _accumulate(x, out.grad * out.values * (1.0 - out.values))

    out._backward = _bwd
    return out


def softmax(x, axis: int = -1) -> Tensor:
    """Softmax along ``axis``; rows are strictly positive and sum to 1."""
    x = _lift(x)
    _check_finite(x.values, "softmax")
    shifted = x.values - x.values.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    vals = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(vals, (x,))

    def _bwd():
        inner = (out.grad * out.values).sum(axis=axis, keepdims=True)
        _accumulate(x, (out.grad - inner) * out.values)

    out._backward = _bwd
    return out


def reshape(x, shape) -> Tensor:
    x = _lift(x)
    out = Tensor(x.values.reshape(shape), (x,))

    def _bwd():
        _accumulate(x, out.grad.reshape(x.values.shape))

    out._backward = _bwd
    return out


def add(a, b) -> Tensor:
    """Elementwise sum; shapes must match exactly or one side be scalar."""
    a, b = _lift(a), _lift(b)
    av, bv = a.values, b.values
    if av.shape != bv.shape and av.size != 1 and bv.size != 1:
        raise ValueError(f"add: shape mismatch {av.shape} vs {bv.shape}")
    out = Tensor(av + bv, (a, b))

    def _bwd():
        g = out.grad
        _accumulate(a, g.reshape(av.shape) if av.shape == g.shape else np.sum(g).reshape(av.shape))
        _accumulate(b, g.reshape(bv.shape) if bv.shape == g.shape else np.sum(g).reshape(bv.shape))

    out._backward = _bwd
    return out


def scale(x, c: float) -> Tensor:
    x = _lift(x)
    c = float(c)
    out = Tensor(x.values * c, (x,))

    def _bwd():
        _accumulate(x, out.grad * c)

    out._backward = _bwd
    return out


def mse_loss(prediction, target) -> Tensor:
    """Mean over all elements of (target - prediction)^2. Scalar output."""
    prediction, target = _lift(prediction), _lift(target)
    pv, tv = prediction.values, target.values
    if pv.shape != tv.shape:
        raise ValueError(f"mse_loss: shape mismatch {pv.shape} vs {tv.shape}")
    diff = pv - tv
    out = Tensor(np.mean(diff * diff), (prediction, target))

    def _bwd():
        g = out.grad * 2.0 / diff.size
        _accumulate(prediction, g * diff)
        _accumulate(target, -g * diff)

    out._backward = _bwd
    return out


def cross_entropy_loss(probabilities, targets) -> Tensor:
    """Categorical cross entropy, averaged over rows (last axis = classes).

    Probability rows must sum to 1 within 1e-6; target rows must be exactly
    one-hot. Probabilities are clipped at 1e-12 inside the log and the
    gradient is defined through the clip (zero where the clip is active).
    """
    probabilities = _lift(probabilities)
    pv = probabilities.values
    tv = np.asarray(targets.values if isinstance(targets, Tensor) else targets,
                    dtype=np.float64)
    if pv.shape != tv.shape:
        raise ValueError(
            f"cross_entropy_loss: shape mismatch {pv.shape} vs {tv.shape}"
        )
    if pv.ndim < 1:
        raise ValueError("cross_entropy_loss: input must have a class axis")
    row_sums = pv.sum(axis=-1)
    if not np.all(np.abs(row_sums - 1.0) <= 1e-6):
        worst = float(np.max(np.abs(row_sums - 1.0)))
        raise ValueError(
            f"cross_entropy_loss: probability rows must sum to 1 within 1e-6 "
            f"(worst deviation {worst:.3e})"
        )
    is_binary = (tv == 0.0) | (tv == 1.0)
    if not (np.all(is_binary) and np.all(tv.sum(axis=-1) == 1.0)):
        raise ValueError("cross_entropy_loss: target rows must be one-hot")
    n_rows = pv.size // pv.shape[-1]
    clipped = np.maximum(pv, CROSS_ENTROPY_CLIP)
    out = Tensor(-np.sum(tv * np.log(clipped)) / n_rows, (probabilities,))

    def _bwd():
        g = np.where(pv >= CROSS_ENTROPY_CLIP, -tv / clipped, 0.0)
        _accumulate(probabilities, out.grad * g / n_rows)

    out._backward = _bwd
    return out
