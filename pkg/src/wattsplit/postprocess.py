"""State-sequence post-processing: hard gating, gumbel relaxation,
median filtering, and overlap merging.

State sequences are plain arrays with one row per timestep and one column
per state: soft rows sum to 1, hard rows are exactly one-hot.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FilterConfig",
    "hard_gate",
    "sample_gumbel",
    "gumbel_softmax_sample",
    "median_filter",
    "combine_hard",
    "reconcile_overlaps",
]


@dataclass(frozen=True)
class FilterConfig:
    median_window: int = 5
    tau: float = 1.0

    def __post_init__(self):
        if self.median_window < 3 or self.median_window % 2 == 0:
            raise ValueError(
                f"median_window must be odd and >= 3, got {self.median_window}"
            )
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")


def _rows(x, op: str) -> tuple[np.ndarray, bool]:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 1:
        return a[None, :], True
    if a.ndim == 2:
        return a, False
    raise ValueError(f"{op}: expected a row or a matrix of rows, got shape {a.shape}")


def _check_one_hot(rows: np.ndarray, op: str) -> None:
    binary = (rows == 0.0) | (rows == 1.0)
    if not (np.all(binary) and np.all(rows.sum(axis=-1) == 1.0)):
        raise ValueError(f"{op}: rows must be exactly one-hot")


def hard_gate(probabilities) -> np.ndarray:
    """Replace each probability row with the one-hot of its argmax
    (ties resolve to the lowest index). Idempotent."""
    rows, single = _rows(probabilities, "hard_gate")
    if rows.shape[-1] < 1 or rows.size == 0:
        raise ValueError("hard_gate: empty input")
    sums = rows.sum(axis=-1)
    if not np.all(np.abs(sums - 1.0) <= 1e-6):
        raise ValueError("hard_gate: rows must sum to 1 within 1e-6")
    out = np.eye(rows.shape[-1])[np.argmax(rows, axis=-1)]
    return out[0] if single else out


def sample_gumbel(shape, rng: np.random.Generator) -> np.ndarray:
    """Standard gumbel noise g = -log(-log u), u ~ U(0, 1)."""
    u = rng.random(shape)
    tiny = np.finfo(np.float64).tiny
    return -np.log(-np.log(np.maximum(u, tiny)) + tiny)


def gumbel_softmax_sample(logits, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Relaxed one-hot sample: softmax((logits + gumbel) / tau) per row."""
    if tau <= 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    rows, single = _rows(logits, "gumbel_softmax_sample")
    if not np.all(np.isfinite(rows)):
        raise ValueError("gumbel_softmax_sample: logits contain NaN or Inf")
    z = (rows + sample_gumbel(rows.shape, rng)) / tau
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=-1, keepdims=True)
    return out[0] if single else out


def median_filter(states, cfg: FilterConfig = FilterConfig()) -> np.ndarray:
    """Majority state over a centered window, per timestep.

    Equivalent to taking the per-state binary median over the window and
    renormalizing to one-hot: at most one state can hold a strict majority
    of an odd window, and when one does it wins the vote. When no state
    has a majority the most frequent state in the window wins (lowest
    index on ties), so the output state always occurs inside the window.
    Windows shrink symmetrically at the boundaries (length stays odd).
    """
    rows, single = _rows(states, "median_filter")
    _check_one_hot(rows, "median_filter")
    if single:
        return rows[0].copy()
    total, l = rows.shape
    half = cfg.median_window // 2
    csum = np.zeros((total + 1, l))
    np.cumsum(rows, axis=0, out=csum[1:])
    t = np.arange(total)
    ht = np.minimum(half, np.minimum(t, total - 1 - t))
    counts = csum[t + ht + 1] - csum[t - ht]  # per-state occurrences in window
    return np.eye(l)[np.argmax(counts, axis=1)]


def combine_hard(ratings, states) -> np.ndarray:
    """out[t] = ratings[state at t]; states must be one-hot rows."""
    r = np.asarray(ratings, dtype=np.float64)
    rows, single = _rows(states, "combine_hard")
    _check_one_hot(rows, "combine_hard")
    if r.ndim != 1 or rows.shape[-1] != len(r):
        raise ValueError(
            f"combine_hard: ratings shape {r.shape} does not match states "
            f"shape {np.asarray(states).shape}"
        )
    out = rows @ r
    return out[0] if single else out


def reconcile_overlaps(window_outputs, total_length: int) -> np.ndarray:
    """Merge per-window output slices onto one series by per-position mean.

    ``window_outputs`` yields (start_index, values) pairs. Every position
    in [0, total_length) must be covered by at least one window.
    """
    if total_length < 1:
        raise ValueError(f"total_length must be >= 1, got {total_length}")
    acc = np.zeros(total_length)
    cover = np.zeros(total_length)
    for start, vals in window_outputs:
        vals = np.asarray(vals, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError(f"window at {start}: values must be 1-D, got {vals.shape}")
        if start < 0 or start + len(vals) > total_length:
            raise ValueError(
                f"window [{start}, {start + len(vals)}) exceeds length {total_length}"
            )
        acc[start : start + len(vals)] += vals
        cover[start : start + len(vals)] += 1.0
    if np.any(cover == 0):
        idx = int(np.argmax(cover == 0))
        raise ValueError(f"position {idx} is not covered by any window")
    return acc / cover
