"""Windowing: padded input windows aligned to output targets.

Each training example pairs an input window of length s + 2w (the output
span plus w context samples on each side, out-of-range context padded with
the normalized 0 W value) with the s-sample appliance target it predicts.
Input position w lines up with target position 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .series import PowerSeries, normalize
from .states import ApplianceStateModel, label_states

__all__ = ["WindowConfig", "WindowedExample", "make_windows", "input_window"]


@dataclass(frozen=True)
class WindowConfig:
    s: int  # output window length, samples
    w: int  # context on each side, samples

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"s must be an integer >= 1, got {self.s}")
        if int(self.w) != self.w or self.w < 0:
            raise ValueError(f"w must be an integer >= 0, got {self.w}")

    @property
    def input_length(self) -> int:
        return self.s + 2 * self.w


@dataclass
class WindowedExample:
    input: np.ndarray          # [s + 2w] normalized mains
    target_power: np.ndarray   # [s] normalized appliance power
    target_states: np.ndarray  # [s, l] one-hot


def input_window(values: np.ndarray, start: int, cfg: WindowConfig,
                 pad_value: float) -> np.ndarray:
    """Input window covering [start - w, start + s + w); out-of-range
    positions take ``pad_value``."""
    out = np.full(cfg.input_length, pad_value, dtype=np.float64)
    lo = start - cfg.w
    hi = start + cfg.s + cfg.w
    src_lo = max(lo, 0)
    src_hi = min(hi, len(values))
    if src_lo < src_hi:
        out[src_lo - lo : src_hi - lo] = values[src_lo:src_hi]
    return out


def make_windows(mains: PowerSeries, appliance: PowerSeries,
                 model: ApplianceStateModel, cfg: WindowConfig,
                 stride: int | None = None) -> Iterator[WindowedExample]:
    """Yield aligned training examples every ``stride`` samples.

    Both series are normalized with the model's statistics. A series
    shorter than s yields no windows. Mains and appliance must share the
    grid (start, period, length).
    """
    if stride is None:
        stride = cfg.s
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if (mains.start_time != appliance.start_time
            or mains.period != appliance.period
            or len(mains) != len(appliance)):
        raise ValueError(
            "mains and appliance series are misaligned: "
            f"start {mains.start_time} vs {appliance.start_time}, "
            f"period {mains.period} vs {appliance.period}, "
            f"length {len(mains)} vs {len(appliance)}"
        )
    if mains.has_missing() or appliance.has_missing():
        raise ValueError("series have missing values; run fill_gaps first")
    mains_norm = normalize(mains, model.norm_mean, model.norm_std)
    app_norm = normalize(appliance, model.norm_mean, model.norm_std)
    labels = label_states(appliance, model)
    pad = normalize(np.zeros(1), model.norm_mean, model.norm_std)[0]
    total = len(mains)
    for start in range(0, total - cfg.s + 1, stride):
        yield WindowedExample(
            input=input_window(mains_norm, start, cfg, pad),
            target_power=app_norm[start : start + cfg.s].copy(),
            target_states=labels[start : start + cfg.s].copy(),
        )
