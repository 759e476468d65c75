"""Mini-batch training loop and the windowed inference pipeline."""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .checkpoint import load_checkpoint, save_checkpoint  # re-exported surface
from .model import DisaggNet, combine, total_loss
from .postprocess import (FilterConfig, combine_hard, hard_gate, median_filter,
                          reconcile_overlaps, sample_gumbel)
from .series import PowerSeries, denormalize, normalize
from .states import ApplianceStateModel
from .windows import WindowedExample, input_window

__all__ = [
    "VARIANTS",
    "TrainConfig",
    "EpochStats",
    "TrainReport",
    "train",
    "DisaggregationResult",
    "disaggregate",
    "save_checkpoint",
    "load_checkpoint",
]

VARIANTS = ("plain", "median", "hard", "hard_median")


@dataclass
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 1e-3
    epochs: int = 10
    lambda_power: float = 0.0
    variant: str = "plain"
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.lambda_power < 0:
            raise ValueError(f"lambda_power must be >= 0, got {self.lambda_power}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass
class EpochStats:
    epoch: int
    loss_total: float
    loss_output: float
    loss_state: float


@dataclass
class TrainReport:
    epochs: list[EpochStats] = field(default_factory=list)
    wall_time_s: float = 0.0
    checkpoint_path: str | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,loss_total,loss_output,loss_state\n")
            for rec in self.epochs:
                fh.write(f"{rec.epoch},{rec.loss_total!r},{rec.loss_output!r},"
                         f"{rec.loss_state!r}\n")


def _stack_examples(examples: list[WindowedExample], model: DisaggNet):
    cfg = model.config
    s, l = cfg.window.s, cfg.state_count
    n = len(examples)
    inputs = np.empty((n, cfg.window.input_length))
    targets = np.empty((n, s))
    states = np.empty((n, s, l))
    for i, ex in enumerate(examples):
        if ex.input.shape != (cfg.window.input_length,):
            raise ValueError(
                f"example {i}: input shape {ex.input.shape}, expected "
                f"({cfg.window.input_length},)"
            )
        if ex.target_power.shape != (s,) or ex.target_states.shape != (s, l):
            raise ValueError(
                f"example {i}: target shapes {ex.target_power.shape}/"
                f"{ex.target_states.shape}, expected ({s},)/({s}, {l})"
            )
        inputs[i] = ex.input
        targets[i] = ex.target_power
        states[i] = ex.target_states
    return inputs, targets, states


def train(model: DisaggNet, examples, cfg: TrainConfig,
          centroid_targets=None) -> tuple[DisaggNet, TrainReport]:
    """Train in place; returns (model, per-epoch loss report).

    For hard variants the combined output fed to the MSE uses
    gumbel-softmax rows (temperature from the model config) so gradients
    flow through a near-discrete gate; the cross-entropy term always sees
    the clean softmax. Median filtering never appears in the gradient
    path. Deterministic for a given seed.
    """
    from .optim import Adam

    if cfg.lambda_power > 0 and centroid_targets is None:
        raise ValueError("lambda_power > 0 requires centroid_targets")
    examples = list(examples)
    started = time.perf_counter()
    report = TrainReport()
    if not examples or cfg.epochs == 0:
        report.wall_time_s = time.perf_counter() - started
        return model, report
    inputs, targets, states = _stack_examples(examples, model)
    seq = np.random.SeedSequence(cfg.seed).spawn(2)
    shuffle_rng = np.random.default_rng(seq[0])
    gumbel_rng = np.random.default_rng(seq[1])
    hard_training = cfg.variant in ("hard", "hard_median")
    optimizer = Adam(learning_rate=cfg.learning_rate)
    params = model.parameters()
    n = len(examples)
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle_rng.permutation(n) if cfg.shuffle else np.arange(n)
        sums = np.zeros(3)
        for batch_index, lo in enumerate(range(0, n, cfg.batch_size)):
            sel = order[lo : lo + cfg.batch_size]
            fwd = model.forward_tensors(inputs[sel])
            if hard_training:
                g = sample_gumbel(fwd.state_logits.shape, gumbel_rng)
                noisy = ad.softmax(ad.scale(ad.add(fwd.state_logits, g),
                                            1.0 / model.config.tau))
                fwd = replace(fwd, combined=combine(fwd.ratings, noisy))
            loss, out_term, state_term = total_loss(
                fwd, targets[sel], states[sel],
                lambda_power=cfg.lambda_power, centroid_targets=centroid_targets)
            if not np.isfinite(loss.values):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, batch {batch_index}"
                )
            loss.backward()
            optimizer.step(params)
            weight = len(sel)
            sums += weight * np.array([float(loss.values), float(out_term.values),
                                       float(state_term.values)])
        means = sums / n
        report.epochs.append(EpochStats(epoch, float(means[0]), float(means[1]),
                                        float(means[2])))
        model.epochs_seen += 1
    report.wall_time_s = time.perf_counter() - started
    return model, report


@dataclass
class DisaggregationResult:
    appliance: str
    estimate: PowerSeries          # denormalized watts, clamped at 0
    states: np.ndarray             # [T, l]; soft rows for plain, one-hot otherwise
    variant: str


def disaggregate(model: DisaggNet, mains: PowerSeries,
                 state_model: ApplianceStateModel, variant: str = "plain",
                 stride: int | None = None,
                 filter_cfg: FilterConfig = FilterConfig(),
                 batch_size: int = 256) -> DisaggregationResult:
    """Slide the net over a mains series and merge window estimates.

    Power pipeline: window -> forward -> per-window state post-processing
    (argmax gate for hard variants, then median filter for median
    variants) -> combine -> per-position mean across windows ->
    denormalize -> clamp at 0 W. A tail window is added when the stride
    does not land on the last valid start, so every sample is covered.

    The returned state sequence merges the per-window rows by position
    mean; hard variants re-harden the merged rows by argmax, and median
    variants then run the median filter over the merged sequence, since
    the filter is defined on an appliance's state sequence as a whole and
    window-local filtering cannot see across window boundaries.

    Model parameters are never modified.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if mains.has_missing():
        raise ValueError("mains has missing values; run fill_gaps first")
    cfg = model.config
    s, l = cfg.window.s, cfg.state_count
    total = len(mains)
    if total < s:
        raise ValueError(f"series length {total} is shorter than the output window {s}")
    if stride is None:
        stride = s
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    starts = list(range(0, total - s + 1, stride))
    if starts[-1] != total - s:
        starts.append(total - s)  # cover the tail
    norm = normalize(mains, state_model.norm_mean, state_model.norm_std)
    pad = normalize(np.zeros(1), state_model.norm_mean, state_model.norm_std)[0]
    power_windows: list[tuple[int, np.ndarray]] = []
    state_acc = np.zeros((total, l))
    state_cover = np.zeros(total)
    for lo in range(0, len(starts), batch_size):
        chunk = starts[lo : lo + batch_size]
        batch = np.stack([input_window(norm, st, cfg.window, pad) for st in chunk])
        out = model.predict(batch)
        for i, st in enumerate(chunk):
            rows = out.state_probs[i]
            if variant == "plain":
                values = out.combined[i]
            else:
                rows = hard_gate(rows)
                if variant in ("median", "hard_median"):
                    rows = median_filter(rows, filter_cfg)
                values = combine_hard(out.ratings[i], rows)
            power_windows.append((st, values))
            state_acc[st : st + s] += rows
            state_cover[st : st + s] += 1.0
    merged = reconcile_overlaps(power_windows, total)
    estimate = np.maximum(
        denormalize(merged, state_model.norm_mean, state_model.norm_std), 0.0)
    states = state_acc / state_cover[:, None]
    if variant != "plain":
        states = np.eye(l)[np.argmax(states, axis=1)]
        if variant in ("median", "hard_median"):
            states = median_filter(states, filter_cfg)
    return DisaggregationResult(
        appliance=state_model.name,
        estimate=PowerSeries(mains.start_time, mains.period, estimate),
        states=states,
        variant=variant,
    )
