"""Twin-head CNN for appliance disaggregation.

Two structurally identical convolutional subnetworks read the same padded
mains window. The power head regresses one rating per appliance state (a
normalized watt value); the state head emits per-timestep probabilities
over states (softmax). The appliance estimate is their product:

    combined[t] = sum_j probs[t, j] * ratings[j]

so the estimate is linear in the ratings and, for one-hot rows, reduces to
selecting a single rating per timestep.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .optim import Parameter
from .windows import WindowConfig

__all__ = [
    "ConvLayerSpec",
    "NetConfig",
    "DEFAULT_CONV_STACK",
    "DisaggNet",
    "ForwardPass",
    "ForwardOutput",
    "combine",
    "loss_output",
    "loss_power",
    "loss_state",
    "total_loss",
]


@dataclass(frozen=True)
class ConvLayerSpec:
    filters: int
    kernel: int
    stride: int = 1

    def __post_init__(self):
        if self.filters < 1 or self.kernel < 1 or self.stride < 1:
            raise ValueError(f"bad conv layer spec: {self}")


# seq2point-style default stack
DEFAULT_CONV_STACK = (
    ConvLayerSpec(30, 10),
    ConvLayerSpec(30, 8),
    ConvLayerSpec(40, 6),
    ConvLayerSpec(50, 5),
    ConvLayerSpec(50, 5),
)


@dataclass(frozen=True)
class NetConfig:
    window: WindowConfig
    state_count: int
    conv_stack: tuple[ConvLayerSpec, ...] = DEFAULT_CONV_STACK
    hidden: int = 1024
    tau: float = 1.0  # gumbel-softmax temperature for hard-variant training
    seed: int = 0

    def __post_init__(self):
        if self.state_count < 2:
            raise ValueError(f"state_count must be >= 2, got {self.state_count}")
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if self.tau <= 0:
            raise ValueError(f"tau must be > 0, got {self.tau}")
        object.__setattr__(self, "conv_stack",
                           tuple(ConvLayerSpec(*s) if not isinstance(s, ConvLayerSpec) else s
                                 for s in self.conv_stack))
        if not self.conv_stack:
            raise ValueError("conv_stack must have at least one layer")
        self.feature_length()  # validates the stack fits the input

    def feature_length(self) -> int:
        """Output length after the conv stack."""
        length = self.window.input_length
        for layer in self.conv_stack:
            if layer.kernel > length:
                raise ValueError(
                    f"conv layer {layer} does not fit length {length} "
                    f"(input {self.window.input_length})"
                )
            length = (length - layer.kernel) // layer.stride + 1
        return length


@dataclass
class ForwardPass:
    """Tape tensors from one batched forward pass."""

    ratings: Tensor       # [B, l] normalized per-state ratings
    state_logits: Tensor  # [B, s, l]
    state_probs: Tensor   # [B, s, l] softmax rows
    combined: Tensor      # [B, s] normalized estimate


@dataclass
class ForwardOutput:
    """Plain-array view of a forward pass (inference)."""

    ratings: np.ndarray
    state_probs: np.ndarray
    combined: np.ndarray


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


# hidden-layer biases start slightly positive so no relu unit is born dead
# (an exactly-zero pre-activation is also a non-differentiable point)
HIDDEN_BIAS_INIT = 0.01


class _Subnet:
    """Conv stack -> hidden dense -> head dense, relu between layers."""

    def __init__(self, prefix: str, cfg: NetConfig, head_width: int,
                 rng: np.random.Generator):
        self.cfg = cfg
        self.params: list[Parameter] = []
        cin = 1
        for i, layer in enumerate(cfg.conv_stack):
            kshape = (layer.filters, cin, layer.kernel)
            self.params.append(Parameter(
                f"{prefix}/conv{i}/kernels",
                Tensor(_glorot(rng, kshape, cin * layer.kernel, layer.filters * layer.kernel)),
            ))
            self.params.append(Parameter(
                f"{prefix}/conv{i}/bias",
                Tensor(np.full(layer.filters, HIDDEN_BIAS_INIT))))
            cin = layer.filters
        flat = cfg.conv_stack[-1].filters * cfg.feature_length()
        self.flat_width = flat
        self.params.append(Parameter(
            f"{prefix}/fc/weights",
            Tensor(_glorot(rng, (cfg.hidden, flat), flat, cfg.hidden))))
        self.params.append(Parameter(
            f"{prefix}/fc/bias", Tensor(np.full(cfg.hidden, HIDDEN_BIAS_INIT))))
        self.params.append(Parameter(
            f"{prefix}/head/weights",
            Tensor(_glorot(rng, (head_width, cfg.hidden), cfg.hidden, head_width))))
        self.params.append(Parameter(f"{prefix}/head/bias", Tensor(np.zeros(head_width))))

    def forward(self, x: Tensor) -> Tensor:
        """x: [B, 1, input_length] -> [B, head_width]."""
        h = x
        it = iter(self.params)
        for layer in self.cfg.conv_stack:
            kern, bias = next(it), next(it)
            h = ad.relu(ad.conv1d(h, kern.tensor, bias.tensor, stride=layer.stride))
        batch = h.values.shape[0]
        h = ad.reshape(h, (batch, self.flat_width))
        fc_w, fc_b = next(it), next(it)
        h = ad.relu(ad.dense(h, fc_w.tensor, fc_b.tensor))
        head_w, head_b = next(it), next(it)
        return ad.dense(h, head_w.tensor, head_b.tensor)


class DisaggNet:
    """Twin-head net: power ratings subnetwork plus state classifier."""

    def __init__(self, config: NetConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        s, l = config.window.s, config.state_count
        self.power_net = _Subnet("power", config, l, rng)
        self.state_net = _Subnet("state", config, s * l, rng)
        self.epochs_seen = 0
        self.dataset_tag = ""

    def parameters(self) -> list[Parameter]:
        return self.power_net.params + self.state_net.params

    def _check_batch(self, inputs: np.ndarray) -> np.ndarray:
        x = np.asarray(inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.window.input_length:
            raise ValueError(
                f"expected inputs [batch, {self.config.window.input_length}], "
                f"got shape {x.shape}"
            )
        return x

    def forward_tensors(self, inputs: np.ndarray) -> ForwardPass:
        """Batched forward pass on the tape. inputs: [B, s + 2w]."""
        x = self._check_batch(inputs)
        batch = x.shape[0]
        s, l = self.config.window.s, self.config.state_count
        xt = Tensor(x[:, None, :])
        ratings = self.power_net.forward(xt)
        logits = ad.reshape(self.state_net.forward(xt), (batch, s, l))
        probs = ad.softmax(logits)
        return ForwardPass(ratings, logits, probs, combine(ratings, probs))

    def predict(self, inputs: np.ndarray) -> ForwardOutput:
        fwd = self.forward_tensors(inputs)
        return ForwardOutput(fwd.ratings.values, fwd.state_probs.values,
                             fwd.combined.values)

    def forward_power(self, window: np.ndarray) -> np.ndarray:
        """Per-state normalized ratings [l] for one input window."""
        x = self._check_single(window)
        return self.power_net.forward(Tensor(x[None, None, :])).values[0]

    def forward_state(self, window: np.ndarray) -> np.ndarray:
        """Per-timestep state probabilities [s, l] for one input window."""
        x = self._check_single(window)
        s, l = self.config.window.s, self.config.state_count
        logits = self.state_net.forward(Tensor(x[None, None, :]))
        return ad.softmax(ad.reshape(logits, (1, s, l))).values[0]

    def _check_single(self, window: np.ndarray) -> np.ndarray:
        x = np.asarray(window, dtype=np.float64)
        if x.shape != (self.config.window.input_length,):
            raise ValueError(
                f"expected one window of length {self.config.window.input_length}, "
                f"got shape {x.shape}"
            )
        return x


def combine(ratings, probs) -> Tensor:
    """combined[..., t] = sum_j probs[..., t, j] * ratings[..., j].

    ratings: [l] or [B, l]; probs: [s, l] or [B, s, l].
    """
    ratings = ad._lift(ratings)
    probs = ad._lift(probs)
    rv, pv = ratings.values, probs.values
    if rv.ndim + 1 != pv.ndim or pv.shape[-1] != rv.shape[-1] or (
            rv.ndim == 2 and pv.shape[0] != rv.shape[0]):
        raise ValueError(
            f"combine: ratings shape {rv.shape} does not match probs shape {pv.shape}"
        )
    out = Tensor(np.einsum("...sl,...l->...s", pv, rv), (ratings, probs))

    def _bwd():
        g = out.grad
        ad._accumulate(probs, g[..., :, None] * rv[..., None, :])
        ad._accumulate(ratings, np.einsum("...s,...sl->...l", g, pv))

    out._backward = _bwd
    return out


def loss_output(combined, target_power) -> Tensor:
    """MSE between the combined estimate and the normalized target."""
    return ad.mse_loss(combined, target_power)


def loss_power(ratings, centroid_targets) -> Tensor:
    """MSE between predicted ratings and the normalized centroid vector."""
    ratings = ad._lift(ratings)
    t = np.asarray(centroid_targets, dtype=np.float64)
    if ratings.values.ndim == 2:  # broadcast targets across the batch
        t = np.broadcast_to(t, ratings.values.shape)
    return ad.mse_loss(ratings, t)


def loss_state(state_probs, target_states) -> Tensor:
    """Categorical cross entropy averaged over timestep rows."""
    return ad.cross_entropy_loss(state_probs, target_states)


def total_loss(fwd: ForwardPass, target_power, target_states,
               lambda_power: float = 0.0, centroid_targets=None):
    """loss_output + loss_state (+ lambda_power * loss_power).

    Returns (total, output_term, state_term). The power term only enters
    when lambda_power > 0, which requires centroid_targets.
    """
    out_term = loss_output(fwd.combined, target_power)
    state_term = loss_state(fwd.state_probs, target_states)
    total = ad.add(out_term, state_term)
    if lambda_power > 0.0:
        if centroid_targets is None:
            raise ValueError("lambda_power > 0 requires centroid_targets")
        total = ad.add(total, ad.scale(loss_power(fwd.ratings, centroid_targets),
                                       lambda_power))
    return total, out_term, state_term
