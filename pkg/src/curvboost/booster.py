"""Epoch-level curvature booster wrapped around a first-order backbone.

Within an epoch the backbone runs as usual, except that the base learning
rate is divided by a per-tensor curvature divisor annealed toward 1. In
parallel, per-coordinate secant quotients dg/dtheta between consecutive
iterates are accumulated (masked where the parameter change is below eps,
weighted by the inner-step index). At the epoch boundary the accumulators
yield a clamped diagonal curvature estimate H_hat; one extra update
theta -= eta2 * g_tilde / H_hat is taken with an aggregated gradient, and the
low-tail quantile of H_hat per tensor seeds the next epoch's divisor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .tensorcore import (
    ConfigError,
    Partition,
    PartitionedParams,
    clamp_elementwise,
    low_tail_quantile,
    masked_divide,
)

GradFn = Callable[[np.ndarray], np.ndarray]


@dataclass
class BoosterConfig:
    eta2: float = 0.5
    lam_min: float = 1e-2
    lam_max: float = 1e2
    omega: float = 0.1
    eps: float = 1e-3
    grad_mode: str = "avg"            # "avg" or "last"
    anneal: str = "linear"            # "linear", "exponential", "none"
    anneal_alpha: float = 0.5
    curvature_weighting: str = "t_weighted"   # "t_weighted" or "uniform"
    noise_var: float = 0.0            # ablation-only quotient noise variance

    def validate(self) -> None:
        if self.eta2 <= 0:
            raise ConfigError("eta2 must be positive")
        if not (0.0 < self.lam_min <= self.lam_max < np.inf):
            raise ConfigError("clamp bounds must satisfy 0 < lam_min <= lam_max")
        if not (0.0 < self.omega < 1.0):
            raise ConfigError("omega must lie in (0, 1)")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.grad_mode not in ("avg", "last"):
            raise ConfigError(f"unknown grad_mode {self.grad_mode!r}")
        if self.anneal not in ("linear", "exponential", "none"):
            raise ConfigError(f"unknown anneal mode {self.anneal!r}")
        if self.anneal == "exponential" and not (0.0 < self.anneal_alpha < 1.0):
            raise ConfigError("exponential annealing needs alpha in (0, 1)")
        if self.curvature_weighting not in ("t_weighted", "uniform"):
            raise ConfigError(f"unknown weighting {self.curvature_weighting!r}")
        if self.noise_var < 0:
            raise ConfigError("noise variance must be nonnegative")


class BoosterState:
    """Rolling accumulators for one run; single-owner, reset at epoch start.

    Persistent d-vectors: quotient numerator / denominator accumulators, the
    previous iterate and gradient, and the weighted gradient sum. The
    per-tensor divisor seeds live in ``gamma`` (initialized to 1).
    """

    def __init__(self, layout: PartitionedParams, rng: np.random.Generator | None = None,
                 initial_gamma: float = 1.0):
        self.partitions: tuple[Partition, ...] = layout.partitions
        self.dim = layout.dim
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.gamma: dict[str, float] = {p.name: float(initial_gamma) for p in self.partitions}
        self.epoch = 0
        self.s_num = np.zeros(self.dim)
        self.s_den = np.zeros(self.dim)
        self.prev_theta = np.zeros(self.dim)
        self.prev_grad = np.zeros(self.dim)
        self.g_wsum = np.zeros(self.dim)
        self.t_wsum = 0.0
        self.t = 0

    def reset_epoch(self) -> None:
        self.s_num[:] = 0.0
        self.s_den[:] = 0.0
        self.g_wsum[:] = 0.0
        self.t_wsum = 0.0
        self.t = 0

    def buffer_report(self) -> list[tuple[str, int, str]]:
        d = self.dim
        return [
            ("prev_theta", d, "previous iterate"),
            ("prev_grad", d, "previous gradient"),
            ("s_num", d, "quotient accumulator"),
            ("g_wsum", d, "gradient accumulator"),
            ("s_den", d, "quotient mask-weight accumulator"),
        ]


def divisor(gamma: float, t: int, T: int, anneal: str = "linear",
            alpha: float = 0.5) -> float:
    """Curvature-aware divisor at inner step t of an epoch of T steps.

    linear: gamma at t=0 annealed to exactly 1 at t=T; exponential: geometric
    decay of (gamma - 1) toward 1 with factor alpha; none: constant gamma.
    The inner step size is base_lr / divisor.
    """
    if T < 1 or t < 0 or t > T:
        raise ValueError(f"need 0 <= t <= T and T >= 1, got t={t}, T={T}")
    if gamma <= 0:
        raise ValueError(f"divisor seed must be positive, got {gamma}")
    if anneal == "linear":
        # convex-combination form: exact gamma at t=0 and exact 1 at t=T
        frac = t / T
        return gamma * (1.0 - frac) + frac
    if anneal == "exponential":
        return 1.0 + (gamma - 1.0) * alpha ** t
    if anneal == "none":
        return gamma
    raise ConfigError(f"unknown anneal mode {anneal!r}")


def accumulate(state: BoosterState, config: BoosterConfig, theta_new: np.ndarray,
               g_new: np.ndarray) -> None:
    """Fold one (iterate, gradient) observation into the rolling accumulators.

    The first call of an epoch only records the previous point/gradient;
    later calls form the masked secant quotients between consecutive
    observations.
    """
    t = state.t
    if t >= 1:
        d_theta = theta_new - state.prev_theta
        d_grad = g_new - state.prev_grad
        mask = (np.abs(d_theta) > config.eps).astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            h = np.where(mask > 0, d_grad / np.where(d_theta == 0, 1.0, d_theta), 0.0)
        if config.noise_var > 0:
            h = h + state.rng.normal(0.0, np.sqrt(config.noise_var), size=h.shape)
        w = float(t) if config.curvature_weighting == "t_weighted" else 1.0
        state.s_num += w * mask * h
        state.s_den += w * mask
    state.g_wsum += t * g_new
    state.t_wsum += t
    state.prev_theta = theta_new.copy()
    state.prev_grad = g_new.copy()
    state.t = t + 1


def finalize_hessian(state: BoosterState, config: BoosterConfig) -> np.ndarray:
    """Clamped diagonal curvature estimate from the epoch's accumulators.

    Coordinates never masked in have a zero ratio and clamp up to lam_min.
    """
    raw = masked_divide(state.s_num, state.s_den, config.eps)
    return clamp_elementwise(raw, config.lam_min, config.lam_max)


def compute_gamma(h_hat: np.ndarray, partitions: Sequence[Partition],
                  omega: float) -> dict[str, float]:
    """Per-tensor low-tail quantile of the curvature estimate (fallback 1)."""
    out = {}
    for p in partitions:
        q = low_tail_quantile(h_hat[p.offset:p.offset + p.length], omega)
        out[p.name] = 1.0 if q is None else q
    return out


def aggregate_gradient(state: BoosterState, config: BoosterConfig) -> np.ndarray:
    """Boundary-step gradient: t-weighted mean (avg) or last stored (last)."""
    if config.grad_mode == "last":
        return state.prev_grad.copy()
    return state.g_wsum / (state.t_wsum + config.eps)


def boundary_update(theta: np.ndarray, h_hat: np.ndarray, g_tilde: np.ndarray,
                    eta2: float) -> np.ndarray:
    """The once-per-epoch curvature-scaled step theta - eta2 * g_tilde / H_hat."""
    return theta - eta2 * g_tilde / h_hat


def per_tensor_lr(state: BoosterState, base_lr: float, t: int, T: int,
                  config: BoosterConfig) -> np.ndarray:
    lr = np.empty(state.dim)
    for p in state.partitions:
        div = divisor(state.gamma[p.name], t, T, config.anneal, config.anneal_alpha)
        lr[p.offset:p.offset + p.length] = base_lr / div
    return lr


def run_epoch(theta: np.ndarray, backbone, state: BoosterState, config: BoosterConfig,
              data_source: Iterable[GradFn]) -> tuple[np.ndarray, dict]:
    """One boosted epoch: T inner backbone steps, then the boundary update.

    ``data_source`` yields one gradient closure per mini-batch. Parameters
    persist across epochs; the divisor seed computed here applies to the
    next epoch.
    """
    grad_fns = list(data_source)
    T = len(grad_fns)
    if T == 0:
        raise ValueError("data source yielded no mini-batches")
    state.reset_epoch()
    for t, grad_fn in enumerate(grad_fns):
        g = np.asarray(grad_fn(theta), dtype=np.float64)
        if not np.all(np.isfinite(g)) or not np.all(np.isfinite(theta)):
            raise FloatingPointError(
                f"non-finite value at epoch {state.epoch}, inner step {t}")
        accumulate(state, config, theta, g)
        lr = per_tensor_lr(state, backbone.lr, t, T, config)
        theta = backbone.step(theta, g, lr=lr)
    h_hat = finalize_hessian(state, config)
    state.gamma = compute_gamma(h_hat, state.partitions, config.omega)
    g_tilde = aggregate_gradient(state, config)
    theta = boundary_update(theta, h_hat, g_tilde, config.eta2)
    if not np.all(np.isfinite(theta)):
        raise FloatingPointError(f"non-finite parameters after epoch {state.epoch}")
    state.epoch += 1
    stats = {"h_hat": h_hat, "gamma": dict(state.gamma), "g_tilde": g_tilde,
             "inner_steps": T}
    return theta, stats
