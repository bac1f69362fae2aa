"""First-order optimizers plus two reference second-order baselines.

All first-order steppers share one interface: ``step(theta, g, lr=None)``
returns the new parameter vector, where ``lr`` may be a scalar or a d-vector
(the booster passes per-tensor learning rates broadcast over partitions).
Weight decay is applied as gradient augmentation g + wd * theta.

``buffers()`` reports the persistent per-parameter state for the storage
accounting checks: plain SGD holds none, momentum one d-vector, Adam/Yogi two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LbfgsConfig:
    history: int = 10
    max_inner: int = 20
    init_step: float = 1.0
    c_armijo: float = 1e-4
    shrink: float = 0.5
    # line-search exhaustion below this gradient norm counts as termination,
    # not failure; sized to the weight-decay bias wd * |theta| at the optimum
    gtol: float = 2e-3


@dataclass
class BackboneConfig:
    lr: float = 1e-2
    momentum: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    weight_decay: float = 5e-4
    lbfgs: LbfgsConfig = field(default_factory=LbfgsConfig)


def _check_gradient(g: np.ndarray) -> None:
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("non-finite gradient encountered; aborting run")


class Sgd:
    """Vanilla / momentum SGD with coupled weight decay."""

    kind = "sgd"

    def __init__(self, dim: int, lr: float = 1e-2, momentum: float = 0.0,
                 weight_decay: float = 0.0):
        if lr <= 0:
            raise ValueError("learning rate must be positive")
        self.dim = dim
        self.lr = lr
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffer = np.zeros(dim) if momentum > 0 else None

    def step(self, theta: np.ndarray, g: np.ndarray, lr=None) -> np.ndarray:
        _check_gradient(g)
        lr = self.lr if lr is None else lr
        g_eff = g + self.weight_decay * theta
        if self.buffer is not None:
            self.buffer = self.momentum * self.buffer + g_eff
            direction = self.buffer
        else:
            direction = g_eff
        return theta - lr * direction

    def buffers(self) -> list[tuple[str, int, str]]:
        if self.buffer is None:
            return []
        return [("momentum_buffer", self.dim, "momentum accumulator")]


class Adam:
    """Adam with bias correction and coupled weight decay."""

    kind = "adam"

    def __init__(self, dim: int, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8, weight_decay: float = 0.0):
        if lr <= 0 or eps <= 0:
            raise ValueError("learning rate and eps must be positive")
        self.dim = dim
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.m = np.zeros(dim)
        self.v = np.zeros(dim)
        self.step_count = 0

    def _update_v(self, g_eff: np.ndarray) -> None:
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * g_eff ** 2

    def step(self, theta: np.ndarray, g: np.ndarray, lr=None) -> np.ndarray:
        _check_gradient(g)
        lr = self.lr if lr is None else lr
        g_eff = g + self.weight_decay * theta
        self.step_count += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * g_eff
        self._update_v(g_eff)
        m_hat = self.m / (1.0 - self.beta1 ** self.step_count)
        v_hat = self.v / (1.0 - self.beta2 ** self.step_count)
        if np.any(v_hat < 0):
            raise FloatingPointError("second-moment estimate went negative")
        return theta - lr * m_hat / (np.sqrt(v_hat) + self.eps)

    def buffers(self) -> list[tuple[str, int, str]]:
        return [("m", self.dim, "first-moment EMA"),
                ("v", self.dim, "second-moment EMA")]


class Yogi(Adam):
    """Adam variant whose variance update caps unwarranted growth.

    v changes by at most (1 - beta2) * g^2 per step, in the direction that
    moves it toward g^2; sign(0) = 0 makes v = g^2 a fixed point.
    """

    kind = "yogi"

    def _update_v(self, g_eff: np.ndarray) -> None:
        g2 = g_eff ** 2
        self.v = self.v - np.sign(self.v - g2) * (1.0 - self.beta2) * g2


def lbfgs_direction(history: list[tuple[np.ndarray, np.ndarray]], g: np.ndarray) -> np.ndarray:
    """Two-loop recursion: p = -H_inv g from stored (s, y) pairs.

    H0 is (s.y / y.y) * I from the most recent pair, identity when the
    history is empty. Pairs are assumed curvature-valid (s.y > 0).
    """
    q = g.copy()
    alphas = []
    for s, y in reversed(history):
        rho = 1.0 / float(s @ y)
        a = rho * float(s @ q)
        q -= a * y
        alphas.append((rho, a, s, y))
    if history:
        s, y = history[-1]
        q *= float(s @ y) / float(y @ y)
    for rho, a, s, y in reversed(alphas):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def armijo_line_search(f_eval, f0: float, g: np.ndarray, theta: np.ndarray,
                       p: np.ndarray, init_step: float = 1.0, c_armijo: float = 1e-4,
                       shrink: float = 0.5, max_inner: int = 20):
    """Backtracking line search on the sufficient-decrease condition.

    Returns (alpha, n_evals, failed). On exhaustion the smallest trial step
    is returned with failed=True so the caller can flag the run.
    """
    slope = float(g @ p)
    alpha = init_step
    n_evals = 0
    for _ in range(max_inner + 1):
        n_evals += 1
        if f_eval(theta + alpha * p) <= f0 + c_armijo * alpha * slope:
            return alpha, n_evals, False
        alpha *= shrink
    return alpha / shrink, n_evals, True


class Lbfgs:
    """Limited-memory BFGS with Armijo backtracking.

    Needs a value closure per step; not usable as an inner-step engine for
    the booster, only as a standalone baseline.
    """

    kind = "lbfgs"

    def __init__(self, dim: int, config: LbfgsConfig | None = None,
                 weight_decay: float = 0.0):
        self.dim = dim
        self.config = config or LbfgsConfig()
        self.weight_decay = weight_decay
        self.history: list[tuple[np.ndarray, np.ndarray]] = []
        self.eval_count = 0
        self.last_search_failed = False

    def step(self, theta: np.ndarray, g: np.ndarray, f_eval) -> np.ndarray:
        _check_gradient(g)
        g_eff = g + self.weight_decay * theta
        p = lbfgs_direction(self.history, g_eff)
        cfg = self.config
        alpha, n_evals, failed = armijo_line_search(
            f_eval, f_eval(theta), g_eff, theta, p,
            init_step=cfg.init_step, c_armijo=cfg.c_armijo,
            shrink=cfg.shrink, max_inner=cfg.max_inner)
        self.eval_count += n_evals + 1
        self.last_search_failed = failed
        return theta + alpha * p

    def push_pair(self, s: np.ndarray, y: np.ndarray) -> None:
        # skip pairs that would break the positive-curvature requirement
        if float(s @ y) <= 1e-10:
            return
        self.history.append((s.copy(), y.copy()))
        if len(self.history) > self.config.history:
            self.history.pop(0)

    def buffers(self) -> list[tuple[str, int, str]]:
        return [(f"pair_{i}", 2 * self.dim, "curvature pair (s, y)")
                for i in range(len(self.history))]


def newton2d_step(theta: np.ndarray, grad: np.ndarray, hess: np.ndarray,
                  lr: float = 1.0, fallback_lr: float = 1e-2) -> np.ndarray:
    """Damped 2-D Newton step; gradient step when the Hessian is unusable.

    Falls back whenever |det H| < 1e-12 or H is not positive definite, so the
    method survives (if not succeeds) on saddles and concave caps.
    """
    det = hess[0, 0] * hess[1, 1] - hess[0, 1] * hess[1, 0]
    pd = hess[0, 0] > 0 and det > 0
    if abs(det) < 1e-12 or not pd:
        return theta - fallback_lr * grad
    inv = np.array([[hess[1, 1], -hess[0, 1]], [-hess[1, 0], hess[0, 0]]]) / det
    return theta - lr * (inv @ grad)


def make_backbone(kind: str, dim: int, config: BackboneConfig):
    """Build a first-order stepper by name with the shared defaults."""
    if kind == "sgd":
        return Sgd(dim, lr=config.lr, momentum=0.0, weight_decay=config.weight_decay)
    if kind == "momentum_sgd":
        return Sgd(dim, lr=config.lr, momentum=config.momentum,
                   weight_decay=config.weight_decay)
    if kind == "adam":
        return Adam(dim, lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                    eps=config.eps_adam, weight_decay=config.weight_decay)
    if kind == "yogi":
        return Yogi(dim, lr=config.lr, beta1=config.beta1, beta2=config.beta2,
                    eps=config.eps_adam, weight_decay=config.weight_decay)
    raise ValueError(f"unknown backbone kind {kind!r}")
