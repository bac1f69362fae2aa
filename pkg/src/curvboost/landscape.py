"""Drifting 2-D synthetic objective: a convex quadratic plus signed Gaussian lumps.

A run observes a cyclic sequence of slowly drifting train snapshots (one per
optimizer step, emulating mini-batching) and is scored against a shorter test
sequence built by continuing the same drift chain. Analytic gradient and
Hessian are provided for the Newton baseline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .tensorcore import ConfigError


@dataclass
class Lump:
    center: np.ndarray          # shape (2,)
    amplitude: float            # > 0, sign carried separately
    scale: float                # > 0
    sign: int                   # +1 attractive-repulsive flip

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.amplitude <= 0 or self.scale <= 0:
            raise ValueError("lump amplitude and scale must be positive")
        if self.sign not in (-1, 1):
            raise ValueError("lump sign must be +1 or -1")


@dataclass
class Snapshot:
    center: np.ndarray          # quadratic center c0, shape (2,)
    quad: float                 # quadratic factor q > 0
    lumps: list[Lump] = field(default_factory=list)

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        if self.quad <= 0:
            raise ValueError("quadratic factor must be positive")


def value(theta: np.ndarray, snap: Snapshot) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    v = snap.quad * float((theta - snap.center) @ (theta - snap.center))
    for lump in snap.lumps:
        r2 = float((theta - lump.center) @ (theta - lump.center))
        v += lump.sign * lump.amplitude * np.exp(-r2 / (2.0 * lump.scale ** 2))
    return v


def gradient(theta: np.ndarray, snap: Snapshot) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    g = 2.0 * snap.quad * (theta - snap.center)
    for lump in snap.lumps:
        diff = theta - lump.center
        e = np.exp(-float(diff @ diff) / (2.0 * lump.scale ** 2))
        g -= lump.sign * lump.amplitude * e * diff / lump.scale ** 2
    return g


def hessian(theta: np.ndarray, snap: Snapshot) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    H = 2.0 * snap.quad * np.eye(2)
    for lump in snap.lumps:
        diff = theta - lump.center
        s2 = lump.scale ** 2
        e = np.exp(-float(diff @ diff) / (2.0 * s2))
        H += lump.sign * lump.amplitude * e * (np.outer(diff, diff) / s2 ** 2 - np.eye(2) / s2)
    return H


def drift(snap: Snapshot, sigma_c: float, sigma_a: float, sigma_s: float,
          rng: np.random.Generator) -> Snapshot:
    """One stochastic drift step: lump centers jitter additively, amplitudes
    and scales multiplicatively (mean-preserving). The quadratic is fixed.
    Amplitudes/scales are floored so the multiplicative noise cannot flip
    their sign.
    """
    if min(sigma_c, sigma_a, sigma_s) < 0:
        raise ValueError("drift magnitudes must be nonnegative")
    lumps = []
    for lump in snap.lumps:
        c = lump.center + rng.normal(0.0, sigma_c, size=2) if sigma_c > 0 else lump.center.copy()
        a = lump.amplitude * (1.0 + rng.normal(0.0, sigma_a)) if sigma_a > 0 else lump.amplitude
        s = lump.scale * (1.0 + rng.normal(0.0, sigma_s)) if sigma_s > 0 else lump.scale
        lumps.append(Lump(c, max(a, 1e-6), max(s, 1e-6), lump.sign))
    return Snapshot(snap.center.copy(), snap.quad, lumps)


@dataclass
class GenConfig:
    n_lumps: int = 8
    center_range: tuple[float, float] = (-2.0, 2.0)
    quad_range: tuple[float, float] = (0.02, 0.08)
    lump_center_range: tuple[float, float] = (-4.0, 4.0)
    amp_range: tuple[float, float] = (1.0, 6.0)
    scale_range: tuple[float, float] = (0.3, 1.0)
    sigma_c: float = 0.05
    sigma_a: float = 0.03
    sigma_s: float = 0.03
    n_train: int = 30
    n_test: int = 10

    def validate(self) -> None:
        for name in ("center_range", "quad_range", "lump_center_range",
                     "amp_range", "scale_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"{name} is inverted: ({lo}, {hi})")
        if self.quad_range[0] <= 0 or self.amp_range[0] <= 0 or self.scale_range[0] <= 0:
            raise ConfigError("quadratic factor, amplitudes and scales must stay positive")
        if self.n_lumps < 0 or self.n_train < 1 or self.n_test < 1:
            raise ConfigError("need n_lumps >= 0 and at least one train/test snapshot")
        if self.n_test > self.n_train:
            raise ConfigError("test sequence must not be longer than train sequence")
        if min(self.sigma_c, self.sigma_a, self.sigma_s) < 0:
            raise ConfigError("drift magnitudes must be nonnegative")


class LandscapeSequence:
    """Train/test snapshot sequences plus the cyclic observation cursor.

    The cursor is the only mutable element during a run; ``metrics`` never
    mutates.
    """

    def __init__(self, train: list[Snapshot], test: list[Snapshot]):
        if not train or not test:
            raise ValueError("need at least one train and one test snapshot")
        if len(test) > len(train):
            raise ValueError("test sequence must not be longer than train sequence")
        self.train = train
        self.test = test
        self.cursor = 0

    def current_snapshot(self) -> Snapshot:
        return self.train[self.cursor]

    def observe(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        """Evaluate the cursor's snapshot and advance cyclically."""
        snap = self.train[self.cursor]
        self.cursor = (self.cursor + 1) % len(self.train)
        return value(theta, snap), gradient(theta, snap)

    def metrics(self, theta: np.ndarray) -> tuple[float, float, float]:
        """(train average, test average, generalization gap) at theta."""
        l_avg = self._avg_value(theta, self.train, "_train_stack")
        e_avg = self._avg_value(theta, self.test, "_test_stack")
        return l_avg, e_avg, e_avg - l_avg

    def _avg_value(self, theta: np.ndarray, snaps: list[Snapshot], cache: str) -> float:
        stack = getattr(self, cache, None)
        if stack is None:
            stack = _stack_snapshots(snaps)
            setattr(self, cache, stack)
        return _stacked_average(np.asarray(theta, dtype=np.float64), stack)


def _stack_snapshots(snaps: list[Snapshot]):
    """Bundle snapshot fields into arrays for vectorized averaging."""
    n = len(snaps)
    m = max((len(s.lumps) for s in snaps), default=0)
    centers = np.stack([s.center for s in snaps])
    quads = np.array([s.quad for s in snaps])
    lc = np.zeros((n, m, 2))
    amp = np.zeros((n, m))
    scale = np.ones((n, m))
    for i, s in enumerate(snaps):
        for j, lump in enumerate(s.lumps):
            lc[i, j] = lump.center
            amp[i, j] = lump.sign * lump.amplitude
            scale[i, j] = lump.scale
    return centers, quads, lc, amp, scale


def _stacked_average(theta: np.ndarray, stack) -> float:
    centers, quads, lc, amp, scale = stack
    quad_part = quads * np.sum((theta - centers) ** 2, axis=1)
    r2 = np.sum((theta - lc) ** 2, axis=2)
    lump_part = np.sum(amp * np.exp(-r2 / (2.0 * scale ** 2)), axis=1)
    return float(np.mean(quad_part + lump_part))


def build_sequence(gen: GenConfig, seed: int) -> LandscapeSequence:
    """Deterministically generate a drift chain of train then test snapshots."""
    gen.validate()
    rng = np.random.default_rng(seed)
    c0 = rng.uniform(*gen.center_range, size=2)
    q = rng.uniform(*gen.quad_range)
    lumps = []
    for _ in range(gen.n_lumps):
        lumps.append(Lump(
            rng.uniform(*gen.lump_center_range, size=2),
            rng.uniform(*gen.amp_range),
            rng.uniform(*gen.scale_range),
            1 if rng.random() < 0.5 else -1,
        ))
    snap = Snapshot(c0, q, lumps)
    train = [snap]
    for _ in range(gen.n_train - 1):
        snap = drift(snap, gen.sigma_c, gen.sigma_a, gen.sigma_s, rng)
        train.append(snap)
    test = []
    for _ in range(gen.n_test):
        snap = drift(snap, gen.sigma_c, gen.sigma_a, gen.sigma_s, rng)
        test.append(snap)
    return LandscapeSequence(train, test)


def _snapshot_to_dict(snap: Snapshot) -> dict:
    return {
        "center": snap.center.tolist(),
        "quad": snap.quad,
        "lumps": [{"center": l.center.tolist(), "amplitude": l.amplitude,
                   "scale": l.scale, "sign": l.sign} for l in snap.lumps],
    }


def _snapshot_from_dict(d: dict) -> Snapshot:
    return Snapshot(np.array(d["center"]), d["quad"],
                    [Lump(np.array(l["center"]), l["amplitude"], l["scale"], l["sign"])
                     for l in d["lumps"]])


def dump_sequence(seq: LandscapeSequence, path: str | Path) -> None:
    payload = {
        "train": [_snapshot_to_dict(s) for s in seq.train],
        "test": [_snapshot_to_dict(s) for s in seq.test],
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_sequence(path: str | Path) -> LandscapeSequence:
    payload = json.loads(Path(path).read_text())
    return LandscapeSequence(
        [_snapshot_from_dict(d) for d in payload["train"]],
        [_snapshot_from_dict(d) for d in payload["test"]],
    )


def stationary(gen: GenConfig) -> GenConfig:
    """Copy of a generation config with all drift disabled."""
    return replace(gen, sigma_c=0.0, sigma_a=0.0, sigma_s=0.0)
