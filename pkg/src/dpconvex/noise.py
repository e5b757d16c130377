"""Seedable noise samplers.

Streams are counter-based (Philox) and split through ``SeedSequence`` spawn keys, so
a trial can derive an independent stream from ``(master seed, coordinates)`` without
touching any other trial's randomness.
"""

from __future__ import annotations

import os

import numpy as np

SEED_ENV = "DPCONVEX_SEED"
DEFAULT_SEED = 20160101


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    return int(raw) if raw not in (None, "") else DEFAULT_SEED


class RngStream:
    """A reproducible random stream identified by ``(seed, key)``.

    ``key`` is the tuple of split indices leading to this stream; ``stream_id`` is its
    last element. Two streams built from the same pair yield identical sequences.
    """

    def __init__(self, seed: int, stream_id: int | tuple[int, ...] = ()):
        self.seed = int(seed) & (2**64 - 1)
        self.key = tuple(int(k) for k in stream_id) if isinstance(stream_id, tuple) else (int(stream_id),)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.gen = np.random.Generator(np.random.Philox(ss))

    @property
    def stream_id(self) -> int:
        return self.key[-1] if self.key else 0

    def split(self, *index: int) -> RngStream:
        """Child stream for the given coordinates; does not consume from this stream."""
        return RngStream(self.seed, self.key + tuple(int(i) for i in index))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def sample_spherical_exp(d: int, alpha: float, rng: RngStream, size: int | None = None) -> np.ndarray:
    """Draw from the density proportional to ``exp(-alpha ||k||)`` on R^d.

    The norm is Gamma(d, 1/alpha) and the direction uniform on the sphere.
    """
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    shape = () if size is None else (int(size),)
    r = rng.gen.gamma(shape=d, scale=1.0 / alpha, size=shape)
    u = rng.gen.standard_normal(shape + (d,))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return u * np.asarray(r)[..., None]


def sample_laplace(b: float, rng: RngStream, size=None):
    if not b > 0:
        raise ValueError("Laplace scale must be positive")
    out = rng.gen.laplace(0.0, b, size=size)
    return float(out) if size is None else out


def noise_norm_bound(d: int, alpha: float, gamma: float) -> float:
    """``||k|| <= d ln(d/gamma) / alpha`` with probability at least ``1 - gamma``."""
    return float(d * np.log(d / gamma) / alpha)
