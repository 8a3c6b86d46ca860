"""Discretized Brownian paths, Brownian-bridge refinement and the low-order
iterated Stratonovich integrals.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``. A path
generated from ``seed`` is a pure function of (seed, t0, horizon, n_steps);
refinement draws from a child stream keyed on (seed, refinement depth,
factor), so every level of the refinement tree is reproducible.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UnsupportedIndexError, UsageError

GENERATOR = f"numpy.random.PCG64 via SeedSequence (numpy {np.__version__})"

SUPPORTED_INDICES = {(0,), (1,), (1, 1), (1, 0), (0, 1)}


def trajectory_seed(seed, index):
    """Per-trajectory seed; order independent so ensembles can be split freely."""
    return int(seed) ^ int(index)


@dataclass(frozen=True)
class BrownianPath:
    t0: float
    horizon: float
    n_steps: int
    increments: np.ndarray
    seed: int = 0
    lineage: tuple = ()   # refinement factors applied since generation
    noise_free: bool = False  # deterministic limit: refinements stay zero

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim != 1 or inc.size != self.n_steps:
            raise ConfigurationError(
                f"expected {self.n_steps} increments, got shape {inc.shape}")
        inc = inc.copy()
        inc.flags.writeable = False
        object.__setattr__(self, "increments", inc)

    @property
    def h(self):
        return (self.horizon - self.t0) / self.n_steps

    def times(self):
        if self.n_steps == 0:
            return np.array([self.t0])
        return self.t0 + self.h * np.arange(self.n_steps + 1)

    def values(self):
        """W on the grid, W(t0) = 0."""
        return np.concatenate(([0.0], np.cumsum(self.increments)))

    @classmethod
    def zero(cls, t0, horizon, n_steps, seed=0):
        """Noise-free path; unlike a path that merely has zero increments,
        its refinements are zero as well."""
        return cls(t0, horizon, n_steps, np.zeros(n_steps), seed, noise_free=True)


@dataclass(frozen=True)
class MultiIndex:
    entries: tuple = field(default=(0,))

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(j) for j in self.entries))
        if self.entries not in SUPPORTED_INDICES:
            raise UnsupportedIndexError(f"unsupported multi-index {self.entries}")


def generate(seed, t0, horizon, n_steps):
    if n_steps < 1:
        raise ConfigurationError(f"n_steps must be >= 1, got {n_steps}")
    if not horizon > t0:
        raise ConfigurationError("horizon must exceed t0")
    h = (horizon - t0) / n_steps
    rng = np.random.default_rng(seed)
    return BrownianPath(t0, horizon, n_steps, rng.standard_normal(n_steps) * np.sqrt(h), seed)


def _bridge_rng(path, factor):
    key = (len(path.lineage) + 1, int(factor))
    return np.random.default_rng(np.random.SeedSequence(path.seed, spawn_key=key))


def _bridge_cells(dw, z, factor):
    # Conditioning i.i.d. normals on their sum yields the Brownian bridge law.
    fine = z - ((z.sum(axis=1) - dw) / factor)[:, None]
    fine[:, -1] = dw - fine[:, :-1].sum(axis=1)
    return fine


def iter_refined(path, factor, block=256):
    """Yield fine increments of ``refine(path, factor)`` in (cells, factor) blocks.

    Consumes the random stream in the same order as :func:`refine`, so the
    concatenated blocks equal the refined path bit for bit.
    """
    if factor < 2:
        raise ConfigurationError(f"refinement factor must be >= 2, got {factor}")
    if path.noise_free:
        for start in range(0, path.n_steps, block):
            yield np.zeros((min(block, path.n_steps - start), factor))
        return
    rng = _bridge_rng(path, factor)
    scale = np.sqrt(path.h / factor)
    inc = path.increments
    for start in range(0, path.n_steps, block):
        dw = inc[start:start + block]
        z = rng.standard_normal((dw.size, factor)) * scale
        yield _bridge_cells(dw, z, factor)


def refine(path, factor):
    """Brownian-bridge refinement; every coarse increment is the sum of its
    ``factor`` fine sub-increments."""
    blocks = list(iter_refined(path, factor, block=max(path.n_steps, 1)))
    fine = np.concatenate(blocks).ravel() if blocks else np.zeros(0)
    return BrownianPath(path.t0, path.horizon, path.n_steps * factor, fine,
                        path.seed, path.lineage + (int(factor),), path.noise_free)


def coarsen(path, factor):
    """Sum consecutive groups of ``factor`` increments."""
    if factor < 1 or path.n_steps % factor:
        raise ConfigurationError(
            f"cannot coarsen {path.n_steps} steps by a factor of {factor}")
    inc = path.increments.reshape(-1, factor).sum(axis=1)
    return BrownianPath(path.t0, path.horizon, path.n_steps // factor, inc, path.seed,
                        noise_free=path.noise_free)


def increment(path, n):
    if not 0 <= n < path.n_steps:
        raise UsageError(f"increment index {n} outside [0, {path.n_steps})")
    return float(path.increments[n])


def stratonovich_j(path, alpha, upto_step):
    """Multiple Stratonovich integral J_alpha over [t0, t_upto]."""
    if not isinstance(alpha, MultiIndex):
        alpha = MultiIndex(tuple(alpha))
    if not 0 <= upto_step <= path.n_steps:
        raise UsageError(f"step {upto_step} outside [0, {path.n_steps}]")
    t = upto_step * path.h if path.n_steps else 0.0
    w = path.values()[:upto_step + 1]
    e = alpha.entries
    if e == (0,):
        return t
    if e == (1,):
        return float(w[-1])
    if e == (1, 1):
        return 0.5 * float(w[-1]) ** 2
    # trapezoidal rule is the Stratonovich-consistent quadrature of int W du
    j10 = float(0.5 * path.h * np.sum(w[:-1] + w[1:])) if upto_step else 0.0
    if e == (1, 0):
        return j10
    return t * float(w[-1]) - j10


def ito_sum_11(path):
    """Left-point (Ito) sum of int W dW over the whole path."""
    w = path.values()
    return float(np.sum(w[:-1] * path.increments))
