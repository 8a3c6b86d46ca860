"""Reference solutions.

``deterministic_exact`` is the closed-form zero-noise flow of the damped
free particle. Under noise the action component has no elementary closed
form, so ``pathwise_reference`` integrates the Stratonovich system with
Heun's predictor-corrector on the 2**k Brownian-bridge refinement of the
path. A shadow run on the 2**(k-1) level (pairwise sums of the same fine
increments) measures how much the reference still moves with resolution.
"""

from dataclasses import dataclass

import numpy as np

from .core import PhaseState, require_finite
from .errors import ConfigurationError
from .noise import iter_refined


@dataclass(frozen=True)
class OracleConfig:
    refinement_exponent: int = 7
    scheme_for_fine: str = "heun_stratonovich"

    def __post_init__(self):
        if self.refinement_exponent < 0:
            raise ConfigurationError("refinement_exponent must be >= 0")
        if self.scheme_for_fine != "heun_stratonovich":
            raise ConfigurationError(f"unknown fine scheme {self.scheme_for_fine!r}")


def deterministic_exact(params, initial, t):
    """Zero-noise flow for omega = 0:

        P = p0 e^{-gt}
        Q = q0 + p0 (1 - e^{-gt}) / (m g)
        S = (s0 + c) e^{-gt} - c e^{-2gt},   c = p0^2 / (2 m g)
    """
    if params.omega_constant != 0.0:
        raise ConfigurationError("closed form only available for omega = 0")
    g, m = params.gamma, params.mass
    if g == 0:
        raise ConfigurationError("closed form requires gamma != 0")
    q0, p0, s0 = initial.q, initial.p, initial.s
    e = np.exp(-g * t)
    c = p0 * p0 / (2.0 * m * g)
    return PhaseState(q0 + p0 * (1.0 - e) / (m * g), p0 * e, (s0 + c) * e - c * e * e)


def _fields(sys, q, p, s, t):
    hp0 = sys.dp_h0(q, p, s, t)
    hp1 = sys.dp_h1(q, p, s, t)
    return (hp0, -(sys.dq_h0(q, p, s, t) + p * sys.ds_h0(q, p, s, t)), p * hp0 - sys.h0(q, p, s, t),
            hp1, -(sys.dq_h1(q, p, s, t) + p * sys.ds_h1(q, p, s, t)), p * hp1 - sys.h1(q, p, s, t))


def _heun(sys, q, p, s, t, h, dw):
    fq, fp, fs, gq, gp, gs = _fields(sys, q, p, s, t)
    Fq, Fp, Fs, Gq, Gp, Gs = _fields(sys, q + fq * h + gq * dw, p + fp * h + gp * dw,
                                     s + fs * h + gs * dw, t + h)
    return (q + 0.5 * ((fq + Fq) * h + (gq + Gq) * dw),
            p + 0.5 * ((fp + Fp) * h + (gp + Gp) * dw),
            s + 0.5 * ((fs + Fs) * h + (gs + Gs) * dw))


def heun_step(sys, state, t, h, dW):
    """Stratonovich Heun predictor-corrector step."""
    return require_finite(PhaseState(*_heun(sys, state.q, state.p, state.s, t, h, dW)),
                          "Heun step")


def _check_grid(paths):
    first = paths[0]
    for p in paths[1:]:
        if (p.t0, p.horizon, p.n_steps) != (first.t0, first.horizon, first.n_steps):
            raise ConfigurationError("ensemble paths must share one grid")
    return first


def reference_ensemble(sys, paths, initial, config, record=False, block=64):
    """Heun reference on the 2**k refinement of every path, vectorized over paths.

    Returns ``(states, shadow_final)``: ``states`` holds the PhaseState (array
    components, one entry per path) at every coarse grid time when ``record``
    is set, otherwise only the final one; ``shadow_final`` is the level k-1
    endpoint, or None when k = 0.
    """
    first = _check_grid(paths)
    k = config.refinement_exponent
    factor = 2 ** k
    h = first.h
    hf = h / factor
    ones = np.ones(len(paths))
    y = (initial.q * ones, initial.p * ones, initial.s * ones)
    shadow = y
    states = [PhaseState(*y)] if record else []
    if k == 0:
        dw = np.stack([p.increments for p in paths], axis=1)
        for n in range(first.n_steps):
            y = _heun(sys, *y, first.t0 + n * h, h, dw[n])
            if record:
                states.append(require_finite(PhaseState(*y), "reference state"))
        final = require_finite(PhaseState(*y), "reference state")
        return (states if record else [final]), None

    n = 0
    streams = [iter_refined(p, factor, block) for p in paths]
    for blocks in zip(*streams):
        fine = np.stack(blocks, axis=-1)            # (cells, factor, paths)
        pairs = fine[:, 0::2] + fine[:, 1::2]       # level k-1 increments
        for cell in range(fine.shape[0]):
            t_cell = first.t0 + n * h
            for j in range(factor):
                y = _heun(sys, *y, t_cell + j * hf, hf, fine[cell, j])
            for j in range(factor // 2):
                shadow = _heun(sys, *shadow, t_cell + 2 * j * hf, 2 * hf, pairs[cell, j])
            n += 1
            if record:
                states.append(PhaseState(*y))
        require_finite(PhaseState(*y), "reference state")
    final = require_finite(PhaseState(*y), "reference state")
    return (states if record else [final]), PhaseState(*shadow)


def pathwise_reference(sys, path, initial, config):
    """Fine-grid reference trajectory sampled on the coarse grid of ``path``."""
    from .integrators import Trajectory

    states, shadow = reference_ensemble(sys, [path], initial, config, record=True)
    coarse = tuple(PhaseState(float(st.q[0]), float(st.p[0]), float(st.s[0])) for st in states)
    gap = None
    if shadow is not None:
        end = coarse[-1]
        gap = float(np.sqrt((end.q - shadow.q[0]) ** 2 + (end.p - shadow.p[0]) ** 2
                            + (end.s - shadow.s[0]) ** 2))
    return Trajectory(path.times(), coarse, "heun_stratonovich", path.seed, resolution_gap=gap)
