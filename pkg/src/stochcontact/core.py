r"""Phase states and the stochastic damped parametric oscillator.

A contact Hamiltonian system driven by one scalar Stratonovich noise,

    dQ = H0_p dt + H1_p o dW
    dP = -(H0_q + P H0_s) dt - (H1_q + P H1_s) o dW
    dS = (P H0_p - H0) dt + (P H1_p - H1) o dW

is described by the pair (H0, H1) and their first partials. Everything here
is the n=1, m=1 slice; components of :class:`PhaseState` may be floats or
equally shaped numpy arrays (one entry per sample path).
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, NumericOverflowError

Hamiltonian = Callable[..., float]


@dataclass(frozen=True)
class PhaseState:
    q: float
    p: float
    s: float

    def as_array(self):
        return np.array([self.q, self.p, self.s], dtype=float)

    @classmethod
    def from_array(cls, x):
        return cls(x[0], x[1], x[2])

    def is_finite(self):
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.p))
                    and np.all(np.isfinite(self.s)))

    def __add__(self, other):
        return PhaseState(self.q + other.q, self.p + other.p, self.s + other.s)

    def scaled(self, c):
        return PhaseState(c * self.q, c * self.p, c * self.s)


def require_finite(state, what="state"):
    if not state.is_finite():
        raise NumericOverflowError(f"non-finite {what}: {state}")
    return state


def zero_frequency(t):
    return 0.0


def constant_omega(value):
    """Frequency function returning ``value`` at every time."""
    value = float(value)
    if value == 0.0:
        return zero_frequency

    def omega(t):
        return value

    omega.constant = value
    return omega


zero_frequency.constant = 0.0


@dataclass(frozen=True)
class OscillatorParams:
    mass: float = 1.0
    gamma: float = 1.0
    omega: Callable[[float], float] = zero_frequency
    a: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigurationError(f"mass must be positive, got {self.mass}")

    @property
    def omega_constant(self):
        """Constant frequency value, or None if omega is a general function."""
        return getattr(self.omega, "constant", None)

    def is_free_particle(self):
        return (self.mass == 1.0 and self.gamma == 1.0 and self.a == 1.0
                and self.omega_constant == 0.0)


@dataclass(frozen=True)
class ContactSystem:
    h0: Hamiltonian
    h1: Hamiltonian
    dq_h0: Hamiltonian
    dp_h0: Hamiltonian
    ds_h0: Hamiltonian
    dq_h1: Hamiltonian
    dp_h1: Hamiltonian
    ds_h1: Hamiltonian
    params: OscillatorParams = field(default_factory=OscillatorParams)

    def partials(self):
        """Name -> (hamiltonian, variable, partial) for every coded partial."""
        return {
            "dq_h0": (self.h0, "q", self.dq_h0),
            "dp_h0": (self.h0, "p", self.dp_h0),
            "ds_h0": (self.h0, "s", self.ds_h0),
            "dq_h1": (self.h1, "q", self.dq_h1),
            "dp_h1": (self.h1, "p", self.dp_h1),
            "ds_h1": (self.h1, "s", self.ds_h1),
        }


def make_oscillator(params):
    """H0 = p^2/(2m) + m w(t)^2 q^2/2 + gamma s,  H1 = a q."""
    if not isinstance(params, OscillatorParams):
        raise ConfigurationError("expected OscillatorParams")
    m, gamma, omega, a = params.mass, params.gamma, params.omega, params.a

    def h0(q, p, s, t):
        return p * p / (2.0 * m) + 0.5 * m * omega(t) ** 2 * q * q + gamma * s

    def dq_h0(q, p, s, t):
        return m * omega(t) ** 2 * q

    def dp_h0(q, p, s, t):
        return p / m

    def ds_h0(q, p, s, t):
        return gamma + 0.0 * s

    def h1(q, p, s, t):
        return a * q

    def dq_h1(q, p, s, t):
        return a + 0.0 * q

    def dp_h1(q, p, s, t):
        return 0.0 * p

    def ds_h1(q, p, s, t):
        return 0.0 * s

    return ContactSystem(h0, h1, dq_h0, dp_h0, ds_h0, dq_h1, dp_h1, ds_h1, params)


def free_particle():
    """m = gamma = a = 1, omega = 0: the damped free particle driven by -q o dW."""
    return make_oscillator(OscillatorParams())


def _contact_field(h, dq, dp, ds, state, t):
    q, p, s = state.q, state.p, state.s
    hp = dp(q, p, s, t)
    return PhaseState(hp, -(dq(q, p, s, t) + p * ds(q, p, s, t)),
                      p * hp - h(q, p, s, t))


def eval_drift(sys, state, t):
    out = _contact_field(sys.h0, sys.dq_h0, sys.dp_h0, sys.ds_h0, state, t)
    return require_finite(out, "drift")


def eval_diffusion(sys, state, t):
    out = _contact_field(sys.h1, sys.dq_h1, sys.dp_h1, sys.ds_h1, state, t)
    return require_finite(out, "diffusion")


def contact_form(state, tangent):
    """Evaluate ds - p dq at ``state`` on ``tangent``."""
    return tangent.s - state.p * tangent.q


def check_partials(sys, state, t, eps=1e-5):
    """Max over the six coded partials of |analytic - central difference|."""
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    worst = 0.0
    base = {"q": state.q, "p": state.p, "s": state.s}
    for h, var, partial in sys.partials().values():
        up, down = dict(base), dict(base)
        up[var] += eps
        down[var] -= eps
        fd = (h(t=t, **up) - h(t=t, **down)) / (2.0 * eps)
        analytic = partial(state.q, state.p, state.s, t)
        worst = max(worst, float(np.max(np.abs(analytic - fd))))
    return worst
