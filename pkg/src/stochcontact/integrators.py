"""One-step schemes and the trajectory driver.

Three schemes share one calling convention ``step(sys, state, t, h, dW)``:

* ``euler_maruyama``: explicit Euler-Maruyama on the contact vector fields.
  ``em_drift_correction="paper"`` adds the extra ``-h/2 * H1`` term to the
  action update (``-q h/2`` for the free particle); ``"none"`` drops it.
  For the oscillator family the exact Ito-Stratonovich drift correction is
  zero, so ``"none"`` is the consistent discretization.
* ``herglotz_contact``: discrete Herglotz scheme generated by the implicit
  action update ``s' = s + L_d``. ``herglotz_variant="printed"`` keeps the
  published momentum update ``p' = m dq / (h (1 - gamma h/2))``;
  ``"contact"`` uses ``p' = m dq / (h (1 + gamma h/2))``, the momentum the
  generating function actually implies, which makes the map exactly contact.
* ``hj_contact``: generating-function scheme, see :mod:`stochcontact.hj`.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import PhaseState, eval_diffusion, eval_drift, require_finite
from .errors import ConfigurationError, ContactError
from .hj import HJConfig, hj_step, initial_hj_state


class SchemeId(str, Enum):
    EULER_MARUYAMA = "euler_maruyama"
    HERGLOTZ_CONTACT = "herglotz_contact"
    HJ_CONTACT = "hj_contact"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(s.value for s in cls)
            raise ConfigurationError(f"unknown scheme {value!r}; choose from {names}") from None

    @property
    def short(self):
        return {"euler_maruyama": "em", "herglotz_contact": "hg", "hj_contact": "hj"}[self.value]


@dataclass(frozen=True)
class SchemeOptions:
    em_drift_correction: str = "paper"
    herglotz_variant: str = "printed"
    hj: HJConfig = field(default_factory=HJConfig)

    def __post_init__(self):
        if self.em_drift_correction not in ("paper", "none"):
            raise ConfigurationError(f"em_drift_correction must be paper|none, got {self.em_drift_correction!r}")
        if self.herglotz_variant not in ("printed", "contact"):
            raise ConfigurationError(f"herglotz_variant must be printed|contact, got {self.herglotz_variant!r}")


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: tuple
    scheme: object
    seed: int = 0
    hj_trace: tuple = ()          # (HJState, discriminant) per step, hj_contact only
    clamped_steps: tuple = ()     # steps whose discriminant was clamped to zero
    resolution_gap: float = None  # oracle only: endpoint change between levels k-1 and k

    @property
    def final(self):
        return self.states[-1]

    def as_array(self):
        return np.array([[st.q, st.p, st.s] for st in self.states], dtype=float)


def em_step(sys, state, t, h, dW, drift_correction="paper"):
    if not h > 0:
        raise ConfigurationError(f"step size must be positive, got {h}")
    f = eval_drift(sys, state, t)
    g = eval_diffusion(sys, state, t)
    s_next = state.s + f.s * h + g.s * dW
    if drift_correction == "paper":
        s_next = s_next - 0.5 * h * sys.h1(state.q, state.p, state.s, t)
    out = PhaseState(state.q + f.q * h + g.q * dW, state.p + f.p * h + g.p * dW, s_next)
    return require_finite(out, "Euler-Maruyama step")


def herglotz_step(sys, state, t, h, dW, variant="printed"):
    """One step of the discrete Herglotz scheme for the oscillator family.

    With m = gamma = a = 1 and omega = 0 the printed variant is

        q' = q + (1 - h/2) h p - h dW
        p' = p - dW / (1 - h/2)
        s' = [s (1 - h/2) + (q' - q)^2 / (2h) - q dW] / (1 + h/2)

    where the last line is the closed-form solve of the implicit update
    ``s' = s + (q'-q)^2/(2h) - h (s' + s)/2 - q dW``.
    """
    prm = sys.params
    m, gamma, a = prm.mass, prm.gamma, prm.a
    if not h > 0 or abs(gamma) * h >= 2.0:
        raise ConfigurationError(f"Herglotz step needs 0 < |gamma| h < 2, got h={h}, gamma={gamma}")
    w2 = prm.omega(t) ** 2
    lo, hi = 1.0 - 0.5 * gamma * h, 1.0 + 0.5 * gamma * h
    q, p, s = state.q, state.p, state.s
    # m dq / h = (1 - gamma h/2) p - h m w^2 q - a dW
    mom = lo * p - h * m * w2 * q - a * dW
    dq = h * mom / m
    p_next = mom / lo if variant == "printed" else mom / hi
    s_next = (s * lo + m * dq * dq / (2.0 * h) - 0.5 * h * m * w2 * q * q - a * q * dW) / hi
    return require_finite(PhaseState(q + dq, p_next, s_next), "Herglotz step")


def _stepper(scheme, sys, options):
    scheme = SchemeId.parse(scheme)
    if scheme is SchemeId.EULER_MARUYAMA:
        def step(carry, t, h, dw):
            return em_step(sys, carry, t, h, dw, options.em_drift_correction), None
        return step, lambda c: c
    if scheme is SchemeId.HERGLOTZ_CONTACT:
        def step(carry, t, h, dw):
            return herglotz_step(sys, carry, t, h, dw, options.herglotz_variant), None
        return step, lambda c: c
    if not sys.params.is_free_particle():
        raise ConfigurationError(
            "hj_contact coefficient recursions are only available for the free particle "
            "(mass = gamma = a = 1, omega = 0)")

    def step(carry, t, h, dw):
        phase, hjs = carry
        phase, hjs, disc = hj_step(phase, hjs, t, h, dw, options.hj, sys.params.gamma)
        return (phase, hjs), disc
    return step, lambda c: c[0]


def _initial_carry(scheme, initial, options):
    if SchemeId.parse(scheme) is SchemeId.HJ_CONTACT:
        return (initial, initial_hj_state(initial, options.hj))
    return initial


def integrate(scheme, sys, path, initial, options=None, n_steps=None):
    """Apply the selected one-step map on every cell of ``path``, or on the
    first ``n_steps`` cells."""
    options = options or SchemeOptions()
    scheme = SchemeId.parse(scheme)
    step, phase_of = _stepper(scheme, sys, options)
    n_steps = path.n_steps if n_steps is None else int(n_steps)
    if not 0 <= n_steps <= path.n_steps:
        raise ConfigurationError(f"n_steps={n_steps} outside the path's {path.n_steps} cells")
    times = path.times()[:n_steps + 1]
    h = path.h if path.n_steps else 0.0
    carry = _initial_carry(scheme, initial, options)
    states, trace, clamped = [initial], [], []
    for n in range(n_steps):
        try:
            carry, disc = step(carry, times[n], h, path.increments[n])
        except ContactError as exc:
            exc.step = n + 1
            exc.partial = Trajectory(times[:n + 1], tuple(states), scheme, path.seed,
                                     tuple(trace), tuple(clamped))
            raise
        states.append(phase_of(carry))
        if disc is not None:
            trace.append((carry[1], disc))
            if disc < 0:
                clamped.append(n + 1)
    return Trajectory(times, tuple(states), scheme, path.seed, tuple(trace), tuple(clamped))


def integrate_endpoints(scheme, sys, dw, t0, h, initial, options=None):
    """Vectorized run over many paths at once.

    ``dw`` has shape (n_steps, n_paths); returns the final PhaseState with
    array components. Any step error aborts the whole batch.
    """
    options = options or SchemeOptions()
    dw = np.asarray(dw, dtype=float)
    n_steps, n_paths = dw.shape
    step, phase_of = _stepper(scheme, sys, options)
    ones = np.ones(n_paths)
    start = PhaseState(initial.q * ones, initial.p * ones, initial.s * ones)
    carry = _initial_carry(scheme, start, options)
    for n in range(n_steps):
        try:
            carry, _ = step(carry, t0 + n * h, h, dw[n])
        except ContactError as exc:
            exc.step = n + 1
            raise
    return phase_of(carry)
