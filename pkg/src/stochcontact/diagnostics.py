"""Structure and convergence diagnostics.

Contactness is measured on the numerical tangent map. With J the Jacobian
of (q, p, s) -> (Q, P, S), pulling back dS - P dQ gives

    lambda = S_s - P Q_s
    r_p    = S_p - P Q_p
    r_q    = S_q - P Q_q + lambda p

and an exactly contact map has r_p = r_q = 0 with conformal factor lambda.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import PhaseState
from .errors import ConfigurationError, ContactError, HarnessError, OracleResolutionError
from .integrators import SchemeId, SchemeOptions, integrate, integrate_endpoints
from .noise import BrownianPath, coarsen, generate, trajectory_seed
from .oracle import OracleConfig, reference_ensemble

EXCLUSION_LIMIT = 0.10
ORACLE_GAP_FRACTION = 0.10


@dataclass(frozen=True)
class FlowJacobian:
    matrix: np.ndarray     # rows (Q, P, S), columns (q, p, s)
    base: PhaseState       # unperturbed output state
    initial: PhaseState
    t: float = 0.0


@dataclass(frozen=True)
class ContactReport:
    lambda_est: float
    r_p: float
    r_q: float
    t: float


@dataclass
class ConvergenceReport:
    scheme: str
    step_sizes: list
    ms_errors: list
    ms_errors_paper_metric: list
    slope: float = float("nan")
    intercept: float = float("nan")
    slope_paper_metric: float = float("nan")
    n_paths: int = 0
    n_excluded: list = field(default_factory=list)
    oracle_gap: float = float("nan")
    failure: str = None


def flow_jacobian(scheme, sys, initial, path, t_end, eps=1e-6, options=None):
    """Central-difference Jacobian of the time-``t_end`` numerical flow.

    All seven runs read the same increments of ``path``.
    """
    if not eps > 0:
        raise ConfigurationError("eps must be positive")
    n = 0 if path.n_steps == 0 else int(round((t_end - path.t0) / path.h))
    if n < 0 or n > path.n_steps or (n and abs(path.t0 + n * path.h - t_end) > 1e-9 * max(1.0, abs(t_end))):
        raise ConfigurationError(f"t_end={t_end} is not a grid time of the path")
    if n == 0:
        return FlowJacobian(np.eye(3), initial, initial, t_end)

    def run(state):
        return integrate(scheme, sys, path, state, options, n_steps=n).final.as_array()

    x0 = initial.as_array()
    jac = np.empty((3, 3))
    for j in range(3):
        up, down = x0.copy(), x0.copy()
        up[j] += eps
        down[j] -= eps
        jac[:, j] = (run(PhaseState.from_array(up)) - run(PhaseState.from_array(down))) / (2.0 * eps)
    base = PhaseState.from_array(run(initial))
    return FlowJacobian(jac, base, initial, t_end)


def contact_residuals(jac):
    m = jac.matrix
    big_p, p = jac.base.p, jac.initial.p
    lam = m[2, 2] - big_p * m[0, 2]
    r_p = m[2, 1] - big_p * m[0, 1]
    r_q = m[2, 0] - big_p * m[0, 0] + lam * p
    return ContactReport(float(lam), float(r_p), float(r_q), jac.t)


def conformal_reference(gamma, t):
    return math.exp(-gamma * t)


def order_fit(step_sizes, errors):
    """Least-squares line through (log h, log error); returns (slope, intercept)."""
    h = np.asarray(step_sizes, dtype=float)
    e = np.asarray(errors, dtype=float)
    if h.size < 2 or h.size != e.size:
        raise ConfigurationError("order_fit needs at least two (h, error) pairs")
    if np.any(h <= 0) or np.any(e <= 0) or not (np.all(np.isfinite(h)) and np.all(np.isfinite(e))):
        raise ConfigurationError("order_fit needs positive finite step sizes and errors")
    slope, intercept = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope), float(intercept)


def _ladder_base(ladder, t_end, t0=0.0):
    ladder = sorted(float(h) for h in ladder)
    if ladder[0] <= 0:
        raise ConfigurationError("step sizes must be positive")
    base = ladder[0]
    factors = []
    for h in ladder:
        r = h / base
        if abs(r - round(r)) > 1e-9:
            raise ConfigurationError(f"step {h} is not a multiple of the finest step {base}")
        factors.append(int(round(r)))
    n_base = (t_end - t0) / base
    if abs(n_base - round(n_base)) > 1e-9 or round(n_base) < 1:
        raise ConfigurationError(f"horizon {t_end} is not a multiple of the finest step {base}")
    n_base = int(round(n_base))
    for h, f in zip(ladder, factors):
        if n_base % f:
            raise ConfigurationError(f"step {h} does not divide the horizon {t_end}")
    return ladder, base, factors, n_base


def ensemble_paths(seed, n_paths, t0, t_end, n_steps, zero_noise=False):
    if zero_noise:
        return [BrownianPath.zero(t0, t_end, n_steps, trajectory_seed(seed, i)) for i in range(n_paths)]
    return [generate(trajectory_seed(seed, i), t0, t_end, n_steps) for i in range(n_paths)]


def _sq_dist(a, b):
    return (a.q - b.q) ** 2 + (a.p - b.p) ** 2 + (a.s - b.s) ** 2


def _paper_sq(a, b):
    return ((a.q + a.p + a.s) ** 2 - (b.q + b.p + b.s) ** 2) ** 2


def _run_scheme(scheme, sys, paths, initial, options):
    """Endpoints of ``scheme`` on each path; failed paths give (None, error)."""
    dw = np.stack([p.increments for p in paths], axis=1)
    first = paths[0]
    try:
        end = integrate_endpoints(scheme, sys, dw, first.t0, first.h, initial, options)
        return [(PhaseState(end.q[i], end.p[i], end.s[i]), None) for i in range(len(paths))]
    except ContactError:
        pass
    out = []
    for p in paths:
        try:
            out.append((integrate(scheme, sys, p, initial, options).final, None))
        except ContactError as exc:
            out.append((None, exc))
    return out


def _chunks(n, threads):
    threads = max(1, min(int(threads), n))
    bounds = np.linspace(0, n, threads + 1).round().astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(threads)]


def _study_chunk(schemes, sys, initial, base_paths, factors, oracle_cfg, options):
    refs, shadow = reference_ensemble(sys, base_paths, initial, oracle_cfg)
    ref = refs[-1]
    ref_pts = [PhaseState(ref.q[i], ref.p[i], ref.s[i]) for i in range(len(base_paths))]
    gaps = [None] * len(base_paths)
    if shadow is not None:
        gaps = [float(_sq_dist(PhaseState(shadow.q[i], shadow.p[i], shadow.s[i]), ref_pts[i]))
                for i in range(len(base_paths))]
    results = {}
    for scheme in schemes:
        per_h = []
        for f in factors:
            paths = base_paths if f == 1 else [coarsen(p, f) for p in base_paths]
            per_h.append(_run_scheme(scheme, sys, paths, initial, options))
        results[scheme] = per_h
    return ref_pts, gaps, results


def convergence_study(schemes, sys, initial, ladder, t_end, n_paths, seed,
                      oracle_cfg=None, options=None, threads=1, zero_noise=False):
    """Mean-square endpoint errors on common refined paths for every scheme
    and step size in ``ladder``; one reference per path serves all of them.

    Returns a dict scheme -> ConvergenceReport. A scheme that loses more than
    10% of its paths gets ``failure`` set instead of a slope. The reference
    is checked against its own k-1 level: its RMS endpoint shift must stay
    below 10% of the smallest RMS error measured, or OracleResolutionError
    is raised.
    """
    if n_paths < 1:
        raise ConfigurationError("n_paths must be >= 1")
    oracle_cfg = oracle_cfg or OracleConfig()
    options = options or SchemeOptions()
    schemes = [SchemeId.parse(s) for s in schemes]
    ladder, base, factors, n_base = _ladder_base(ladder, t_end)
    base_paths = ensemble_paths(seed, n_paths, 0.0, t_end, n_base, zero_noise)

    chunks = _chunks(n_paths, threads)
    args = [(schemes, sys, initial, [base_paths[i] for i in c], factors, oracle_cfg, options)
            for c in chunks]
    if len(chunks) == 1:
        parts = [_study_chunk(*args[0])]
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda a: _study_chunk(*a), args))

    ref_pts = [r for part in parts for r in part[0]]
    gaps = [g for part in parts for g in part[1]]
    gap = math.sqrt(math.fsum(gaps) / n_paths) if gaps[0] is not None else 0.0

    reports = {}
    for scheme in schemes:
        rep = ConvergenceReport(scheme.value, list(ladder), [], [], n_paths=n_paths, oracle_gap=gap)
        failures = []
        for hi in range(len(ladder)):
            outcomes = [o for part in parts for o in part[2][scheme][hi]]
            std, pap, bad = [], [], []
            for i, (end, exc) in enumerate(outcomes):
                if end is None:
                    bad.append(exc)
                    continue
                std.append(float(_sq_dist(end, ref_pts[i])))
                pap.append(float(_paper_sq(end, ref_pts[i])))
            rep.n_excluded.append(len(bad))
            if len(bad) > EXCLUSION_LIMIT * n_paths:
                failures.append(f"h={ladder[hi]}: {len(bad)}/{n_paths} paths failed ({bad[0]})")
                rep.ms_errors.append(float("nan"))
                rep.ms_errors_paper_metric.append(float("nan"))
                continue
            rep.ms_errors.append(math.sqrt(math.fsum(std) / len(std)))
            rep.ms_errors_paper_metric.append(math.sqrt(math.fsum(pap) / len(pap)))
        if failures:
            rep.failure = "; ".join(failures)
        else:
            if gap > ORACLE_GAP_FRACTION * min(rep.ms_errors):
                raise OracleResolutionError(
                    f"reference moves by {gap:.3g} between levels k-1 and k, more than "
                    f"{ORACLE_GAP_FRACTION:.0%} of the smallest {scheme.value} error "
                    f"{min(rep.ms_errors):.3g}; raise the refinement exponent", gap=gap)
            if len(ladder) >= 2 and min(rep.ms_errors) > 0:
                rep.slope, rep.intercept = order_fit(ladder, rep.ms_errors)
            if len(ladder) >= 2 and min(rep.ms_errors_paper_metric) > 0:
                rep.slope_paper_metric = order_fit(ladder, rep.ms_errors_paper_metric)[0]
        reports[scheme] = rep
    return reports


def ms_error(scheme, sys, initial, h, t_end, n_paths, seed, oracle_cfg=None, options=None,
             threads=1, zero_noise=False):
    """(standard, paper_metric) mean-square endpoint errors at one step size.

    standard    = sqrt(mean |Y_N - Y(T)|^2), Euclidean norm over (q, p, s)
    paper_metric = sqrt(mean |(Q+P+S)^2 - (Q_N+P_N+S_N)^2|^2)
    """
    rep = convergence_study([scheme], sys, initial, [h], t_end, n_paths, seed, oracle_cfg,
                            options, threads, zero_noise)[SchemeId.parse(scheme)]
    if rep.failure:
        raise HarnessError(f"{rep.scheme}: {rep.failure}")
    return rep.ms_errors[0], rep.ms_errors_paper_metric[0]


def endpoint_errors(schemes, sys, initial, t_end, n_steps, n_paths, seed, oracle_cfg=None,
                    options=None, threads=1, zero_noise=False):
    """Per-path Euclidean endpoint errors against the reference.

    Returns dict scheme -> list (None for failed paths) plus the references.
    """
    reps = {}
    oracle_cfg = oracle_cfg or OracleConfig()
    options = options or SchemeOptions()
    schemes = [SchemeId.parse(s) for s in schemes]
    paths = ensemble_paths(seed, n_paths, 0.0, t_end, n_steps, zero_noise)
    chunks = _chunks(n_paths, threads)
    args = [(schemes, sys, initial, [paths[i] for i in c], [1], oracle_cfg, options)
            for c in chunks]
    if len(chunks) == 1:
        parts = [_study_chunk(*args[0])]
    else:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda a: _study_chunk(*a), args))
    refs = [r for part in parts for r in part[0]]
    for scheme in schemes:
        outcomes = [o for part in parts for o in part[2][scheme][0]]
        reps[scheme] = [None if end is None else (end, math.sqrt(float(_sq_dist(end, refs[i]))))
                        for i, (end, _) in enumerate(outcomes)]
    return reps, refs
