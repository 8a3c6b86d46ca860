"""Experiment runner.

    stochcontact simulate      --config run.cfg --out out/
    stochcontact convergence   --scheme herglotz_contact --paths 200
    stochcontact contact-check --zero-noise
    stochcontact compare       --scheme euler_maruyama --scheme herglotz_contact

Exit codes: 0 success, 2 usage/configuration error, 3 numeric or domain
error, 4 oracle resolution error.
"""

import argparse
import json
import logging
import math
import os
import statistics
import sys

import numpy as np

from . import csvio
from .config import load_config
from .diagnostics import (
    conformal_reference,
    contact_residuals,
    convergence_study,
    endpoint_errors,
    flow_jacobian,
    order_fit,
)
from .errors import ContactError, UsageError
from .integrators import SchemeId, integrate
from .noise import GENERATOR, BrownianPath, generate, trajectory_seed

log = logging.getLogger("stochcontact")


class Run:
    """Output directory plus the manifest that goes with it."""

    def __init__(self, command, cfg, threads):
        self.cfg = cfg
        self.dir = cfg.out
        os.makedirs(self.dir, exist_ok=True)
        self.manifest = {
            "command": command,
            "config_sha256": cfg.digest(),
            "generator": GENERATOR,
            "threads": threads,
            "config": cfg.canonical_text().splitlines(),
            "schemes": {},
            "files": [],
        }

    def path(self, name):
        self.manifest["files"].append(name)
        return os.path.join(self.dir, name)

    def status(self, scheme, status, exc=None, **extra):
        entry = {"status": status}
        if exc is not None:
            entry["error"] = type(exc).__name__
            entry["message"] = str(exc)
            if getattr(exc, "step", None) is not None:
                entry["step"] = exc.step
            if getattr(exc, "discriminant", None) is not None:
                entry["discriminant"] = float(exc.discriminant)
        entry.update(extra)
        current = self.manifest["schemes"].get(scheme)
        if current is None or (current["status"] == "ok" and status != "ok"):
            self.manifest["schemes"][scheme] = entry

    def abort(self, exc):
        self.manifest["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "gap", None) is not None:
            self.manifest["error"]["oracle_gap"] = exc.gap
        return self.finish(exc.exit_code)

    def finish(self, code):
        self.manifest["exit_code"] = code
        with open(os.path.join(self.dir, "manifest.json"), "w") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return code


def _path_for(cfg, index):
    seed = trajectory_seed(cfg.seed, index)
    if cfg.n_steps == 0:
        return BrownianPath(0.0, 0.0, 0, np.zeros(0), seed)
    if cfg.zero_noise:
        return BrownianPath.zero(0.0, cfg.horizon, cfg.n_steps, seed)
    return generate(seed, 0.0, cfg.horizon, cfg.n_steps)


def cmd_simulate(cfg, threads=1):
    run = Run("simulate", cfg, threads)
    sys_, initial, options = cfg.system(), cfg.initial(), cfg.scheme_options()
    code = 0
    for i in range(cfg.n_paths):
        path = _path_for(cfg, i)
        csvio.write_path(path, run.path(f"path_seed{path.seed}.csv"))
        done = {}
        for name in cfg.schemes:
            scheme = SchemeId.parse(name)
            try:
                traj = integrate(scheme, sys_, path, initial, options)
            except ContactError as exc:
                code = max(code, exc.exit_code)
                log.error("%s failed on seed %d: %s", name, path.seed, exc)
                run.status(name, "failed", exc, partial=exc.partial is not None)
                if exc.partial is not None:
                    csvio.write_trajectory(exc.partial, run.path(f"traj_{name}_seed{path.seed}.partial.csv"))
                continue
            run.status(name, "ok")
            done[scheme] = traj
            csvio.write_trajectory(traj, run.path(f"traj_{name}_seed{path.seed}.csv"))
            if scheme is SchemeId.HJ_CONTACT:
                csvio.write_hj_trace(traj, run.path(f"hj_trace_seed{path.seed}.csv"))
                if traj.clamped_steps:
                    run.manifest["schemes"][name]["clamped_steps"] = len(traj.clamped_steps)
        if done:
            header = ["n", "t"] + [f"{c}_{s.short}" for s in done for c in "qps"]
            times = path.times()
            rows = []
            for n, t in enumerate(times):
                row = [n, t]
                for traj in done.values():
                    st = traj.states[n]
                    row += [st.q, st.p, st.s]
                rows.append(row)
            csvio.write_rows(run.path(f"compare_seed{path.seed}.csv"), header, rows)
    return run.finish(code)


def cmd_convergence(cfg, threads=1, self_test=False):
    if len(cfg.ladder) < 2:
        raise UsageError("convergence needs a ladder of at least two step sizes")
    run = Run("convergence", cfg, threads)
    if self_test:
        errors = [0.37 * h for h in cfg.ladder]
        slope, intercept = order_fit(cfg.ladder, errors)
        csvio.write_rows(run.path("convergence_selftest.csv"), ["h", "injected_error"],
                         list(zip(cfg.ladder, errors)) + [("slope", slope)])
        run.manifest["self_test_slope"] = slope
        return run.finish(0 if abs(slope - 1.0) < 1e-12 else 3)
    try:
        reports = convergence_study(cfg.schemes, cfg.system(), cfg.initial(), cfg.ladder,
                                    cfg.ladder_horizon, cfg.n_paths, cfg.seed, cfg.oracle_config(),
                                    cfg.scheme_options(), threads, cfg.zero_noise)
    except ContactError as exc:
        log.error("%s", exc)
        return run.abort(exc)
    code = 0
    for scheme, rep in reports.items():
        if rep.failure:
            code = 3
            run.status(scheme.value, "failed", failure=rep.failure, n_excluded=rep.n_excluded)
            log.error("%s: %s", scheme.value, rep.failure)
        else:
            run.status(scheme.value, "ok", slope=rep.slope, slope_paper_metric=rep.slope_paper_metric,
                       oracle_gap=rep.oracle_gap)
        csvio.write_convergence(rep, run.path(f"convergence_{scheme.value}.csv"))
    return run.finish(code)


def checkpoints(cfg):
    if cfg.n_steps == 0:
        return [0.0]
    ts = [0.0]
    k = 1
    while k * cfg.checkpoint_interval <= cfg.horizon * (1 + 1e-12):
        ts.append(k * cfg.checkpoint_interval)
        k += 1
    return ts


def cmd_contact_check(cfg, threads=1):
    run = Run("contact-check", cfg, threads)
    sys_, initial, options = cfg.system(), cfg.initial(), cfg.scheme_options()
    path = _path_for(cfg, 0)
    code = 0
    for name in cfg.schemes:
        reports = []
        try:
            for t in checkpoints(cfg):
                jac = flow_jacobian(name, sys_, initial, path, t, cfg.fd_eps, options)
                reports.append(contact_residuals(jac))
        except ContactError as exc:
            code = max(code, exc.exit_code)
            run.status(name, "failed", exc)
        else:
            run.status(name, "ok")
        refs = [conformal_reference(cfg.gamma, r.t) for r in reports]
        csvio.write_contact(reports, refs, run.path(f"contact_{name}_seed{path.seed}.csv"))
    return run.finish(code)


def cmd_compare(cfg, threads=1):
    if len(cfg.schemes) < 2:
        raise UsageError("compare needs at least two schemes")
    if cfg.n_steps < 1:
        raise UsageError("compare needs n_steps >= 1")
    run = Run("compare", cfg, threads)
    try:
        results, _ = endpoint_errors(cfg.schemes, cfg.system(), cfg.initial(), cfg.horizon,
                                     cfg.n_steps, cfg.n_paths, cfg.seed, cfg.oracle_config(),
                                     cfg.scheme_options(), threads, cfg.zero_noise)
    except ContactError as exc:
        log.error("%s", exc)
        return run.abort(exc)
    rows, code = [], 0
    for name in cfg.schemes:
        per_path = results[SchemeId.parse(name)]
        ok = [r for r in per_path if r is not None]
        excluded = len(per_path) - len(ok)
        if not ok:
            code = 3
            run.status(name, "failed", n_excluded=excluded)
            rows.append((name, cfg.n_paths, excluded, None, None, None, None, None))
            continue
        run.status(name, "ok", n_excluded=excluded)
        errs = [e for _, e in ok]
        rows.append((name, cfg.n_paths, excluded, statistics.median(errs),
                     math.sqrt(math.fsum(e * e for e in errs) / len(errs)),
                     statistics.median(float(end.q) for end, _ in ok),
                     statistics.median(float(end.p) for end, _ in ok),
                     statistics.median(float(end.s) for end, _ in ok)))
    csvio.write_rows(run.path("compare_summary.csv"),
                     ["scheme", "n_paths", "n_excluded", "median_endpoint_error", "rms_endpoint_error",
                      "median_q", "median_p", "median_s"], rows)
    return run.finish(code)


def build_parser():
    parser = argparse.ArgumentParser(prog="stochcontact", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="output directory")
    common.add_argument("--scheme", action="append", dest="schemes",
                        choices=[s.value for s in SchemeId], help="repeatable")
    common.add_argument("--hj-mode", choices=["printed", "general"])
    common.add_argument("--hj-policy", choices=["error", "clamp"])
    common.add_argument("--zero-noise", action="store_true", default=None)
    common.add_argument("--paths", type=int, dest="n_paths")
    common.add_argument("--em-drift-correction", choices=["paper", "none"])
    common.add_argument("--herglotz-variant", choices=["printed", "contact"])
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="trajectories per scheme")
    conv = sub.add_parser("convergence", parents=[common], help="mean-square order study")
    conv.add_argument("--self-test", action="store_true",
                      help="fit injected c*h errors instead of running schemes")
    sub.add_parser("contact-check", parents=[common], help="contact residuals at checkpoints")
    sub.add_parser("compare", parents=[common], help="endpoint error summary")
    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "convergence": cmd_convergence,
    "contact-check": cmd_contact_check,
    "compare": cmd_compare,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = dict(seed=args.seed, out=args.out, hj_mode=args.hj_mode, hj_policy=args.hj_policy,
                     zero_noise=args.zero_noise, n_paths=args.n_paths,
                     em_drift_correction=args.em_drift_correction,
                     herglotz_variant=args.herglotz_variant,
                     schemes=tuple(args.schemes) if args.schemes else None)
    try:
        cfg = load_config(args.config, **overrides)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        kwargs = {"self_test": args.self_test} if args.command == "convergence" else {}
        return COMMANDS[args.command](cfg, args.threads, **kwargs)
    except ContactError as exc:
        print(f"stochcontact: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
