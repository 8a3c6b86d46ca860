"""Sample paths of every scheme on one shared Brownian path, written as CSV.

    python scripts/trajectories.py --seed 42 --out out/trajectories
"""

import argparse
import os

from stochcontact import csvio
from stochcontact.core import PhaseState, free_particle
from stochcontact.errors import ContactError
from stochcontact.hj import HJConfig
from stochcontact.integrators import SchemeOptions, integrate
from stochcontact.noise import BrownianPath, generate
from stochcontact.oracle import OracleConfig, pathwise_reference


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--horizon", type=float, default=20.0)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--zero-noise", action="store_true")
    ap.add_argument("--oracle-k", type=int, default=7)
    ap.add_argument("--out", default="out/trajectories")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    sys = free_particle()
    start = PhaseState(0.75, -0.25, 0.08)
    if args.zero_noise:
        path = BrownianPath.zero(0.0, args.horizon, args.steps, args.seed)
    else:
        path = generate(args.seed, 0.0, args.horizon, args.steps)
    csvio.write_path(path, os.path.join(args.out, "path.csv"))

    runs = {
        "em_paper": ("euler_maruyama", SchemeOptions()),
        "em_none": ("euler_maruyama", SchemeOptions(em_drift_correction="none")),
        "herglotz_printed": ("herglotz_contact", SchemeOptions()),
        "herglotz_contact": ("herglotz_contact", SchemeOptions(herglotz_variant="contact")),
        "hj_general": ("hj_contact", SchemeOptions(hj=HJConfig(q_mode="general"))),
        "hj_printed": ("hj_contact", SchemeOptions()),
    }
    for name, (scheme, opts) in runs.items():
        try:
            traj = integrate(scheme, sys, path, start, opts)
        except ContactError as exc:
            print(f"{name}: {exc}")
            if exc.partial is not None:
                csvio.write_trajectory(exc.partial, os.path.join(args.out, f"{name}.partial.csv"))
            continue
        csvio.write_trajectory(traj, os.path.join(args.out, f"{name}.csv"))
        end = traj.final
        print(f"{name:18s} q={end.q:+.5f} p={end.p:+.5f} s={end.s:+.5f}")

    ref = pathwise_reference(sys, path, start, OracleConfig(args.oracle_k))
    csvio.write_trajectory(ref, os.path.join(args.out, "reference.csv"))
    end = ref.final
    print(f"{'reference':18s} q={end.q:+.5f} p={end.p:+.5f} s={end.s:+.5f}  (gap {ref.resolution_gap:.1e})")


if __name__ == "__main__":
    main()
