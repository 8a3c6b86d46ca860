"""CSV writers. Floats use 17 significant digits so doubles round-trip."""

import csv


def fmt(x):
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    if isinstance(x, str):
        return x
    return format(float(x), ".17g")


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_path(path, fname):
    t = path.times()
    write_rows(fname, ["n", "t_n", "dW_n"],
               ((n, t[n], path.increments[n]) for n in range(path.n_steps)))


def write_trajectory(traj, fname):
    write_rows(fname, ["n", "t", "q", "p", "s"],
               ((n, traj.times[n], st.q, st.p, st.s) for n, st in enumerate(traj.states)))


def write_hj_trace(traj, fname):
    """Coefficient trace; row 0 is the initial state and has no discriminant."""
    rows = []
    for n, (hjs, disc) in enumerate(traj.hj_trace, start=1):
        st = traj.states[n]
        rows.append((n, traj.times[n], hjs.x, hjs.y, hjs.z, hjs.sx, hjs.sy, hjs.sz,
                     disc, st.q, st.p, st.s))
    write_rows(fname, ["n", "t", "x", "y", "z", "sx", "sy", "sz", "disc", "q", "p", "s"], rows)


def write_convergence(report, fname):
    rows = [(h, e, ep, nx) for h, e, ep, nx in zip(report.step_sizes, report.ms_errors,
                                                     report.ms_errors_paper_metric,
                                                     report.n_excluded)]
    rows.append(("slope", report.slope, report.slope_paper_metric, ""))
    rows.append(("intercept", report.intercept, "", ""))
    write_rows(fname, ["h", "ms_standard", "ms_paper", "n_excluded"], rows)


def write_contact(reports, lambda_refs, fname):
    write_rows(fname, ["t", "lambda", "lambda_ref", "r_p", "r_q"],
               ((r.t, r.lambda_est, ref, r.r_p, r.r_q) for r, ref in zip(reports, lambda_refs)))
