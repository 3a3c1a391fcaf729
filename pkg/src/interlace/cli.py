"""Command-line front end: seeded verification suites, simulations, kernel tables.

Every stochastic command requires --seed and is deterministic given it: the
same invocation writes byte-identical files.  Output files are plain text with
``#`` comment headers; a ``.meta`` sidecar echoes the full configuration.
Exit codes: 0 pass, 1 verification failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from . import bead, brownian, circle_discrete as cd, continuous, gt_line, stats
from .geometry import TAU

_KINDS = ("gt-chain", "circle-coupling", "push", "block", "hbm", "gamma",
          "bead-chain")
_SUITES = ("discrete", "couplings", "brownian", "bead", "all")


def _out_path(args, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(os.environ.get("INTERLACE_OUTDIR", "."), default_name)


def _write_meta(path: str, args: argparse.Namespace) -> None:
    items = sorted(vars(args).items())
    with open(path + ".meta", "w") as fh:
        fh.write(f"# interlace {__version__} metadata\n")
        for key, val in items:
            if key != "func":
                fh.write(f"{key}={val}\n")


def _fmt(value: float) -> str:
    return f"{value:.12e}"


class SuiteReport:
    def __init__(self):
        self.lines: list[str] = []
        self.failed = 0

    def check(self, name: str, value: float, tol: float, larger_ok=False):
        ok = value >= tol if larger_ok else value <= tol
        cmp = ">=" if larger_ok else "<="
        status = "PASS" if ok else "FAIL"
        if not ok:
            self.failed += 1
        self.lines.append(
            f"check={name} value={_fmt(value)} {cmp} tol={_fmt(tol)} {status}")

    def write(self, path: str, header: str):
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for line in self.lines:
                fh.write(line + "\n")
            fh.write(f"failed={self.failed} total={len(self.lines)}\n")


# ---------------------------------------------------------------------------
# verify suites
# ---------------------------------------------------------------------------

def _suite_discrete(rep: SuiteReport, rng, scale: float) -> None:
    for n in (2, 3):
        for N in (4, 5, 6):
            mats = {r: cd.lattice_interlace_kernel(n, N, r) for r in range(1, N)}
            worst = 0
            for r in mats:
                for s in mats:
                    worst = max(worst, int(np.max(np.abs(
                        mats[r] @ mats[s] - mats[s] @ mats[r]))))
            rep.check(f"lattice_commutation_n{n}_N{N}", worst, 0)
            _, _, resid = cd.lattice_q_kernel(n, N, 1)
            rep.check(f"lattice_h_eigen_n{n}_N{N}", resid, 1e-10)
            _, resid = cd.perron_check_delta(n, N)
            rep.check(f"up_eigen_n{n}_N{N}", resid, 1e-10)
            _, _, resid = cd.m_kernel(n, N)
            rep.check(f"interlace_eigen_n{n}_N{N}", resid, 1e-10)
    lam, _ = cd.perron_check_delta(2, 4)
    rep.check("perron_value_n2_N4", abs(lam - np.sqrt(2.0)), 1e-12)
    out = gt_line.verify_prop_rsk(2, 3)
    rep.check("gt_intertwining_n2", max(out["max_tv_markov"],
                                        out["max_tv_uniform"]), 1e-12)
    out = cd.verify_prop_crsk(2, 4, 3)
    rep.check("circle_intertwining_n2_N4", max(out["max_tv_markov"],
                                               out["max_tv_conditional"]), 1e-12)
    out = cd.deterministic_noncolliding_check(2, 4, 5, 5, rng)
    rep.check("noncolliding_strip",
              len(out["violations"]) + len(out["bad_packed_states"]), 0)


def _suite_couplings(rep: SuiteReport, rng, scale: float) -> None:
    trials = max(10, int(2000 * scale))
    worst_inv = 0.0
    worst_phi = 0.0
    for n in (2, 3, 4):
        for _ in range(trials // 10):
            u = np.sort(rng.uniform(0.0, TAU, n))
            s = rng.uniform(0.5, TAU - 0.5)
            x = continuous.sample_interlaced(u, s, rng)
            r = rng.uniform(0.1, s - 0.05)
            v = continuous.sample_interlaced(x, r, rng)
            worst_inv = max(worst_inv, continuous.psi_involution_residual(u, v, x))
            y = continuous.phi_map(u, v, x)
            worst_phi = max(worst_phi, abs(np.sum(y) - np.sum(u) - np.sum(v)
                                           + np.sum(x)))
    rep.check("psi_involution", worst_inv, 1e-10)
    rep.check("phi_sum_identity", worst_phi, 1e-12)
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        z = rng.normal(size=n)
        z -= (np.sum(z) + rng.uniform(0.2, 2.0)) / n
        rs, ls = continuous.periodic_skorohod(z)
        ro, lo = _skorohod_oracle(z)
        worst = max(worst, float(np.max(np.abs(rs - ro))),
                    float(np.max(np.abs(ls - lo))))
    rep.check("periodic_skorohod_oracle", worst, 1e-10)
    size = max(200, int(100_000 * scale))
    y0 = np.array([0.0, 2.0])
    direct = continuous.sample_q_r(y0, 1.0, rng, size=size)
    for kind in ("push", "block"):
        coupled = continuous.coupling_one_step(y0, 1.0, 2.0, size, rng, kind)
        _, pval = stats.energy_distance_test(coupled, direct, n_perm=500,
                                             rng=rng)
        rep.check(f"{kind}_coupling_y1_pvalue", pval, 0.01, larger_ok=True)


def _skorohod_oracle(z):
    n = z.size
    total = -float(np.sum(z))
    reach = int(np.ceil(n * (1.0 + n * float(np.max(np.abs(z))) / total))) + n
    r = np.empty(n)
    for i in range(n):
        acc = 0.0
        best = 0.0
        for k in range(1, reach + 1):
            acc += z[(i - k) % n]
            best = max(best, acc)
        r[i] = best
    l = r - np.roll(r, 1) - np.roll(z, 1)
    return r, l


def _suite_brownian(rep: SuiteReport, rng, scale: float) -> None:
    drivers = max(20, int(1000 * scale))
    worst = 0.0
    for _ in range(drivers):
        k = int(rng.integers(8, 40))
        fs = np.concatenate([[rng.uniform(0.0, 1.0)],
                             rng.normal(scale=0.6, size=k)]).cumsum()
        fs[0] = np.clip(fs[0], 0.0, 1.0)
        out = brownian.interval_reflection_formulas(fs, 1.0)
        ref = out["iterative"]
        for key in ("maxmin", "minmax", "klrs"):
            worst = max(worst, float(np.max(np.abs(out[key] - ref))))
    rep.check("interval_reflection_agreement", worst, 1e-9)
    rep.check("reflection_skew_symmetry", brownian.skew_symmetry_residual(4),
              1e-12)
    replicas = max(500, int(100_000 * scale))
    out = brownian.verify_n2_coupling(np.pi, 2.0, 0.3, 1.0, 1e-3, replicas, rng)
    rep.check("n2_coupling_ks_pvalue", out["pvalue"], 0.01, larger_ok=True)
    out = brownian.verify_n2_coupling(50.0, 1.0, 0.0, 1.0, 1e-3, replicas, rng,
                                      oracle="normal")
    rep.check("n2_coupling_large_p_pvalue", out["pvalue"], 0.01, larger_ok=True)
    size = max(200, int(20_000 * scale))
    out = brownian.rbm_time_reversal_check(2, 1.0, 1.0, 1e-3, rng, size=size)
    rep.check("rbm_reversal_max_z", out["max_abs_z"], 3.0)
    out = brownian.rbm_stationarity_check(2, 1.0, 1.0, 1e-3, rng,
                                          size=min(size, 4000))
    rep.check("rbm_stationarity_pvalue", out["pvalue"], 0.01, larger_ok=True)


def _suite_bead(rep: SuiteReport, rng, scale: float) -> None:
    pairs = max(100, int(10_000 * scale))
    worst = 0.0
    for n in (2, 3, 4):
        for q in (0.5, 2.0):
            for _ in range(pairs // 10):
                a = np.sort(rng.uniform(0.0, TAU, n))
                if rng.random() < 0.5:
                    b = continuous.sample_interlaced(
                        a, rng.uniform(0.1, TAU - 0.1), rng)
                    b = np.mod(b, TAU)
                    b.sort()
                else:
                    b = np.sort(rng.uniform(0.0, TAU, n))
                worst = max(worst, abs(bead.iq_det_formula(a, b, n, q)
                                       - bead.iq_weight(a, b, q)))
    rep.check("iq_det_identity", worst, 1e-10)
    worst = 0.0
    for k in range(-5, 6):
        for n in (1, 2, 3):
            for q in (0.5, 2.0):
                worst = max(worst, bead.fourier_identity_residual(k, n, q))
    rep.check("fourier_identity", worst, 1e-8)
    worst = 0.0
    for n, m, q in ((1, 2, 2.0), (2, 3, 2.0), (3, 2, 0.5), (2, 4, 0.5)):
        path = bead.sample_bead_path(n, q, m, rng)
        worst = max(worst, bead.alpha_m_density_check(path, q)["rel_error"])
    rep.check("gibbs_density_identity", worst, 1e-9)
    out = bead.verify_character_eigenvalue((1, 0), 2, 2.0, rng, points=3)
    rep.check("character_eigenvalue_n2", out["max_rel_error"], 1e-6)
    samples = max(500, int(100_000 * scale))
    out = bead.correlation_mc_check(2, 2.0, samples, rng)
    rep.check("onepoint_max_z", max(out["maxabs_onepoint_level1"],
                                    out["maxabs_onepoint_level2"]), 3.0)
    frac = float(np.mean(np.abs(out["z_pair_cross"]) <= 3.0))
    rep.check("pair_cross_within_3sigma_fraction", frac, 0.95, larger_ok=True)


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    rep = SuiteReport()
    suites = _SUITES[:-1] if args.suite == "all" else (args.suite,)
    runners = {"discrete": _suite_discrete, "couplings": _suite_couplings,
               "brownian": _suite_brownian, "bead": _suite_bead}
    for name in suites:
        runners[name](rep, rng, args.scale)
    path = _out_path(args, f"verify_{args.suite}.txt")
    rep.write(path, f"# interlace verify suite={args.suite} seed={args.seed} "
                    f"scale={args.scale} version={__version__}")
    _write_meta(path, args)
    print(f"{len(rep.lines) - rep.failed}/{len(rep.lines)} checks passed "
          f"-> {path}")
    return 0 if rep.failed == 0 else 1


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _write_rows(path: str, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(" ".join(str(v) if isinstance(v, (int, np.integer))
                              else _fmt(v) for v in row) + "\n")


def _trajectory_rows(values) -> list:
    rows = []
    for k, conf in enumerate(values):
        for i, v in enumerate(np.atleast_1d(conf)):
            rows.append((k, i, float(v)))
    return rows


def cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed)
    kind = args.kind
    path = _out_path(args, f"simulate_{kind}.txt")
    header = (f"# interlace simulate kind={kind} n={args.n} N={args.N} "
              f"q={args.q} r={args.r} s={args.s} T={args.T} dt={args.dt} "
              f"steps={args.steps} replicas={args.replicas} seed={args.seed} "
              f"version={__version__}")
    if kind in ("push", "block") and (args.s is None or args.s <= 0):
        raise SystemExit2("--s must be positive for couplings")
    if kind == "gt-chain":
        pats = gt_line.simulate_chain(args.n, args.steps, rng)
        rows = []
        for k, pat in enumerate(pats):
            for m, row in enumerate(pat):
                for i, v in enumerate(row):
                    rows.append((k, m, i, v))
        _write_rows(path, header + " columns=step,row,index,value", rows)
    elif kind == "circle-coupling":
        states = cd.circle_states(args.n, args.N)
        m, _, _ = cd.m_kernel(args.n, args.N)
        q = cd.q_kernel(args.n, args.N)
        y = states[rng.integers(len(states))]
        x = states[rng.choice(len(states), p=m[states.index(y)])]
        rows = [(0, *x, *y)]
        for k in range(args.steps):
            ix = states.index(x)
            x2 = states[rng.choice(len(states), p=q[ix])]
            y = cd.coupled_step(x, y, x2, args.N)
            x = x2
            rows.append((k + 1, *x, *y))
        _write_rows(path, header + " columns=step,x_sites...,y_sites...", rows)
    elif kind in ("push", "block"):
        runner = continuous.run_push_coupling if kind == "push" \
            else continuous.run_block_coupling
        y0 = np.linspace(0.0, TAU, args.n, endpoint=False)
        xs, ys = runner(y0, args.r, args.s, args.steps, rng)
        rows = []
        for k in range(xs.shape[0]):
            for i in range(args.n):
                rows.append((k, i, xs[k, i], ys[k, i]))
        _write_rows(path, header + " columns=step,index,x,y", rows)
    elif kind == "hbm":
        x0 = np.linspace(0.0, TAU, args.n, endpoint=False)
        out = brownian.hbm_simulate(x0, args.T, args.dt, rng)
        _write_rows(path, header + " columns=step,index,value",
                    _trajectory_rows(out))
    elif kind == "gamma":
        x0 = np.linspace(0.0, TAU, args.n, endpoint=False)
        xpath = brownian.hbm_simulate(x0, args.T, args.dt, rng)
        y0 = x0 - args.s / args.n
        ypath = brownian.gamma_map(y0, xpath, args.s)
        rows = []
        for k in range(xpath.shape[0]):
            for i in range(args.n):
                rows.append((k, i, xpath[k, i], ypath[k, i]))
        _write_rows(path, header + " columns=step,index,x,y", rows)
    elif kind == "bead-chain":
        out = bead.sample_bead_path(args.n, args.q, args.steps, rng,
                                    size=args.replicas)
        rows = []
        for b in range(args.replicas):
            for lev in range(args.steps):
                for i in range(args.n):
                    rows.append((b, lev, i, out[b, lev, i]))
        _write_rows(path, header + " columns=replica,level,index,angle", rows)
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit2(f"unknown kind {kind}")
    _write_meta(path, args)
    print(f"wrote {path}")
    return 0


def cmd_kernel(args) -> int:
    path = _out_path(args, "kernel_table.txt")
    d = args.r - args.s
    thetas = np.linspace(0.0, TAU, args.points, endpoint=False)
    vals = bead.kernel_K_theta(d, thetas, args.n, args.q, kmax=args.kmax)
    vals = np.atleast_1d(vals)
    tail = bead.kernel_tail_bound(d, args.n, args.q, args.kmax)
    header = (f"# interlace kernel n={args.n} q={args.q} level_diff={d} "
              f"kmax={args.kmax} tail_bound={tail} version={__version__} "
              f"columns=theta,re,im")
    rows = [(float(t), float(np.real(v)), float(np.imag(v)))
            for t, v in zip(thetas, vals)]
    _write_rows(path, header, rows)
    _write_meta(path, args)
    print(f"wrote {path}")
    return 0


class SystemExit2(SystemExit):
    def __init__(self, msg: str):
        print(f"error: {msg}", file=sys.stderr)
        super().__init__(2)


def build_parser() -> argparse.ArgumentParser:
    par = argparse.ArgumentParser(
        prog="interlace",
        description="interlaced particle processes on the circle")
    sub = par.add_subparsers(dest="command", required=True)

    def common(p, seed_required=True):
        p.add_argument("--n", type=int, default=2)
        p.add_argument("--N", type=int, default=6)
        p.add_argument("--q", type=float, default=1.0)
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--s", type=float, default=2.0)
        p.add_argument("--T", type=float, default=1.0)
        p.add_argument("--dt", type=float, default=1e-3)
        p.add_argument("--steps", type=int, default=8)
        p.add_argument("--replicas", type=int, default=100)
        p.add_argument("--seed", type=int, required=seed_required)
        p.add_argument("--out", type=str, default=None)

    pv = sub.add_parser("verify", help="run a verification suite")
    pv.add_argument("--suite", choices=_SUITES, required=True)
    pv.add_argument("--scale", type=float, default=1.0,
                    help="replica-count multiplier for the stochastic checks")
    common(pv)
    pv.set_defaults(func=cmd_verify)

    ps = sub.add_parser("simulate", help="write simulation trajectories")
    ps.add_argument("--kind", choices=_KINDS, required=True)
    common(ps)
    ps.set_defaults(func=cmd_simulate)

    pk = sub.add_parser("kernel", help="tabulate the correlation kernel")
    pk.add_argument("--points", type=int, default=64)
    pk.add_argument("--kmax", type=int, default=500)
    common(pk, seed_required=False)
    pk.set_defaults(func=cmd_kernel)
    return par


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "kernel":
        args.r = int(args.r)
        args.s = int(args.s)
    try:
        return args.func(args)
    except SystemExit2:
        raise
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
