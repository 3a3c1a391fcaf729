"""Brownian machinery on the alcove: conditioned motion, Skorohod maps, couplings.

Paths are stored on uniform time grids as arrays of shape (steps+1, n) or
(batch, steps+1, n).  The alcove Skorohod solver follows the constructive
window scheme: anchor the component below the widest gap, freeze its pushing
term on the window, and chain one-sided reflections around the cycle.
"""
from __future__ import annotations

import numpy as np
from scipy import stats as sps

from .geometry import TAU, dagger, gap_vector, project_h0, r_interlaced

_MAX_HALVINGS = 16


def ground_state_eigenvalue(n: int) -> float:
    """Top Dirichlet eigenvalue -n(n-1)(n+1)/12 of the alcove Laplacian."""
    return -n * (n - 1) * (n + 1) / 12.0


def hbm_drift(x) -> np.ndarray:
    """Drift of the conditioned motion: grad log h, i.e. half-cotangent sums."""
    x = np.asarray(x, dtype=float)
    d = x[..., :, None] - x[..., None, :]
    n = x.shape[-1]
    with np.errstate(divide="ignore"):
        cot = 0.5 / np.tan(d / 2.0)
    cot[..., np.arange(n), np.arange(n)] = 0.0
    return np.sum(cot, axis=-1)


def _alcove_ok(x) -> np.ndarray:
    gaps = gap_vector(x, TAU)
    return np.min(gaps, axis=-1) > 0.0


def _hbm_step(x, h, rng, depth=0):
    if x.shape[-1] == 1:
        return x + np.sqrt(h) * rng.standard_normal(x.shape)
    out = np.empty_like(x)
    at_floor = depth >= _MAX_HALVINGS
    near = (gap_vector(x, TAU).min(axis=-1) < 4.0 * np.sqrt(h)) & ~at_floor
    far = ~near
    if np.any(far):
        prop = x[far] + h * hbm_drift(x[far]) + \
            np.sqrt(h) * rng.standard_normal(x[far].shape)
        good = _alcove_ok(prop)
        tgt = np.flatnonzero(far)
        out[tgt[good]] = prop[good]
        if np.any(~good):
            if at_floor:
                raise RuntimeError(
                    "h-Brownian step exits the alcove at the substep floor")
            near[tgt[~good]] = True  # retry failed coarse steps at finer scale
    if np.any(near):
        half = _hbm_step(x[near], h / 2.0, rng, depth + 1)
        out[near] = _hbm_step(half, h / 2.0, rng, depth + 1)
    return out


def hbm_simulate(x0, T: float, dt: float, rng, size: int | None = None):
    """Euler path(s) of the conditioned motion started strictly inside the alcove.

    Substeps are halved near the boundary (within 4 sqrt(dt) of a collision);
    a step that still exits at the substep floor raises.  Returns an array of
    shape (steps+1, n) or (size, steps+1, n).
    """
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1 and size is None
    base = x0[None, :] if x0.ndim == 1 else x0
    if size is not None:
        base = np.repeat(base, size, axis=0)
    if not np.all(_alcove_ok(base)) and base.shape[-1] > 1:
        raise ValueError("start point must be strictly inside the alcove")
    steps = int(round(T / dt))
    path = np.empty((base.shape[0], steps + 1, base.shape[1]))
    path[:, 0] = base
    for k in range(steps):
        path[:, k + 1] = _hbm_step(path[:, k], dt, rng)
    return path[0] if single else path


# ---------------------------------------------------------------------------
# constructive Skorohod solver in A_n(l)
# ---------------------------------------------------------------------------

def path_skorohod_alcove(u, v0, l: float, oscillation_budget: float | None = None):
    """Skorohod map for the alcove A_n(l) on a time grid.

    ``u``: driving path(s) with u[..., 0, :] = 0; ``v0``: start point(s) in
    A_n(l).  Returns (v, theta): v stays in A_n(l); each theta_i starts at 0,
    is nondecreasing and increases only while v_i touches v_{i+1} (index n
    wrapping to v_1 + l).

    The path is cut into windows whose total oscillation stays below the
    budget (default l/(4 n^2)); on each window the component below the widest
    gap is frozen and the remaining components are produced by chained
    one-sided reflections going down the cycle.  Steps whose own oscillation
    exceeds the budget are refined by linear interpolation first (running
    extrema of the interpolant sit at breakpoints, so the values returned at
    the original grid times are unchanged by the refinement).
    """
    u = np.asarray(u, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    single = u.ndim == 2
    ub = u[None] if single else u
    vb = v0[None] if v0.ndim == 1 else v0
    b, k1, n = ub.shape
    if np.max(np.abs(ub[:, 0])) > 1e-12:
        raise ValueError("driving path must start at zero")
    if n == 1:
        v = vb[:, None, :] + ub
        theta = np.zeros_like(ub)
        return (v[0], theta[0]) if single else (v, theta)
    budget = l / (4.0 * n * n) if oscillation_budget is None else oscillation_budget
    osc = np.abs(np.diff(ub, axis=1)).sum(axis=-1).max(axis=0)  # worst over batch
    splits = np.maximum(1, np.ceil(2.0 * osc / budget).astype(int))
    if np.any(splits > 1):
        keep = np.zeros(int(splits.sum()) + 1, dtype=int)
        parts = [ub[:, :1]]
        pos_out = 0
        for k, c in enumerate(splits):
            frac = np.arange(1, c + 1) / c
            seg = ub[:, k, None, :] + frac[None, :, None] * \
                (ub[:, k + 1, None, :] - ub[:, k, None, :])
            parts.append(seg)
            pos_out += c
            keep[k + 1] = pos_out
        keep = keep[: k1]
        fine_u = np.concatenate(parts, axis=1)
        fv, ft = path_skorohod_alcove(fine_u, vb, l, budget)
        return (fv[0, keep], ft[0, keep]) if single else (fv[:, keep], ft[:, keep])
    v = np.empty_like(ub)
    theta = np.zeros_like(ub)
    v[:, 0] = vb
    pos = 0
    while pos < k1 - 1:
        end = pos + 1
        acc = osc[pos]
        while end < k1 - 1 and acc + osc[end] < budget:
            acc += osc[end]
            end += 1
        w = end - pos + 1
        vw0 = v[:, pos]
        gaps = gap_vector(vw0, l)
        anchor = np.argmax(gaps, axis=-1)
        if np.min(np.max(gaps, axis=-1)) < l / n - 1e-9:
            raise AssertionError("no gap of size l/n at a window start")
        perm = (anchor[:, None] - np.arange(n)[None, :]) % n  # processing order
        du = ub[:, pos:end + 1] - ub[:, pos:pos + 1]
        du_r = np.take_along_axis(du, perm[:, None, :].repeat(w, axis=1), axis=-1)
        v0_r = np.take_along_axis(vw0, perm, axis=-1)
        wv = np.empty((b, w, n))
        th = np.zeros((b, w, n))
        wv[:, :, 0] = v0_r[:, :1] + du_r[:, :, 0]
        for j in range(1, n):
            wrap = np.where(perm[:, j] == n - 1, l, 0.0)[:, None]
            upper = wv[:, :, j - 1] + wrap
            cand = v0_r[:, j:j + 1] + du_r[:, :, j]
            over = np.maximum(cand - upper, 0.0)
            th[:, :, j] = np.maximum.accumulate(over, axis=1)
            wv[:, :, j] = cand - th[:, :, j]
        inv = np.empty_like(perm)
        np.put_along_axis(inv, perm, np.arange(n)[None, :].repeat(b, 0), axis=-1)
        take = inv[:, None, :].repeat(w, axis=1)
        v[:, pos:end + 1] = np.take_along_axis(wv, take, axis=-1)
        theta[:, pos:end + 1] = theta[:, pos:pos + 1] + \
            np.take_along_axis(th, take, axis=-1)
        if np.min(np.take_along_axis(
                gap_vector(v[:, pos:end + 1], l),
                anchor[:, None, None].repeat(w, 1), axis=-1)) <= 0.0:
            raise AssertionError("anchor gap closed within a window")
        pos = end
    return (v[0], theta[0]) if single else (v, theta)


def skorohod_alcove_reference(u, v0, l: float, tol: float = 1e-13,
                              max_sweeps: int = 100_000):
    """Independent dense-grid reference: per step, sweep one-sided downward
    corrections around the cycle until the alcove constraints hold."""
    u = np.asarray(u, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    k1, n = u.shape
    v = np.empty((k1, n))
    theta = np.zeros((k1, n))
    v[0] = v0
    for k in range(1, k1):
        cur = v[k - 1] + (u[k] - u[k - 1])
        push = np.zeros(n)
        for _ in range(max_sweeps):
            moved = False
            for i in range(n):
                upper = cur[(i + 1) % n] + (l if i == n - 1 else 0.0)
                excess = cur[i] - upper
                if excess > tol:
                    cur[i] -= excess
                    push[i] += excess
                    moved = True
            if not moved:
                break
        else:
            raise RuntimeError("reference solver failed to converge")
        v[k] = cur
        theta[k] = theta[k - 1] + push
    return v, theta


def gamma_map(y0, x_path, s: float, return_theta: bool = False):
    """Interlaced follower of a driving alcove path.

    Given y0 s-interlaced with x_path[..., 0, :], returns the unique grid path
    y with y(t) s-interlaced with x(t), increments y_i = x_i-increment +
    theta_{i-1} - theta_i, and theta_i charging only contacts y_{i+1} = x_i.
    """
    x = np.asarray(x_path, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    single = x.ndim == 2
    xb = x[None] if single else x
    yb = y0[None] if y0.ndim == 1 else y0
    n = xb.shape[-1]
    if not r_interlaced(yb, xb[:, 0], s, tol=1e-9 * n):
        raise ValueError("y0 must be s-interlaced with the start of x")
    l = TAU - s
    gaps0 = yb - np.concatenate([xb[:, 0, -1:] - TAU, xb[:, 0, :-1]], axis=-1)
    v0 = np.cumsum(gaps0, axis=-1) - gaps0[:, :1]  # v_1 = 0
    u = xb - xb[:, :1]
    _, theta = path_skorohod_alcove(u, v0, l)
    th_prev = np.roll(theta, 1, axis=-1)
    y = yb[:, None, :] + u + th_prev - theta
    if single:
        return (y[0], theta[0]) if return_theta else y[0]
    return (y, theta) if return_theta else y


def uniform_alcove_h0(n: int, l: float, rng, size: int = 1) -> np.ndarray:
    """Uniform samples on H_0 intersected with A_n(l) (Dirichlet gaps)."""
    gaps = l * rng.dirichlet(np.ones(n), size=size)
    v = np.cumsum(gaps, axis=-1) - gaps
    return project_h0(v)


def reflected_bm_with_local_time(n: int, s: float, T: float, dt: float, rng,
                                 size: int = 1):
    """Reflected Brownian motion in A_n(2 pi - s) with its pushing terms.

    Starts uniformly on H_0 in the polytope, drives the alcove Skorohod map
    with standard Brownian increments and projects onto H_0.  Returns
    (R, Theta, V) with shapes (size, steps+1, n).
    """
    if not 0.0 < s < TAU:
        raise ValueError("need 0 < s < 2 pi")
    l = TAU - s
    steps = int(round(T / dt))
    v0 = uniform_alcove_h0(n, l, rng, size=size)
    du = np.sqrt(dt) * rng.standard_normal((size, steps, n))
    u = np.concatenate([np.zeros((size, 1, n)), np.cumsum(du, axis=1)], axis=1)
    v, theta = path_skorohod_alcove(u, v0, l)
    return project_h0(v), theta, v


def bead_coordinates(x, y, s: float):
    """Gap coordinates f(x, y) = (r, l) of an interlaced pair in E(s).

    r has gaps y_{i+1} - x_i (a point of H_0 in A_n(2 pi - s)), l has gaps
    x_{i+1} - y_{i+1} (a point of H_0 in A_n(s)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1]
    if not r_interlaced(y, x, s, tol=1e-9 * n):
        raise ValueError("(x, y) is not in E(s)")
    rgap = np.concatenate([x[..., :1] * 0, y[..., 1:] - x[..., :-1]], axis=-1)
    lgap = np.concatenate([x[..., :1] * 0, x[..., 1:] - y[..., 1:]], axis=-1)
    return project_h0(np.cumsum(rgap, axis=-1)), project_h0(np.cumsum(lgap, axis=-1))


def bead_coordinates_inverse(r, l, s: float):
    """Inverse of ``bead_coordinates``: rebuild (x, y) with sum x = s/2."""
    r = np.asarray(r, dtype=float)
    l = np.asarray(l, dtype=float)
    n = r.shape[-1]
    rgap = np.diff(r, axis=-1)
    lgap = np.diff(l, axis=-1)
    x = np.empty_like(r)
    y = np.empty_like(r)
    x[..., 0] = 0.0
    for i in range(n - 1):
        y[..., i + 1] = x[..., i] + rgap[..., i]
        x[..., i + 1] = y[..., i + 1] + lgap[..., i]
    y[..., 0] = x[..., n - 1] + (r[..., 0] + (TAU - s) - r[..., n - 1]) - TAU
    shift = (s / 2.0 - np.sum(x, axis=-1, keepdims=True)) / n
    return x + shift, y + shift


def reflection_direction_data(n: int):
    """Normals and oblique components of the reflected motion in H_0.

    Face i is {x_i = x_{i+1}} (wrapping at i = n); returns (normals, obliques,
    directions) with directions = normals + obliques.
    """
    normals = np.zeros((n, n))
    for i in range(n):
        normals[i, i] = -1.0 / np.sqrt(2.0)
        normals[i, (i + 1) % n] = 1.0 / np.sqrt(2.0)
    obliques = np.full((n, n), np.sqrt(2.0) / n)
    for i in range(n):
        obliques[i, i] -= 1.0 / np.sqrt(2.0)
        obliques[i, (i + 1) % n] -= 1.0 / np.sqrt(2.0)
    return normals, obliques, normals + obliques


def skew_symmetry_residual(n: int) -> float:
    """Max |n^i . q^j + q^i . n^j| over i != j (zero for all n)."""
    normals, obliques, _ = reflection_direction_data(n)
    g = normals @ obliques.T + obliques @ normals.T
    np.fill_diagonal(g, 0.0)
    return float(np.max(np.abs(g)))


# ---------------------------------------------------------------------------
# two-sided reflection in an interval
# ---------------------------------------------------------------------------

def interval_reflection_iterative(fs, a: float):
    """Exact two-sided Skorohod solution in [0, a] for a piecewise-linear
    driver sampled at its breakpoints.  Returns (Z, L, U) at the breakpoints."""
    fs = np.asarray(fs, dtype=float)
    if not 0.0 <= fs[0] <= a:
        raise ValueError("driver must start inside [0, a]")
    z = np.empty_like(fs)
    low = np.zeros_like(fs)
    up = np.zeros_like(fs)
    z[0] = fs[0]
    for k in range(1, fs.size):
        cand = z[k - 1] + (fs[k] - fs[k - 1])
        linc = max(0.0, -cand)
        uinc = max(0.0, cand - a)
        z[k] = cand + linc - uinc
        low[k] = low[k - 1] + linc
        up[k] = up[k - 1] + uinc
    return z, low, up


def interval_reflection_maxmin(fs, a: float) -> np.ndarray:
    """Max-of-min formula for the two-sided reflection, at every breakpoint."""
    fs = np.asarray(fs, dtype=float)
    out = np.empty_like(fs)
    for t in range(fs.size):
        seg = fs[: t + 1]
        smax = np.maximum.accumulate(seg[::-1])[::-1]  # suffix max of f on [r, t]
        term1 = np.max(np.minimum(seg[-1] - seg, a + seg[-1] - smax))
        term2 = min(seg[-1], a + seg[-1] - smax[0])
        out[t] = max(term1, term2)
    return out


def interval_reflection_minmax(fs, a: float) -> np.ndarray:
    """Min-of-max formula for the two-sided reflection, at every breakpoint."""
    fs = np.asarray(fs, dtype=float)
    out = np.empty_like(fs)
    for t in range(fs.size):
        seg = fs[: t + 1]
        smin = np.minimum.accumulate(seg[::-1])[::-1]
        term1 = np.min(np.maximum(a + seg[-1] - seg, seg[-1] - smin))
        term2 = max(seg[-1], seg[-1] - smin[0])
        out[t] = min(term1, term2)
    return out


def interval_reflection_klrs(fs, a: float) -> np.ndarray:
    """Reflection via phi(t) = f(t) + running negative part, at breakpoints."""
    fs = np.asarray(fs, dtype=float)
    phi = fs + np.maximum.accumulate(np.maximum(-fs, 0.0))
    out = np.empty_like(fs)
    for t in range(fs.size):
        seg = phi[: t + 1]
        imin = np.minimum.accumulate(seg[::-1])[::-1]
        out[t] = seg[-1] - np.max(np.minimum(np.maximum(seg - a, 0.0), imin))
    return out


def interval_reflection_formulas(fs, a: float) -> dict:
    """All four evaluations of the reflection of a piecewise-linear driver."""
    z_iter, low, up = interval_reflection_iterative(fs, a)
    return {
        "iterative": z_iter,
        "maxmin": interval_reflection_maxmin(fs, a),
        "minmax": interval_reflection_minmax(fs, a),
        "klrs": interval_reflection_klrs(fs, a),
        "lower": low,
        "upper": up,
    }


# ---------------------------------------------------------------------------
# the n = 2 compact-interval coupling
# ---------------------------------------------------------------------------

def _phi1(x, p):
    return np.cos(np.pi * x / (2.0 * p))


def sample_cos_density(lo: float, hi: float, p: float, size: int, rng):
    """Inverse-CDF samples of the density proportional to cos(pi x / 2p) on
    [lo, hi] (a subinterval of [-p, p])."""
    slo = np.sin(np.pi * lo / (2.0 * p))
    shi = np.sin(np.pi * hi / (2.0 * p))
    un = rng.uniform(size=size)
    return (2.0 * p / np.pi) * np.arcsin(slo + un * (shi - slo))


def conditioned_bm_step(x, dt: float, p: float, rng, max_rounds: int = 100_000):
    """One exact transition of Brownian motion conditioned to stay in (-p, p).

    Rejection from the free Gaussian increment: accept with probability
    phi1(y) times the non-exit probability of the within-step bridge.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    todo = np.arange(x.size)
    sd = np.sqrt(dt)
    for _ in range(max_rounds):
        if not todo.size:
            return out
        cur = x[todo]
        prop = cur + sd * rng.standard_normal(todo.size)
        surv = 1.0 \
            - np.exp(-2.0 * np.maximum(p - cur, 0) * np.maximum(p - prop, 0) / dt) \
            - np.exp(-2.0 * np.maximum(p + cur, 0) * np.maximum(p + prop, 0) / dt)
        acc = (np.abs(prop) < p) & \
            (rng.uniform(size=todo.size) <= _phi1(prop, p) * np.maximum(surv, 0.0))
        out[todo[acc]] = prop[acc]
        todo = todo[~acc]
    raise RuntimeError("conditioned interval step exceeded the rejection cap")


def conditioned_bm_cdf(z, x0: float, T: float, p: float, terms: int = 200):
    """CDF of Brownian motion conditioned to stay in (-p, p), by sine series."""
    z = np.atleast_1d(np.asarray(z, dtype=float))
    j = np.arange(1, terms + 1)
    lam = -(j * np.pi / (2.0 * p)) ** 2 / 2.0
    sin_x0 = np.sin(j * np.pi * (x0 + p) / (2.0 * p))
    vz = np.pi * (np.clip(z, -p, p) + p) / (2.0 * p)  # in [0, pi]
    g = np.empty((terms, z.size))
    g[0] = (2.0 * p / np.pi) * (vz / 2.0 - np.sin(2.0 * vz) / 4.0)
    jj = j[1:, None]
    g[1:] = (p / np.pi) * (np.sin((jj - 1) * vz) / (jj - 1)
                           - np.sin((jj + 1) * vz) / (jj + 1))
    w = np.exp(lam * T - lam[0] * T) * sin_x0
    cdf = (w[None, :] @ g)[0] / (p * _phi1(x0, p))
    return np.clip(cdf / _norm_const(x0, T, p, terms), 0.0, 1.0)


def _norm_const(x0, T, p, terms):
    j = np.arange(1, terms + 1)
    lam = -(j * np.pi / (2.0 * p)) ** 2 / 2.0
    sin_x0 = np.sin(j * np.pi * (x0 + p) / (2.0 * p))
    vz = np.pi
    g = np.empty(terms)
    g[0] = (2.0 * p / np.pi) * (vz / 2.0)
    jj = j[1:]
    g[1:] = (p / np.pi) * (np.sin((jj - 1) * vz) / (jj - 1)
                           - np.sin((jj + 1) * vz) / (jj + 1))
    return float(np.exp(lam * T - lam[0] * T) * sin_x0 @ g / (p * _phi1(x0, p)))


def _bridge_extremes(delta, dt, rng):
    lo = 0.5 * (delta - np.sqrt(delta ** 2 - 2.0 * dt * np.log(rng.uniform(size=delta.shape))))
    hi = 0.5 * (delta + np.sqrt(delta ** 2 - 2.0 * dt * np.log(rng.uniform(size=delta.shape))))
    return lo, hi


def verify_n2_coupling(p: float, a: float, y: float, T: float, dt: float,
                       replicas: int, rng, oracle: str = "eigen",
                       bridge_correction: bool = True) -> dict:
    """Simulate the interval coupling and KS-test the terminal law of Y.

    X is a conditioned Brownian motion in [-p, p] with the tilted-cosine
    initial law; Z reflects X + (y - X_0 + a)/2 in [0, a] (with Brownian
    bridge extreme corrections for the within-step pushes); Y = y - X_0 + X +
    2(L - U) is tested against the conditioned-motion marginal from y
    (``oracle="eigen"``) or the standard normal limit (``oracle="normal"``).
    """
    if not 0.0 <= a <= 2.0 * p or not -p <= y <= p:
        raise ValueError("need a in [0, 2p] and y in [-p, p]")
    lo = abs(y + a - p) - p
    hi = p - abs(y + p - a)
    x = sample_cos_density(lo, hi, p, replicas, rng)
    x0 = x.copy()
    z = x + (y - x0 + a) / 2.0
    lu = np.zeros_like(z)
    steps = int(round(T / dt))
    for _ in range(steps):
        nxt = conditioned_bm_step(x, dt, p, rng)
        delta = nxt - x
        if bridge_correction:
            mlo, mhi = _bridge_extremes(delta, dt, rng)
        else:
            mlo = np.minimum(delta, 0.0)
            mhi = np.maximum(delta, 0.0)
        linc = np.maximum(0.0, -(z + mlo))
        uinc = np.maximum(0.0, z + mhi - a)
        z = np.clip(z + delta + linc - uinc, 0.0, a)
        lu += linc - uinc
        x = nxt
    yT = y - x0 + x + 2.0 * lu
    if oracle == "eigen":
        res = sps.kstest(yT, lambda q: conditioned_bm_cdf(q, y, T, p))
    elif oracle == "normal":
        res = sps.kstest(yT, sps.norm(loc=y, scale=np.sqrt(T)).cdf)
    else:
        raise ValueError(f"unknown oracle {oracle!r}")
    return {"p": p, "a": a, "y": y, "T": T, "dt": dt, "replicas": replicas,
            "ks_stat": float(res.statistic), "pvalue": float(res.pvalue),
            "y_mean": float(np.mean(yT)), "y_sd": float(np.std(yT))}


# ---------------------------------------------------------------------------
# reflected-motion statistics
# ---------------------------------------------------------------------------

def rbm_time_reversal_check(n: int, s: float, T: float, dt: float, rng,
                            size: int = 4000, times=(0.2, 0.6)) -> dict:
    """Paired comparison of two-point gap statistics of R against its
    conjugated time reversal; returns per-statistic z-scores.

    The test times must not be symmetric about T/2, or the paired statistics
    degenerate to zero.
    """
    if not 0 <= times[0] < times[1] <= T:
        raise ValueError("test times must lie in [0, T]")
    r, _, _ = reflected_bm_with_local_time(n, s, T, dt, rng, size=size)
    l = TAU - s
    k1, k2 = (int(round(t / dt)) for t in times)
    j1, j2 = (int(round((T - t) / dt)) for t in times)
    g1 = gap_vector(r[:, k1], l)
    g2 = gap_vector(r[:, k2], l)
    h1 = gap_vector(dagger(r[:, j1]), l)
    h2 = gap_vector(dagger(r[:, j2]), l)
    zs = {}
    for i in range(n):
        for j in range(n):
            d = g1[:, i] * g2[:, j] - h1[:, i] * h2[:, j]
            se = np.std(d, ddof=1) / np.sqrt(size)
            zs[f"gap{i}_gap{j}"] = float(np.mean(d) / se)
    d = np.sum(g1 * g1, axis=1) * np.sum(g2, axis=1) \
        - np.sum(h1 * h1, axis=1) * np.sum(h2, axis=1)
    zs["gap_sq"] = float(np.mean(d) / (np.std(d, ddof=1) / np.sqrt(size)))
    return {"n": n, "s": s, "T": T, "dt": dt, "size": size, "z_scores": zs,
            "max_abs_z": float(max(abs(v) for v in zs.values()))}


def rbm_stationarity_check(n: int, s: float, T: float, dt: float, rng,
                           size: int = 4000, n_perm: int = 500) -> dict:
    """Energy-distance test of the time-T marginal of R against the uniform
    law on the polytope (uniform is invariant: the start is stationary)."""
    from .stats import energy_distance_test

    r, _, _ = reflected_bm_with_local_time(n, s, T, dt, rng, size=size)
    ref = uniform_alcove_h0(n, TAU - s, rng, size=size)
    stat, pval = energy_distance_test(r[:, -1], ref, n_perm=n_perm, rng=rng)
    return {"n": n, "s": s, "T": T, "statistic": float(stat), "pvalue": float(pval)}
