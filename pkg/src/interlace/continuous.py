"""Interlacing random walks on the alcove and their two couplings.

The walk q_r jumps from x to a point of the slice G_r(x) = {x' : x
r-interlaced with x'} with density proportional to the Vandermonde weight of
the image configuration.  The pushing map ``phi_map`` and the blocking map
``psi_map`` (built on the periodic Skorohod problem) realise the couplings.

Sampling functions are batch-first: configuration arrays may be (n,) or
(B, n); an explicit ``numpy.random.Generator`` is always required.
"""
from __future__ import annotations

import numpy as np

from .geometry import TAU, chord_product, dagger, gap_vector, r_interlaced

DELTA_MAX_EXP = 0.5  # Delta <= 2^{n(n-1)/2}: each chord is at most 2


def _delta_bound(n: int) -> float:
    return 2.0 ** (n * (n - 1) / 2.0)


def sample_interlaced(x, r: float, rng, size: int | None = None,
                      period: float = TAU, max_attempts: int = 10 ** 6):
    """Uniform sample(s) on the interlacing slice G_r(x).

    The first n-1 gap displacements are proposed uniformly, the last is fixed
    by the displacement sum and the proposal is rejected when it leaves its
    gap.  ``x`` may be a single point (with ``size`` giving the number of
    samples) or a batch of base points (one sample each).
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    base = x[None, :] if single else x
    if size is not None:
        if not single:
            raise ValueError("size is only valid for a single base point")
        base = np.repeat(base, size, axis=0)
    b, n = base.shape
    if not 0 < r < period:
        raise ValueError("need 0 < r < period")
    gaps = gap_vector(base, period)
    out = np.empty_like(base)
    if n == 1:
        out[:] = base + r
        return out[0] if single and size is None else out
    todo = np.arange(b)
    attempts = 0
    while todo.size:
        attempts += todo.size
        if attempts > max_attempts * b:
            raise RuntimeError("interlacing-slice sampler exceeded attempt cap")
        g = rng.uniform(size=(todo.size, n - 1)) * gaps[todo, : n - 1]
        last = r - g.sum(axis=1)
        ok = (last >= 0.0) & (last <= gaps[todo, n - 1])
        hit = todo[ok]
        out[hit] = base[hit] + np.concatenate([g[ok], last[ok, None]], axis=1)
        todo = todo[~ok]
    return out[0] if single and size is None else out


def sample_q_r(x, r: float, rng, size: int | None = None, period: float = TAU,
               max_attempts: int = 10 ** 6):
    """Exact sample(s) from the interlacing walk kernel q_r(x, .).

    Two-stage rejection: uniform proposal on G_r(x), then acceptance with
    probability Delta(x') / Delta_max.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and size is None
    base = x[None, :] if x.ndim == 1 else x
    b = size if size is not None else base.shape[0]
    n = base.shape[1]
    bound = _delta_bound(n)
    out = np.empty((b, n))
    todo = np.arange(b)
    base_t = np.repeat(base, b, axis=0) if base.shape[0] == 1 else base
    attempts = 0
    while todo.size:
        attempts += todo.size
        if attempts > max_attempts * b:
            raise RuntimeError("q_r sampler exceeded attempt cap (degenerate slice)")
        cand = sample_interlaced(base_t[todo], r, rng, period=period,
                                 max_attempts=max_attempts)
        accept = rng.uniform(size=todo.size) * bound <= chord_product(cand)
        out[todo[accept]] = cand[accept]
        todo = todo[~accept]
    return out[0] if single else out


def _next_wrap(v, period):
    return np.concatenate([v[..., 1:], v[..., :1] + period], axis=-1)


def _prev_wrap(v, period):
    return np.concatenate([v[..., -1:] - period, v[..., :-1]], axis=-1)


def phi_map(u, v, x, period: float = TAU, check: bool = True) -> np.ndarray:
    """Pushing map y_i = min(u_{i+1}, v_i) + max(u_i, v_{i-1}) - x_i.

    Sends the polytope {u <=_s x <=_r v} isometrically onto {u <=_r y <=_s v}.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    if check:
        s = float(np.mean(np.sum(x - u, axis=-1)))
        r = float(np.mean(np.sum(v - x, axis=-1)))
        if not (r_interlaced(u, x, s, period) and r_interlaced(x, v, r, period)):
            raise ValueError("x is not in tau_{u,v}")
    return np.minimum(_next_wrap(u, period), v) + \
        np.maximum(u, _prev_wrap(v, period)) - x


def periodic_skorohod(z, tol: float = 1e-12, comp_tol: float = 1e-10,
                      max_sweeps: int | None = None):
    """Unique solution (r, l) of the periodic Skorohod problem.

    Solves r_{i+1} = r_i + z_i + l_{i+1} with r, l >= 0 n-periodic and
    l_i > 0 implying r_i = 0, for data with sum(z) < 0.  Solved by cyclic
    relaxation of r_{i+1} <- max(0, r_i + z_i), which contracts because a full
    sweep decreases the unclipped branch by |sum(z)|.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zb = z[None, :] if single else z
    n = zb.shape[-1]
    if np.any(np.sum(zb, axis=-1) >= 0):
        raise ValueError("periodic Skorohod problem needs sum(z) < 0")
    cap = max_sweeps if max_sweeps is not None else 10_000 * n
    r = np.zeros_like(zb)
    for _ in range(cap):
        prev = r.copy()
        for i in range(n):
            j = (i + 1) % n
            r[:, j] = np.maximum(0.0, r[:, i] + zb[:, i])
        if np.array_equal(r, prev):
            break
    l = r - np.roll(r, 1, axis=-1) - np.roll(zb, 1, axis=-1)
    scale = max(1.0, float(np.max(np.abs(zb))))
    comp = float(np.max(np.minimum(np.abs(l), np.abs(r))))
    if np.min(l) < -tol * scale or comp > comp_tol * scale:
        raise RuntimeError("periodic Skorohod relaxation failed to converge")
    if single:
        return r[0], l[0]
    return r, l


def psi_map(u, v, x, period: float = TAU, check: bool = True) -> np.ndarray:
    """Blocking map: y = x - l with l from the periodic Skorohod problem for
    z_i = v_i - x_i - x_{i+1} + u_{i+1}.  Needs s > r, where s = sum(x - u)
    and r = sum(v - x)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    x = np.asarray(x, dtype=float)
    s = np.sum(x - u, axis=-1)
    r = np.sum(v - x, axis=-1)
    if np.any(s <= r):
        raise ValueError("blocking map needs s > r")
    if check and not (r_interlaced(u, x, float(np.mean(s)), period)
                      and r_interlaced(x, v, float(np.mean(r)), period)):
        raise ValueError("x is not in tau_{u,v}")
    z = v - x - _next_wrap(x, period) + _next_wrap(u, period)
    _, l = periodic_skorohod(z)
    return x - l


def psi_involution_residual(u, v, x, period: float = TAU) -> float:
    """Sup-norm residual of applying (u, x, v) -> (v^dag, y^dag, u^dag) twice."""
    def step(triple):
        uu, xx, vv = triple
        yy = psi_map(uu, vv, xx, period)
        return dagger(vv), dagger(yy), dagger(uu)

    out = step(step((np.asarray(u, float), np.asarray(x, float),
                     np.asarray(v, float))))
    return float(max(np.max(np.abs(out[0] - u)), np.max(np.abs(out[1] - x)),
                     np.max(np.abs(out[2] - v))))


def run_push_coupling(y0, r: float, s: float, steps: int, rng,
                      period: float = TAU):
    """Coupled trajectories (X, Y): X an r-interlacing walk from q_s(y0, .),
    Y(k+1) = phi_{Y(k), X(k+1)}(X(k)).  Returns arrays (steps+1, n)."""
    return _run_coupling(y0, r, s, steps, rng, phi_map, period)


def run_block_coupling(y0, r: float, s: float, steps: int, rng,
                       period: float = TAU):
    """Blocking variant with Y(k+1) = psi_{Y(k), X(k+1)}(X(k)); needs s > r."""
    if s <= r:
        raise ValueError("blocking coupling needs s > r")
    return _run_coupling(y0, r, s, steps, rng, psi_map, period)


def _run_coupling(y0, r, s, steps, rng, mapping, period):
    y0 = np.asarray(y0, dtype=float)
    n = y0.shape[-1]
    xs = np.empty((steps + 1, n))
    ys = np.empty((steps + 1, n))
    xs[0] = sample_q_r(y0, s, rng, period=period)
    ys[0] = y0
    for k in range(steps):
        xs[k + 1] = sample_q_r(xs[k], r, rng, period=period)
        ys[k + 1] = mapping(ys[k], xs[k + 1], xs[k], period)
        if not r_interlaced(ys[k + 1], xs[k + 1], s, period, tol=1e-9 * n):
            raise AssertionError("coupling broke the s-interlacing constraint")
    return xs, ys


def coupling_one_step(y0, r: float, s: float, size: int, rng,
                      kind: str = "push", period: float = TAU) -> np.ndarray:
    """Batch of Y(1) samples under the push or block coupling started at y0."""
    y0 = np.asarray(y0, dtype=float)
    x0 = sample_q_r(y0, s, rng, size=size, period=period)
    x1 = sample_q_r(x0, r, rng, period=period)
    base = np.broadcast_to(y0, x0.shape)
    if kind == "push":
        return phi_map(base, x1, x0, period, check=False)
    if kind == "block":
        if s <= r:
            raise ValueError("blocking coupling needs s > r")
        z = x1 - x0 - _next_wrap(x0, period) + _next_wrap(base, period)
        _, l = periodic_skorohod(z)
        return x0 - l
    raise ValueError(f"unknown coupling kind {kind!r}")
