"""Exact finite-state kernels on the discrete circle.

Two state spaces at modulus N:

* ``circle_states(n, N)``: n distinct sites on Z_N (strict configurations),
  carrying the anticlockwise up-kernel, its Doob transform Q and the
  interlacing kernel M;
* ``lattice_states(n, N)``: weakly sorted n-tuples of sites (multisets),
  the quotient of the lattice alcove by cyclic relabelling, carrying the
  r-interlacing structure kernels l^N_r and walks q^N_r.

Structure matrices are integer valued so commutation checks are exact.
Anticlockwise means +1 mod N throughout.
"""
from __future__ import annotations

import itertools

import numpy as np

from .geometry import discrete_delta, lattice_h

State = tuple[int, ...]


class EigenResidualError(RuntimeError):
    """A kernel built from an eigenfunction claim failed its residual check."""


# ---------------------------------------------------------------------------
# strict configurations on Z_N
# ---------------------------------------------------------------------------

def circle_states(n: int, N: int) -> list[State]:
    """Lexicographic enumeration of n distinct sites on Z_N."""
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    return list(itertools.combinations(range(N), n))


def up_successors(state: State, N: int) -> list[State]:
    """States reachable by moving one particle one step anticlockwise."""
    occ = set(state)
    out = []
    for k in state:
        t = (k + 1) % N
        if t not in occ:
            out.append(tuple(sorted((occ - {k}) | {t})))
    return out


def up_kernel(n: int, N: int) -> np.ndarray:
    """0/1 matrix of allowed single-particle anticlockwise moves."""
    states = circle_states(n, N)
    index = {s: i for i, s in enumerate(states)}
    mat = np.zeros((len(states), len(states)), dtype=np.int64)
    for s in states:
        for t in up_successors(s, N):
            mat[index[s], index[t]] = 1
    return mat


def _ratio_residual(ratios: np.ndarray) -> tuple[float, float]:
    lam = float(np.mean(ratios))
    resid = float(np.max(np.abs(ratios - lam)) / abs(lam)) if lam != 0 else np.inf
    return lam, resid


def perron_check_delta(n: int, N: int, tol: float = 1e-10) -> tuple[float, float]:
    """Eigenvalue of the up-kernel on the Vandermonde weight, with residual.

    Verifies sum_{x -> y} Delta(y) = lambda Delta(x) holds state-independently;
    raises EigenResidualError if the relative residual exceeds ``tol``.
    """
    states = circle_states(n, N)
    d = discrete_delta(np.array(states), N)
    lam, resid = _ratio_residual((up_kernel(n, N) @ d) / d)
    if resid > tol:
        raise EigenResidualError(f"up-kernel residual {resid:.3e} > {tol:.1e}")
    return lam, resid


def q_kernel(n: int, N: int) -> np.ndarray:
    """Stochastic Doob transform Q(x, y) = Delta(y) / (lambda Delta(x)) on moves."""
    states = circle_states(n, N)
    d = discrete_delta(np.array(states), N)
    lam, _ = perron_check_delta(n, N)
    up = up_kernel(n, N).astype(float)
    return up * d[None, :] / (lam * d[:, None])


def circle_interlaced(x: State, y: State, N: int) -> bool:
    """Circular interlacing x <= y: each anticlockwise arc (x_j, x_{j+1}]
    contains exactly one particle of y."""
    n = len(x)
    if len(y) != n:
        return False
    for j in range(n):
        a = x[j]
        arc = (x[(j + 1) % n] - a) % N or N
        cnt = sum(1 for l in y if ((l - a) % N or N) <= arc)
        if cnt != 1:
            return False
    return True


def interlace_indicator(n: int, N: int) -> np.ndarray:
    """0/1 matrix A[x, y] = 1_{x <= y} on circle states."""
    states = circle_states(n, N)
    mat = np.zeros((len(states), len(states)), dtype=np.int64)
    for i, x in enumerate(states):
        for j, y in enumerate(states):
            if circle_interlaced(x, y, N):
                mat[i, j] = 1
    return mat


def m_kernel(n: int, N: int, tol: float = 1e-10):
    """Stochastic kernel M(y, x) = Delta(x) 1_{x <= y} / (gamma Delta(y)).

    Returns (M, gamma, residual) where the residual is the worse of the left
    and right eigenvector checks of the interlacing indicator on Delta.
    """
    states = circle_states(n, N)
    d = discrete_delta(np.array(states), N)
    ind = interlace_indicator(n, N)
    gam_left, res_left = _ratio_residual((ind.T @ d) / d)   # sum_x Delta(x) 1_{x<=y}
    gam_right, res_right = _ratio_residual((ind @ d) / d)
    resid = max(res_left, res_right, abs(gam_left - gam_right) / gam_left)
    if resid > tol:
        raise EigenResidualError(f"interlacing-kernel residual {resid:.3e} > {tol:.1e}")
    mat = ind.T * d[None, :] / (gam_left * d[:, None])  # rows indexed by y
    return mat, gam_left, resid


def coupled_step(x: State, y: State, x_next: State, N: int) -> State:
    """Deterministic interlacing-preserving update of y given the move x -> x_next.

    Starting at the new position of the moved x-particle and scanning
    anticlockwise, the first y-particle whose one-step anticlockwise move
    keeps x_next <= y' is the one that moves.
    """
    moved = [k for k in x if k not in x_next]
    if len(moved) != 1:
        raise ValueError("x_next must move exactly one particle")
    start = (moved[0] + 1) % N
    occ = set(y)
    for off in range(N):
        pos = (start + off) % N
        if pos not in occ:
            continue
        tgt = (pos + 1) % N
        if tgt in occ:
            continue
        cand = tuple(sorted((occ - {pos}) | {tgt}))
        if circle_interlaced(x_next, cand, N):
            return cand
    raise AssertionError("no movable y-particle; interlacing must be broken")


def verify_prop_crsk(n: int, N: int, horizon: int) -> dict:
    """Exact distributional check of the circle intertwining.

    For every start y0, the joint law of (X(T), y-path) under the coupled
    dynamics started from X(0) ~ M(y0, .) is propagated exactly.  Returns the
    maximal total-variation errors of (i) the y-path law against the Q-chain
    path law and (ii) the conditional law of X(T) given the y-path against
    M(Y(T), .).
    """
    states = circle_states(n, N)
    index = {s: i for i, s in enumerate(states)}
    q = q_kernel(n, N)
    m, _, _ = m_kernel(n, N)
    tv_markov = 0.0
    tv_cond = 0.0
    for iy0, y0 in enumerate(states):
        dist = {(x, (y0,)): m[iy0, ix] for ix, x in enumerate(states) if m[iy0, ix] > 0}
        for _ in range(horizon):
            nxt: dict = {}
            for (x, ypath), pr in dist.items():
                ix = index[x]
                for x2 in up_successors(x, N):
                    p2 = pr * q[ix, index[x2]]
                    y2 = coupled_step(x, ypath[-1], x2, N)
                    key = (x2, ypath + (y2,))
                    nxt[key] = nxt.get(key, 0.0) + p2
            dist = nxt
        ymarg: dict = {}
        for (x, ypath), pr in dist.items():
            ymarg[ypath] = ymarg.get(ypath, 0.0) + pr
        acc = 0.0
        for ypath, pr in ymarg.items():
            pq = 1.0
            for a, b in zip(ypath, ypath[1:]):
                pq *= q[index[a], index[b]]
            acc += abs(pr - pq)
        tv_markov = max(tv_markov, 0.5 * acc)
        for ypath, ptot in ymarg.items():
            cond: dict = {}
            for (x, pp), pr in dist.items():
                if pp == ypath:
                    cond[x] = cond.get(x, 0.0) + pr / ptot
            iyT = index[ypath[-1]]
            acc = sum(abs(cond.get(x, 0.0) - m[iyT, index[x]]) for x in states)
            tv_cond = max(tv_cond, 0.5 * acc)
    return {"n": n, "N": N, "horizon": horizon,
            "max_tv_markov": tv_markov, "max_tv_conditional": tv_cond}


# ---------------------------------------------------------------------------
# lattice alcove (weakly sorted multisets) and r-interlacing kernels
# ---------------------------------------------------------------------------

def lattice_states(n: int, N: int) -> list[State]:
    """Lexicographic enumeration of weakly sorted n-tuples of sites on Z_N."""
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    return list(itertools.combinations_with_replacement(range(N), n))


def canonical_lattice(x, N: int) -> State:
    """Canonical representative (sorted sites mod N) of a lattice alcove lift."""
    return tuple(sorted(int(v) % N for v in x))


def lattice_successors(state, N: int, r: int) -> list[State]:
    """Canonical states x' with state r-interlaced with x' (one per lift)."""
    state = tuple(state)
    n = len(state)
    gaps = [state[i + 1] - state[i] for i in range(n - 1)]
    gaps.append(state[0] + N - state[-1])
    out: list[State] = []

    def rec(i: int, rem: int, acc: list[int]):
        if i == n - 1:
            if 0 <= rem <= gaps[i]:
                out.append(canonical_lattice(
                    [state[j] + g for j, g in enumerate(acc + [rem])], N))
            return
        for g in range(min(gaps[i], rem) + 1):
            rec(i + 1, rem - g, acc + [g])

    rec(0, r, [])
    return out


def lattice_interlace_kernel(n: int, N: int, r: int) -> np.ndarray:
    """0/1 structure matrix l^N_r on the lattice alcove."""
    if not 1 <= r <= N - 1:
        raise ValueError("need 1 <= r <= N - 1")
    states = lattice_states(n, N)
    index = {s: i for i, s in enumerate(states)}
    mat = np.zeros((len(states), len(states)), dtype=np.int64)
    for s in states:
        for t in lattice_successors(s, N, r):
            mat[index[s], index[t]] = 1
    return mat


def lattice_q_kernel(n: int, N: int, r: int, tol: float = 1e-10):
    """Stochastic r-interlacing walk kernel q^N_r; returns (Q, gamma, residual).

    gamma is the common value of the h^N-weighted row sums; the kernel raises
    EigenResidualError when that ratio is not state-independent.
    """
    states = lattice_states(n, N)
    h = lattice_h(np.array(states), N)
    ln = lattice_interlace_kernel(n, N, r)
    gam, resid = _ratio_residual((ln @ h) / h)
    if resid > tol:
        raise EigenResidualError(f"l^N_r residual {resid:.3e} > {tol:.1e}")
    mat = ln * h[None, :] / (gam * h[:, None])
    return mat, gam, resid


# integer lifts: maps phi / psi on the lattice alcove ------------------------

def _wrap_next(v, period):
    return list(v[1:]) + [v[0] + period]


def _wrap_prev(v, period):
    return [v[-1] - period] + list(v[:-1])


def lattice_interlaced_lift(x, x2, r: int, N: int) -> bool:
    """r-interlacing of integer lifts with period N (exact arithmetic)."""
    up = _wrap_next(x, N)
    return all(x[i] <= x2[i] <= up[i] for i in range(len(x))) and \
        sum(x2) - sum(x) == r


def tau_lattice(u, v, s: int, N: int) -> list[State]:
    """All integer lifts x with u s-interlaced with x and x r-interlaced
    with v, where r = sum(v) - sum(u) - s."""
    u = tuple(u)
    v = tuple(v)
    n = len(u)
    r = sum(v) - sum(u) - s
    up = _wrap_next(u, N)
    out = []

    def rec(i: int, rem: int, acc: list[int]):
        if i == n - 1:
            last = u[i] + rem
            if 0 <= rem <= up[i] - u[i]:
                cand = acc + [last]
                if lattice_interlaced_lift(cand, v, r, N):
                    out.append(tuple(cand))
            return
        for g in range(min(up[i] - u[i], rem) + 1):
            rec(i + 1, rem - g, acc + [u[i] + g])

    if 0 <= r:
        rec(0, s, [])
    return out


def lattice_phi(u, v, x, N: int) -> State:
    """Pushing map on integer lifts: y_i = min(u_{i+1}, v_i) + max(u_i, v_{i-1}) - x_i."""
    u, v, x = tuple(u), tuple(v), tuple(x)
    un = _wrap_next(u, N)
    vp = _wrap_prev(v, N)
    s = sum(x) - sum(u)
    if not lattice_interlaced_lift(u, x, s, N) or \
            not lattice_interlaced_lift(x, v, sum(v) - sum(x), N):
        raise ValueError("x is not in tau_{u,v}")
    return tuple(min(un[i], v[i]) + max(u[i], vp[i]) - x[i] for i in range(len(x)))


def lattice_psi(u, v, x, N: int) -> State:
    """Blocking map on integer lifts via the periodic Skorohod problem."""
    u, v, x = tuple(u), tuple(v), tuple(x)
    n = len(u)
    s = sum(x) - sum(u)
    r = sum(v) - sum(x)
    if s <= r:
        raise ValueError("blocking map needs s > r")
    if not lattice_interlaced_lift(u, x, s, N) or \
            not lattice_interlaced_lift(x, v, r, N):
        raise ValueError("x is not in tau_{u,v}")
    un = _wrap_next(u, N)
    xn = _wrap_next(x, N)
    z = [v[i] - x[i] - xn[i] + un[i] for i in range(n)]
    rseq = [0] * n
    for _ in range(2 * n + 2 + (max(map(abs, z)) * n * n) // max(1, -sum(z))):
        prev = list(rseq)
        for i in range(n):
            rseq[(i + 1) % n] = max(0, rseq[i] + z[i])
        if rseq == prev:
            break
    l = [rseq[i] - rseq[i - 1] - z[i - 1] for i in range(n)]
    assert all(li >= 0 for li in l) and all(li == 0 or rseq[i] == 0
                                            for i, li in enumerate(l))
    return tuple(x[i] - l[i] for i in range(n))


def packed_states(n: int, N: int) -> list[State]:
    """Fully clustered lattice states (all particles on one site)."""
    return [tuple([c] * n) for c in range(N)]


def deterministic_noncolliding_check(n: int, N: int, levels: int, steps: int,
                                     rng) -> dict:
    """Consistency check of the doubly indexed field at r = s = 1.

    Verifies that every fully clustered state has a unique one-step successor
    (moving only the last coordinate), then builds a strip with the pushing
    recursion X^{(m+1)}(k+1) = phi_{X^{(m+1)}(k), X^{(m)}(k+1)}(X^{(m)}(k))
    from a packed seed and checks all row/column interlacings, plus that
    every packed cell in the strip takes its forced transition.
    """
    # forced transition out of packed states
    bad_packed = []
    for st in packed_states(n, N):
        succ = lattice_successors(st, N, 1)
        want = canonical_lattice(list(st[:-1]) + [st[-1] + 1], N)
        if succ != [want]:
            bad_packed.append((st, succ))

    # level-0 trajectory as integer lifts, packed start
    def successors_lift(x):
        out = []
        up = _wrap_next(x, N)
        for i in range(n):
            if x[i] + 1 <= up[i]:
                cand = list(x)
                cand[i] += 1
                out.append(tuple(cand))
        return out

    row = [tuple([0] * n)]
    for _ in range(steps):
        succ = successors_lift(row[-1])
        row.append(succ[rng.integers(len(succ))])
    strip = [row]
    for _ in range(levels - 1):
        base = strip[-1]
        preds = [x for x in
                 (tuple(np.add(base[0], -np.array(g)))
                  for g in itertools.product(range(2), repeat=n) if sum(g) == 1)
                 if lattice_interlaced_lift(x, base[0], 1, N)]
        upper = [preds[rng.integers(len(preds))]]
        for k in range(steps):
            upper.append(lattice_phi(upper[k], base[k + 1], base[k], N))
        strip.append(upper)

    violations = []
    for m, row_m in enumerate(strip):
        for k in range(steps):
            if not lattice_interlaced_lift(row_m[k], row_m[k + 1], 1, N):
                violations.append(("row", m, k))
        if m + 1 < len(strip):
            for k in range(steps + 1):
                if not lattice_interlaced_lift(strip[m + 1][k], row_m[k], 1, N):
                    violations.append(("column", m, k))
        for k in range(steps):
            cell = row_m[k]
            if len(set(cell)) == 1:  # packed cell: transition is forced
                want = tuple(list(cell[:-1]) + [cell[-1] + 1])
                if row_m[k + 1] != want:
                    violations.append(("forced", m, k))
    return {"n": n, "N": N, "levels": levels, "steps": steps,
            "bad_packed_states": bad_packed, "violations": violations}


# ---------------------------------------------------------------------------
# text export
# ---------------------------------------------------------------------------

def export_kernel(path, name: str, n: int, N: int, matrix: np.ndarray) -> None:
    """Write a kernel matrix as delimiter-separated text with a header line."""
    with open(path, "w") as fh:
        fh.write(f"# kernel={name} n={n} N={N} shape={matrix.shape[0]}x{matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")
