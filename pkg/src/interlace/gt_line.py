"""Gelfand-Tsetlin line model: interlaced integer configurations on Z.

A pattern is a tuple of rows (x^1, ..., x^n) with x^m a strictly increasing
integer m-vector and consecutive rows interlaced: x^m_j < x^{m-1}_j <=
x^m_{j+1}.  The update ``gt_update`` advances one row by +1 at the first
movable particle and propagates the move upward, one particle per row.
"""
from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

Row = tuple[int, ...]
Pattern = tuple[Row, ...]


def is_strict(row) -> bool:
    return all(a < b for a, b in zip(row, row[1:]))


def line_interlaced(x, y) -> bool:
    """True iff (x, y) in E_m x E_{m+1} satisfy y_j < x_j <= y_{j+1}."""
    if len(y) != len(x) + 1:
        return False
    return all(y[j] < x[j] <= y[j + 1] for j in range(len(x)))


def pattern_valid(rows) -> bool:
    rows = [tuple(r) for r in rows]
    if any(len(r) != m + 1 for m, r in enumerate(rows)):
        return False
    if not all(is_strict(r) for r in rows):
        return False
    return all(line_interlaced(rows[m], rows[m + 1]) for m in range(len(rows) - 1))


def line_phi(x: Row, y: Row, x_new: Row) -> Row:
    """Propagate the move x -> x_new to the interlaced upper row y.

    x_new differs from x by +1 in exactly one coordinate j; the particle
    y_k with k = inf{l > j : y_l + 1 < x_l} moves (the rightmost particle
    is always free, so k exists).
    """
    m = len(x)
    if len(y) != m + 1 or not line_interlaced(x, y):
        raise ValueError("rows are not interlaced")
    moved = [i for i in range(m) if x_new[i] != x[i]]
    if len(moved) != 1 or x_new[moved[0]] != x[moved[0]] + 1 or not is_strict(x_new):
        raise ValueError("x_new must move exactly one particle one step right")
    j = moved[0]
    for k in range(j + 1, m + 1):
        if k == m or y[k] + 1 < x[k]:
            out = list(y)
            out[k] += 1
            return tuple(out)
    raise AssertionError("no movable particle; interlacing must be broken")


def _first_movable(row: Row, below: Row | None) -> int:
    m = len(row)
    for i in range(m):
        if i + 1 < m and row[i] + 1 == row[i + 1]:
            continue
        if below is not None and i < len(below) and row[i] + 1 >= below[i]:
            continue
        return i
    raise AssertionError("no movable particle in row")


def gt_update(rows, m: int) -> Pattern:
    """One step of the pattern dynamics g(., m): rows below m are frozen,
    row m advances at its first movable particle, higher rows follow by
    ``line_phi``."""
    rows = tuple(tuple(r) for r in rows)
    n = len(rows)
    if not 1 <= m <= n:
        raise ValueError("row index out of range")
    below = rows[m - 2] if m >= 2 else None
    i = _first_movable(rows[m - 1], below)
    new_row = list(rows[m - 1])
    new_row[i] += 1
    out = list(rows[: m - 1]) + [tuple(new_row)]
    for l in range(m, n):
        out.append(line_phi(rows[l - 1], rows[l], out[l - 1]))
    return tuple(out)


def null_pattern(n: int) -> Pattern:
    """The packed pattern ((0), (-1, 0), ..., (-n+1, ..., 0))."""
    return tuple(tuple(range(-m, 1)) for m in range(n))


def top_row_shape(pattern) -> tuple[int, ...]:
    """Integer partition (top row read right to left, shifted by 0,1,...,n-1)."""
    top = pattern[-1]
    n = len(top)
    return tuple(top[n - 1 - i] + i for i in range(n))


def simulate_chain(n: int, steps: int, rng, start: Pattern | None = None):
    """Run the pattern chain driven by uniform words on {1..n}; returns the
    list of visited patterns (length steps + 1)."""
    p = null_pattern(n) if start is None else tuple(tuple(r) for r in start)
    out = [p]
    words = rng.integers(1, n + 1, size=steps)
    for w in words:
        p = gt_update(p, int(w))
        out.append(p)
    return out


def patterns_with_top(x) -> list[Pattern]:
    """All patterns whose top row is x (finite for any strict integer row)."""
    x = tuple(int(v) for v in x)
    if not is_strict(x):
        raise ValueError("top row must be strictly increasing")
    partial = [[x]]
    for m in range(len(x) - 1, 0, -1):
        nxt = []
        for rows in partial:
            upper = rows[0]
            choices = [range(upper[j] + 1, upper[j + 1] + 1) for j in range(m)]
            for cand in itertools.product(*choices):
                if is_strict(cand):
                    nxt.append([cand] + rows)
        partial = nxt
    return [tuple(rows) for rows in partial]


def vandermonde_h(x) -> int:
    """h(x) = prod_{i<j} (x_j - x_i), positive on strict rows."""
    x = tuple(x)
    p = 1
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            p *= x[j] - x[i]
    return p


def up_moves(x) -> list[Row]:
    """Configurations reachable by moving one particle one step right."""
    out = []
    for i in range(len(x)):
        y = list(x)
        y[i] += 1
        if is_strict(y):
            out.append(tuple(y))
    return out


def pn_probability(x, y) -> float:
    """Transition probability h(y) / (n h(x)) of the conditioned walk."""
    x, y = tuple(x), tuple(y)
    if y not in up_moves(x):
        return 0.0
    return float(Fraction(vandermonde_h(y), len(x) * vandermonde_h(x)))


def pn_kernel(n: int, window: tuple[int, int]):
    """Dense P_n kernel on strict rows inside the window [lo, hi].

    Returns (states, matrix).  Rows whose moves stay inside the window sum to
    one; rows that can leak across the right edge are substochastic.
    """
    lo, hi = window
    states = [tuple(c) for c in itertools.combinations(range(lo, hi + 1), n)]
    index = {s: i for i, s in enumerate(states)}
    mat = np.zeros((len(states), len(states)))
    for s in states:
        for t in up_moves(s):
            if t in index:
                mat[index[s], index[t]] = pn_probability(s, t)
    return states, mat


def _tv(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def verify_prop_rsk(n: int, horizon: int, top=None) -> dict:
    """Exact distributional check of the line-model intertwining.

    Starting from the uniform mixture over patterns with a fixed top row, the
    joint law of (pattern, top-row path) is propagated exactly.  Returns the
    total-variation error of (i) the top-path law against the conditioned-walk
    path law and (ii) the conditional pattern law given the top path against
    the uniform law, as ``max_tv_markov`` / ``max_tv_uniform``.
    """
    if top is None:
        top = tuple(range(0, 2 * n, 2))
    pats = patterns_with_top(top)
    k0 = len(pats)
    dist = {(p, (p[-1],)): 1.0 / k0 for p in pats}
    for _ in range(horizon):
        nxt = {}
        for (p, path), pr in dist.items():
            for w in range(1, n + 1):
                p2 = gt_update(p, w)
                key = (p2, path + (p2[-1],))
                nxt[key] = nxt.get(key, 0.0) + pr / n
        dist = nxt

    path_marginal: dict = {}
    for (p, path), pr in dist.items():
        path_marginal[path] = path_marginal.get(path, 0.0) + pr
    markov_law = {}
    for path in path_marginal:
        pq = 1.0
        for a, b in zip(path, path[1:]):
            pq *= pn_probability(a, b)
        markov_law[path] = pq
    tv_markov = _tv(path_marginal, markov_law)

    tv_uniform = 0.0
    for path, ptot in path_marginal.items():
        cond = {}
        for (p, pp), pr in dist.items():
            if pp == path:
                cond[p] = cond.get(p, 0.0) + pr / ptot
        ref = patterns_with_top(path[-1])
        uniform = {p: 1.0 / len(ref) for p in ref}
        tv_uniform = max(tv_uniform, _tv(cond, uniform))
    return {
        "n": n,
        "horizon": horizon,
        "top": tuple(top),
        "patterns": k0,
        "max_tv_markov": tv_markov,
        "max_tv_uniform": tv_uniform,
    }
