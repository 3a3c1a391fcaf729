"""Shared geometry for particle configurations on the circle.

Configurations come in three flavours:

* circle configs: sorted angle vectors in [0, 2*pi), one angle per particle;
* alcove points: weakly sorted vectors x with x[n-1] <= x[0] + period,
  implicitly extended n-periodically by x[i+n] = x[i] + period;
* discrete configs: integer site vectors on the N-cycle.

All functions are pure and operate on plain numpy arrays; batched inputs are
accepted wherever the operation is coordinate-wise (the configuration lives on
the last axis).
"""
from __future__ import annotations

import numpy as np

TAU = 2.0 * np.pi

#: absolute tolerance per coordinate for interval membership and sum checks
ATOL = 1e-12

PREC = "prec"
SUCC = "succ"


def _tol(n: int, tol: float | None) -> float:
    return ATOL * n if tol is None else tol


def sorted_circle(angles) -> np.ndarray:
    """Canonical circle configuration: angles reduced mod 2*pi and sorted."""
    a = np.asarray(angles, dtype=float)
    return np.sort(np.mod(a, TAU), axis=-1)


def chord_product(angles) -> np.ndarray:
    """Product of pairwise chord lengths |e^{i a_l} - e^{i a_m}| over l < m.

    Works on (..., n) arrays; the empty product (n = 1) is 1.
    """
    a = np.asarray(angles, dtype=float)
    n = a.shape[-1]
    if n < 2:
        return np.ones(a.shape[:-1])
    iu, ju = np.triu_indices(n, k=1)
    diffs = a[..., ju] - a[..., iu]
    return np.prod(np.abs(2.0 * np.sin(diffs / 2.0)), axis=-1)


def vandermonde_delta(angles) -> np.ndarray:
    """Vandermonde weight of a circle configuration (CUE density is its square)."""
    return chord_product(angles)


def discrete_delta(sites, modulus: int) -> np.ndarray:
    """Vandermonde weight of integer sites embedded at angles 2*pi*k/N."""
    k = np.asarray(sites, dtype=float)
    return chord_product(TAU * k / modulus)


def lattice_h(state, modulus: int) -> np.ndarray:
    """Positive weight h^N on the lattice alcove (weakly sorted sites mod N).

    The weakly sorted sites m_1 <= ... <= m_n map to the strictly increasing
    sites m_j + j on the (N + n)-cycle; h^N is the Vandermonde weight of that
    embedded configuration.  It is strictly positive on the whole lattice
    alcove and invariant under cyclic relabelling of the particles.
    """
    m = np.asarray(state, dtype=float)
    n = m.shape[-1]
    return discrete_delta(m + np.arange(1, n + 1), modulus + n)


def gap_vector(x, period: float = TAU) -> np.ndarray:
    """Gaps (x_2 - x_1, ..., x_n - x_{n-1}, x_1 + period - x_n) of an alcove point."""
    x = np.asarray(x, dtype=float)
    return np.concatenate(
        [np.diff(x, axis=-1), (x[..., :1] + period - x[..., -1:])], axis=-1
    )


def is_alcove(x, period: float = TAU, tol: float | None = None) -> bool:
    x = np.asarray(x, dtype=float)
    t = _tol(x.shape[-1], tol)
    return bool(np.all(np.diff(x, axis=-1) >= -t) and np.all(
        x[..., -1] - x[..., 0] <= period + t))


def r_interlaced(x, x2, r: float, period: float = TAU,
                 tol: float | None = None) -> bool:
    """Membership test for x ``r``-interlaced with x2 (x precedes x2).

    True iff x2_i lies in [x_i, x_{i+1}] for every i (index n + 1 wrapping to
    x_1 + period) and the total displacement sum(x2 - x) equals r.
    """
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    n = x.shape[-1]
    t = _tol(n, tol)
    upper = np.concatenate([x[..., 1:], x[..., :1] + period], axis=-1)
    ok = np.all(x2 >= x - t, axis=-1) & np.all(x2 <= upper + t, axis=-1)
    ok &= np.abs(np.sum(x2 - x, axis=-1) - r) <= t
    return bool(np.all(ok))


def interlace_displacement(x, x2) -> float:
    """Total displacement sum(x2 - x); equals r when x is r-interlaced with x2."""
    return float(np.sum(np.asarray(x2, float) - np.asarray(x, float)))


def weak_interlace(a, b, strict_tol: float = 0.0):
    """Classify the weak interlacing of two sorted angle vectors.

    Returns ``"prec"`` for a_1 <= b_1 < a_2 <= ... < a_n <= b_n, ``"succ"``
    for b_1 < a_1 <= b_2 < ... <= b_n < a_n, and None otherwise.  Strict and
    weak inequalities follow the plain float comparisons; ties on the strict
    side are classified as non-interlaced.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("configurations must have equal length")
    if np.all(a <= b + strict_tol) and np.all(b[:-1] < a[1:] - strict_tol):
        return PREC
    if np.all(b < a - strict_tol) and np.all(a[:-1] <= b[1:] + strict_tol):
        return SUCC
    return None


def winding_length(a, b) -> float:
    """Total anticlockwise displacement l(y, z) of a weakly interlaced pair."""
    rel = weak_interlace(a, b)
    if rel is None:
        raise ValueError("configurations are not weakly interlaced")
    s = float(np.sum(np.asarray(b, float) - np.asarray(a, float)))
    return s if s >= 0.0 else s + TAU


def dagger(x) -> np.ndarray:
    """Reverse and negate a configuration: (x^dag)_i = -x_{n+1-i}.

    An exact involution; maps an alcove point of any period to an alcove point
    of the same period and reverses every interlacing relation.
    """
    x = np.asarray(x, dtype=float)
    return -x[..., ::-1]


def ddagger(x, s: float) -> np.ndarray:
    """The conjugation x^ddag on H_0 intersected with A_n(s).

    (x^ddag)_i = -x_{n-i} - s/n for i < n and (x^ddag)_n = -x_n + s(n-1)/n.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    out = np.empty_like(x)
    out[..., : n - 1] = -x[..., -2::-1] - s / n
    out[..., n - 1] = -x[..., n - 1] + s * (n - 1) / n
    return out


def project_h0(x) -> np.ndarray:
    """Orthogonal projection onto the zero-sum hyperplane H_0."""
    x = np.asarray(x, dtype=float)
    return x - np.mean(x, axis=-1, keepdims=True)


def hyperplane_level(x) -> np.ndarray:
    return np.sum(np.asarray(x, dtype=float), axis=-1)
