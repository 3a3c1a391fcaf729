"""Cylinder bead model: weighted interlacing kernel, Gibbs measure, correlations.

States are sorted angle vectors in [0, 2*pi).  The one-step weight is
I_q(y, z) = q^{l(y,z)} on weakly interlaced pairs; the Markov kernel m_q
reweights it by the Vandermonde ratio and has the unitary-ensemble eigenvalue
law as invariant measure.  The stationary two-sided chain is determinantal;
``kernel_K`` evaluates its space-time correlation kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial

import numpy as np
from scipy import integrate

from .geometry import (PREC, SUCC, TAU, vandermonde_delta, weak_interlace,
                       winding_length)


@lru_cache(maxsize=None)
def weight_normalisation(n: int, q: float) -> float:
    """c_q = integral over [0, 2*pi) of |1 - e^{ir}|^{n-1} q^r dr."""
    val, err = integrate.quad(
        lambda r: (2.0 * np.sin(r / 2.0)) ** (n - 1) * q ** r, 0.0, TAU,
        epsabs=0.0, epsrel=1e-12, limit=200)
    if err > 1e-10 * abs(val):
        raise RuntimeError("c_q quadrature did not reach the requested accuracy")
    return val


@dataclass(frozen=True)
class BeadParams:
    """Particle count, geometric weight q and its derived constants."""
    n: int
    q: float
    c_q: float = field(init=False)
    ctilde_q: float = field(init=False)
    sign_c: float = field(init=False)  # (-1)^{n-1} q^{2 pi}

    def __post_init__(self):
        if self.q <= 0:
            raise ValueError("q must be positive")
        object.__setattr__(self, "c_q", weight_normalisation(self.n, self.q))
        object.__setattr__(self, "ctilde_q",
                           self.c_q / float(factorial(self.n - 1)))
        object.__setattr__(self, "sign_c",
                           (-1.0) ** (self.n - 1) * self.q ** TAU)

    @property
    def degenerate_f(self) -> bool:
        """True when 1 - (-1)^{n-1} q^{2 pi} vanishes (q = 1, n odd)."""
        return abs(1.0 - self.sign_c) < 1e-12


def iq_weight(a, b, q: float) -> float:
    """I_q(y, z) = q^{l(y,z)} on weakly interlaced pairs, else 0."""
    if weak_interlace(a, b) is None:
        return 0.0
    return float(q ** winding_length(a, b))


def f_func(u, n: int, q: float):
    """f(u) = (q e^{i(n-1)/2})^{u mod 2 pi} / (1 - (-1)^{n-1} q^{2 pi})."""
    denom = 1.0 - (-1.0) ** (n - 1) * q ** TAU
    if abs(denom) < 1e-12:
        raise ZeroDivisionError("f is singular at q = 1 with n odd; "
                                "use the kernel's continuity path")
    v = np.mod(np.asarray(u, dtype=float), TAU)
    return q ** v * np.exp(1j * (n - 1) / 2.0 * v) / denom


def g_k(k, n: int, q: float):
    """Reciprocal Fourier coefficient g_k = i(k - (n-1)/2) - log q of f."""
    k = np.asarray(k, dtype=float)
    return 1j * (k - (n - 1) / 2.0) - np.log(q)


def iq_det_formula(a, b, n: int, q: float) -> float:
    """Determinantal evaluation of I_q; equals ``iq_weight`` on all pairs."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = 1.0 - (-1.0) ** (n - 1) * q ** TAU
    mat = f_func(b[None, :] - a[:, None], n, q)
    val = denom * np.exp(1j * (n - 1) / 2.0 * (a.sum() - b.sum())) * np.linalg.det(mat)
    return val


def interlacing_step_matrix(a, b, c: complex) -> np.ndarray:
    """The 0/1-vs-c comparison matrix whose determinant classifies interlacing."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.where(a[:, None] <= b[None, :], 1.0 + 0.0j, c)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def sample_cue(n: int, rng, size: int | None = None,
               max_attempts: int = 10 ** 6):
    """Eigenvalue-law samples (density Delta^2 / (2 pi)^n) by rejection."""
    b = 1 if size is None else size
    bound = 2.0 ** (n * (n - 1))
    out = np.empty((b, n))
    todo = np.arange(b)
    attempts = 0
    while todo.size:
        attempts += todo.size
        if attempts > max_attempts * b:
            raise RuntimeError("CUE sampler exceeded the attempt cap")
        cand = np.sort(rng.uniform(0.0, TAU, size=(todo.size, n)), axis=1)
        acc = rng.uniform(size=todo.size) * bound <= vandermonde_delta(cand) ** 2
        out[todo[acc]] = cand[acc]
        todo = todo[~acc]
    return out[0] if size is None else out


def _mq_boxes(a):
    """Lower/upper bounds of the two interlacing boxes around a (batch)."""
    lo_prec = a
    hi_prec = np.concatenate([a[:, 1:], np.full_like(a[:, :1], TAU)], axis=1)
    lo_succ = np.concatenate([np.zeros_like(a[:, :1]), a[:, :-1]], axis=1)
    hi_succ = a
    return (lo_prec, hi_prec), (lo_succ, hi_succ)


def sample_mq(a, q: float, rng, size: int | None = None,
              max_attempts: int = 10 ** 6):
    """Exact samples of the weighted interlacing kernel m_q(y, .).

    Proposal: uniform on the union of the two interlacing boxes (branch chosen
    proportionally to volume); acceptance proportional to Delta(z) q^{l(y,z)}.
    ``a`` is one sorted configuration (with ``size`` samples) or a batch.
    """
    a = np.asarray(a, dtype=float)
    single = a.ndim == 1 and size is None
    base = a[None, :] if a.ndim == 1 else a
    if size is not None:
        if base.shape[0] != 1:
            raise ValueError("size is only valid for a single configuration")
        base = np.repeat(base, size, axis=0)
    m, n = base.shape
    bound = 2.0 ** (n * (n - 1) / 2.0) * max(1.0, q ** TAU)
    out = np.empty_like(base)
    todo = np.arange(m)
    attempts = 0
    while todo.size:
        attempts += todo.size
        if attempts > max_attempts * m:
            raise RuntimeError("m_q sampler exceeded the attempt cap")
        cur = base[todo]
        (lo_p, hi_p), (lo_s, hi_s) = _mq_boxes(cur)
        vol_p = np.prod(hi_p - lo_p, axis=1)
        vol_s = np.prod(hi_s - lo_s, axis=1)
        pick_p = rng.uniform(size=todo.size) * (vol_p + vol_s) < vol_p
        lo = np.where(pick_p[:, None], lo_p, lo_s)
        hi = np.where(pick_p[:, None], hi_p, hi_s)
        cand = lo + rng.uniform(size=cur.shape) * (hi - lo)
        disp = np.sum(cand - cur, axis=1)
        ell = np.where(pick_p, disp, disp + TAU)
        dens = vandermonde_delta(cand) * q ** ell
        acc = rng.uniform(size=todo.size) * bound <= dens
        out[todo[acc]] = cand[acc]
        todo = todo[~acc]
    return out[0] if single else out


def sample_bead_path(n: int, q: float, levels: int, rng,
                     size: int | None = None):
    """Stationary bead-chain samples: CUE start, then m_q steps.

    Returns an array of shape (levels, n) or (size, levels, n).
    """
    x = sample_cue(n, rng, size=1 if size is None else size)
    out = np.empty((x.shape[0], levels, n))
    out[:, 0] = x
    for r in range(1, levels):
        out[:, r] = sample_mq(out[:, r - 1], q, rng)
    return out[0] if size is None else out


# ---------------------------------------------------------------------------
# Gibbs density of cylinder restrictions
# ---------------------------------------------------------------------------

def chain_density(path, q: float) -> float:
    """Stationary chain density (2 pi)^{-n} Delta(x^1)^2 prod m_q-densities."""
    path = np.asarray(path, dtype=float)
    m, n = path.shape
    params = BeadParams(n, q)
    val = vandermonde_delta(path[0]) ** 2 / TAU ** n
    for r in range(m - 1):
        iq = iq_weight(path[r], path[r + 1], q)
        val *= iq * vandermonde_delta(path[r + 1]) / \
            (params.ctilde_q * vandermonde_delta(path[r]))
    return float(val)


def product_det_density(path, q: float) -> complex:
    """Product-of-determinants density with integer boundary rows."""
    path = np.asarray(path, dtype=float)
    m, n = path.shape
    params = BeadParams(n, q)
    if params.degenerate_f:
        raise ZeroDivisionError("product formula needs q != 1 (n odd)")
    j = np.arange(n, dtype=float)
    val = np.linalg.det(np.exp(1j * np.outer(j, path[0])))
    for r in range(m - 1):
        val *= np.linalg.det(f_func(path[r + 1][None, :] - path[r][:, None],
                                    n, q))
    val *= np.linalg.det(np.exp(-1j * np.outer(path[m - 1], j)))
    z_m = params.ctilde_q ** (m - 1) * (1.0 - params.sign_c) ** (-(m - 1)) \
        * TAU ** n
    return val / z_m


def vandermonde_factorisation_residual(x1, xm) -> float:
    """Relative residual of Delta(x^1) Delta(x^m) against the two alternants."""
    x1 = np.asarray(x1, dtype=float)
    xm = np.asarray(xm, dtype=float)
    n = x1.size
    j = np.arange(1, n + 1, dtype=float) - (n + 1) / 2.0
    d1 = np.linalg.det(np.exp(1j * np.outer(j, x1)))
    d2 = np.linalg.det(np.exp(-1j * np.outer(j, xm)))
    lhs = vandermonde_delta(x1) * vandermonde_delta(xm)
    return float(abs(d1 * d2 - lhs) / max(lhs, 1e-300))


def alpha_m_density_check(path, q: float) -> dict:
    """Relative discrepancy between the chain density and the determinant
    product for one bead path, plus the alternant factorisation residual."""
    path = np.asarray(path, dtype=float)
    lhs = chain_density(path, q)
    rhs = product_det_density(path, q)
    rel = abs(rhs - lhs) / max(abs(lhs), 1e-300)
    return {"chain": lhs, "product": complex(rhs), "rel_error": float(rel),
            "imag_error": float(abs(np.imag(rhs)) / max(abs(lhs), 1e-300)),
            "factorisation_residual":
                vandermonde_factorisation_residual(path[0], path[-1])}


# ---------------------------------------------------------------------------
# correlation kernel
# ---------------------------------------------------------------------------

def kernel_K(r: int, a: float, s: int, b: float, n: int, q: float,
             kmax: int = 500):
    """Space-time correlation kernel of the stationary bead process.

    Level difference d = r - s >= 0 uses the finite sum over k = 0..n-1
    (0^0 = 1 on the diagonal); d < 0 uses the complementary series under
    symmetric truncation |k| <= kmax.
    """
    vals = kernel_K_theta(r - s, np.asarray(b - a, dtype=float), n, q, kmax)
    return complex(vals) if np.ndim(b - a) == 0 else vals


def kernel_K_theta(d: int, theta, n: int, q: float, kmax: int = 500,
                   damping: float | None = None):
    """Vectorised kernel at level difference d and angle difference theta."""
    theta = np.asarray(theta, dtype=float)
    if d >= 0:
        k = np.arange(n)
        g = g_k(k, n, q)
        coeff = np.ones(n, dtype=complex) if d == 0 else g ** d
        w = np.ones(n) if damping is None else damping ** np.abs(k)
        return (np.exp(1j * np.multiply.outer(theta, k)) @ (coeff * w)) / TAU
    k = np.concatenate([np.arange(-kmax, 0), np.arange(n, kmax + 1)])
    g = g_k(k, n, q)
    coeff = g ** float(d)
    w = np.ones(k.size) if damping is None else damping ** np.abs(k)
    return -(np.exp(1j * np.multiply.outer(theta, k.astype(float)))
             @ (coeff * w)) / TAU


def kernel_K_abel(d: int, theta, n: int, q: float, kmax: int = 4000,
                  rhos=(0.995, 0.9975, 0.99875)) -> np.ndarray:
    """Abel-summed evaluation of the d < 0 branch (Richardson in 1 - rho)."""
    if d >= 0:
        return kernel_K_theta(d, theta, n, q, kmax)
    vals = [kernel_K_theta(d, theta, n, q, kmax, damping=rho) for rho in rhos]
    eps = np.array([1.0 - rho for rho in rhos])
    # quadratic extrapolation to eps = 0
    out = np.zeros_like(np.atleast_1d(vals[0]))
    coef = []
    for i in range(3):
        li = 1.0
        for m in range(3):
            if m != i:
                li *= (0.0 - eps[m]) / (eps[i] - eps[m])
        coef.append(li)
    for c, v in zip(coef, vals):
        out = out + c * np.atleast_1d(v)
    return out if np.ndim(theta) else complex(out[0])


def kernel_tail_bound(d: int, n: int, q: float, kmax: int) -> float:
    """Bound on the dropped |k| > kmax mass of the d < 0 branch
    (infinite for |d| = 1, where the Abel check is the accuracy control)."""
    if d >= 0:
        return 0.0
    if d == -1:
        return np.inf
    edge = min(abs(g_k(kmax, n, q)), abs(g_k(-kmax, n, q)))
    return float(2.0 * edge ** (d + 1) / (-d - 1) / TAU)


def fourier_identity_residual(k: int, n: int, q: float) -> float:
    """Relative quadrature residual of int f(u) e^{-iuk} du = 1/g_k."""
    re, _ = integrate.quad(lambda u: np.real(f_func(u, n, q) * np.exp(-1j * u * k)),
                           0.0, TAU, limit=400)
    im, _ = integrate.quad(lambda u: np.imag(f_func(u, n, q) * np.exp(-1j * u * k)),
                           0.0, TAU, limit=400)
    target = 1.0 / g_k(k, n, q)
    return float(abs(re + 1j * im - target) / abs(target))


# ---------------------------------------------------------------------------
# characters and the kernel eigenvalue identity
# ---------------------------------------------------------------------------

def weyl_character(lam, a) -> complex:
    """Normalised character at a sorted configuration with distinct angles.

    chi_lambda = i^{n(n-1)/2} Delta^{-1} det(e^{i mu_j a_k}) with mu = lambda
    + rho and angles sorted ascending; chi_0 = 1.
    """
    lam = np.asarray(lam, dtype=float)
    a = np.asarray(a, dtype=float)
    n = a.size
    delta = vandermonde_delta(a)
    if delta <= 0.0:
        raise ZeroDivisionError("character is singular at coincident angles")
    rho = (n - 1) / 2.0 - np.arange(n)
    mu = lam + rho
    det = np.linalg.det(np.exp(1j * np.outer(mu, a)))
    return complex(1j ** (n * (n - 1) // 2) * det / delta)


def character_eigenvalue(lam, n: int, q: float) -> complex:
    """Eigenvalue of m_q on chi_lambda from the product formula."""
    params = BeadParams(n, q)
    lam = np.asarray(lam, dtype=float)
    rho = (n - 1) / 2.0 - np.arange(n)
    mu = lam + rho
    prod = np.prod(1.0 / (-1j * mu - np.log(q)))
    return complex((1.0 - params.sign_c) * prod / params.ctilde_q)


def _complex_quad(fun, lo, hi, epsabs=1e-11):
    re, _ = integrate.quad(lambda t: np.real(fun(t)), lo, hi,
                           epsabs=epsabs, epsrel=1e-11, limit=200)
    im, _ = integrate.quad(lambda t: np.imag(fun(t)), lo, hi,
                           epsabs=epsabs, epsrel=1e-11, limit=200)
    return re + 1j * im


def apply_mq_character(lam, a, q: float) -> complex:
    """(m_q chi_lambda)(y) by adaptive quadrature over the interlacing boxes."""
    a = np.asarray(a, dtype=float)
    n = a.size
    params = BeadParams(n, q)
    day = vandermonde_delta(a)

    def integrand(b):
        rel = weak_interlace(a, b)
        if rel is None:
            return 0.0
        ell = np.sum(b) - np.sum(a)
        if ell < 0:
            ell += TAU
        return vandermonde_delta(b) * q ** ell * weyl_character(lam, b)

    if n == 1:
        val = _complex_quad(lambda t: integrand(np.array([t])), 0.0, TAU)
    elif n == 2:
        def inner(b1, lo, hi):
            return _complex_quad(lambda t: integrand(np.array([b1, t])), lo, hi)

        val = _complex_quad(lambda b1: inner(b1, a[1], TAU), a[0], a[1])
        val += _complex_quad(lambda b1: inner(b1, a[0], a[1]), 0.0, a[0])
    else:
        raise NotImplementedError("character quadrature is provided for n <= 2")
    return complex(val / (params.ctilde_q * day))


def verify_character_eigenvalue(lam, n: int, q: float, rng,
                                points: int = 5) -> dict:
    """Quadrature check that chi_lambda is an m_q eigenfunction with the
    product-formula eigenvalue; reports the worst relative deviation and the
    spread of the ratio across test configurations."""
    target = character_eigenvalue(lam, n, q)
    ratios = []
    for _ in range(points):
        a = np.sort(rng.uniform(0.0, TAU, size=n))
        while vandermonde_delta(a) < 0.3:  # keep the character well conditioned
            a = np.sort(rng.uniform(0.0, TAU, size=n))
        chi = weyl_character(lam, a)
        ratios.append(apply_mq_character(lam, a, q) / chi)
    ratios = np.array(ratios)
    return {
        "lam": tuple(np.asarray(lam).tolist()), "n": n, "q": q,
        "eigenvalue": target,
        "max_rel_error": float(np.max(np.abs(ratios - target)) / abs(target)),
        "ratio_spread": float(np.max(np.abs(ratios - ratios.mean()))
                              / abs(target)),
    }


# ---------------------------------------------------------------------------
# Monte Carlo correlation check
# ---------------------------------------------------------------------------

def _bin_pair_counts(a, b, bins):
    """Per-sample counts of ordered cross pairs by angle difference bin."""
    m, n = a.shape
    diff = np.mod(b[:, None, :] - a[:, :, None], TAU)  # (m, n, n)
    idx = np.minimum((diff * bins / TAU).astype(int), bins - 1)
    counts = np.zeros((m, bins))
    flat = idx.reshape(m, -1)
    for col in range(flat.shape[1]):
        np.add.at(counts, (np.arange(m), flat[:, col]), 1.0)
    return counts


def _predict_pair_bin(d: int, n: int, q: float, bins: int, kmax: int):
    """Expected ordered cross-pair count per sample and difference bin:
    2 pi * integral over the bin of rho_2(theta) d theta."""
    nodes, weights = np.polynomial.legendre.leggauss(16)
    edges = np.linspace(0.0, TAU, bins + 1)
    out = np.empty(bins)
    rho1 = n / TAU
    for i in range(bins):
        mid = (edges[i] + edges[i + 1]) / 2.0
        half = (edges[i + 1] - edges[i]) / 2.0
        th = mid + half * nodes
        k_fwd = kernel_K_theta(-d, th, n, q, kmax) if d > 0 else \
            kernel_K_theta(0, th, n, q, kmax)
        k_bwd = kernel_K_theta(d, -th, n, q, kmax) if d > 0 else \
            kernel_K_theta(0, -th, n, q, kmax)
        rho2 = rho1 ** 2 - np.real(k_fwd * k_bwd)
        out[i] = TAU * half * np.dot(weights, rho2)
    return out


def correlation_mc_check(n: int, q: float, n_samples: int, rng,
                         bins: int = 32, kmax: int = 4096) -> dict:
    """Monte Carlo check of the determinantal correlation predictions.

    Samples the stationary two-level chain, then compares (i) the one-point
    intensity per absolute angle bin at both levels with n / 2 pi and (ii) the
    per-bin ordered cross-pair counts over angle differences (levels 1 -> 2,
    and within level 1) with the det-kernel predictions.  Returns arrays of
    z-scores.
    """
    x1 = sample_cue(n, rng, size=n_samples)
    x2 = sample_mq(x1, q, rng)
    width = TAU / bins
    report: dict = {"n": n, "q": q, "samples": n_samples, "bins": bins}
    for name, xs in (("level1", x1), ("level2", x2)):
        idx = np.minimum((xs * bins / TAU).astype(int), bins - 1)
        counts = np.zeros((n_samples, bins))
        for col in range(n):
            np.add.at(counts, (np.arange(n_samples), idx[:, col]), 1.0)
        pred = n * width / TAU
        se = counts.std(axis=0, ddof=1) / np.sqrt(n_samples)
        report[f"z_onepoint_{name}"] = (counts.mean(axis=0) - pred) / se
    # cross-level pairs, level difference 1
    counts = _bin_pair_counts(x1, x2, bins)
    pred = _predict_pair_bin(1, n, q, bins, kmax)
    se = counts.std(axis=0, ddof=1) / np.sqrt(n_samples)
    report["z_pair_cross"] = (counts.mean(axis=0) - pred) / se
    # same-level distinct pairs at level 1
    counts = _bin_pair_counts(x1, x1, bins)
    counts[:, 0] -= n  # remove the diagonal pairs (zero difference)
    pred = _predict_pair_bin(0, n, q, bins, kmax)
    se = counts.std(axis=0, ddof=1) / np.sqrt(n_samples)
    report["z_pair_same"] = (counts.mean(axis=0) - pred) / se
    for key in ("z_onepoint_level1", "z_onepoint_level2", "z_pair_cross",
                "z_pair_same"):
        report[key.replace("z_", "maxabs_")] = float(np.max(np.abs(report[key])))
    return report
