"""Client-side randomizers.

Everything here is a pure function of (input, epsilon, rng stream).  The
categorical reports use 1-based cluster indices, matching the wire format.
Scalar mechanisms accept an optional size argument for drawing many
independent perturbations of the same input at once.
"""

from __future__ import annotations

import numpy as np

HYBRID_EPS_THRESHOLD = 0.61  # below this the Duchi branch is always used


def _check_eps(eps):
    if not eps > 0:
        raise ValueError("epsilon must be positive")


def _check_rho(rho):
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or np.any(rho < 0) or abs(rho.sum() - 1.0) > 1e-9:
        raise ValueError("rho must be a probability vector")
    return rho


def _check_unit(x):
    if np.any(np.abs(x) > 1.0 + 1e-12):
        raise ValueError("inputs must lie in [-1, 1]")


def exp_mech_distribution(rho, eps):
    """Output distribution of the exponential mechanism with utility rho and
    sensitivity 1: softmax of eps * rho / 2."""
    rho = _check_rho(rho)
    _check_eps(eps)
    z = eps * rho / 2.0
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def exp_mech_sample(rho, eps, rng, size=None):
    """Sample cluster indices (1-based) via the exponential mechanism."""
    p = exp_mech_distribution(rho, eps)
    if size is None:
        return int(rng.choice(len(p), p=p)) + 1
    return rng.choice(len(p), p=p, size=size) + 1


def ps_sample(rho, rng, size=None):
    """Non-private ceiling: sample the cluster directly from rho."""
    rho = _check_rho(rho)
    p = rho / rho.sum()
    if size is None:
        return int(rng.choice(len(p), p=p)) + 1
    return rng.choice(len(p), p=p, size=size) + 1


def laplace_perturb_record(d, eps, rng, size=None):
    """Independent Laplace noise per attribute, scale 2m/eps.

    The record-level L1 sensitivity of an m-vector in [-1, 1]^m is 2m, so the
    equal per-attribute budget split eps/m gives scale (2 per attribute) /
    (eps/m) = 2m/eps and the whole record is eps-LDP.  Outputs are left
    unclipped to keep downstream means unbiased.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    _check_unit(d)
    _check_eps(eps)
    m = d.shape[0]
    scale = 2.0 * m / eps
    shape = d.shape if size is None else (size, m)
    return d + rng.laplace(scale=scale, size=shape)


def duchi_perturb(x, eps, rng, size=None):
    """Two-point mechanism: returns +-C' with C' = (e^eps+1)/(e^eps-1)."""
    _check_unit(x)
    _check_eps(eps)
    e = np.exp(eps)
    c = (e + 1.0) / (e - 1.0)
    p_plus = x * (e - 1.0) / (2.0 * (e + 1.0)) + 0.5
    if size is None:
        return c if rng.random() < p_plus else -c
    return np.where(rng.random(size) < p_plus, c, -c)


def piecewise_perturb(x, eps, rng, size=None):
    """Piecewise mechanism on [-C, C], C = (e^{eps/2}+1)/(e^{eps/2}-1).

    With probability e^{eps/2}/(e^{eps/2}+1) the output is uniform on the
    high-density window [l(x), r(x)] of width C-1 positioned by x; otherwise
    uniform on the complement within [-C, C].  Unbiased.
    """
    _check_unit(x)
    _check_eps(eps)
    e_half = np.exp(eps / 2.0)
    c = (e_half + 1.0) / (e_half - 1.0)
    left = (c + 1.0) * x / 2.0 - (c - 1.0) / 2.0
    right = left + c - 1.0

    scalar = size is None
    n = 1 if scalar else size
    out = np.empty(n)
    inside = rng.random(n) < e_half / (e_half + 1.0)
    k_in = int(inside.sum())
    out[inside] = rng.uniform(left, right, size=k_in)
    k_out = n - k_in
    if k_out:
        len_lo = left + c   # length of [-C, l]
        len_hi = c - right  # length of [r, C]
        lo_side = rng.random(k_out) < len_lo / (len_lo + len_hi)
        vals = np.where(lo_side,
                        rng.uniform(-c, left, size=k_out),
                        rng.uniform(right, c, size=k_out))
        out[~inside] = vals
    return float(out[0]) if scalar else out


def hybrid_perturb(x, eps, rng, size=None):
    """Mixture of the piecewise and Duchi mechanisms.

    For eps > 0.61 the piecewise branch is taken with probability
    1 - e^{-eps/2}; for smaller eps the Duchi branch is always used.
    """
    _check_unit(x)
    _check_eps(eps)
    if eps <= HYBRID_EPS_THRESHOLD:
        return duchi_perturb(x, eps, rng, size=size)
    p_pm = 1.0 - np.exp(-eps / 2.0)
    if size is None:
        if rng.random() < p_pm:
            return piecewise_perturb(x, eps, rng)
        return duchi_perturb(x, eps, rng)
    take_pm = rng.random(size) < p_pm
    out = np.empty(size)
    k = int(take_pm.sum())
    if k:
        out[take_pm] = piecewise_perturb(x, eps, rng, size=k)
    if size - k:
        out[~take_pm] = duchi_perturb(x, eps, rng, size=size - k)
    return out


def hybrid_perturb_record(d, eps, rng):
    """One-attribute report for an m-vector: pick an attribute uniformly,
    perturb it with the full budget, scale by m.

    Averaging the scaled values per attribute over many clients yields an
    unbiased mean estimate for every attribute.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    _check_unit(d)
    _check_eps(eps)
    m = d.shape[0]
    j = int(rng.integers(m))
    return j, m * hybrid_perturb(d[j], eps, rng)
