"""Pure numpy implementation of the hot kernels (fallback for ``_ckernels``).

Both backends expose the same three functions:

``sc_vertex_radius(n, tol)``
    f(1) for the regular 2n-gon map f(w) = int_0^w (1 - z^(2n))^(-1/n) dz.
``sc_map_many(n, w, tol)``
    f at every point of the complex array ``w`` (|w| <= 1).
``polygon_height_many(n, w)``
    Poisson extension of the alternating 1/0 edge data (|w| < 1).

Near a vertex preimage ``om`` the integrand has a (om - z)^(-1/n) endpoint
singularity.  Writing z = om * (1 - v^n) turns the tail integral into the
analytic integrand -om * n * v^(n-2) * q(1 - v^n)^(-1/n), with
q(x) = 1 + x + ... + x^(2n-1).
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .quad import GAUSS_WEIGHTS, KRONROD_NODES, KRONROD_WEIGHTS

BACKEND = "python"
SNAP = 4e-16

_T = 0.5 * (KRONROD_NODES + 1.0)
_WK = 0.5 * KRONROD_WEIGHTS
_WG = 0.5 * GAUSS_WEIGHTS


def _gk_batch(integrand, count: int, tol: float, budget: int = 2**14):
    """Adaptive G7K15 over [0, 1] for ``count`` independent integrands.

    ``integrand(t, owner)`` gets nodes ``t`` (P, 15) and the owning integral
    index ``owner`` (P,) and returns complex values of shape (P, 15).
    """
    total = np.zeros(count, dtype=complex)
    owner = np.arange(count)
    lo = np.zeros(count)
    width = np.ones(count)
    used = count
    while owner.size:
        t = lo[:, None] + width[:, None] * _T[None, :]
        vals = integrand(t, owner)
        kron = (vals @ _WK) * width
        err = np.abs(kron - (vals @ _WG) * width)
        ok = (err <= tol * width) | (width < 1e-13)
        np.add.at(total, owner[ok], kron[ok])
        keep = ~ok
        if not keep.any():
            break
        used += int(keep.sum())
        if used > budget * max(count, 1):
            raise ArithmeticError("SC quadrature did not converge")
        owner = np.repeat(owner[keep], 2)
        half = 0.5 * width[keep]
        lo = np.column_stack([lo[keep], lo[keep] + half]).ravel()
        width = np.repeat(half, 2)
    return total


def _q(x, n: int):
    acc = np.ones_like(x)
    p = np.ones_like(x)
    for _ in range(2 * n - 1):
        p = p * x
        acc = acc + p
    return acc


def _radial(n: int, w: np.ndarray, upper: np.ndarray, tol: float):
    """int_0^{upper*w} along the ray: w * int_0^upper (1 - (w s)^2n)^(-1/n) ds."""
    def integrand(t, owner):
        s = t * upper[owner, None]
        z = w[owner, None] * s
        return (w[owner] * upper[owner])[:, None] * np.exp(-np.log(1.0 - z ** (2 * n)) / n)
    return _gk_batch(integrand, w.size, tol)


def _tail(n: int, om: np.ndarray, vend: np.ndarray, tol: float):
    """int_0^{vend} -om * n * v^(n-2) * q(1 - v^n)^(-1/n) dv (straight in v)."""
    def integrand(t, owner):
        v = t * vend[owner, None]
        x = 1.0 - v ** n
        g = -om[owner, None] * n * v ** (n - 2) * np.exp(-np.log(_q(x, n)) / n)
        return vend[owner, None] * g
    return _gk_batch(integrand, om.size, tol)


def _threshold(n: int) -> float:
    return math.sin(math.pi / (2 * n))


@functools.lru_cache(maxsize=None)
def sc_vertex_radius(n: int, tol: float = 1e-14) -> float:
    split = 1.0 - 0.5 * _threshold(n)
    head = _radial(n, np.array([1.0 + 0j]), np.array([split]), tol)[0]
    vend = np.array([complex((1.0 - split) ** (1.0 / n))])
    tail = _tail(n, np.array([1.0 + 0j]), vend, tol)[0]
    return float((head - tail).real)


def sc_map_many(n: int, w, tol: float = 1e-14):
    w = np.asarray(w, dtype=complex)
    flat = w.ravel()
    out = np.empty_like(flat)
    roots = np.exp(1j * np.pi * np.arange(2 * n) / n)
    dist = np.abs(flat[:, None] - roots[None, :])
    k = np.argmin(dist, axis=1)
    near = dist[np.arange(flat.size), k] < _threshold(n)
    far = ~near
    if far.any():
        out[far] = _radial(n, flat[far], np.ones(int(far.sum())), tol)
    if near.any():
        om = roots[k[near]]
        R = sc_vertex_radius(n, tol)
        gap = 1.0 - flat[near] / om
        with np.errstate(divide="ignore", invalid="ignore"):
            # a few ulps off a root of unity counts as the vertex itself
            vend = np.where(np.abs(gap) < SNAP, 0.0, np.exp(np.log(gap + 0j) / n))
        out[near] = om * R + _tail(n, om, vend, tol)
    return out.reshape(w.shape)


def polygon_height_many(n: int, w):
    w = np.asarray(w, dtype=complex)
    k = np.arange(1, 2 * n + 1)
    mids = np.exp(1j * (k * np.pi / n - np.pi / (2 * n)))
    acc = np.zeros(w.shape)
    for j in range(n):
        a = mids[2 * j] - w      # w_{2k-1}
        b = mids[2 * j + 1] - w  # w_{2k}
        ang = np.angle(b * np.conj(a))
        acc += np.where(ang < 0, ang + 2 * np.pi, ang)
    return acc / np.pi - 0.5
