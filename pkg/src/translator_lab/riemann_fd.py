"""Finite-difference curvature of an arbitrary coordinate metric.

Only a callable ``metric(x) -> (n, n)`` is required; Christoffel symbols and
the Riemann tensor are obtained with nested fourth-order central differences.
Nothing here knows about warped products, which is what makes it usable as
an independent check of the closed-form curvature formulas.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

Metric = Callable[[np.ndarray], np.ndarray]

_W5 = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_O5 = np.array([-2.0, -1.0, 1.0, 2.0])


def _d(fn, x, i, eps):
    """Fourth-order central derivative of ``fn`` along coordinate ``i``."""
    acc = None
    for w, o in zip(_W5, _O5):
        xs = np.array(x, dtype=float)
        xs[i] += o * eps
        val = w * fn(xs)
        acc = val if acc is None else acc + val
    return acc / eps


def christoffel(metric: Metric, x, eps: float = 2.5e-3) -> np.ndarray:
    """``Gamma[k, i, j]`` with ``nabla_i d_j = Gamma^k_ij d_k``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    g = metric(x)
    ginv = np.linalg.inv(g)
    dg = np.stack([_d(metric, x, i, eps) for i in range(n)])  # dg[l, i, j] = d_l g_ij
    # Gamma_{l,ij} = (d_i g_lj + d_j g_li - d_l g_ij) / 2
    low = 0.5 * (np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg)
    return np.einsum("kl,lij->kij", ginv, low)


def riemann(metric: Metric, x, eps: float = 2.5e-3) -> np.ndarray:
    """``R[l, k, i, j]`` with ``R(d_i, d_j) d_k = R^l_{kij} d_l``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    gam = christoffel(metric, x, eps)
    dgam = np.stack([_d(lambda y: christoffel(metric, y, eps), x, i, eps) for i in range(n)])
    # dgam[i, l, j, k] = d_i Gamma^l_jk
    R = (
        np.einsum("iljk->lkij", dgam)
        - np.einsum("jlik->lkij", dgam)
        + np.einsum("lim,mjk->lkij", gam, gam)
        - np.einsum("ljm,mik->lkij", gam, gam)
    )
    return R


def sectional(metric: Metric, x, X, Y, eps: float = 2.5e-3) -> float:
    """Sectional curvature of the plane spanned by coordinate vectors ``X, Y``."""
    x = np.asarray(x, dtype=float)
    g = metric(x)
    R = riemann(metric, x, eps)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    # <R(X,Y)Y, X>
    RXYY = np.einsum("lkij,i,j,k->l", R, X, Y, Y)
    num = float(RXYY @ g @ X)
    den = float((X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2)
    return num / den


def ricci(metric: Metric, x, eps: float = 2.5e-3) -> np.ndarray:
    """``Ric_{kj} = R^i_{kij}``."""
    R = riemann(metric, x, eps)
    return np.einsum("ikij->kj", R)
