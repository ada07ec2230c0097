"""Pure numpy implementations of the hot kernels.

Drop-in fallback for the compiled extension; same signatures, same
deterministic reduction discipline (numpy's pairwise sums, fixed chunking).
Phases are reduced modulo 1 before the trig calls, and the trig functions are
evaluated at the absolute reduced phase with the sign applied to the odd part,
so negating every node conjugates the output bitwise.
"""
from __future__ import annotations

import numpy as np
from scipy.special import j0 as _j0, j1 as _j1

BACKEND_NAME = "python"

_TWO_PI = 2.0 * np.pi
_NODE_CHUNK = 1024
_PAIR_CHUNK = 1 << 18


def dft_weighted(
    points: np.ndarray, weights: np.ndarray, nodes: np.ndarray
) -> np.ndarray:
    """Direct sums ``Z[m, p] = sum_n weights[n, p] * exp(-2j pi nodes[m].points[n])``.

    Parameters
    ----------
    points : (n, d) float array
    weights : (n, p) float array
        One column per taper (or other per-point weight set).
    nodes : (m, d) float array

    Returns
    -------
    (m, p) complex array
    """
    points = np.ascontiguousarray(points, dtype=float)
    weights = np.ascontiguousarray(weights, dtype=float)
    nodes = np.ascontiguousarray(nodes, dtype=float)
    n_nodes = nodes.shape[0]
    n_w = weights.shape[1]
    out = np.empty((n_nodes, n_w), dtype=complex)
    if points.shape[0] == 0:
        out[:] = 0.0
        return out
    for start in range(0, n_nodes, _NODE_CHUNK):
        stop = min(start + _NODE_CHUNK, n_nodes)
        phase = points @ nodes[start:stop].T  # (n, mc)
        np.subtract(phase, np.rint(phase), out=phase)
        ap = np.abs(phase)
        c = np.cos(_TWO_PI * ap)
        s = np.sin(_TWO_PI * ap)
        np.copysign(s, phase, out=s)
        out[start:stop] = (c.T @ weights) - 1j * (s.T @ weights)
    return out


def _bessel_half(x: np.ndarray) -> np.ndarray:
    # sqrt(2/(pi x)) sin(x), continuous limit 0 at x = 0
    out = np.zeros_like(x)
    nz = x > 0
    xs = x[nz]
    out[nz] = np.sqrt(2.0 / (np.pi * xs)) * np.sin(xs)
    return out


def _bessel_three_half(x: np.ndarray) -> np.ndarray:
    # sqrt(2/(pi x)) (sin x / x - cos x); series below 1e-3 avoids cancellation
    out = np.zeros_like(x)
    small = (x > 0) & (x < 1e-3)
    big = x >= 1e-3
    xs = x[small]
    out[small] = np.sqrt(2.0 / (np.pi * xs)) * (
        xs * xs / 3.0 - xs**4 / 30.0 + xs**6 / 840.0
    )
    xb = x[big]
    out[big] = np.sqrt(2.0 / (np.pi * xb)) * (np.sin(xb) / xb - np.cos(xb))
    return out


def bessel_j_values(order: float, x: np.ndarray) -> np.ndarray:
    """Bessel J of the first kind for the supported orders 0, 1/2, 1, 3/2."""
    x = np.asarray(x, dtype=float)
    if order == 0.0:
        return _j0(x)
    if order == 1.0:
        return _j1(x)
    if order == 0.5:
        return _bessel_half(x)
    if order == 1.5:
        return _bessel_three_half(x)
    raise ValueError(f"unsupported Bessel order {order}")


def pair_radial_sum(
    r: np.ndarray, w: np.ndarray, t: np.ndarray, order: float
) -> np.ndarray:
    """``S[i] = sum_q w[q] * J_order(2 pi t[i] r[q])`` for each radial node.

    ``r`` holds pair distances, ``w`` arbitrary per-pair weights (taper values
    and any radial power factors are folded in by the caller).
    """
    r = np.ascontiguousarray(r, dtype=float)
    w = np.ascontiguousarray(w, dtype=float)
    t = np.ascontiguousarray(t, dtype=float)
    if order not in (0.0, 0.5, 1.0, 1.5):
        raise ValueError(f"unsupported Bessel order {order}")
    out = np.zeros(t.shape[0], dtype=float)
    if r.shape[0] == 0:
        return out
    for start in range(0, r.shape[0], _PAIR_CHUNK):
        stop = min(start + _PAIR_CHUNK, r.shape[0])
        args = _TWO_PI * t[:, None] * r[None, start:stop]
        vals = bessel_j_values(order, args.ravel()).reshape(args.shape)
        out += vals @ w[start:stop]
    return out
