"""Averaging layers on top of the raw periodogram family.

Multitaper averaging over a sine-taper family, discrete kernel smoothing
on the wavenumber lattice, rotational and angular reductions, and the
plug-in rules that pick smoothing bandwidth, taper count, and the largest
wavenumber worth keeping.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._backend import dft_weighted
from .core import (
    EstimateMeta,
    PointPattern,
    RadialEstimate,
    SpectralEstimate,
    WavenumberGrid,
    intensity_estimate,
)
from .errors import DataError
from .tapers import sine_taper_family

__all__ = [
    "SmoothingKernel",
    "box_kernel",
    "gaussian_template",
    "multitaper",
    "kernel_smooth",
    "rotational_average",
    "theta_spectrum",
    "bandwidth_select",
    "bandwidth_radius",
    "taper_count_select",
    "curvature_estimate",
    "MaxWavenumberFit",
    "max_wavenumber",
]


@dataclass(frozen=True)
class SmoothingKernel:
    """Separable lattice smoothing kernel.

    ``box`` averages every node within the per-axis half-widths
    ``bandwidth`` (wavenumber units). ``gaussian`` uses a binomial
    template of odd size ``template_m`` per axis, the standard discrete
    stand-in for Gaussian weights. Whatever the shape, the applied
    weights are renormalized to sum to one over the nodes that actually
    exist, so constants pass through unchanged even at edges.
    """

    shape: str
    bandwidth: tuple[float, ...] | None = None
    template_m: int | None = None

    def __post_init__(self):
        if self.shape == "box":
            if not self.bandwidth or any(b <= 0 for b in self.bandwidth):
                raise DataError("box kernel needs positive per-axis bandwidths")
        elif self.shape == "gaussian":
            m = self.template_m
            if m is None or m < 1 or m % 2 == 0:
                raise DataError("gaussian template size must be a positive odd integer")
        else:
            raise DataError(f"unknown kernel shape {self.shape!r}")

    @property
    def spec_string(self) -> str:
        if self.shape == "box":
            return "box:" + ",".join(f"{b:g}" for b in self.bandwidth)
        return f"gaussian:{self.template_m}"


def box_kernel(*bandwidth: float) -> SmoothingKernel:
    return SmoothingKernel("box", bandwidth=tuple(float(b) for b in bandwidth))


def gaussian_template(m: int) -> SmoothingKernel:
    return SmoothingKernel("gaussian", template_m=int(m))


def multitaper(
    pattern: PointPattern,
    count: int,
    grid: WavenumberGrid,
    debias: bool = True,
) -> SpectralEstimate:
    """Average of the count^d debiased sine-taper periodograms.

    All tapers share one pass over the points (the transform kernel takes
    a weight column per taper), so the cost grows with count^d only in
    the cheap axis. ``debias=False`` averages the raw tapered
    periodograms instead; the default follows the estimator as studied.
    """
    if count < 1:
        raise DataError("taper count must be >= 1")
    centered, shift = pattern.centered()
    tapers = sine_taper_family(centered.window, count)
    if centered.n == 0:
        sums = np.zeros((grid.m, len(tapers)), dtype=complex)
    else:
        weights = np.stack(
            [t.evaluate(centered.points) for t in tapers], axis=1
        )
        sums = dft_weighted(centered.points, weights, grid.nodes)
    if debias:
        lam = intensity_estimate(pattern)
        h_cols = np.stack([t.transform(grid.nodes) for t in tapers], axis=1)
        sums = sums - lam * h_cols
    vals = np.mean(np.abs(sums) ** 2, axis=1)
    meta = EstimateMeta(
        kind="multitaper",
        taper=f"sine-family:{count}",
        debiased=debias,
        sign_safe=True,
        translation=shift,
        extra={"taper_count": len(tapers)},
    )
    return SpectralEstimate(grid, vals, meta)


def _lattice_steps(grid: WavenumberGrid) -> tuple[float, ...]:
    if grid.axes is None:
        raise DataError("operation needs a product-lattice grid")
    steps = []
    for axis in grid.axes:
        if len(axis) < 2:
            steps.append(0.0)
            continue
        d = np.diff(axis)
        if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
            raise DataError("grid axes must be uniformly spaced")
        steps.append(float(d[0]))
    return tuple(steps)


def _template_weights(kernel: SmoothingKernel, steps, dim) -> np.ndarray:
    per_axis = []
    if kernel.shape == "box":
        if len(kernel.bandwidth) != dim:
            raise DataError("need one bandwidth per dimension")
        for b, s in zip(kernel.bandwidth, steps):
            n = int(np.floor(b / s + 1e-9)) if s > 0 else 0
            per_axis.append(np.ones(2 * n + 1))
    else:
        m = kernel.template_m
        row = np.array([float(math.comb(m - 1, i)) for i in range(m)])
        per_axis = [row] * dim
    w = per_axis[0]
    for row in per_axis[1:]:
        w = np.multiply.outer(w, row)
    return w


def kernel_smooth(
    estimate: SpectralEstimate, kernel: SmoothingKernel
) -> SpectralEstimate:
    """Edge-renormalized discrete convolution on the estimate's lattice.

    Weights are renormalized over the neighbors present in the grid, so
    boundaries and punched-out nodes (an excluded origin) do not attenuate
    the result. A kernel that covers only the center node degenerates to
    the identity; that is warned about, not an error.
    """
    from scipy import ndimage

    grid = estimate.grid
    steps = _lattice_steps(grid)
    weights = _template_weights(kernel, steps, grid.dim)
    if weights.size == 1:
        warnings.warn(
            "smoothing kernel covers a single node; returning the estimate unchanged",
            stacklevel=2,
        )
        return estimate.with_values(estimate.values.copy())
    lattice = grid.to_lattice(estimate.values, fill=np.nan)
    present = np.isfinite(lattice)
    filled = np.where(present, lattice, 0.0)
    num = ndimage.convolve(filled, weights, mode="constant", cval=0.0)
    den = ndimage.convolve(present.astype(float), weights, mode="constant", cval=0.0)
    with np.errstate(invalid="ignore"):
        smooth = num / den
    out = grid.from_lattice(smooth)
    meta = estimate.meta.replace(
        kind=f"smoothed-{estimate.meta.kind}",
        extra={**estimate.meta.extra, "kernel": kernel.spec_string},
    )
    return SpectralEstimate(grid, out, meta)


def rotational_average(
    estimate: SpectralEstimate, t_nodes: np.ndarray, kernel_radius: float
) -> RadialEstimate:
    """Isotropic summary: average over nodes with | ||k|| - t | <= radius.

    Box kernel with weights renormalized per bin; bins that catch no node
    give NaN with a zero count, and if every bin is empty that is an error.
    """
    t_arr = np.asarray(t_nodes, dtype=float)
    radius = float(kernel_radius)
    if radius <= 0:
        raise DataError("kernel radius must be positive")
    norms = np.linalg.norm(estimate.grid.nodes, axis=1)
    values = np.empty(t_arr.shape)
    counts = np.zeros(t_arr.shape, dtype=int)
    for i, t in enumerate(t_arr):
        mask = np.abs(norms - t) <= radius
        counts[i] = int(np.count_nonzero(mask))
        values[i] = np.mean(estimate.values[mask]) if counts[i] else np.nan
    if not np.any(counts):
        raise DataError("no grid node falls inside any magnitude bin")
    meta = estimate.meta.replace(
        kind=f"rotational-{estimate.meta.kind}",
        extra={**estimate.meta.extra, "kernel_radius": radius},
    )
    return RadialEstimate(t_arr, values, meta, counts=counts)


def theta_spectrum(
    estimate: SpectralEstimate,
    angle_nodes: np.ndarray,
    band: tuple[float, float],
) -> RadialEstimate:
    """Angular summary over polar angle, planar grids only.

    Node angles are folded to [0, pi) (opposite wavenumbers carry the
    same information for real data), restricted to the magnitude band,
    and assigned to the nearest angle node.
    """
    if estimate.grid.dim != 2:
        raise DataError("theta spectrum is defined for planar grids")
    t_min, t_max = float(band[0]), float(band[1])
    if not 0 <= t_min < t_max:
        raise DataError("band must satisfy 0 <= t_min < t_max")
    angles = np.asarray(angle_nodes, dtype=float)
    if np.any(angles < 0) or np.any(angles >= np.pi):
        raise DataError("angle nodes must lie in [0, pi)")
    nodes = estimate.grid.nodes
    norms = np.linalg.norm(nodes, axis=1)
    in_band = (norms >= t_min) & (norms <= t_max)
    if not np.any(in_band):
        raise DataError("no grid node falls inside the magnitude band")
    theta = np.mod(np.arctan2(nodes[in_band, 1], nodes[in_band, 0]), np.pi)
    vals_band = estimate.values[in_band]
    # nearest angle node, circular in [0, pi)
    sep = np.abs(theta[:, None] - angles[None, :])
    sep = np.minimum(sep, np.pi - sep)
    assign = np.argmin(sep, axis=1)
    values = np.empty(angles.shape)
    counts = np.zeros(angles.shape, dtype=int)
    for i in range(len(angles)):
        mask = assign == i
        counts[i] = int(np.count_nonzero(mask))
        values[i] = np.mean(vals_band[mask]) if counts[i] else np.nan
    meta = estimate.meta.replace(
        kind=f"theta-{estimate.meta.kind}",
        extra={**estimate.meta.extra, "band": (t_min, t_max)},
    )
    return RadialEstimate(angles, values, meta, counts=counts)


def bandwidth_select(lambda_hat: float, curvature: float, dim: int) -> float:
    """Mean-square-optimal boxcar bandwidth (in units of window length).

    sigma = (144 lambda^2 / (d^2 lambda^4 curvature^2))^{1/5}; curvature
    is the largest absolute second derivative of the spectrum deviation.
    """
    lam = float(lambda_hat)
    c = float(curvature)
    if lam <= 0:
        raise DataError("intensity must be positive")
    if c <= 0:
        raise DataError("curvature must be positive; no optimum exists for flat spectra")
    return (144.0 * lam**2 / (dim**2 * lam**4 * c**2)) ** 0.2


def bandwidth_radius(sigma_tilde: float, ell: float) -> float:
    """Physical kernel radius for a length-scaled bandwidth: sigma / ell."""
    if ell <= 0:
        raise DataError("window length must be positive")
    return float(sigma_tilde) / float(ell)


def taper_count_select(
    lambda_hat: float,
    f2_tilde_at_k: float,
    curvature: float,
    ell: float,
    dim: int,
) -> int:
    """Mean-square-optimal sine-taper count per axis.

    P^{d+4} = 16 lambda^2 (1 + ftilde(k)) ell^4 / (lambda^4 d^2 curvature^2),
    rounded and clamped to at least one taper.
    """
    lam = float(lambda_hat)
    if min(lam, curvature, ell) <= 0:
        raise DataError("intensity, curvature, and length must be positive")
    power = 16.0 * lam**2 * (1.0 + f2_tilde_at_k) * ell**4 / (
        lam**4 * dim**2 * curvature**2
    )
    if power <= 0:
        return 1
    root = power ** (1.0 / (dim + 4.0))
    return max(1, int(round(root)))


def curvature_estimate(
    estimate: SpectralEstimate, lambda_hat: float, pilot: bool = True
) -> float:
    """Largest absolute second derivative of the deviation surface.

    Second central differences per axis of (estimate - lambda)/lambda^2 on
    the lattice, divided by the squared step. A 3x3 binomial pilot smooth
    is applied first (raw periodogram differences are noise); the maximum
    is taken over nodes far enough from the boundary that the pilot used
    its full stencil, which keeps polynomial surfaces exact.
    """
    grid = estimate.grid
    steps = _lattice_steps(grid)
    shape = grid.lattice_shape
    if min(shape) < 3:
        raise DataError("need at least 3 nodes per axis")
    work = kernel_smooth(estimate, gaussian_template(3)) if pilot else estimate
    lam = float(lambda_hat)
    dev = (work.values - lam) / lam**2
    lattice = grid.to_lattice(dev, fill=np.nan)
    margin = 1 if pilot else 0
    best = None
    for axis, step in enumerate(steps):
        if shape[axis] < 3 + 2 * margin or step <= 0:
            continue
        v = np.moveaxis(lattice, axis, 0)
        second = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / step**2
        if margin:
            sl = [slice(margin, second.shape[0] - margin)]
            sl += [
                slice(margin, second.shape[other] - margin)
                for other in range(1, second.ndim)
            ]
            second = second[tuple(sl)]
        finite = second[np.isfinite(second)]
        if finite.size:
            cand = float(np.max(np.abs(finite)))
            best = cand if best is None else max(best, cand)
    if best is None:
        raise DataError("no interior node with a usable second difference")
    return best


@dataclass(frozen=True)
class MaxWavenumberFit:
    """Power-law tail fit and the wavenumber where it meets the noise floor."""

    value: float
    c0: float
    alpha: float
    flagged: bool = False


def max_wavenumber(radial: RadialEstimate, lambda_hat: float) -> MaxWavenumberFit:
    """Highest wavenumber still carrying signal, from a power-law tail fit.

    Fits log|value - lambda| = 2 log lambda + log C0 - alpha log t on the
    bracket [first node at half the initial value, last node at twice
    lambda], then solves C0 w^{-alpha} = lambda. A non-decaying fit
    (alpha <= 0) returns the grid maximum, flagged.
    """
    lam = float(lambda_hat)
    if lam <= 0:
        raise DataError("intensity must be positive")
    t = radial.t
    v = radial.values
    ok = np.isfinite(v)
    if not np.any(ok):
        raise DataError("radial curve has no finite values")
    half_start = np.flatnonzero(ok & (v <= 0.5 * v[np.flatnonzero(ok)[0]]))
    above_floor = np.flatnonzero(ok & (v >= 2.0 * lam))
    if len(half_start) == 0 or len(above_floor) == 0:
        raise DataError("empty fit range: curve never leaves its start or the floor")
    lo, hi = half_start[0], above_floor[-1]
    if hi < lo:
        raise DataError("empty fit range: brackets do not overlap")
    sel = np.arange(lo, hi + 1)
    dev = v[sel] - lam
    keep = np.isfinite(dev) & (dev != 0.0) & (t[sel] > 0)
    sel = sel[keep]
    if len(sel) < 5:
        raise DataError("fewer than 5 usable nodes in the fit range")
    y = np.log(np.abs(v[sel] - lam)) - 2.0 * np.log(lam)
    design = np.stack([np.ones(len(sel)), -np.log(t[sel])], axis=1)
    (log_c0, alpha), *_ = np.linalg.lstsq(design, y, rcond=None)
    c0 = float(np.exp(log_c0))
    alpha = float(alpha)
    if alpha <= 0:
        return MaxWavenumberFit(float(t[-1]), c0, alpha, flagged=True)
    return MaxWavenumberFit((c0 / lam) ** (1.0 / alpha), c0, alpha, flagged=False)
