"""Windows, point patterns, wavenumber grids, and estimate containers.

Conventions used throughout the package:

* Spectra are functions of wavenumber ``k`` (cycles per unit length); the
  transform kernel is ``exp(-2*pi*1j*k.x)``.  No angular-frequency factors
  appear anywhere.
* Observation windows are axis-aligned boxes.  Estimation routines translate
  patterns so the window is centered at the origin before transforming and
  record the translation in the result metadata.
* All containers are immutable; operations return new objects.
"""
from __future__ import annotations

import dataclasses
import functools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "CuboidWindow",
    "PointPattern",
    "WavenumberGrid",
    "EstimateMeta",
    "SpectralEstimate",
    "RadialEstimate",
    "intensity_estimate",
    "pair_intensity_estimate",
    "fourier_grid",
    "regular_grid",
    "grid_from_nodes",
    "set_covariance",
    "radial_set_covariance",
]

# Fixed angular resolution of deterministic rotational quadratures in 2D.
N_QUAD_ANGLES = 512


def _as_float_tuple(values: Iterable[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CuboidWindow:
    """Axis-aligned box ``[lower_1, upper_1] x ... x [lower_d, upper_d]``.

    Parameters
    ----------
    lower, upper : sequence of float
        Per-axis bounds; every side length must be positive and finite.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __init__(self, lower: Sequence[float], upper: Sequence[float]):
        lower = _as_float_tuple(lower)
        upper = _as_float_tuple(upper)
        if len(lower) != len(upper):
            raise DataError("window bounds have mismatched dimensions")
        if len(lower) == 0:
            raise DataError("window must have at least one dimension")
        for lo, hi in zip(lower, upper):
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise DataError("window bounds must be finite")
            if hi <= lo:
                raise DataError(f"window side [{lo}, {hi}] has non-positive length")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def centered(cls, lengths: Sequence[float]) -> "CuboidWindow":
        """Box with the given side lengths centered at the origin."""
        half = [0.5 * float(s) for s in lengths]
        return cls([-h for h in half], half)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(hi - lo for lo, hi in zip(self.lower, self.upper))

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def centre(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in zip(self.lower, self.upper))

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum(s * s for s in self.lengths)))

    @property
    def is_centered(self) -> bool:
        return all(lo == -hi for lo, hi in zip(self.lower, self.upper))

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of rows of ``points`` inside the closed box."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.array(self.lower)
        hi = np.array(self.upper)
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def translate(self, shift: Sequence[float]) -> "CuboidWindow":
        s = _as_float_tuple(shift)
        return CuboidWindow(
            [lo + ds for lo, ds in zip(self.lower, s)],
            [hi + ds for hi, ds in zip(self.upper, s)],
        )

    def dilate(self, margin: float) -> "CuboidWindow":
        """Box grown by ``margin`` on every face (Minkowski dilation)."""
        if margin < 0:
            raise DataError("dilation margin must be non-negative")
        return CuboidWindow(
            [lo - margin for lo in self.lower],
            [hi + margin for hi in self.upper],
        )

    def centering_shift(self) -> tuple[float, ...]:
        """Translation that moves this window onto the origin-centered copy."""
        return tuple(-c for c in self.centre)


@dataclass(frozen=True, eq=False)
class PointPattern:
    """A finite point configuration observed in a cuboid window.

    Points must lie inside the closed window and be pairwise distinct
    (bit-identical duplicates are rejected; they break the simple-process
    assumption behind every estimator here).
    """

    points: np.ndarray
    window: CuboidWindow

    def __init__(self, points: np.ndarray, window: CuboidWindow):
        pts = np.asarray(points, dtype=float)
        if pts.size == 0:
            pts = pts.reshape(0, window.dim)
        if pts.ndim != 2 or pts.shape[1] != window.dim:
            raise DataError(
                f"points must be an (n, {window.dim}) array, got shape {pts.shape}"
            )
        if not np.all(np.isfinite(pts)):
            raise DataError("points must be finite")
        inside = window.contains(pts) if len(pts) else np.ones(0, bool)
        if len(pts) and not np.all(inside):
            n_out = int(np.count_nonzero(~inside))
            raise DataError(f"{n_out} point(s) fall outside the window")
        if len(pts) > 1:
            unique = np.unique(pts, axis=0)
            if unique.shape[0] != pts.shape[0]:
                raise DataError("pattern contains bit-identical duplicate points")
        object.__setattr__(self, "points", _readonly(pts))
        object.__setattr__(self, "window", window)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.window.dim

    def translate(self, shift: Sequence[float]) -> "PointPattern":
        s = np.asarray(shift, dtype=float)
        return PointPattern(self.points + s, self.window.translate(s))

    def centered(self) -> tuple["PointPattern", tuple[float, ...]]:
        """Pattern translated so the window is origin-centered.

        Returns the translated pattern and the shift that was applied.
        """
        shift = self.window.centering_shift()
        if all(s == 0.0 for s in shift):
            return self, shift
        return self.translate(shift), shift


def intensity_estimate(pattern: PointPattern) -> float:
    """First-order intensity estimate ``n / |B|``."""
    return pattern.n / pattern.window.volume


def pair_intensity_estimate(pattern: PointPattern) -> float:
    """Unbiased estimate of the squared intensity, ``n (n - 1) / |B|^2``."""
    n = pattern.n
    vol = pattern.window.volume
    return n * (n - 1) / (vol * vol)


@dataclass(frozen=True, eq=False)
class WavenumberGrid:
    """A finite set of wavenumber nodes, optionally a full rectangular lattice.

    Attributes
    ----------
    nodes : (m, d) array
        Distinct finite wavenumbers, one per row.
    axes : tuple of 1-D arrays, or None
        Per-dimension node coordinates when the grid is a full product
        lattice (possibly minus the origin); None for free-form node sets.
    provenance : str
        How the grid was built (``"fourier"``, ``"regular"``, ``"nodes"``, ...).
    zero_excluded : bool
        True when the origin was removed from a lattice.
    """

    nodes: np.ndarray
    provenance: str = "nodes"
    axes: tuple[np.ndarray, ...] | None = None
    zero_excluded: bool = False

    def __init__(
        self,
        nodes: np.ndarray,
        provenance: str = "nodes",
        axes: tuple[np.ndarray, ...] | None = None,
        zero_excluded: bool = False,
    ):
        arr = np.atleast_2d(np.asarray(nodes, dtype=float))
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise DataError("grid must contain at least one node")
        if not np.all(np.isfinite(arr)):
            raise DataError("grid nodes must be finite")
        unique = np.unique(arr, axis=0)
        if unique.shape[0] != arr.shape[0]:
            raise DataError("grid contains duplicate nodes")
        object.__setattr__(self, "nodes", _readonly(arr))
        object.__setattr__(self, "provenance", str(provenance))
        if axes is not None:
            axes = tuple(_readonly(np.asarray(a, dtype=float)) for a in axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "zero_excluded", bool(zero_excluded))

    @property
    def m(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def is_lattice(self) -> bool:
        return self.axes is not None

    @property
    def lattice_shape(self) -> tuple[int, ...]:
        if self.axes is None:
            raise DataError("grid is not a product lattice")
        return tuple(len(a) for a in self.axes)

    def within(self, extent: float) -> np.ndarray:
        """Mask of nodes with every component in ``[-extent, extent]``."""
        return np.all(np.abs(self.nodes) <= extent + 1e-12, axis=1)

    def restrict(self, mask: np.ndarray) -> "WavenumberGrid":
        """Free-form subgrid containing the masked nodes."""
        return WavenumberGrid(self.nodes[mask], provenance=f"{self.provenance}-subset")

    def to_lattice(self, values: np.ndarray, fill: float = np.nan) -> np.ndarray:
        """Scatter per-node values onto the full lattice (missing -> ``fill``)."""
        if self.axes is None:
            raise DataError("grid is not a product lattice")
        values = np.asarray(values)
        out = np.full(self.lattice_shape, fill, dtype=values.dtype)
        idx = self._lattice_indices()
        out[idx] = values
        return out

    def from_lattice(self, lattice: np.ndarray) -> np.ndarray:
        """Gather lattice values back into per-node order."""
        if self.axes is None:
            raise DataError("grid is not a product lattice")
        return np.asarray(lattice)[self._lattice_indices()]

    def _lattice_indices(self) -> tuple[np.ndarray, ...]:
        idx = []
        for j, axis in enumerate(self.axes):
            pos = np.searchsorted(axis, self.nodes[:, j])
            pos = np.clip(pos, 0, len(axis) - 1)
            # searchsorted can land one slot high for values stored below axis
            lower = np.maximum(pos - 1, 0)
            use_lower = np.abs(axis[lower] - self.nodes[:, j]) < np.abs(
                axis[pos] - self.nodes[:, j]
            )
            pos = np.where(use_lower, lower, pos)
            idx.append(pos)
        return tuple(idx)


def _product_grid(
    axes: Sequence[np.ndarray], provenance: str, exclude_zero: bool
) -> WavenumberGrid:
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=-1)
    if exclude_zero:
        keep = ~np.all(nodes == 0.0, axis=1)
        nodes = nodes[keep]
    return WavenumberGrid(
        nodes, provenance=provenance, axes=tuple(axes), zero_excluded=exclude_zero
    )


def fourier_grid(
    window: CuboidWindow,
    max_order: int | Sequence[int],
    exclude_zero: bool = False,
) -> WavenumberGrid:
    """Natural Fourier lattice of the window: nodes ``p_j / l_j``, |p_j| <= max.

    On these nodes the box-taper transform vanishes except at the origin,
    which is what makes them the canonical evaluation set for periodograms.
    """
    if np.isscalar(max_order):
        orders = [int(max_order)] * window.dim
    else:
        orders = [int(m) for m in max_order]
    if len(orders) != window.dim or any(m < 0 for m in orders):
        raise DataError("max_order must be a non-negative int per dimension")
    lengths = window.lengths
    axes = [
        np.arange(-m, m + 1, dtype=float) / ell for m, ell in zip(orders, lengths)
    ]
    return _product_grid(axes, "fourier", exclude_zero)


def regular_grid(
    step: float,
    extent: float,
    dim: int = 2,
    exclude_zero: bool = False,
) -> WavenumberGrid:
    """Symmetric lattice ``{-m*step, ..., m*step}^d`` with ``m = extent/step``."""
    step = float(step)
    extent = float(extent)
    if step <= 0 or extent <= 0:
        raise DataError("step and extent must be positive")
    m = int(round(extent / step))
    if m < 1:
        raise DataError("extent must cover at least one step")
    axis = step * np.arange(-m, m + 1, dtype=float)
    return _product_grid([axis.copy() for _ in range(dim)], "regular", exclude_zero)


def grid_from_nodes(nodes: np.ndarray) -> WavenumberGrid:
    """Free-form grid from explicit nodes (no lattice structure assumed)."""
    return WavenumberGrid(nodes, provenance="nodes")


def set_covariance(window: CuboidWindow, z: np.ndarray) -> np.ndarray:
    """Set covariance of the box: ``|B ∩ (B - z)| = prod_j (l_j - |z_j|)+``.

    Depends only on the side lengths, not on where the box sits.
    """
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    zz = np.atleast_2d(z)
    if zz.shape[-1] != window.dim:
        raise DataError("lag dimension does not match the window")
    lengths = np.array(window.lengths)
    factors = np.clip(lengths - np.abs(zz), 0.0, None)
    out = np.prod(factors, axis=-1)
    return float(out[0]) if single else out


def _unit_circle_angles(n: int = N_QUAD_ANGLES) -> np.ndarray:
    return (np.arange(n) + 0.5) * (2.0 * np.pi / n)


@functools.lru_cache(maxsize=8)
def _gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    from numpy.polynomial.legendre import leggauss

    return leggauss(n)


def _quarter_turn_average(
    window: CuboidWindow, r: float, weight=None
) -> float:
    """Average of ``nu_B(r u) * weight(r u)`` over directions, 2-D case.

    By the reflection symmetries of the box (and of any admissible radial
    weight) the average over the circle equals the average over the first
    quadrant.  The integrand kinks where ``r cos(theta)`` or ``r sin(theta)``
    crosses a side length, so the quadrant is split there and each smooth
    piece gets a fixed Gauss-Legendre rule; the total node budget stays at
    N_QUAD_ANGLES.
    """
    lx, ly = window.lengths
    half_pi = 0.5 * np.pi
    cuts = [0.0, half_pi]
    if r > lx:
        cuts.append(float(np.arccos(lx / r)))
    if r > ly:
        cuts.append(float(np.arcsin(min(ly / r, 1.0))))
    cuts = sorted(set(cuts))
    pieces = [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
    n_per = max(8, N_QUAD_ANGLES // (4 * max(len(pieces), 1)))
    x, wt = _gauss_rule(n_per)
    total = 0.0
    for a, b in pieces:
        theta = 0.5 * (b - a) * x + 0.5 * (a + b)
        lags = r * np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        vals = set_covariance(window, lags)
        if weight is not None:
            vals = vals * weight(lags)
        total += 0.5 * (b - a) * float(np.dot(wt, vals))
    return total / half_pi


def radial_set_covariance(
    window: CuboidWindow, r: float | np.ndarray, weight=None
) -> np.ndarray:
    """Angular average of the set covariance at radius ``r``.

    ``weight`` is an optional callable on lag vectors (shape (m, d)) whose
    values multiply the set covariance before averaging; it must share the
    reflection symmetries of the box (radial weights do).  2-D windows use a
    kink-aware piecewise Gauss quadrature with a fixed 512-node budget; 3-D
    windows a product rule (Gauss-Legendre in the polar cosine, midpoint in
    azimuth).
    """
    r_arr = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r_arr < 0):
        raise DataError("radius must be non-negative")
    d = window.dim
    if d == 2:
        lx, ly = window.lengths
        if weight is None and np.all(r_arr <= min(lx, ly)):
            # nothing clips inside the quadrant, so the average of
            # (lx - r cos)(ly - r sin) integrates exactly
            out = lx * ly - 2.0 * r_arr * (lx + ly) / np.pi + r_arr**2 / np.pi
        else:
            out = np.array(
                [_quarter_turn_average(window, float(rv), weight) for rv in r_arr]
            )
    elif d == 3:
        from numpy.polynomial.legendre import leggauss

        nodes, wts = leggauss(32)
        phi = _unit_circle_angles(64)
        ct, ph = np.meshgrid(nodes, phi, indexing="ij")
        st = np.sqrt(1.0 - ct**2)
        dirs = np.stack(
            [st * np.cos(ph), st * np.sin(ph), ct], axis=-1
        ).reshape(-1, 3)
        weights = (np.repeat(wts, len(phi)) / (2.0 * len(phi))).ravel()
        lags = r_arr[:, None, None] * dirs[None, :, :]
        flat = lags.reshape(-1, d)
        vals = set_covariance(window, flat)
        if weight is not None:
            vals = vals * weight(flat)
        out = vals.reshape(len(r_arr), -1) @ weights
    else:
        raise DataError("radial set covariance implemented for d in {2, 3}")
    return float(out[0]) if np.isscalar(r) or np.ndim(r) == 0 else out


@dataclass(frozen=True)
class EstimateMeta:
    """Provenance carried by every estimate.

    ``sign_safe`` records whether the estimator is non-negative by
    construction (modulus-square forms are; subtracted forms are not).
    """

    kind: str
    taper: str | None = None
    debiased: bool = False
    sign_safe: bool = True
    translation: tuple[float, ...] | None = None
    extra: dict = field(default_factory=dict)

    def replace(self, **kw) -> "EstimateMeta":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    """Real-valued spectral estimate sampled on a wavenumber grid."""

    grid: WavenumberGrid
    values: np.ndarray
    meta: EstimateMeta

    def __init__(self, grid: WavenumberGrid, values: np.ndarray, meta: EstimateMeta):
        vals = np.asarray(values, dtype=float)
        if vals.shape != (grid.m,):
            raise DataError(
                f"values must have shape ({grid.m},), got {vals.shape}"
            )
        if meta.sign_safe and np.any(vals[np.isfinite(vals)] < 0):
            raise DataError("sign-safe estimate carries negative values")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", _readonly(vals))
        object.__setattr__(self, "meta", meta)

    def with_values(self, values: np.ndarray, **meta_updates) -> "SpectralEstimate":
        meta = self.meta.replace(**meta_updates) if meta_updates else self.meta
        return SpectralEstimate(self.grid, values, meta)


@dataclass(frozen=True, eq=False)
class RadialEstimate:
    """Estimate on a 1-D grid of wavenumber magnitudes ``t``."""

    t: np.ndarray
    values: np.ndarray
    meta: EstimateMeta
    counts: np.ndarray | None = None

    def __init__(
        self,
        t: np.ndarray,
        values: np.ndarray,
        meta: EstimateMeta,
        counts: np.ndarray | None = None,
    ):
        t_arr = np.asarray(t, dtype=float)
        vals = np.asarray(values, dtype=float)
        if t_arr.ndim != 1 or vals.shape != t_arr.shape:
            raise DataError("t and values must be matching 1-D arrays")
        if np.any(t_arr < 0) or np.any(np.diff(t_arr) <= 0):
            raise DataError("t nodes must be non-negative and strictly increasing")
        object.__setattr__(self, "t", _readonly(t_arr))
        object.__setattr__(self, "values", _readonly(vals))
        object.__setattr__(self, "meta", meta)
        if counts is not None:
            counts = np.ascontiguousarray(counts, dtype=int)
            if counts.shape != t_arr.shape:
                raise DataError("counts must match the t grid")
            counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
