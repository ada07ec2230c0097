"""Taper families, their transforms, and taper-derived quantities.

Point tapers (box, sine) weight point locations and feed the tapered DFT.
Pair tapers (hermite radial, uniform) weight point *differences* and feed the
isotropic estimators.  All closed forms below assume the origin-centered
window frame; the estimation pipeline translates patterns accordingly.

The sine transforms use numpy's normalized sinc, which makes every factor
finite at its removable singularities, and evaluate trig at non-negative
arguments only, so Hermitian symmetry H(-k) == conj(H(k)) holds bitwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import CuboidWindow
from .errors import DataError, NumericalError

__all__ = [
    "Taper",
    "BoxTaper",
    "SineTaper",
    "PairTaper",
    "HermiteRadialTaper",
    "UniformPairTaper",
    "sine_taper_family",
    "taper_from_spec",
    "cross_norm4",
    "spectral_window",
    "spectral_bandwidth",
    "SpectralBandwidth",
    "tapered_fourier_spacing",
]

_QUARTER_TURNS = np.array([1.0 + 0.0j, 0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])


def _require_centered(window: CuboidWindow) -> CuboidWindow:
    if not window.is_centered:
        raise DataError(
            "tapers are defined on origin-centered windows; "
            "center the pattern first"
        )
    return window


class Taper:
    """Point taper on a centered cuboid window; unit L2 energy."""

    family = "abstract"
    window: CuboidWindow

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Taper values at centered-frame locations, shape (n,)."""
        raise NotImplementedError

    def transform(self, k: np.ndarray) -> np.ndarray:
        """Continuous Fourier transform H(k) at wavenumbers k (m, d) or (d,)."""
        raise NotImplementedError

    def norm4(self) -> float:
        """Fourth-power integral of the taper over the window."""
        raise NotImplementedError

    @property
    def spec_string(self) -> str:
        raise NotImplementedError

    def _prep_k(self, k: np.ndarray) -> tuple[np.ndarray, bool]:
        arr = np.asarray(k, dtype=float)
        single = arr.ndim == 1
        arr = np.atleast_2d(arr)
        if arr.shape[1] != self.window.dim:
            raise DataError("wavenumber dimension does not match the window")
        return arr, single


@dataclass(frozen=True, eq=False)
class BoxTaper(Taper):
    """Uniform taper 1/sqrt(|B|) on the window."""

    window: CuboidWindow
    family = "box"

    def __post_init__(self):
        _require_centered(self.window)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.full(pts.shape[0], 1.0 / np.sqrt(self.window.volume))

    def transform(self, k: np.ndarray) -> np.ndarray:
        kk, single = self._prep_k(k)
        lengths = np.array(self.window.lengths)
        vals = np.sqrt(self.window.volume) * np.prod(np.sinc(kk * lengths), axis=1)
        vals = vals.astype(complex)
        return vals[0] if single else vals

    def norm4(self) -> float:
        return 1.0 / self.window.volume

    @property
    def spec_string(self) -> str:
        return "box"


def _sine_transform_1d(p: int, ell: float, k: np.ndarray) -> np.ndarray:
    """Transform of sqrt(2/l) sin(pi p (x + l/2) / l) on [-l/2, l/2]."""
    ip = _QUARTER_TURNS[p % 4]
    im = _QUARTER_TURNS[(-p) % 4]
    s_minus = np.sinc(p / 2.0 - k * ell)
    s_plus = np.sinc(p / 2.0 + k * ell)
    return -1j * np.sqrt(ell / 2.0) * (ip * s_minus - im * s_plus)


@dataclass(frozen=True, eq=False)
class SineTaper(Taper):
    """Separable sine taper of positive integer orders, one per dimension."""

    window: CuboidWindow
    orders: tuple[int, ...]
    family = "sine"

    def __init__(self, window: CuboidWindow, orders: Sequence[int]):
        _require_centered(window)
        ords = tuple(int(p) for p in orders)
        if len(ords) != window.dim:
            raise DataError("need one sine order per dimension")
        if any(p < 1 for p in ords):
            raise DataError("sine orders must be >= 1")
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "orders", ords)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.ones(pts.shape[0])
        for j, (p, ell) in enumerate(zip(self.orders, self.window.lengths)):
            out *= np.sqrt(2.0 / ell) * np.sin(
                np.pi * p * (pts[:, j] + ell / 2.0) / ell
            )
        return out

    def transform(self, k: np.ndarray) -> np.ndarray:
        kk, single = self._prep_k(k)
        vals = np.ones(kk.shape[0], dtype=complex)
        for j, (p, ell) in enumerate(zip(self.orders, self.window.lengths)):
            vals = vals * _sine_transform_1d(p, ell, kk[:, j])
        return vals[0] if single else vals

    def norm4(self) -> float:
        # per dimension: (2/l)^2 * integral sin^4 = (4/l^2)(3l/8) = 3/(2l)
        out = 1.0
        for ell in self.window.lengths:
            out *= 1.5 / ell
        return out

    @property
    def spec_string(self) -> str:
        return "sine:" + ",".join(str(p) for p in self.orders)


def sine_taper_family(window: CuboidWindow, count: int) -> list[SineTaper]:
    """All sine tapers with orders in {1..count}^d, row-major order."""
    if count < 1:
        raise DataError("taper count must be >= 1")
    grids = np.meshgrid(*[np.arange(1, count + 1)] * window.dim, indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=-1)
    return [SineTaper(window, row) for row in combos]


class PairTaper:
    """Weight on point differences, used by the isotropic estimators."""

    def evaluate_diff(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def spec_string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class HermiteRadialTaper(PairTaper):
    """Separable Gaussian difference weight exp(-a sum_j z_j^2 / (2 l_j)^2).

    Not normalized to unit energy; its value at zero lag is 1.
    """

    window: CuboidWindow
    a: float = 25.0

    def __post_init__(self):
        if self.a <= 0:
            raise DataError("decay parameter must be positive")

    def evaluate_diff(self, z: np.ndarray) -> np.ndarray:
        zz = np.atleast_2d(np.asarray(z, dtype=float))
        lengths = np.array(self.window.lengths)
        expo = (zz / (2.0 * lengths)) ** 2
        return np.exp(-self.a * np.sum(expo, axis=-1))

    def radial_profile(self, r: np.ndarray) -> np.ndarray:
        """Value at radial lag r for square windows (isotropic in that case)."""
        lengths = self.window.lengths
        if len(set(lengths)) != 1:
            raise DataError("radial profile requires a square window")
        r = np.asarray(r, dtype=float)
        return np.exp(-self.a * (r / (2.0 * lengths[0])) ** 2)

    @property
    def spec_string(self) -> str:
        return f"hermite:{self.a:g}"


@dataclass(frozen=True, eq=False)
class UniformPairTaper(PairTaper):
    """Constant difference weight 1 (the untapered isotropic estimator)."""

    window: CuboidWindow

    def evaluate_diff(self, z: np.ndarray) -> np.ndarray:
        zz = np.atleast_2d(np.asarray(z, dtype=float))
        return np.ones(zz.shape[0])

    def radial_profile(self, r: np.ndarray) -> np.ndarray:
        return np.ones_like(np.asarray(r, dtype=float))

    @property
    def spec_string(self) -> str:
        return "none"


def taper_from_spec(spec: str, window: CuboidWindow):
    """Parse a taper spec string: ``box``, ``sine:p1,p2``, ``hermite:a``, ``none``."""
    text = spec.strip().lower()
    if text == "box":
        return BoxTaper(window)
    if text == "none":
        return UniformPairTaper(window)
    if text.startswith("sine:"):
        try:
            orders = [int(tok) for tok in text[5:].split(",")]
        except ValueError as exc:
            raise DataError(f"bad sine taper spec {spec!r}") from exc
        return SineTaper(window, orders)
    if text.startswith("hermite:"):
        try:
            a = float(text[8:])
        except ValueError as exc:
            raise DataError(f"bad hermite taper spec {spec!r}") from exc
        return HermiteRadialTaper(window, a)
    if text == "hermite":
        return HermiteRadialTaper(window)
    raise DataError(f"unknown taper spec {spec!r}")


def _dim_cross_norm4(
    kind_p: str, kind_q: str, p: int, q: int, ell: float
) -> float:
    # closed forms of the per-dimension integral of h_p^2 h_q^2
    if kind_p == "box" and kind_q == "box":
        return 1.0 / ell
    if kind_p == "box" or kind_q == "box":
        return 1.0 / ell
    return 1.5 / ell if p == q else 1.0 / ell


def cross_norm4(taper_p: Taper, taper_q: Taper) -> float:
    """Integral of ``h_p^2 h_q^2`` over the window (closed form, box/sine)."""
    if taper_p.window != taper_q.window:
        raise DataError("tapers must share a window")
    if taper_p.family not in ("box", "sine") or taper_q.family not in (
        "box",
        "sine",
    ):
        raise DataError("cross norm is defined for box and sine tapers")
    out = 1.0
    for j, ell in enumerate(taper_p.window.lengths):
        p = taper_p.orders[j] if taper_p.family == "sine" else 0
        q = taper_q.orders[j] if taper_q.family == "sine" else 0
        out *= _dim_cross_norm4(taper_p.family, taper_q.family, p, q, ell)
    return out


def spectral_window(tapers: Sequence[Taper], k: np.ndarray) -> np.ndarray:
    """Averaged squared transform ``mean_p |H_p(k)|^2`` over a taper list."""
    tapers = list(tapers)
    if not tapers:
        raise DataError("spectral window needs at least one taper")
    kk = np.atleast_2d(np.asarray(k, dtype=float))
    acc = np.zeros(kk.shape[0])
    for tap in tapers:
        h = tap.transform(kk)
        acc += (h * np.conj(h)).real
    out = acc / len(tapers)
    return float(out[0]) if np.asarray(k).ndim == 1 else out


@dataclass(frozen=True)
class SpectralBandwidth:
    """Root of the second spectral moment, with truncation diagnostics."""

    value: float
    squared: float
    truncation_error: float
    truncated_at: float
    divergent: bool


def _axis_moments(
    taper: Taper, j: int, k_max: float, step: float
) -> tuple[float, float, float]:
    """Per-axis (m0, m2, tail proxy) of |H_j|^2 on [-k_max, k_max]."""
    n = int(np.ceil(2.0 * k_max / step))
    k = (np.arange(n) + 0.5) * step - k_max
    ell = taper.window.lengths[j]
    if taper.family == "box":
        h2 = ell * np.sinc(k * ell) ** 2
    else:
        h = _sine_transform_1d(taper.orders[j], ell, k)
        h2 = (h * np.conj(h)).real
    m0 = float(np.sum(h2) * step)
    integrand = k * k * h2
    m2 = float(np.sum(integrand) * step)
    # for a 1/k^2 integrand tail, the [K/2, K] mass equals the [K, inf) mass
    outer = np.abs(k) >= 0.5 * k_max
    tail = float(np.sum(integrand[outer]) * step)
    return m0, m2, tail


def spectral_bandwidth(taper: Taper, resolution: int = 64) -> SpectralBandwidth:
    """Second-moment bandwidth of a point taper.

    The box taper's moment integral diverges (the integrand does not decay
    along the axes), so its value is reported truncated at
    ``||k|| <= 10 / min(l_j)`` with ``divergent=True``.  Sine tapers converge;
    the reported truncation error uses the outer-shell mass as a tail proxy.
    ``resolution`` is the number of quadrature steps per ``1/l``.
    """
    d = taper.window.dim
    lengths = taper.window.lengths
    if taper.family == "box":
        k_cut = 10.0 / min(lengths)
        steps = [2.0 / (resolution * ell) for ell in lengths]
        axes = [
            (np.arange(int(np.ceil(2 * k_cut / s))) + 0.5) * s - k_cut for s in steps
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        norm_sq = sum(m * m for m in mesh)
        h2 = np.ones_like(norm_sq)
        for j, (m, ell) in enumerate(zip(mesh, lengths)):
            h2 = h2 * (ell * np.sinc(m * ell) ** 2)
        mask = norm_sq <= k_cut * k_cut
        vol_el = float(np.prod(steps))
        b_sq = float(np.sum(norm_sq * h2 * mask) * vol_el)
        return SpectralBandwidth(
            value=float(np.sqrt(b_sq)),
            squared=b_sq,
            truncation_error=np.inf,
            truncated_at=k_cut,
            divergent=True,
        )
    if taper.family != "sine":
        raise DataError("spectral bandwidth is defined for box and sine tapers")
    m0 = np.empty(d)
    m2 = np.empty(d)
    tails = np.empty(d)
    k_cut = 0.0
    for j in range(d):
        p = taper.orders[j]
        ell = lengths[j]
        k_max = 32.0 * max(1, p) / ell
        k_cut = max(k_cut, k_max)
        m0[j], m2[j], tails[j] = _axis_moments(
            taper, j, k_max, 1.0 / (resolution * ell)
        )
    b_sq = 0.0
    tail_total = 0.0
    for j in range(d):
        rest = np.prod(np.delete(m0, j))
        b_sq += m2[j] * rest
        tail_total += tails[j] * rest
    return SpectralBandwidth(
        value=float(np.sqrt(b_sq)),
        squared=float(b_sq),
        truncation_error=float(tail_total),
        truncated_at=float(k_cut),
        divergent=False,
    )


def _axis_profile(taper: Taper, j: int, x: np.ndarray) -> np.ndarray:
    ell = taper.window.lengths[j]
    if taper.family == "box":
        return np.full_like(x, 1.0 / np.sqrt(ell))
    p = taper.orders[j]
    return np.sqrt(2.0 / ell) * np.sin(np.pi * p * (x + ell / 2.0) / ell)


def axis_transform(taper: Taper, j: int, k: np.ndarray) -> np.ndarray:
    """1-D frequency factor of a separable taper along axis ``j``.

    The full transform is the product of these factors, each unit-norm in
    its own dimension.
    """
    ell = taper.window.lengths[j]
    k = np.asarray(k, dtype=float)
    if taper.family == "box":
        return (np.sqrt(ell) * np.sinc(k * ell)).astype(complex)
    if taper.family == "sine":
        return _sine_transform_1d(taper.orders[j], ell, k)
    raise DataError(f"no per-axis transform for taper family {taper.family!r}")


def tapered_fourier_spacing(
    taper_p: Taper, taper_q: Taper, epsilon: float
) -> float:
    """Smallest grid spacing at which the two tapered transforms decorrelate.

    Searches per axis on a grid of step ``1/(8 l_j)`` starting at zero for the
    first offset where ``|integral h_p(x) h_q(-x) exp(-2 pi i tau x) dx|``
    drops below ``epsilon``, and returns the maximum over axes.  Separable
    tapers factorize, so the per-axis reduction is exact for this family.
    """
    if not (0.0 < epsilon < 1.0):
        raise DataError("epsilon must lie strictly between 0 and 1")
    if taper_p.window != taper_q.window:
        raise DataError("tapers must share a window")
    for tap in (taper_p, taper_q):
        if tap.family not in ("box", "sine"):
            raise DataError("spacing search supports box and sine tapers")

    def max_order(tap: Taper) -> int:
        return max(tap.orders) if tap.family == "sine" else 1

    cap_order = max(max_order(taper_p), max_order(taper_q))
    result = 0.0
    n_quad = 4096
    for j in range(taper_p.window.dim):
        ell = taper_p.window.lengths[j]
        x = (np.arange(n_quad) + 0.5) / n_quad * ell - ell / 2.0
        dx = ell / n_quad
        prod = _axis_profile(taper_p, j, x) * _axis_profile(taper_q, j, -x)
        step = 1.0 / (8.0 * ell)
        n_steps = int(round(4.0 * cap_order / ell / step))
        taus = step * np.arange(n_steps + 1)
        phases = np.exp(-2j * np.pi * np.outer(taus, x))
        corr = np.abs(phases @ prod) * dx
        hits = np.nonzero(corr < epsilon)[0]
        if hits.size == 0:
            raise NumericalError(
                "decorrelation search exhausted: no offset below epsilon "
                f"within {taus[-1]:g} on axis {j}"
            )
        result = max(result, float(taus[hits[0]]))
    return result
