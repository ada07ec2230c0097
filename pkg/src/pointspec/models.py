"""Point process simulators with known first and second moments.

Three stationary model families: complete randomness (Poisson), Gaussian
clustering (Thomas), and hard-core regularity (Matern II by dependent
thinning). Each simulator is pure given (model, window, seed) and uses a
counter-based generator, so seeds map to independent streams and repeat
runs are bitwise identical.
"""

import math
from dataclasses import dataclass

import numpy as np

from .core import CuboidWindow, PointPattern
from .errors import DataError

__all__ = [
    "PoissonModel",
    "ThomasModel",
    "MaternModel",
    "simulate",
    "theoretical_pcf",
    "theoretical_sdf",
    "deviation_f_tilde",
    "model_from_spec",
    "ball_volume",
    "matern2_intensity",
    "matern2_proposal_intensity",
    "REFERENCE_INTENSITY",
]

# shared intensity of the built-in model registry
REFERENCE_INTENSITY = 0.01


def ball_volume(radius: float, dim: int) -> float:
    """Volume of the d-ball, pi^{d/2} r^d / Gamma(d/2 + 1)."""
    return math.pi ** (dim / 2.0) * radius**dim / math.gamma(dim / 2.0 + 1.0)


def matern2_intensity(
    proposal_intensity: float, radius: float, dim: int = 2
) -> float:
    """Retained intensity of Matern II thinning.

    A proposal with mark t survives iff no other proposal within the
    hard-core radius has a smaller mark; integrating the survival
    probability over t gives (1 - exp(-lambda_p v_R)) / v_R.
    """
    v = ball_volume(radius, dim)
    return -math.expm1(-proposal_intensity * v) / v


def matern2_proposal_intensity(
    target_intensity: float, radius: float, dim: int = 2
) -> float:
    """Invert the thinning relation for the proposal intensity.

    Solvable only while target < 1/v_R (the packing bound of the
    construction).
    """
    v = ball_volume(radius, dim)
    if target_intensity <= 0:
        raise DataError("target intensity must be positive")
    if target_intensity * v >= 1.0:
        raise DataError(
            f"target intensity {target_intensity} exceeds the thinning "
            f"bound 1/v_R = {1.0 / v:.6g} for radius {radius}"
        )
    return -math.log1p(-target_intensity * v) / v


def _rng_from_seed(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        seq = seed
    else:
        seq = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seq))


def _uniform_in(window: CuboidWindow, n: int, rng) -> np.ndarray:
    lower = np.array([c - 0.5 * s for c, s in zip(window.centre, window.lengths)])
    return lower + rng.random((n, window.dim)) * np.array(window.lengths)


@dataclass(frozen=True)
class PoissonModel:
    """Homogeneous Poisson process."""

    intensity: float = REFERENCE_INTENSITY

    def __post_init__(self):
        if self.intensity <= 0:
            raise DataError("intensity must be positive")

    @property
    def spec_string(self) -> str:
        return f"poisson:{self.intensity:g}"

    def _simulate(self, window: CuboidWindow, rng) -> PointPattern:
        n = rng.poisson(self.intensity * window.volume)
        return PointPattern(_uniform_in(window, n, rng), window)


@dataclass(frozen=True)
class ThomasModel:
    """Poisson cluster process with isotropic Gaussian dispersal.

    Parents are Poisson(parent_intensity); each parent gets a
    Poisson(cluster_mean) brood displaced by N(0, dispersal_sd^2 I).
    Product intensity is parent_intensity * cluster_mean.
    """

    parent_intensity: float
    dispersal_sd: float
    cluster_mean: float

    def __post_init__(self):
        if min(self.parent_intensity, self.dispersal_sd, self.cluster_mean) <= 0:
            raise DataError("thomas parameters must be positive")

    @property
    def intensity(self) -> float:
        return self.parent_intensity * self.cluster_mean

    @property
    def spec_string(self) -> str:
        return (
            f"thomas:{self.parent_intensity:g},"
            f"{self.dispersal_sd:g},{self.cluster_mean:g}"
        )

    def pcf_excess(self, r) -> np.ndarray:
        # planar form: Gaussian bump of the within-cluster pair density
        r = np.asarray(r, dtype=float)
        sig = self.dispersal_sd
        return np.exp(-(r**2) / (4.0 * sig**2)) / (
            4.0 * np.pi * self.parent_intensity * sig**2
        )

    def _simulate(self, window: CuboidWindow, rng) -> PointPattern:
        # parents out to 6 sd: a truncated brood carries < 1e-6 of its mass
        region = window.dilate(6.0 * self.dispersal_sd)
        n_parents = rng.poisson(self.parent_intensity * region.volume)
        parents = _uniform_in(region, n_parents, rng)
        brood = rng.poisson(self.cluster_mean, size=n_parents)
        centers = np.repeat(parents, brood, axis=0)
        pts = centers + rng.normal(
            0.0, self.dispersal_sd, size=centers.shape
        )
        pts = pts[window.contains(pts)]
        return PointPattern(pts, window)


@dataclass(frozen=True)
class MaternModel:
    """Matern II hard-core process by dependent thinning.

    Proposals are Poisson(proposal_intensity) with i.i.d. uniform birth
    marks; a proposal survives iff no other proposal within ``radius`` has
    a smaller mark. Dead proposals still suppress, which is what makes the
    retained intensity come out below the packing bound.

    No closed-form pair correlation is built in; supply one from the
    literature via ``pcf_excess_fn`` if spectra are needed.
    """

    proposal_intensity: float
    radius: float
    pcf_excess_fn: object = None

    def __post_init__(self):
        if self.proposal_intensity <= 0 or self.radius <= 0:
            raise DataError("matern parameters must be positive")

    @property
    def spec_string(self) -> str:
        return f"matern2:{self.proposal_intensity:g},{self.radius:g}"

    def intensity_for(self, dim: int) -> float:
        return matern2_intensity(self.proposal_intensity, self.radius, dim)

    @property
    def intensity(self) -> float:
        return self.intensity_for(2)

    def _simulate(self, window: CuboidWindow, rng) -> PointPattern:
        from scipy.spatial import cKDTree

        region = window.dilate(self.radius)
        n_prop = rng.poisson(self.proposal_intensity * region.volume)
        props = _uniform_in(region, n_prop, rng)
        marks = rng.random(n_prop)
        alive = np.ones(n_prop, dtype=bool)
        if n_prop > 1:
            pairs = cKDTree(props).query_pairs(
                self.radius, output_type="ndarray"
            )
            if len(pairs):
                i, j = pairs[:, 0], pairs[:, 1]
                loser = np.where(marks[i] < marks[j], j, i)
                alive[loser] = False
        pts = props[alive]
        pts = pts[window.contains(pts)]
        return PointPattern(pts, window)


def simulate(model, window: CuboidWindow, seed) -> PointPattern:
    """Draw one pattern; deterministic in (model, window, seed)."""
    rng = _rng_from_seed(seed)
    return model._simulate(window, rng)


def theoretical_pcf(model, r) -> np.ndarray:
    """Pair correlation function at radius r (closed forms only)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DataError("radius must be non-negative")
    if isinstance(model, PoissonModel):
        return np.ones_like(r)
    if isinstance(model, ThomasModel):
        return 1.0 + model.pcf_excess(r)
    if isinstance(model, MaternModel):
        if model.pcf_excess_fn is None:
            raise DataError(
                "no built-in pair correlation for matern2; "
                "construct the model with pcf_excess_fn"
            )
        return 1.0 + np.asarray(model.pcf_excess_fn(r), dtype=float)
    raise DataError(f"unknown model {model!r}")


def _radial_wavenumbers(k) -> np.ndarray:
    arr = np.asarray(k, dtype=float)
    if arr.ndim == 2:
        return np.linalg.norm(arr, axis=1)
    return arr


def theoretical_sdf(model, k) -> np.ndarray:
    """Spectral density at wavenumber(s) ``k``.

    ``k`` may be an (m, d) array of wavenumber vectors or magnitudes
    (scalar or 1-D); all built-in spectra are isotropic.
    """
    t = _radial_wavenumbers(k)
    if isinstance(model, PoissonModel):
        return model.intensity * np.ones_like(t)
    if isinstance(model, ThomasModel):
        lam = model.intensity
        sig = model.dispersal_sd
        return lam * (
            1.0
            + model.cluster_mean
            * np.exp(-4.0 * np.pi**2 * sig**2 * t**2)
        )
    if isinstance(model, MaternModel):
        if model.pcf_excess_fn is None:
            raise DataError(
                "no built-in spectrum for matern2; "
                "construct the model with pcf_excess_fn"
            )
        from .isotropic import sdf_from_pcf

        return np.asarray(
            sdf_from_pcf(
                lambda r: 1.0 + np.asarray(model.pcf_excess_fn(r), dtype=float),
                model.intensity,
                np.atleast_1d(t),
            )
        ).reshape(np.shape(t))
    raise DataError(f"unknown model {model!r}")


def deviation_f_tilde(model, k) -> np.ndarray:
    """Deviation form (f(k) - lambda) / lambda^2 of the spectrum."""
    lam = model.intensity
    return (theoretical_sdf(model, k) - lam) / lam**2


_THOMAS_VARIANTS = {
    # many small / tight clusters vs few large ones; kappa mu = 0.01 exactly
    "ms": (0.6 * REFERENCE_INTENSITY, 2.0, REFERENCE_INTENSITY / 0.006),
    "fl": (0.3 * REFERENCE_INTENSITY, 6.0, REFERENCE_INTENSITY / 0.003),
}

_MATERN_VARIANTS = {"r2": 2.0, "r5": 5.0}


def _parse_floats(arg: str, count: int, usage: str) -> list[float]:
    parts = arg.split(",")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise DataError(usage) from None
    if len(values) != count:
        raise DataError(usage)
    return values


def model_from_spec(spec: str):
    """Parse ``poisson[:lam]``, ``thomas:ms|fl|k,s,m``, ``matern2:r2|r5|lp,r``."""
    text = spec.strip().lower()
    head, _, arg = text.partition(":")
    if head == "poisson":
        if not arg:
            return PoissonModel()
        return PoissonModel(
            _parse_floats(arg, 1, "poisson spec takes a single intensity")[0]
        )
    if head == "thomas":
        if arg in _THOMAS_VARIANTS:
            return ThomasModel(*_THOMAS_VARIANTS[arg])
        return ThomasModel(
            *_parse_floats(
                arg, 3, "thomas spec needs a variant name (ms, fl) or kappa,sigma,mu"
            )
        )
    if head == "matern2":
        if arg in _MATERN_VARIANTS:
            radius = _MATERN_VARIANTS[arg]
            return MaternModel(
                matern2_proposal_intensity(REFERENCE_INTENSITY, radius),
                radius,
            )
        return MaternModel(
            *_parse_floats(
                arg, 2, "matern2 spec needs a variant name (r2, r5) or lambda_p,radius"
            )
        )
    raise DataError(f"unknown model spec {spec!r}")
