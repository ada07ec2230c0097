"""Simulation-study harness.

Runs (model, sample size, estimator) cells, accumulates per-node
moments over replications, and integrates variance / squared-bias /
MSE scores over a central sub-grid. The layout mirrors the reference
protocol: intensity 0.01, square windows scaled so the expected count
is the nominal sample size, estimates on a regular wavenumber lattice
with the origin removed, scores on the central part of that lattice.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .core import CuboidWindow, WavenumberGrid, regular_grid
from .errors import DataError
from .models import model_from_spec, simulate, theoretical_sdf
from .smoothing import multitaper
from .spectral import debiased_periodogram, periodogram
from .tapers import BoxTaper

__all__ = [
    "BandwidthRow",
    "CellScore",
    "DebiasFraction",
    "QualityReport",
    "StudyConfig",
    "bandwidth_sweep",
    "cell_seed",
    "debias_fraction",
    "read_study_config",
    "run_cell",
    "run_study",
    "window_for_size",
]


@dataclass(frozen=True)
class _EstimatorSpec:
    name: str
    family: str
    count: int
    debias: bool


def _parse_estimator(spec: str) -> _EstimatorSpec:
    """Normalize an estimator spec string.

    ``periodogram`` is the raw box-taper periodogram, ``bartlett`` its
    debiased form, and ``mt:P`` the debiased multitaper with P sine
    tapers per axis.
    """
    text = str(spec).strip().lower()
    if text == "periodogram":
        return _EstimatorSpec("periodogram", "box", 1, False)
    if text == "bartlett":
        return _EstimatorSpec("bartlett", "box", 1, True)
    head, _, arg = text.partition(":")
    if head == "mt" and arg:
        try:
            count = int(arg)
        except ValueError:
            count = 0
        if count < 1:
            raise DataError(f"multitaper estimator needs a positive taper count: {spec!r}")
        return _EstimatorSpec(f"mt:{count}", "sine", count, True)
    raise DataError(
        f"unknown estimator spec {spec!r}; use periodogram, bartlett, or mt:P"
    )


def window_for_size(sample_size: int, intensity: float = 0.01) -> CuboidWindow:
    """Square window scaled so the expected point count equals sample_size."""
    if sample_size < 1:
        raise DataError("sample size must be positive")
    if intensity <= 0:
        raise DataError("intensity must be positive")
    side = float(np.sqrt(sample_size / intensity))
    return CuboidWindow.centered((side, side))


def cell_seed(
    seed_base: int, model: str, sample_size: int, estimator: str, rep: int
) -> int:
    """Injective integer seed for one replication of one study cell.

    The key string is embedded byte for byte into the integer, so
    distinct cells can never collide on a stream, and rerunning a cell
    in isolation reproduces the study's draws exactly.
    """
    if seed_base < 0:
        raise DataError("seed base must be nonnegative")
    key = f"{int(seed_base)}|{model}|{int(sample_size)}|{estimator}|{int(rep)}"
    return int.from_bytes(key.encode(), "big")


@dataclass(frozen=True)
class StudyConfig:
    """Which cells to run and how scores are integrated.

    Estimates live on the regular lattice with the given step and
    extent (origin removed); scores integrate only nodes whose
    components all sit within metric_extent. Windows follow the
    expected-count rule of window_for_size, planar only.
    """

    models: tuple[str, ...]
    sample_sizes: tuple[int, ...]
    replications: int
    estimators: tuple[str, ...]
    step: float = 0.006
    extent: float = 0.3
    metric_extent: float = 0.2
    intensity: float = 0.01
    seed_base: int = 0
    allow_simulation_reference: bool = False
    reference_replications: int = 200

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(str(m) for m in self.models))
        object.__setattr__(
            self, "sample_sizes", tuple(int(n) for n in self.sample_sizes)
        )
        object.__setattr__(self, "estimators", tuple(str(e) for e in self.estimators))
        if not self.models:
            raise DataError("study needs at least one model")
        for spec in self.models:
            model_from_spec(spec)
        if not self.sample_sizes:
            raise DataError("study needs at least one sample size")
        if any(n < 1 for n in self.sample_sizes):
            raise DataError("sample sizes must be positive")
        if self.replications < 2:
            raise DataError("study needs at least two replications")
        if not self.estimators:
            raise DataError("study needs at least one estimator")
        for spec in self.estimators:
            _parse_estimator(spec)
        if self.step <= 0 or self.extent <= 0:
            raise DataError("step and extent must be positive")
        if not 0.0 < self.metric_extent <= self.extent:
            raise DataError("metric extent must lie in (0, extent]")
        if self.intensity <= 0:
            raise DataError("intensity must be positive")
        if self.seed_base < 0:
            raise DataError("seed base must be nonnegative")
        if self.reference_replications < 2:
            raise DataError("reference replications must be at least two")

    def grid(self) -> WavenumberGrid:
        return regular_grid(self.step, self.extent, dim=2, exclude_zero=True)


@dataclass(frozen=True)
class CellScore:
    """Integrated scores for one (model, sample size, estimator) cell.

    The per-node mean/variance/reference arrays are kept so reports can
    be rendered or re-integrated without rerunning the simulations.
    simulation_referenced marks cells whose truth came from a
    simulation mean rather than a spectral formula.
    """

    model: str
    sample_size: int
    estimator: str
    replications: int
    ivar: float
    ibias2: float
    imse: float
    simulation_referenced: bool
    node_mean: np.ndarray
    node_variance: np.ndarray
    node_reference: np.ndarray


@dataclass(frozen=True)
class QualityReport:
    """All cell scores of a study run, in config order."""

    config: StudyConfig
    cells: tuple[CellScore, ...]

    def cell(self, model: str, sample_size: int, estimator: str) -> CellScore:
        name = _parse_estimator(estimator).name
        for score in self.cells:
            if (
                score.model == model
                and score.sample_size == int(sample_size)
                and score.estimator == name
            ):
                return score
        raise DataError(f"no cell ({model!r}, {sample_size}, {estimator!r}) in report")


def _evaluate(est, pattern, grid, debias=None) -> np.ndarray:
    flag = est.debias if debias is None else debias
    if est.family == "box":
        taper = BoxTaper(CuboidWindow.centered(pattern.window.lengths))
        make = debiased_periodogram if flag else periodogram
        return make(pattern, taper, grid).values
    return multitaper(pattern, est.count, grid, debias=flag).values


def _reference_values(config, model_spec, model, grid):
    """Per-node truth for a model, plus whether it came from simulation.

    Models without a spectral formula fall back, when allowed, to the
    mean of debiased multitaper estimates at the largest protocol size.
    """
    try:
        return np.asarray(theoretical_sdf(model, grid.nodes), dtype=float), False
    except DataError:
        if not config.allow_simulation_reference:
            raise DataError(
                f"no spectral reference for {model_spec!r}; set "
                "allow_simulation_reference to score against a simulation mean"
            ) from None
    window = window_for_size(800, config.intensity)
    mean = np.zeros(grid.m)
    for rep in range(config.reference_replications):
        seed = cell_seed(config.seed_base, model_spec, 800, "reference:mt:3", rep)
        mean += multitaper(simulate(model, window, seed), 3, grid).values
    return mean / config.reference_replications, True


def _run_cell(config, model_spec, model, sample_size, est, grid, reference, sim_ref):
    window = window_for_size(sample_size, config.intensity)
    mean = np.zeros(grid.m)
    m2 = np.zeros(grid.m)
    for rep in range(config.replications):
        seed = cell_seed(config.seed_base, model_spec, sample_size, est.name, rep)
        values = _evaluate(est, simulate(model, window, seed), grid)
        delta = values - mean
        mean += delta / (rep + 1)
        m2 += delta * (values - mean)
    variance = m2 / (config.replications - 1)
    bias = mean - reference
    mask = grid.within(config.metric_extent)
    weight = config.step**2
    ivar = float(np.sum(variance[mask]) * weight)
    ibias2 = float(np.sum(bias[mask] ** 2) * weight)
    imse = float(np.sum(variance[mask] + bias[mask] ** 2) * weight)
    return CellScore(
        model=model_spec,
        sample_size=sample_size,
        estimator=est.name,
        replications=config.replications,
        ivar=ivar,
        ibias2=ibias2,
        imse=imse,
        simulation_referenced=sim_ref,
        node_mean=mean,
        node_variance=variance,
        node_reference=np.array(reference),
    )


def run_cell(
    config: StudyConfig, model: str, sample_size: int, estimator: str
) -> CellScore:
    """Run a single cell in isolation; reproduces the study's row bitwise."""
    model_obj = model_from_spec(model)
    est = _parse_estimator(estimator)
    grid = config.grid()
    reference, sim_ref = _reference_values(config, model, model_obj, grid)
    return _run_cell(
        config, model, model_obj, int(sample_size), est, grid, reference, sim_ref
    )


def run_study(config: StudyConfig) -> QualityReport:
    """Run every cell of the study.

    Cells are independent given their seeds; execution is sequential,
    so each accumulator has a single owner and reruns are bitwise
    stable regardless of cell order.
    """
    grid = config.grid()
    prepared = {}
    for model_spec in config.models:
        model = model_from_spec(model_spec)
        reference, sim_ref = _reference_values(config, model_spec, model, grid)
        prepared[model_spec] = (model, reference, sim_ref)
    cells = []
    for model_spec in config.models:
        model, reference, sim_ref = prepared[model_spec]
        for sample_size in config.sample_sizes:
            for estimator in config.estimators:
                est = _parse_estimator(estimator)
                cells.append(
                    _run_cell(
                        config, model_spec, model, sample_size, est, grid,
                        reference, sim_ref,
                    )
                )
    return QualityReport(config, tuple(cells))


@dataclass(frozen=True)
class DebiasFraction:
    """Share of integrated squared bias removed by debiasing."""

    model: str
    sample_size: int
    estimator: str
    replications: int
    value: float
    raw_ibias2: float
    debiased_ibias2: float
    flagged: bool


def debias_fraction(
    model: str,
    sample_size: int,
    estimator: str,
    replications: int,
    *,
    debiased_estimator: str | None = None,
    step: float = 0.006,
    extent: float = 0.3,
    metric_extent: float = 0.2,
    intensity: float = 0.01,
    seed_base: int = 0,
) -> DebiasFraction:
    """1 - iBias2(debiased) / iBias2(raw) over shared replications.

    Both arms see the same simulated patterns, so the comparison is
    paired. By default the arms are the raw and debiased variants of
    ``estimator``; passing ``debiased_estimator`` compares two explicit
    estimators instead, each run as specified. Identical arms give 0 by
    construction. A raw squared bias at the rounding floor leaves the
    ratio meaningless: the result is then NaN and flagged.
    """
    if replications < 2:
        raise DataError("debias fraction needs at least two replications")
    model_obj = model_from_spec(model)
    est = _parse_estimator(estimator)
    other = est if debiased_estimator is None else _parse_estimator(debiased_estimator)
    grid = regular_grid(step, extent, dim=2, exclude_zero=True)
    reference = np.asarray(theoretical_sdf(model_obj, grid.nodes), dtype=float)
    window = window_for_size(int(sample_size), intensity)
    raw_mean = np.zeros(grid.m)
    deb_mean = np.zeros(grid.m)
    for rep in range(replications):
        seed = cell_seed(seed_base, model, sample_size, est.name, rep)
        pattern = simulate(model_obj, window, seed)
        if debiased_estimator is None:
            raw_mean += _evaluate(est, pattern, grid, debias=False)
            deb_mean += _evaluate(est, pattern, grid, debias=True)
        else:
            raw_mean += _evaluate(est, pattern, grid)
            deb_mean += _evaluate(other, pattern, grid)
    raw_mean /= replications
    deb_mean /= replications
    mask = grid.within(metric_extent)
    weight = step * step
    raw_ib2 = float(np.sum((raw_mean - reference)[mask] ** 2) * weight)
    deb_ib2 = float(np.sum((deb_mean - reference)[mask] ** 2) * weight)
    # rounding-level squared bias: eps relative to the reference scale
    scale = np.finfo(float).eps * max(1.0, float(np.max(np.abs(reference))))
    floor = scale**2 * float(np.count_nonzero(mask)) * weight
    if np.array_equal(raw_mean, deb_mean):
        value, flagged = 0.0, False
    elif raw_ib2 <= floor:
        value, flagged = float("nan"), True
    else:
        value, flagged = 1.0 - deb_ib2 / raw_ib2, False
    return DebiasFraction(
        model=model,
        sample_size=int(sample_size),
        estimator=est.name if debiased_estimator is None else other.name,
        replications=replications,
        value=value,
        raw_ibias2=raw_ib2,
        debiased_ibias2=deb_ib2,
        flagged=flagged,
    )


@dataclass(frozen=True)
class BandwidthRow:
    """Integrated radial scores for one bandwidth factor."""

    factor: float
    ivar: float
    ibias2: float
    imse: float


def _radial_bins(grid: WavenumberGrid, t_nodes: np.ndarray, radius: float):
    """Per-bin node index lists, matching the rotational-average rule."""
    norms = np.linalg.norm(grid.nodes, axis=1)
    return [np.flatnonzero(np.abs(norms - t) <= radius) for t in t_nodes]


def _radial_curve(values: np.ndarray, bins) -> np.ndarray:
    out = np.empty(len(bins))
    for i, idx in enumerate(bins):
        out[i] = np.mean(values[idx]) if idx.size else np.nan
    return out


def bandwidth_sweep(
    model: str,
    sample_size: int,
    factors,
    replications: int,
    *,
    estimator: str = "bartlett",
    step: float = 0.006,
    extent: float = 0.3,
    t_step: float = 0.003,
    t_max: float = 0.3,
    metric_t_max: float = 0.2,
    intensity: float = 0.01,
    seed_base: int = 0,
) -> tuple[BandwidthRow, ...]:
    """Score rotationally averaged estimates across box-kernel radii.

    Each factor BF shares the per-replication grid estimates and
    averages them over magnitude bins of radius BF * step, exactly the
    rotational-average rule. Scores integrate squared deviation from
    the radial sdf over t <= metric_t_max, restricted to bins that
    catch at least one grid node.
    """
    factors = tuple(float(b) for b in factors)
    if not factors:
        raise DataError("bandwidth sweep needs at least one factor")
    if any(not np.isfinite(b) or b <= 0 for b in factors):
        raise DataError("bandwidth factors must be positive")
    if replications < 2:
        raise DataError("bandwidth sweep needs at least two replications")
    model_obj = model_from_spec(model)
    est = _parse_estimator(estimator)
    grid = regular_grid(step, extent, dim=2, exclude_zero=True)
    t_nodes = t_step * np.arange(1, int(round(t_max / t_step)) + 1)
    reference = np.asarray(theoretical_sdf(model_obj, t_nodes), dtype=float)
    window = window_for_size(int(sample_size), intensity)
    bins = [_radial_bins(grid, t_nodes, bf * step) for bf in factors]
    means = [np.zeros(t_nodes.size) for _ in factors]
    m2s = [np.zeros(t_nodes.size) for _ in factors]
    for rep in range(replications):
        seed = cell_seed(seed_base, model, sample_size, f"sweep:{est.name}", rep)
        values = _evaluate(est, simulate(model_obj, window, seed), grid)
        for i in range(len(factors)):
            curve = _radial_curve(values, bins[i])
            delta = curve - means[i]
            means[i] += delta / (rep + 1)
            m2s[i] += delta * (curve - means[i])
    rows = []
    for i, bf in enumerate(factors):
        counts = np.array([idx.size for idx in bins[i]])
        keep = (counts > 0) & (t_nodes <= metric_t_max + 1e-12)
        variance = m2s[i] / (replications - 1)
        bias = means[i] - reference
        rows.append(
            BandwidthRow(
                factor=bf,
                ivar=float(np.sum(variance[keep]) * t_step),
                ibias2=float(np.sum(bias[keep] ** 2) * t_step),
                imse=float(np.sum(variance[keep] + bias[keep] ** 2) * t_step),
            )
        )
    return tuple(rows)


_STUDY_KEYS = frozenset(
    {
        "models",
        "sample_sizes",
        "replications",
        "estimators",
        "step",
        "extent",
        "metric_extent",
        "intensity",
        "seed_base",
        "allow_simulation_reference",
        "reference_replications",
    }
)


def read_study_config(path) -> StudyConfig:
    """Parse a study description file.

    One [study] section with keys mirroring StudyConfig; list values
    are comma separated. Unknown keys are an error so a typo cannot
    silently fall back to a default.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise DataError(f"study config parse error: {exc}") from None
    if not parser.has_section("study"):
        raise DataError("study config needs a [study] section")
    section = parser["study"]
    unknown = sorted(set(section) - _STUDY_KEYS)
    if unknown:
        raise DataError(f"unknown study config keys: {', '.join(unknown)}")

    def items(key):
        parts = [p.strip() for p in section.get(key, "").split(",") if p.strip()]
        if not parts:
            raise DataError(f"study config needs a nonempty {key}")
        return tuple(parts)

    try:
        kwargs = {
            "models": items("models"),
            "sample_sizes": tuple(int(v) for v in items("sample_sizes")),
            "estimators": items("estimators"),
        }
        replications = section.getint("replications", fallback=None)
        if replications is None:
            raise DataError("study config needs replications")
        kwargs["replications"] = replications
        for key in ("step", "extent", "metric_extent", "intensity"):
            value = section.getfloat(key, fallback=None)
            if value is not None:
                kwargs[key] = value
        for key in ("seed_base", "reference_replications"):
            value = section.getint(key, fallback=None)
            if value is not None:
                kwargs[key] = value
        flag = section.getboolean("allow_simulation_reference", fallback=None)
        if flag is not None:
            kwargs["allow_simulation_reference"] = flag
    except ValueError as exc:
        raise DataError(f"bad study config value: {exc}") from None
    return StudyConfig(**kwargs)
