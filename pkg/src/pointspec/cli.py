"""Command-line pipelines: simulate, estimate, isotropic, bench.

File conventions are deliberately plain: CSVs with '.' decimals, '\n'
line endings, UTF-8, floats printed with 17 significant digits so a
write/read round trip is bitwise exact. A pattern file carries its
window in a sidecar (``<path>.window``) unless one is given on the
command line; estimates carry their metadata in a ``<path>.meta.json``
sidecar. Exit codes: 0 success, 2 input/parse/config problems, 3
numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import re
import sys

import numpy as np

from .bench import read_study_config, run_study, window_for_size
from .core import (
    CuboidWindow,
    PointPattern,
    fourier_grid,
    intensity_estimate,
    regular_grid,
)
from .errors import DataError, NumericalError
from .isotropic import debiased_isotropic, diggle_estimator
from .models import model_from_spec, simulate
from .smoothing import (
    bandwidth_radius,
    bandwidth_select,
    curvature_estimate,
    gaussian_template,
    kernel_smooth,
    multitaper,
    rotational_average,
)
from .spectral import debiased_periodogram, periodogram, subtracted_periodogram
from .tapers import taper_from_spec

__all__ = [
    "load_pattern_csv",
    "main",
    "parse_grid_spec",
    "parse_window_spec",
    "save_grid_csv",
    "save_pattern_csv",
    "save_radial_csv",
]


def _fmt(x: float) -> str:
    # 17 significant digits round-trip any double
    return f"{float(x):.17g}"


def _write_text(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def window_sidecar_path(pattern_path) -> str:
    return f"{pattern_path}.window"


def meta_sidecar_path(out_path) -> str:
    return f"{out_path}.meta.json"


def save_pattern_csv(path, pattern: PointPattern) -> None:
    """Write a point pattern and its window sidecar."""
    d = pattern.dim
    header = ",".join(f"x{j + 1}" for j in range(d))
    rows = [",".join(_fmt(c) for c in row) for row in pattern.points]
    _write_text(path, [header, *rows])
    _write_text(
        window_sidecar_path(path),
        [
            "lower," + ",".join(_fmt(c) for c in pattern.window.lower),
            "upper," + ",".join(_fmt(c) for c in pattern.window.upper),
        ],
    )


def _read_window_sidecar(path) -> CuboidWindow:
    bounds = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            label, _, rest = line.partition(",")
            label = label.strip().lower()
            if label not in ("lower", "upper"):
                raise DataError(f"window sidecar has an unexpected row {label!r}")
            try:
                bounds[label] = [float(v) for v in rest.split(",")]
            except ValueError:
                raise DataError(f"window sidecar has a non-numeric {label} row") from None
    if set(bounds) != {"lower", "upper"}:
        raise DataError("window sidecar needs one lower row and one upper row")
    return CuboidWindow(bounds["lower"], bounds["upper"])


def load_pattern_csv(path, window: CuboidWindow | None = None) -> PointPattern:
    """Read a pattern CSV; the window comes from the caller or the sidecar."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise DataError(f"{path} is empty; no points and no header")
    header = [h.strip() for h in lines[0].split(",")]
    d = len(header)
    if header != [f"x{j + 1}" for j in range(d)]:
        raise DataError(f"pattern header must be x1,...,xd; got {lines[0]!r}")
    points = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != d:
            raise DataError(f"pattern row {line!r} does not have {d} coordinates")
        try:
            points.append([float(p) for p in parts])
        except ValueError:
            raise DataError(f"pattern row {line!r} is not numeric") from None
    if window is None:
        sidecar = window_sidecar_path(path)
        if not os.path.exists(sidecar):
            raise DataError(
                f"no window given and no sidecar at {sidecar}; pass --window"
            )
        window = _read_window_sidecar(sidecar)
    coords = np.array(points, dtype=float).reshape(len(points), d)
    return PointPattern(coords, window)


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def _write_meta(out_path, meta, extra_fields=None) -> None:
    payload = {
        "kind": meta.kind,
        "taper": meta.taper,
        "debiased": meta.debiased,
        "sign_safe": meta.sign_safe,
        "translation": _jsonable(meta.translation),
        "extra": _jsonable(meta.extra),
    }
    if extra_fields:
        payload.update(_jsonable(extra_fields))
    with open(meta_sidecar_path(out_path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_grid_csv(path, estimate, extra_fields=None) -> None:
    """Write one node per row as k1,...,kd,value plus the metadata sidecar."""
    d = estimate.grid.dim
    header = ",".join(f"k{j + 1}" for j in range(d)) + ",value"
    rows = [
        ",".join(_fmt(c) for c in node) + "," + _fmt(v)
        for node, v in zip(estimate.grid.nodes, estimate.values)
    ]
    _write_text(path, [header, *rows])
    _write_meta(path, estimate.meta, extra_fields)


def save_radial_csv(path, radial, extra_fields=None) -> None:
    """Write t,value rows (plus a count column when the estimate has one)."""
    if radial.counts is not None:
        header = "t,value,count"
        rows = [
            f"{_fmt(t)},{_fmt(v)},{int(c)}"
            for t, v, c in zip(radial.t, radial.values, radial.counts)
        ]
    else:
        header = "t,value"
        rows = [f"{_fmt(t)},{_fmt(v)}" for t, v in zip(radial.t, radial.values)]
    _write_text(path, [header, *rows])
    _write_meta(path, radial.meta, extra_fields)


def parse_window_spec(text: str) -> CuboidWindow:
    """Parse ``a1,b1,a2,b2[,a3,b3]`` into a window."""
    try:
        vals = [float(v) for v in str(text).split(",")]
    except ValueError:
        raise DataError(f"window spec {text!r} is not numeric") from None
    if len(vals) < 4 or len(vals) % 2:
        raise DataError("window spec needs per-axis bound pairs a1,b1,a2,b2[,a3,b3]")
    return CuboidWindow(vals[0::2], vals[1::2])


def parse_grid_spec(text: str, window: CuboidWindow):
    """Parse ``regular:step,extent`` or ``fourier:max_order``.

    Either way the origin is dropped: it carries only the squared total
    taper mass, not spectral information.
    """
    head, _, arg = str(text).strip().partition(":")
    if head == "regular":
        parts = arg.split(",")
        if len(parts) != 2:
            raise DataError("regular grid spec is regular:step,extent")
        try:
            step, extent = float(parts[0]), float(parts[1])
        except ValueError:
            raise DataError(f"grid spec {text!r} is not numeric") from None
        return regular_grid(step, extent, dim=window.dim, exclude_zero=True)
    if head == "fourier":
        try:
            order = int(arg)
        except ValueError:
            raise DataError("fourier grid spec is fourier:max_order") from None
        return fourier_grid(window, order, exclude_zero=True)
    raise DataError(f"unknown grid spec {text!r}; use regular:... or fourier:...")


def _radial_t_nodes(grid) -> np.ndarray:
    """Half-step magnitude grid up to the lattice corner extent."""
    if grid.axes is None:
        raise DataError("radial averaging needs a lattice grid")
    steps = [np.min(np.diff(a)) for a in grid.axes if a.size > 1]
    extent = max(float(np.max(np.abs(a))) for a in grid.axes)
    if not steps:
        raise DataError("radial averaging needs more than one node per axis")
    t_step = min(steps) / 2.0
    count = int(round(extent / t_step))
    return t_step * np.arange(1, count + 1)


# viridis-like anchors; interpolated to a fixed 256-entry 8-bit table
_PALETTE_ANCHORS = np.array(
    [
        (68, 1, 84),
        (59, 82, 139),
        (33, 145, 140),
        (94, 201, 98),
        (253, 231, 37),
    ],
    dtype=float,
)


def _palette() -> np.ndarray:
    x = np.linspace(0.0, 1.0, 256)
    xa = np.linspace(0.0, 1.0, len(_PALETTE_ANCHORS))
    lut = np.stack(
        [np.interp(x, xa, _PALETTE_ANCHORS[:, c]) for c in range(3)], axis=1
    )
    return np.clip(np.round(lut), 0, 255).astype(np.uint8)


def write_png(path, grid, values) -> dict:
    """8-bit heatmap of lattice values with a fixed linear color map.

    Returns the value range that was mapped so callers can record it.
    Missing lattice nodes (the removed origin) render mid-gray.
    """
    try:
        from PIL import Image
    except ImportError:
        raise DataError("PNG output needs the Pillow package (extra 'png')") from None
    lattice = grid.to_lattice(np.asarray(values, dtype=float))
    finite = np.isfinite(lattice)
    if not np.any(finite):
        raise DataError("no finite values to render")
    vmin = float(np.min(lattice[finite]))
    vmax = float(np.max(lattice[finite]))
    span = vmax - vmin if vmax > vmin else 1.0
    scaled = np.zeros(lattice.shape, dtype=np.uint8)
    scaled[finite] = np.clip(
        np.round((lattice[finite] - vmin) / span * 255.0), 0, 255
    ).astype(np.uint8)
    rgb = _palette()[scaled]
    rgb[~finite] = (128, 128, 128)
    # axis 1 up the page so the k2 axis points the usual way
    Image.fromarray(np.transpose(rgb, (1, 0, 2))[::-1], "RGB").save(path)
    return {"png_min": vmin, "png_max": vmax}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointspec",
        description="Spectral estimation pipelines for spatial point patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a pattern from a model")
    sim.add_argument("--model", required=True, help="poisson, thomas:ms, matern2:r2, ...")
    sim.add_argument("--lambda", dest="lam", type=float, default=None,
                     help="intensity for the plain poisson model")
    sim.add_argument("--n", type=int, default=None,
                     help="expected count; sets a square window via n = lambda l^2")
    sim.add_argument("--window", default=None, help="a1,b1,a2,b2[,a3,b3]")
    sim.add_argument("--seed", required=True, type=int, help="RNG seed")
    sim.add_argument("--out", required=True, help="pattern CSV path")
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="spectral estimate on a wavenumber grid")
    est.add_argument("--in", dest="infile", required=True, help="pattern CSV path")
    est.add_argument("--window", default=None, help="a1,b1,a2,b2[,a3,b3]")
    est.add_argument("--estimator", required=True,
                     choices=("periodogram", "debiased", "subtracted", "mt"))
    est.add_argument("--taper", default="box", help="box, sine:p1,p2[,p3], hermite:a")
    est.add_argument("--grid", required=True, help="regular:step,extent or fourier:max_order")
    est.add_argument("--mt-P", dest="mt_p", type=int, default=3,
                     help="tapers per axis for --estimator mt")
    est.add_argument("--smooth-m", dest="smooth_m", type=int, default=None,
                     help="odd binomial template size for lattice smoothing")
    est.add_argument("--rot-avg", dest="rot_avg", type=float, default=None,
                     help="box kernel radius; also writes a radial CSV")
    est.add_argument("--auto-bandwidth", action="store_true",
                     help="pick the radial kernel radius from the data")
    est.add_argument("--png", action="store_true", help="also render a heatmap PNG")
    est.add_argument("--out", required=True, help="grid CSV path")
    est.set_defaults(func=cmd_estimate)

    iso = sub.add_parser("isotropic", help="radial estimate from point separations")
    iso.add_argument("--in", dest="infile", required=True, help="pattern CSV path")
    iso.add_argument("--window", default=None, help="a1,b1,a2,b2[,a3,b3]")
    iso.add_argument("--taper", default="hermite:25", help="hermite:a or none")
    iso.add_argument("--diggle", action="store_true",
                     help="minimum-clamped raw radial estimator instead")
    iso.add_argument("--t-step", dest="t_step", type=float, default=0.003)
    iso.add_argument("--t-max", dest="t_max", type=float, default=0.3)
    iso.add_argument("--out", required=True, help="radial CSV path")
    iso.set_defaults(func=cmd_isotropic)

    ben = sub.add_parser("bench", help="run a simulation study")
    ben.add_argument("--config", required=True, help="study config file")
    ben.add_argument("--reps", type=int, default=None,
                     help="override the configured replication count")
    ben.add_argument("--out-dir", dest="out_dir", default=".",
                     help="directory for summary and per-cell CSVs")
    ben.add_argument("--png", action="store_true",
                     help="also render per-cell mean heatmaps")
    ben.set_defaults(func=cmd_bench)
    return parser


def cmd_simulate(args) -> int:
    model = model_from_spec(args.model)
    if args.lam is not None:
        if args.model.strip().lower() != "poisson":
            raise DataError(
                "--lambda only applies to the plain poisson model; "
                "parameterize other models inside --model"
            )
        model = model_from_spec(f"poisson:{args.lam}")
    if args.window is not None and args.n is not None:
        raise DataError("give either --n or --window, not both")
    if args.window is not None:
        window = parse_window_spec(args.window)
    elif args.n is not None:
        window = window_for_size(args.n, model.intensity)
    else:
        raise DataError("simulate needs --n or --window")
    pattern = simulate(model, window, args.seed)
    save_pattern_csv(args.out, pattern)
    print(f"wrote {pattern.n} points to {args.out}")
    return 0


def _load_input(args) -> PointPattern:
    window = parse_window_spec(args.window) if args.window else None
    pattern = load_pattern_csv(args.infile, window)
    if pattern.n == 0:
        raise DataError(f"no points in {args.infile}")
    return pattern


def cmd_estimate(args) -> int:
    if args.rot_avg is not None and args.auto_bandwidth:
        raise DataError("give either --rot-avg or --auto-bandwidth, not both")
    pattern = _load_input(args)
    grid = parse_grid_spec(args.grid, pattern.window)
    if args.estimator == "mt":
        if args.taper != "box":
            raise DataError("the multitaper estimator builds its own sine tapers; drop --taper")
        estimate = multitaper(pattern, args.mt_p, grid)
    else:
        taper = taper_from_spec(args.taper, CuboidWindow.centered(pattern.window.lengths))
        make = {
            "periodogram": periodogram,
            "debiased": debiased_periodogram,
            "subtracted": subtracted_periodogram,
        }[args.estimator]
        estimate = make(pattern, taper, grid)
    if args.smooth_m is not None:
        estimate = kernel_smooth(estimate, gaussian_template(args.smooth_m))
    extra = {}
    if args.png:
        extra.update(write_png(f"{args.out}.png", estimate.grid, estimate.values))
    save_grid_csv(args.out, estimate, extra or None)
    written = [args.out]
    radius = args.rot_avg
    auto = None
    if args.auto_bandwidth:
        lam = intensity_estimate(pattern)
        sigma = bandwidth_select(lam, curvature_estimate(estimate, lam), pattern.dim)
        radius = bandwidth_radius(sigma, min(pattern.window.lengths))
        auto = {"auto_bandwidth_sigma": sigma}
    if radius is not None:
        radial = rotational_average(estimate, _radial_t_nodes(grid), radius)
        root, ext = os.path.splitext(args.out)
        radial_path = f"{root}.radial{ext or '.csv'}"
        save_radial_csv(radial_path, radial, auto)
        written.append(radial_path)
    print("wrote " + " and ".join(written))
    return 0


def cmd_isotropic(args) -> int:
    pattern = _load_input(args)
    if args.t_step <= 0 or args.t_max < args.t_step:
        raise DataError("need 0 < --t-step <= --t-max")
    t_nodes = args.t_step * np.arange(1, int(round(args.t_max / args.t_step)) + 1)
    if args.diggle:
        radial = diggle_estimator(pattern, t_nodes)
    else:
        spec = args.taper.strip().lower()
        if spec == "none":
            taper = None
        elif spec.startswith("hermite:"):
            taper = taper_from_spec(spec, CuboidWindow.centered(pattern.window.lengths))
        else:
            raise DataError("isotropic taper must be hermite:a or none")
        radial = debiased_isotropic(pattern, t_nodes, taper)
    save_radial_csv(args.out, radial)
    print(f"wrote {args.out}")
    return 0


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", str(text))


def cmd_bench(args) -> int:
    config = read_study_config(args.config)
    if args.reps is not None:
        config = dataclasses.replace(config, replications=args.reps)
    report = run_study(config)
    os.makedirs(args.out_dir, exist_ok=True)
    summary_path = os.path.join(args.out_dir, "summary.csv")
    header = "model,sample_size,estimator,replications,ivar,ibias2,imse,simulation_referenced"
    lines = [header]
    grid = config.grid()
    d = grid.dim
    for cell in report.cells:
        lines.append(
            ",".join(
                [
                    cell.model,
                    str(cell.sample_size),
                    cell.estimator,
                    str(cell.replications),
                    _fmt(cell.ivar),
                    _fmt(cell.ibias2),
                    _fmt(cell.imse),
                    str(int(cell.simulation_referenced)),
                ]
            )
        )
        name = _slug(f"cell_{cell.model}_{cell.sample_size}_{cell.estimator}")
        cell_path = os.path.join(args.out_dir, f"{name}.csv")
        cell_header = ",".join(f"k{j + 1}" for j in range(d)) + ",mean,variance,reference"
        rows = [
            ",".join(_fmt(c) for c in node)
            + f",{_fmt(m)},{_fmt(v)},{_fmt(r)}"
            for node, m, v, r in zip(
                grid.nodes, cell.node_mean, cell.node_variance, cell.node_reference
            )
        ]
        _write_text(cell_path, [cell_header, *rows])
        if args.png:
            png_path = os.path.join(args.out_dir, f"{name}.png")
            info = write_png(png_path, grid, cell.node_mean)
            with open(f"{png_path}.meta.json", "w", encoding="utf-8", newline="\n") as fh:
                json.dump(info, fh, indent=2, sort_keys=True)
                fh.write("\n")
    _write_text(summary_path, lines)
    print(f"wrote {summary_path} and {len(report.cells)} cell files")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"pointspec {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"pointspec {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pointspec {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
