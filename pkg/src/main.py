#!/usr/bin/env python3
"""
Digital ECT engine
Command-line entry point
"""

import functools
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import click
import numpy as np
import pandas as pd
from rich.console import Console
from rich.table import Table

from src.alignment.rotations import EulerAngles, euler_to_matrix, so3_distance
from src.alignment.objective import alignment_objective
from src.alignment.search import adaptive_grid_search, gradient_ascent, grid_then_gradient
from src.mesh.directions import octahedron_directions
from src.mesh.mesh import euler_characteristic, normalize
from src.mesh.off_loader import load_off
from src.mesh.synthetic import synthetic_collection
from src.metrics.discrete import discrete_distance, discrete_ect, discretization_sweep
from src.metrics.export import check_same_labels, from_csv, to_csv
from src.metrics.inner_product import distance_matrix
from src.metrics.mantel import mantel_test
from src.transform.planar import build_proto_transform_2d, inner_product_2d
from src.transform.proto_transform import build_proto_transform
from src.transform.serialization import read_ectp, write_ectp
from src.utils.config import Config, set_config
from src.utils.errors import EXIT_USAGE, EctError
from src.utils.logger import get_logger, setup_logging

console = Console()
logger = get_logger("digital_ect")


def handle_errors(func):
    """Map library errors to the documented exit codes."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except EctError as e:
            logger.error("Command failed", error=str(e), error_type=type(e).__name__)
            console.print(f"[red]error:[/red] {e}")
            sys.exit(e.exit_code)
        except (ValueError, IndexError) as e:
            logger.error("Invalid arguments", error=str(e))
            console.print(f"[red]error:[/red] {e}")
            sys.exit(EXIT_USAGE)

    return wrapper


def _config(ctx: click.Context) -> Config:
    return ctx.obj["config"]


def _jobs(ctx: click.Context, jobs: Optional[int]) -> int:
    return jobs if jobs is not None else _config(ctx).performance.max_workers


def _output(ctx: click.Context, out: Optional[str], name: str, required: bool = False):
    """Explicit --out, else ``name`` inside the configured run output directory."""
    if out is None and _config(ctx).run.output:
        out = str(Path(_config(ctx).run.output) / name)
    if out is None and required:
        raise ValueError("no --out given and no run.output directory configured")
    return out


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="YAML configuration file.")
@click.option("--log-level", default=None, help="Override the configured log level.")
@click.option("--seed", type=int, default=None, help="Random seed.")
@click.option("--deterministic/--no-deterministic", default=None,
              help="Bit-identical reductions across worker counts.")
@click.pass_context
def cli(ctx, config_path, log_level, seed, deterministic):
    """Exact Euler Characteristic Transform tools."""
    config = Config.load_from_file(config_path).with_overrides(
        {
            "logging": {"level": log_level},
            "run": {"seed": seed},
            "performance": {"deterministic": deterministic},
        }
    )
    set_config(config)
    setup_logging(config)
    ctx.ensure_object(dict)
    ctx.obj["config"] = config


@cli.command()
@click.argument("mesh", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="ECTP output file.")
@click.option("--merge/--no-merge", default=None, help="Merge equal-gain adjacent supports.")
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@click.pass_context
@handle_errors
def transform(ctx, mesh, out, merge, jobs):
    """Build the proto-transform of a 3D OFF mesh."""
    out = _output(ctx, out, f"{Path(mesh).stem}.ectp", required=True)
    m = normalize(load_off(mesh))
    t = build_proto_transform(m, merge=merge, jobs=_jobs(ctx, jobs))
    write_ectp(t, out)
    console.print(f"terms: {len(t)}")
    console.print(f"euler characteristic: {euler_characteristic(m)}")


@cli.command()
@click.argument("mesh", type=click.Path(exists=True, dir_okay=False))
@click.option("--radius", type=float, default=None, help="Height radius R.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Arc table CSV.")
@click.pass_context
@handle_errors
def transform2d(ctx, mesh, radius, out):
    """Build the arc table of a planar OFF mesh (z = 0)."""
    table = build_proto_transform_2d(load_off(mesh, dim=2), radius)
    out = _output(ctx, out, f"{Path(mesh).stem}_arcs.csv")
    frame = pd.DataFrame(
        [
            {
                "start": arc.start,
                "end": arc.end,
                "order": " ".join(str(i) for i in arc.order),
                "values": " ".join(str(v) for v in arc.values),
            }
            for arc in table.arcs
        ]
    )
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, float_format="%.17g")
    rich_table = Table(title=f"{len(table.arcs)} arcs")
    for column in frame.columns:
        rich_table.add_column(column)
    for row in frame.itertuples(index=False):
        rich_table.add_row(f"{row.start:.6f}", f"{row.end:.6f}", row.order, row.values)
    console.print(rich_table)


@cli.command()
@click.argument("mesh_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("mesh_b", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--radius", type=float, default=None, help="Height radius R.")
@click.pass_context
@handle_errors
def inner2d(ctx, mesh_a, mesh_b, radius):
    """Exact inner product of two planar meshes (or one with itself)."""
    a = build_proto_transform_2d(load_off(mesh_a, dim=2), radius)
    b = build_proto_transform_2d(load_off(mesh_b, dim=2), radius) if mesh_b else a
    console.print(f"{inner_product_2d(a, b, radius):.12f}")


@cli.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV output file.")
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@click.pass_context
@handle_errors
def distmat(ctx, directory, out, jobs):
    """Distance matrix of every ECTP file in DIRECTORY."""
    paths = sorted(Path(directory).glob("*.ectp"))
    if len(paths) < 2:
        raise ValueError(f"need at least two .ectp files in {directory}")
    out = _output(ctx, out, "distances.csv", required=True)
    transforms = [read_ectp(p) for p in paths]
    matrix = distance_matrix(transforms, jobs=_jobs(ctx, jobs))
    to_csv(matrix, out)
    console.print(f"wrote {len(matrix)}x{len(matrix)} distance matrix to {out}")


@cli.command()
@click.argument("meshes", nargs=-1, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "level", type=int, default=None, help="Octahedron subdivision level.")
@click.option("--heights", type=int, default=None, help="Number of heights in [-1, 1].")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV of the first mesh's discrete ECT.")
@click.pass_context
@handle_errors
def discretize(ctx, meshes, level, heights, out):
    """Discrete ECT of one mesh; with two meshes also their discrete distance."""
    if not 1 <= len(meshes) <= 2:
        raise ValueError("discretize takes one or two meshes")
    settings = _config(ctx).metric
    directions = octahedron_directions(level or settings.octahedron_level)
    ects = [discrete_ect(normalize(load_off(p)), directions, heights) for p in meshes]
    out = _output(ctx, out, f"{Path(meshes[0]).stem}_ect.csv")
    first = ects[0]
    console.print(f"grid: {first.shape[0]} directions x {first.shape[1]} heights")
    if out:
        frame = pd.DataFrame(first.values, columns=[f"{h:.17g}" for h in first.heights])
        frame.insert(0, "z", first.directions[:, 2])
        frame.insert(0, "y", first.directions[:, 1])
        frame.insert(0, "x", first.directions[:, 0])
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, float_format="%.17g")
    if len(ects) == 2:
        console.print(f"discrete distance: {discrete_distance(*ects):.12f}")


@cli.command()
@click.option("--n", "n_meshes", type=int, default=6, help="Synthetic collection size.")
@click.option("--k", "level", type=int, default=None, help="Octahedron subdivision level.")
@click.option("--heights", type=int, default=None, help="Number of heights in [-1, 1].")
@click.option("--levels", type=int, default=4, help="Number of stride levels (2^l).")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Sweep CSV.")
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@click.pass_context
@handle_errors
def sweep(ctx, n_meshes, level, heights, levels, out, jobs):
    """Mantel correlation of digital vs coarsened discrete distances on synthetic meshes."""
    config = _config(ctx)
    jobs = _jobs(ctx, jobs)
    meshes = synthetic_collection(n_meshes, seed=config.run.seed)
    transforms = [build_proto_transform(m, jobs=jobs) for m in meshes]
    digital = distance_matrix(transforms, jobs=jobs)
    directions = octahedron_directions(level or config.metric.octahedron_level)
    frame = discretization_sweep(meshes, digital, range(levels), directions, heights, jobs)
    out = _output(ctx, out, "sweep.csv")
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(out, index=False, float_format="%.17g")
    table = Table(title="Discretization sweep")
    for column in frame.columns:
        table.add_column(column)
    for row in frame.itertuples(index=False):
        table.add_row(
            str(row.level), str(row.n_directions), str(row.n_heights), f"{row.mantel:.4f}"
        )
    console.print(table)


@cli.command()
@click.argument("csv_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("csv_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["pearson", "spearman"]), default="pearson")
@click.option("--permutations", type=int, default=None, help="Permutations for the p-value.")
@click.pass_context
@handle_errors
def mantel(ctx, csv_a, csv_b, method, permutations):
    """Mantel correlation between two distance-matrix CSV files."""
    config = _config(ctx)
    a, b = from_csv(csv_a), from_csv(csv_b)
    check_same_labels(a, b)
    if permutations is None:
        permutations = config.metric.mantel_permutations
    result = mantel_test(a, b, method, permutations, seed=config.run.seed)
    console.print(f"{result.statistic:.4f}")
    if permutations:
        console.print(f"p-value: {result.p_value:.4f} ({permutations} permutations)")


def _truth_matrix(truth: Optional[Tuple[float, float, float]]) -> Optional[np.ndarray]:
    if truth is None:
        return None
    return euler_to_matrix(EulerAngles(*truth))


@cli.command()
@click.argument("x_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("y_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(["grid", "gradient", "grid+gradient"]), default="grid")
@click.option("--iters", type=int, default=None, help="Grid (or ascent) iterations.")
@click.option("--truth", type=float, nargs=3, default=None,
              help="Euler angles of the rotation taking Y to X.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Trace CSV.")
@click.option("--jobs", type=int, default=None, help="Worker processes.")
@click.pass_context
@handle_errors
def align(ctx, x_path, y_path, method, iters, truth, out, jobs):
    """Rotation of Y maximizing its ECT inner product with X."""
    x, y = read_ectp(x_path), read_ectp(y_path)
    jobs = _jobs(ctx, jobs)
    truth_matrix = _truth_matrix(truth)
    if method == "grid":
        best, trace = adaptive_grid_search(x, y, iters, truth_matrix, jobs)
    elif method == "gradient":
        best, trace = gradient_ascent(x, y, EulerAngles(0.0, 0.0, 0.0), iters=iters,
                                      truth=truth_matrix, jobs=jobs)
    else:
        best, trace = grid_then_gradient(x, y, iters, truth=truth_matrix, jobs=jobs)
    out = _output(ctx, out, "align_trace.csv")
    if out:
        trace.to_csv(out)

    console.print(f"angles: {best.alpha:.6f} {best.beta:.6f} {best.gamma:.6f}")
    console.print(f"objective: {alignment_objective(x, y, best, jobs):.12f}")
    if truth_matrix is not None:
        console.print(f"so3 distance: {so3_distance(euler_to_matrix(best), truth_matrix):.6f}")


def main(argv: Optional[List[str]] = None):
    """Main entry point."""
    cli.main(args=argv, prog_name="digital-ect", obj={})


if __name__ == "__main__":
    main()
