"""Grid sweeps of the packet spread over particle number and collapse rate.

A sweep evaluates sigma_t on a log-spaced (n, lambda) grid for one noise
model, optionally compares it with a second model, and extracts the
half-spread contour where sigma_t = sigma0 / 2. Columns (fixed n) are
independent and may be farmed out to worker processes; results are assembled
by position, so the output never depends on scheduling.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from collapsim.dynamics import Colored, FiniteTemperature, NoiseModel, White, spread_after
from collapsim.errors import (
    CollapsimError,
    DomainError,
    InvalidStateError,
    SingularEvaluationError,
    StructuralError,
)
from collapsim.params import CollapseParams, qmupl_from_csl

CSV_FIELDS = ("n", "lambda_csl", "sigma_a", "sigma_b", "diff_abs", "diff_rel", "flag")
CONTOUR_REL_TOL = 0.01  # bisection stops when the lambda bracket is within 1%
JOBS_ENV = "COLLAPSIM_JOBS"


@dataclass(frozen=True)
class LogAxis:
    min: float
    max: float
    points: int

    def __post_init__(self):
        if not (0 < self.min < self.max and math.isfinite(self.max)):
            raise DomainError(f"axis needs 0 < min < max, got {self.min!r}..{self.max!r}")
        if int(self.points) != self.points or self.points < 2:
            raise DomainError("axis needs at least 2 points")

    @property
    def values(self) -> np.ndarray:
        return np.logspace(math.log10(self.min), math.log10(self.max), int(self.points))


@dataclass(frozen=True)
class SweepGrid:
    n_axis: LogAxis = LogAxis(1.0, 1e8, 81)
    lambda_axis: LogAxis = LogAxis(1e-20, 1.0, 81)
    sigma0: float = 5e-7  # m
    t: float = 1e-2  # s
    model_a: NoiseModel = White()
    model_b: NoiseModel | None = None
    rate_exponent: float = 2.0

    def __post_init__(self):
        if not (self.sigma0 > 0 and self.t > 0):
            raise DomainError("sigma0 and t must be positive")


@dataclass(frozen=True)
class Cell:
    n: float
    lambda_csl: float
    sigma_a: float
    sigma_b: float
    diff_abs: float
    diff_rel: float
    flag: str = ""


@dataclass
class GridResult:
    grid: SweepGrid
    cells: list  # n-major: all lambdas of the first n, then the next n, ...
    threshold_contour: list = field(default_factory=list)  # (n, lambda) pairs

    def array(self, name: str) -> np.ndarray:
        """Field as a (len(lambda_axis), len(n_axis)) array; rows are lambda."""
        nl, nn = int(self.grid.lambda_axis.points), int(self.grid.n_axis.points)
        flat = np.array([getattr(c, name) for c in self.cells], dtype=float)
        return flat.reshape(nn, nl).T

    def flagged(self) -> list:
        return [c for c in self.cells if c.flag]


def parse_model(text: str | None) -> NoiseModel | None:
    """'white', 'thermal:<K>' or 'colored:<Hz>' (also 'finite-temperature:<K>')."""
    if text is None or text.lower() in ("", "none"):
        return None
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower().replace("_", "-")
    try:
        if kind == "white" and not arg:
            return White()
        if kind in ("thermal", "finite-temperature", "ftm"):
            return FiniteTemperature(float(arg))
        if kind in ("colored", "coloured", "cnm"):
            return Colored(float(arg))
    except ValueError:
        pass
    raise StructuralError(f"cannot parse noise model {text!r} (white | thermal:K | colored:Hz)")


def format_model(model: NoiseModel | None) -> str | None:
    if model is None:
        return None
    if isinstance(model, White):
        return "white"
    if isinstance(model, FiniteTemperature):
        return f"thermal:{model.T!r}"
    return f"colored:{model.cutoff!r}"


def _sigma(grid, n, lambda_csl, r_C, model):
    return spread_after(
        grid.sigma0, n, qmupl_from_csl(lambda_csl, r_C), model, grid.t, grid.rate_exponent
    )


def _cell(grid, n, lam, r_C):
    try:
        sa = _sigma(grid, n, lam, r_C, grid.model_a)
        if grid.model_b is None:
            return Cell(n, lam, sa, math.nan, math.nan, math.nan)
        sb = _sigma(grid, n, lam, r_C, grid.model_b)
    except (SingularEvaluationError, InvalidStateError) as exc:
        return Cell(n, lam, math.nan, math.nan, math.nan, math.nan, f"singular: {exc}")
    d = abs(sa - sb)
    return Cell(n, lam, sa, sb, d, d / sa)


def _contour_point(grid, n, r_C, lambdas, sigmas):
    """First lambda (going up) where sigma_a drops to sigma0/2, refined by bisection."""
    half = 0.5 * grid.sigma0
    for i in range(1, len(lambdas)):
        lo_s, hi_s = sigmas[i - 1], sigmas[i]
        if not (math.isfinite(lo_s) and math.isfinite(hi_s)):
            continue
        if lo_s > half >= hi_s:
            lo, hi = math.log(lambdas[i - 1]), math.log(lambdas[i])
            while hi - lo > math.log1p(CONTOUR_REL_TOL):
                mid = 0.5 * (lo + hi)
                if _sigma(grid, n, math.exp(mid), r_C, grid.model_a) > half:
                    lo = mid
                else:
                    hi = mid
            return (n, math.exp(0.5 * (lo + hi)))
    return None


def _column(args):
    grid, n, r_C = args
    lambdas = grid.lambda_axis.values.tolist()
    cells = [_cell(grid, n, lam, r_C) for lam in lambdas]
    try:
        point = _contour_point(grid, n, r_C, lambdas, [c.sigma_a for c in cells])
    except CollapsimError:
        point = None
    return cells, point


def default_jobs() -> int:
    env = os.environ.get(JOBS_ENV)
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise StructuralError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
        if jobs >= 1:
            return jobs
    return os.cpu_count() or 1


def run_sweep(grid: SweepGrid, params: CollapseParams, jobs: int | None = None) -> GridResult:
    """Evaluate the grid. The lambda axis is the CSL rate; r_C comes from ``params``."""
    jobs = default_jobs() if jobs is None else jobs
    if jobs < 1:
        raise DomainError("jobs must be >= 1")
    tasks = [(grid, float(n), params.r_C) for n in grid.n_axis.values.tolist()]
    if jobs == 1 or len(tasks) == 1:
        columns = [_column(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            columns = list(pool.map(_column, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    cells, contour = [], []
    for col_cells, point in columns:
        cells.extend(col_cells)
        if point is not None:
            contour.append(point)
    return GridResult(grid, cells, contour)


# -- output ------------------------------------------------------------------


def fmt(x: float) -> str:
    """9 significant digits, scientific notation; 'nan' for missing values."""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.8e}"


def to_csv(result: GridResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for c in result.cells:
        writer.writerow([fmt(getattr(c, f)) for f in CSV_FIELDS[:-1]] + [c.flag])
    return buf.getvalue()


def contour_csv(result: GridResult) -> str:
    lines = ["n,lambda_csl"]
    lines += [f"{fmt(n)},{fmt(lam)}" for n, lam in result.threshold_contour]
    return "\n".join(lines) + "\n"


def _rounded(x):
    if isinstance(x, float) and math.isnan(x):
        return None
    return float(fmt(x))


def grid_to_dict(grid: SweepGrid) -> dict:
    return {
        "n_axis": asdict(grid.n_axis),
        "lambda_axis": asdict(grid.lambda_axis),
        "sigma0": grid.sigma0,
        "t": grid.t,
        "model_a": format_model(grid.model_a),
        "model_b": format_model(grid.model_b),
        "rate_exponent": grid.rate_exponent,
    }


def to_json(result: GridResult) -> str:
    cells = [
        {f: (c.flag if f == "flag" else _rounded(getattr(c, f))) for f in CSV_FIELDS}
        for c in result.cells
    ]
    doc = {
        "grid": grid_to_dict(result.grid),
        "cells": cells,
        "threshold_contour": [
            {"n": _rounded(n), "lambda_csl": _rounded(lam)} for n, lam in result.threshold_contour
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def grid_from_config(config: dict, base: SweepGrid | None = None) -> SweepGrid:
    """Apply a flat config mapping (as read from --config JSON) over ``base``."""
    base = base or SweepGrid()
    known = {
        "n_min", "n_max", "n_points", "lambda_min", "lambda_max", "lambda_points",
        "sigma0", "t", "model_a", "model_b", "rate_exponent", "r_C", "jobs",
    }
    unknown = set(config) - known
    if unknown:
        raise StructuralError(f"unknown config keys: {sorted(unknown)}")
    n_axis = LogAxis(
        float(config.get("n_min", base.n_axis.min)),
        float(config.get("n_max", base.n_axis.max)),
        int(config.get("n_points", base.n_axis.points)),
    )
    lambda_axis = LogAxis(
        float(config.get("lambda_min", base.lambda_axis.min)),
        float(config.get("lambda_max", base.lambda_axis.max)),
        int(config.get("lambda_points", base.lambda_axis.points)),
    )
    model_a = parse_model(config["model_a"]) if "model_a" in config else base.model_a
    if model_a is None:
        raise StructuralError("model_a is required")
    model_b = parse_model(config["model_b"]) if "model_b" in config else base.model_b
    return SweepGrid(
        n_axis,
        lambda_axis,
        float(config.get("sigma0", base.sigma0)),
        float(config.get("t", base.t)),
        model_a,
        model_b,
        float(config.get("rate_exponent", base.rate_exponent)),
    )
