#!/usr/bin/env python3
"""
Experiments: KS convergence rate of S_n, call-expectation error against the
theorem bounds, empirical density overlays, log-log slope fits and the CSV /
JSON artifacts they emit.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import pandas as pd
import scipy
from scipy import integrate, stats

from app.config import DRAW_BUDGET, OUTPUT_DIR
from app.errors import DegenerateFit, EmptyBatch, InvalidParameter
from app.services.attraction_domain import AttractionLaw, SnConfig, build_Sn, preset_law
from app.services.bounds import assemble_report, bound_inputs_for
from app.services.figures import figure_density_overlay, figure_rate
from app.services.rng import STREAM_BOOTSTRAP, STREAM_EXPERIMENT, substream
from app.services.sample_io import SampleBatch
from app.services.stable_dist import StableParams, build_density_grid, call_expectation_stable, density, sample

__version__ = "1.0.0"

BOOTSTRAP_RESAMPLES = 1000
SLOPE_CI_MAX_WIDTH = 0.2
# Allowed distance of the fitted KS slope from the optimal rate exponent
SLOPE_TOLERANCE = 0.12
DENSITY_WINDOW = (-10.0, 10.0)
DENSITY_POINTS = 401

CSV_OPTIONS = dict(index=False, float_format="%.17g", lineterminator="\n")


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> None:
    """Header row, LF line endings, '.' decimal, round-trip precision"""
    frame.to_csv(path, **CSV_OPTIONS)


# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    law: AttractionLaw
    n_list: Sequence[int]
    paths_list: Sequence[int]
    M_list: Sequence[float] = ()
    seed: int = 0
    stable_paths: int = 500
    output_dir: Union[str, Path] = OUTPUT_DIR
    ks_mode: str = "exact"
    threads: int = 1
    draw_budget: float = DRAW_BUDGET
    verbose: bool = False

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        self.paths_list = [int(p) for p in self.paths_list]
        self.M_list = [float(m) for m in self.M_list]
        if not self.n_list:
            raise InvalidParameter("n_list must not be empty", field="n_list")
        if len(self.n_list) != len(self.paths_list):
            raise InvalidParameter("n_list and paths_list must have the same length", field="paths_list")
        if any(n < 1 for n in self.n_list):
            raise InvalidParameter("every n must be >= 1", field="n_list")
        if any(p < 1 for p in self.paths_list):
            raise InvalidParameter("every path count must be >= 1", field="paths_list")
        if any(not m > 0 for m in self.M_list):
            raise InvalidParameter("every strike M must be positive", field="M_list")
        if self.ks_mode not in ("exact", "two_sample"):
            raise InvalidParameter(f"ks_mode must be 'exact' or 'two_sample', got {self.ks_mode!r}", field="ks_mode")
        if self.stable_paths < 1:
            raise InvalidParameter("stable_paths must be >= 1", field="stable_paths")

    @property
    def cells(self) -> List[Tuple[int, int]]:
        return list(zip(self.n_list, self.paths_list))

    def echo(self) -> Dict[str, object]:
        return {
            "law": self.law.name,
            "alpha": self.law.alpha,
            "delta": self.law.delta,
            "A": self.law.A,
            "gamma": str(self.law.gamma),
            "L": self.law.L,
            "n_list": self.n_list,
            "paths_list": self.paths_list,
            "M_list": self.M_list,
            "seed": self.seed,
            "stable_paths": self.stable_paths,
            "ks_mode": self.ks_mode,
            "draw_budget": self.draw_budget,
        }


@dataclass
class CallCell:
    n: int
    M: float
    estimate: float
    se: float
    reference: float
    error: float
    bound: float
    passed: bool
    nonuniform_bound: Optional[float] = None
    nonuniform_passed: Optional[bool] = None


@dataclass
class ExperimentRow:
    n: int
    paths: int
    ks: Optional[float] = None
    calls: List[CallCell] = field(default_factory=list)


class SlopeFit(NamedTuple):
    slope: float
    intercept: float
    ci: Optional[Tuple[float, float]]


@dataclass
class ExperimentResult:
    rows: List[ExperimentRow]
    ks_mode: Optional[str] = None
    fitted_slope: Optional[float] = None
    intercept: Optional[float] = None
    slope_ci: Optional[Tuple[float, float]] = None
    excluded_n: List[int] = field(default_factory=list)

    def rates_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"n": [r.n for r in self.rows], "ks": [r.ks for r in self.rows]})

    def call_frame(self) -> pd.DataFrame:
        cells = [c for r in self.rows for c in r.calls]
        return pd.DataFrame({
            "n": [c.n for c in cells],
            "M": [c.M for c in cells],
            "error": [c.error for c in cells],
            "se": [c.se for c in cells],
            "bound": [c.bound for c in cells],
            "pass": [c.passed for c in cells],
        })

    @property
    def all_passed(self) -> bool:
        cells = [c for r in self.rows for c in r.calls]
        return all(c.passed and c.nonuniform_passed is not False for c in cells)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

def ks_statistic(samples: Union[SampleBatch, np.ndarray], reference_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup_i max(|F(x_(i)) - i/n|, |F(x_(i)) - (i-1)/n|)"""
    values = samples.values if isinstance(samples, SampleBatch) else np.asarray(samples, dtype=float)
    if values.size == 0:
        raise EmptyBatch("KS statistic of an empty batch", field="samples")
    x = np.sort(values)
    n = x.size
    F = np.asarray(reference_cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(F - i / n)), np.max(np.abs(F - (i - 1) / n))))


def fit_loglog_slope(points: Sequence[Tuple[float, float]], resamples: int = BOOTSTRAP_RESAMPLES,
                     seed: int = 0) -> SlopeFit:
    """OLS of ln y on ln x; percentile pairs-bootstrap 95% CI when there are >= 4 points"""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise DegenerateFit("a slope needs at least two points", field="points")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise DegenerateFit("log-log fit needs finite positive coordinates", field="points")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.unique(lx).size < 2:
        raise DegenerateFit("x values must not all coincide", field="points")
    slope, intercept = np.polyfit(lx, ly, 1)
    if pts.shape[0] < 4:
        return SlopeFit(float(slope), float(intercept), None)

    gen = substream(seed, STREAM_BOOTSTRAP)
    slopes = []
    while len(slopes) < resamples:
        pick = gen.integers(0, lx.size, lx.size)
        if np.unique(lx[pick]).size < 2:
            continue
        slopes.append(np.polyfit(lx[pick], ly[pick], 1)[0])
    lo, hi = np.percentile(slopes, [2.5, 97.5])
    return SlopeFit(float(slope), float(intercept), (float(lo), float(hi)))


def histogram_masses(values: np.ndarray, edges: Sequence[float]) -> np.ndarray:
    """Fractions of values per bin, with -inf / +inf bins so the masses sum to 1"""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise EmptyBatch("histogram of an empty batch", field="values")
    inner = np.asarray(edges, dtype=float)
    full = np.concatenate([[-np.inf], inner, [np.inf]])
    counts, _ = np.histogram(values, bins=full)
    return counts / values.size


def l1_distance(y: np.ndarray, f: np.ndarray, g: np.ndarray) -> float:
    return float(integrate.trapezoid(np.abs(np.asarray(f) - np.asarray(g)), y))


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------

def _sn(config: ExperimentConfig, n: int, paths: int) -> SampleBatch:
    return build_Sn(SnConfig(config.law, n, paths, config.seed, draw_budget=config.draw_budget))


def _run_cells(config: ExperimentConfig, work: Callable[[int, int], ExperimentRow]) -> List[ExperimentRow]:
    """Cells in a thread pool; results are ordered by cell, not by completion"""
    if config.threads <= 1 or len(config.cells) == 1:
        return [work(n, paths) for n, paths in config.cells]
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        futures = [executor.submit(work, n, paths) for n, paths in config.cells]
        return [future.result() for future in futures]


def _stable_reference(config: ExperimentConfig) -> np.ndarray:
    law = config.law
    return sample(StableParams(law.alpha, 1.0, law.delta), config.stable_paths, config.seed,
                  stream=STREAM_EXPERIMENT).values


def run_ks_rate(config: ExperimentConfig) -> ExperimentResult:
    """KS of S_n against S_alpha(1, delta) per (n, N) cell and the fitted log-log slope"""
    law = config.law
    grid = build_density_grid(float(law.alpha), float(law.delta))
    reference = _stable_reference(config) if config.ks_mode == "two_sample" else None

    def work(n: int, paths: int) -> ExperimentRow:
        sn = _sn(config, n, paths)
        if reference is None:
            ks = ks_statistic(sn, grid.cdf)
        else:
            ks = float(stats.ks_2samp(sn.values, reference).statistic)
        if config.verbose:
            print(f"      • n={n}, paths={paths}: ks={ks:.5f}")
        return ExperimentRow(n=n, paths=paths, ks=ks)

    rows = sorted(_run_cells(config, work), key=lambda r: r.n)
    result = ExperimentResult(rows=rows, ks_mode=config.ks_mode)
    _fit_rows(result, config.seed)
    return result


def expected_slope(alpha: float) -> float:
    """Exponent of the optimal Kolmogorov rate n^{(alpha - 2)/alpha}"""
    return (alpha - 2.0) / alpha


def slope_within_tolerance(slope: Optional[float], alpha: float, tolerance: float = SLOPE_TOLERANCE) -> bool:
    return slope is not None and abs(slope - expected_slope(alpha)) <= tolerance


def overlay_improves(l1: Dict[str, float], n_list: Sequence[int]) -> bool:
    """L1 distance at the largest n does not exceed the one at the smallest n"""
    ordered = sorted(set(int(n) for n in n_list))
    if len(ordered) < 2:
        return True
    return l1[f"f_n{ordered[-1]}"] <= l1[f"f_n{ordered[0]}"]


def bound_comparison(result: ExperimentResult) -> List[Dict[str, object]]:
    """Per cell with a non-uniform bound: is it smaller than the uniform one"""
    return [
        {"n": c.n, "M": c.M, "uniform_bound": c.bound, "nonuniform_bound": c.nonuniform_bound,
         "nonuniform_smaller": bool(c.nonuniform_bound < c.bound)}
        for r in result.rows for c in r.calls if c.nonuniform_bound is not None
    ]


def _fit_rows(result: ExperimentResult, seed: int) -> None:
    points = [(r.n, r.ks) for r in result.rows if r.ks is not None and r.ks > 0]
    if len({p[0] for p in points}) < 2:
        return
    fit = fit_loglog_slope(points, seed=seed)
    if fit.ci is not None and fit.ci[1] - fit.ci[0] > SLOPE_CI_MAX_WIDTH:
        # smallest n carries the noisiest KS
        smallest = min(p[0] for p in points)
        result.excluded_n.append(int(smallest))
        fit = fit_loglog_slope([p for p in points if p[0] != smallest], seed=seed)
    result.fitted_slope, result.intercept, result.slope_ci = fit.slope, fit.intercept, fit.ci


def run_call_error(config: ExperimentConfig) -> ExperimentResult:
    """MC E(S_n - M)_+ against nu(g_M), checked against c_1 R_n (and the non-uniform bound) + 3 SE"""
    if not config.M_list:
        raise InvalidParameter("run_call_error needs at least one strike", field="M_list")
    law = config.law
    params = StableParams(law.alpha, 1.0, law.delta)
    references = {M: call_expectation_stable(params, M) for M in config.M_list}

    def work(n: int, paths: int) -> ExperimentRow:
        sn = _sn(config, n, paths).values
        row = ExperimentRow(n=n, paths=paths)
        for M in config.M_list:
            payoff = np.maximum(sn - M, 0.0)
            estimate = float(payoff.mean())
            se = float(payoff.std(ddof=1) / np.sqrt(paths)) if paths > 1 else 0.0
            error = estimate - references[M]
            report = assemble_report(bound_inputs_for(law, n, M))
            nonuniform = report.nonuniform_bound
            cell = CallCell(
                n=n, M=M, estimate=estimate, se=se, reference=references[M], error=error,
                bound=report.uniform_bound,
                passed=bool(abs(error) <= report.uniform_bound + 3.0 * se),
                nonuniform_bound=nonuniform,
                nonuniform_passed=None if nonuniform is None else bool(abs(error) <= nonuniform + 3.0 * se),
            )
            row.calls.append(cell)
            if config.verbose:
                print(f"      • n={n}, M={M:g}: error={error:+.5f} se={se:.5f} bound={report.uniform_bound:.4g}"
                      f" {'✓' if cell.passed else '✗'}")
        return row

    rows = sorted(_run_cells(config, work), key=lambda r: r.n)
    return ExperimentResult(rows=rows)


@dataclass
class DensityOverlay:
    frame: pd.DataFrame
    tail_edges: List[float]
    tail_masses: Dict[str, List[float]]
    l1: Dict[str, float]


def _tail_edges() -> np.ndarray:
    outer = np.geomspace(10.0, 1e4, 7)
    return np.concatenate([-outer[::-1], outer])


def run_density_overlay(config: ExperimentConfig) -> DensityOverlay:
    """Silverman-bandwidth KDE of S_n on [-10, 10], histogram masses in the tails, exact stable curve"""
    law = config.law
    y = np.linspace(DENSITY_WINDOW[0], DENSITY_WINDOW[1], DENSITY_POINTS)
    stable_curve = density(StableParams(law.alpha, 1.0, law.delta), y)
    edges = _tail_edges()

    columns: Dict[str, np.ndarray] = {"y": y}
    masses: Dict[str, List[float]] = {}
    l1: Dict[str, float] = {}
    for n, paths in config.cells:
        sn = _sn(config, n, paths).values
        key = f"f_n{n}"
        central = sn[(sn >= DENSITY_WINDOW[0]) & (sn <= DENSITY_WINDOW[1])]
        if central.size < 2:
            raise EmptyBatch(f"fewer than two draws of S_{n} fall in the density window", field="paths_list")
        kde = stats.gaussian_kde(central, bw_method="silverman")
        # KDE of the central draws, rescaled to their share of the total mass
        columns[key] = kde(y) * central.size / sn.size
        masses[key] = histogram_masses(sn, edges).tolist()
        l1[key] = l1_distance(y, columns[key], stable_curve)
        if config.verbose:
            print(f"      • n={n}: L1 distance on window = {l1[key]:.4f}")
    columns["f_stable"] = stable_curve
    return DensityOverlay(pd.DataFrame(columns), edges.tolist(), masses, l1)


def run_rate_sweep(law: AttractionLaw, n_values: Sequence[int] = (), M_values: Sequence[float] = (),
                   n: int = 1000, M: Optional[float] = None) -> pd.DataFrame:
    """Bound rows over n (fixed M) or over M (fixed n)"""
    if not n_values and not M_values:
        raise InvalidParameter("sweep needs n values or M values", field="sweep")
    cells = [(int(k), M) for k in n_values] if n_values else [(n, float(m)) for m in M_values]
    rows = []
    for n_k, M_k in cells:
        report = assemble_report(bound_inputs_for(law, n_k, M_k))
        rows.append({
            "n": n_k,
            "M": M_k,
            "Rn": report.Rn,
            "c1": report.c1,
            "uniform_bound": report.uniform_bound,
            "nonuniform_bound": report.nonuniform_bound,
            "regime": report.regime,
        })
    return pd.DataFrame(rows, columns=["n", "M", "Rn", "c1", "uniform_bound", "nonuniform_bound", "regime"])


# ---------------------------------------------------------------------------
# Plans and artifacts
# ---------------------------------------------------------------------------

def versions() -> Dict[str, str]:
    return {
        "stablecall": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mpmath": mpmath.__version__,
        "pandas": pd.__version__,
    }


def json_default(value):
    if isinstance(value, Fraction):
        return float(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_report(report: Dict[str, object], path: Union[str, Path]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(report, f, indent=2, default=json_default)
        f.write("\n")


def config_from_plan(plan: Dict[str, object], alpha: Optional[float] = None, seed: Optional[int] = None,
                     output_dir: Union[str, Path] = OUTPUT_DIR, threads: int = 1, verbose: bool = False,
                     ks_mode: str = "exact") -> ExperimentConfig:
    """ExperimentConfig from an experiments.json entry"""
    law = preset_law(
        plan.get("preset", "pareto"),
        float(alpha if alpha is not None else plan["alpha"]),
        float(plan.get("delta", 0.0)),
        plan.get("gamma"),
        plan.get("c"),
        plan.get("A"),
        plan.get("L"),
    )
    return ExperimentConfig(
        law=law,
        n_list=plan["n_list"],
        paths_list=plan["paths_list"],
        M_list=plan.get("M_list", []),
        seed=int(seed if seed is not None else plan.get("seeds", [0])[0]),
        stable_paths=int(plan.get("stable_paths", 500)),
        output_dir=output_dir,
        ks_mode=plan.get("ks_mode", ks_mode),
        threads=threads,
        draw_budget=float(plan.get("draw_budget", DRAW_BUDGET)),
        verbose=verbose,
    )


def emit_experiment(kind: str, config: ExperimentConfig, figures: bool = True) -> Dict[str, object]:
    """Run one experiment kind, write its CSV / JSON / SVG artifacts and return the report"""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report: Dict[str, object] = {"kind": kind, "config": config.echo(), "versions": versions()}

    if kind == "ks_rate":
        result = run_ks_rate(config)
        write_csv(result.rates_frame(), out / "rates.csv")
        report.update(
            slope=result.fitted_slope, intercept=result.intercept, slope_ci=result.slope_ci,
            excluded_n=result.excluded_n, ks_mode=result.ks_mode,
            expected_slope=expected_slope(config.law.alpha), slope_tolerance=SLOPE_TOLERANCE,
            passed=slope_within_tolerance(result.fitted_slope, config.law.alpha),
        )
        if figures:
            figure_rate(result, out / "figure1a.svg")
    elif kind == "call_error":
        result = run_call_error(config)
        write_csv(result.call_frame(), out / "call_error.csv")
        report.update(
            cells=[asdict(c) for r in result.rows for c in r.calls],
            bound_comparison=bound_comparison(result),
            passed=result.all_passed,
        )
    elif kind == "density_overlay":
        overlay = run_density_overlay(config)
        write_csv(overlay.frame, out / "density.csv")
        report.update(tail_edges=overlay.tail_edges, tail_masses=overlay.tail_masses, l1=overlay.l1,
                      passed=overlay_improves(overlay.l1, config.n_list))
        if figures:
            figure_density_overlay(overlay, out / "figure1b.svg")
    else:
        raise InvalidParameter(f"unknown experiment kind {kind!r}", field="kind")

    write_report(report, out / "report.json")
    return report
