#!/usr/bin/env python3
"""
Config: Numerical defaults, worker limits and experiment plans
"""

import os
import json
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

# Quadrature
REL_TOL = float(os.getenv("STABLE_STEIN_REL_TOL", "1e-8"))

# Density grid (cache for CDF / KS / Stein evaluations)
GRID_POINTS = int(os.getenv("STABLE_STEIN_GRID_POINTS", "4001"))
Y_CUT = float(os.getenv("STABLE_STEIN_Y_CUT", "50.0"))

# Monte Carlo
DRAW_BUDGET = float(os.getenv("STABLE_STEIN_DRAW_BUDGET", "1e9"))
THREADS = os.getenv("STABLE_STEIN_THREADS")
GENERAL_SKEW_SAMPLER = os.getenv("STABLE_STEIN_GENERAL_SKEW", "true").lower() in ("1", "true", "yes")

# Artifacts
OUTPUT_DIR = os.getenv("STABLE_STEIN_OUTPUT_DIR", "results")

# HTTP service
ALLOWED_ORIGINS = os.getenv("ALLOWED_ORIGINS", "http://localhost:3000,http://localhost:8000").split(",")

# Inverse-CDF sampling of user laws
BISECTION_TOL = 1e-12
BISECTION_MAX_ITER = 200

# Acceptance thresholds
RESIDUAL_TOL = 1e-3
TAIL_FIT_MIN_R2 = 0.999


def resolve_threads(cli_value=None) -> int:
    """--threads wins, then STABLE_STEIN_THREADS, then the core count"""
    if cli_value:
        return max(1, int(cli_value))
    if THREADS:
        return max(1, int(THREADS))
    return os.cpu_count() or 1


# Load experiment plans from JSON file
def load_experiment_plans():
    """Load experiment plans from experiments.json file"""
    plans_file = Path(__file__).parent.parent / "experiments.json"

    if plans_file.exists():
        with open(plans_file, "r", encoding="utf-8") as f:
            return json.load(f)
    else:
        # Fallback to hardcoded plans if file doesn't exist
        return [
            {"name": "rate_recovery", "kind": "ks_rate", "preset": "pareto", "alpha": 1.5, "delta": 0.0,
             "n_list": [100, 1000, 10000, 100000], "paths_list": [100, 1000, 10000, 100000],
             "M_list": [], "seeds": [1, 2, 3, 4, 5], "draw_budget": 2e10},
            {"name": "rate_recovery_large_paths", "kind": "ks_rate", "preset": "pareto", "alpha": 1.5, "delta": 0.0,
             "n_list": [30, 300, 3000], "paths_list": [200000, 200000, 200000],
             "M_list": [], "seeds": [1, 2, 3, 4, 5], "draw_budget": 1e9},
            {"name": "theorem_audit", "kind": "call_error", "preset": "pareto", "alphas": [1.2, 1.5, 1.8],
             "delta": 0.0, "n_list": [100, 1000, 10000], "paths_list": [100000, 100000, 100000],
             "M_list": [1, 2, 4], "seeds": [7], "draw_budget": 1e9},
            {"name": "density_overlay", "kind": "density_overlay", "preset": "pareto", "alpha": 1.5,
             "delta": 0.0, "n_list": [100, 500, 1000], "paths_list": [8000, 8000, 8000],
             "M_list": [], "seeds": [11], "draw_budget": 1e9},
        ]


EXPERIMENT_PLANS = load_experiment_plans()
