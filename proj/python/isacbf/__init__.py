"""Joint transmit and reflective beamforming for multi-IRS ISAC.

Configs are plain dicts with the same layout as the JSON recipes; missing
keys keep their defaults. Matrices are complex numpy arrays.
"""

import json
import os
from pathlib import Path

from . import _core
from ._core import (
    ExtractionError,
    GeometryError,
    InfeasibleError,
    IsacError,
    ParameterError,
    Scenario,
    SolverError,
    Trajectory,
    extended_crb,
    point_crb,
    point_crb_routes,
)

_recipes = Path(__file__).parent / "configs"
if _recipes.is_dir():
    os.environ.setdefault("ISAC_CONFIG_DIR", str(_recipes))

__all__ = [
    "ExtractionError", "GeometryError", "InfeasibleError", "IsacError", "ParameterError", "Scenario",
    "SolverError", "Trajectory", "build_scenario", "compare_schemes", "default_config", "extended_crb",
    "load_config", "optimize", "point_crb", "point_crb_routes", "run_cli", "sweep", "validate",
]


def _dump(config):
    return "" if config is None else json.dumps(config)


def default_config():
    return json.loads(_core.default_config())


def load_config(path):
    """Reads a recipe file and returns it merged over the defaults."""
    return json.loads(_core.check_config(Path(path).read_text()))


def build_scenario(config=None, seed=0):
    return Scenario.build(_dump(config), seed)


def optimize(scenario, variant="", scheme="proposed", config=None, seed=0):
    """Runs one scheme; variant is P1-I, P1-II, P4-I or P4-II (config default when empty)."""
    return _core.optimize(scenario, variant, scheme, _dump(config), seed)


def compare_schemes(scenario, model="point", config=None, seed=0):
    return _core.compare_schemes(scenario, model, _dump(config), seed)


def sweep(config=None, seed=0):
    """List of (x, {scheme: Trajectory}) over the configured grid."""
    return _core.sweep(_dump(config), seed)


def validate(config=None, seed=0):
    return _core.validate(_dump(config), seed)


def run_cli(args):
    """Runs the isacbf command line in-process; returns (exit_code, stdout, stderr)."""
    return _core.run_cli([str(a) for a in args])
