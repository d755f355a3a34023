"""
Analysis settings schema and run configuration.
"""

from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

from utils.bessel import J01
from utils.errors import ConfigurationError

ANALYSIS_SETTINGS = {
    "grid": {
        "name": "Sign Grid",
        "description": "Sampling of the eigenfunction over the fundamental rectangle",
        "parameters": {
            "resolution": {
                "type": "int",
                "min": 64,
                "max": 6400,
                "default": 800,
                "description": "Cells per side of the base sign grid"
            },
            "max_refinements": {
                "type": "int",
                "min": 1,
                "max": 3,
                "default": 2,
                "description": "Dyadic refinements tried before giving up on a stable count"
            }
        }
    },
    "tolerances": {
        "name": "Tolerances",
        "description": "Relative thresholds used to decide that a value vanishes",
        "parameters": {
            "zero_tol": {
                "type": "float",
                "min": 1e-15,
                "max": 1e-3,
                "default": 1e-9,
                "description": "Zero-band threshold relative to max |Phi| on the grid"
            },
            "derivative_tol": {
                "type": "float",
                "min": 1e-14,
                "max": 1e-4,
                "default": 1e-8,
                "description": "Vanishing threshold for the derivative ladder, relative to sum |c| freq^order"
            },
            "residual_tol": {
                "type": "float",
                "min": 1e-15,
                "max": 1e-6,
                "default": 1e-10,
                "description": "Largest accepted |Phi| at a reported critical zero (scaled)"
            }
        }
    },
    "root_finding": {
        "name": "Root Finding",
        "description": "Iteration limits for bracketed and Newton solves",
        "parameters": {
            "bisection_iterations": {
                "type": "int",
                "min": 20,
                "max": 200,
                "default": 80,
                "description": "Bisection steps per monotone branch"
            },
            "newton_iterations": {
                "type": "int",
                "min": 1,
                "max": 200,
                "default": 50,
                "description": "Newton steps before falling back to bisection"
            },
            "y_beta_iterations": {
                "type": "int",
                "min": 40,
                "max": 200,
                "default": 100,
                "description": "Bisection steps for the bifurcation ordinate"
            },
            "polish_steps": {
                "type": "int",
                "min": 0,
                "max": 10,
                "default": 3,
                "description": "Newton polish steps after bisection"
            }
        }
    },
    "sweeps": {
        "name": "Parameter Sweeps",
        "description": "Grids over (beta, theta) for the family analyses",
        "parameters": {
            "beta_samples": {
                "type": "int",
                "min": 3,
                "max": 64,
                "default": 8,
                "description": "Beta midpoints across the canonical range"
            },
            "theta_samples": {
                "type": "int",
                "min": 3,
                "max": 64,
                "default": 8,
                "description": "Theta midpoints across (0, pi/2)"
            },
            "bifurcation_margin": {
                "type": "float",
                "min": 0.0,
                "max": 0.2,
                "default": 0.05,
                "description": "Minimum distance kept between a sampled theta and theta_beta"
            },
            "random_samples": {
                "type": "int",
                "min": 1,
                "max": 1000,
                "default": 20,
                "description": "Draws for randomized property stages"
            }
        }
    },
    "rendering": {
        "name": "Rendering",
        "description": "Figure and mesh output",
        "parameters": {
            "R": {
                "type": "float",
                "min": 1.5708,
                "max": 100.0,
                "default": 3.0,
                "description": "Radius of the embedding; must exceed pi/2"
            },
            "u_samples": {
                "type": "int",
                "min": 8,
                "max": 4096,
                "default": 256,
                "description": "Mesh intervals across the strip"
            },
            "v_samples": {
                "type": "int",
                "min": 8,
                "max": 4096,
                "default": 256,
                "description": "Mesh intervals along the strip"
            }
        }
    },
    "pipeline": {
        "name": "Pipeline",
        "description": "Reproduction run settings",
        "parameters": {
            "seed": {
                "type": "int",
                "min": 0,
                "max": 2**32 - 1,
                "default": 0,
                "description": "Seed for randomized property sweeps"
            },
            "j01": {
                "type": "float",
                "min": 0.5,
                "max": 10.0,
                "default": J01,
                "description": "First zero of J0 used by the Faber-Krahn screen"
            }
        }
    }
}

OUTPUT_FORMATS = ("json", "table", "text", "figure")


def _parameter_index() -> Dict[str, Dict[str, Any]]:
    index = {}
    for group in ANALYSIS_SETTINGS.values():
        for key, spec in group["parameters"].items():
            index[key] = spec
    return index


@dataclass(frozen=True)
class RunConfig:
    subcommand: str = "reproduce-theorem"
    resolution: int = 800
    max_refinements: int = 2
    zero_tol: float = 1e-9
    derivative_tol: float = 1e-8
    residual_tol: float = 1e-10
    bisection_iterations: int = 80
    newton_iterations: int = 50
    y_beta_iterations: int = 100
    polish_steps: int = 3
    beta_samples: int = 8
    theta_samples: int = 8
    bifurcation_margin: float = 0.05
    random_samples: int = 20
    R: float = 3.0
    u_samples: int = 256
    v_samples: int = 256
    seed: int = 0
    j01: float = J01
    output_format: str = "text"
    output_path: Optional[str] = None
    include_bifurcation: bool = False
    extra: Dict[str, Any] = field(default_factory=dict)

    def with_overrides(self, **overrides) -> "RunConfig":
        return SettingsManager().build_config(self.subcommand, {**self.as_dict(), **overrides})

    def as_dict(self) -> Dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


class SettingsManager:
    def __init__(self):
        self.parameters = _parameter_index()

    def defaults(self) -> Dict[str, Any]:
        return {key: spec["default"] for key, spec in self.parameters.items()}

    def validate(self, key: str, value: Any) -> List[str]:
        """Return the problems with one parameter value (empty when valid)."""
        spec = self.parameters.get(key)
        if spec is None:
            return []
        problems = []
        if spec["type"] == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                return [f"{key} must be an integer, got {value!r}"]
        elif not isinstance(value, (int, float)) or isinstance(value, bool):
            return [f"{key} must be a number, got {value!r}"]
        if value < spec["min"] or value > spec["max"]:
            problems.append(f"{key}={value} outside [{spec['min']}, {spec['max']}] ({spec['description']})")
        return problems

    def build_config(self, subcommand: str, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        overrides.pop("subcommand", None)
        problems = []
        for key, value in overrides.items():
            problems.extend(self.validate(key, value))
        if overrides.get("output_format", "text") not in OUTPUT_FORMATS:
            problems.append(f"output_format must be one of {OUTPUT_FORMATS}")
        known = {f.name for f in fields(RunConfig)}
        extra = dict(overrides.pop("extra", {}) or {})
        extra.update({k: v for k, v in overrides.items() if k not in known})
        if problems:
            raise ConfigurationError("; ".join(problems), problems)
        values = {k: v for k, v in overrides.items() if k in known}
        return replace(RunConfig(subcommand=subcommand), extra=extra, **values)
