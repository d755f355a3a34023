"""
Named eigenfunctions used by the CLI and the reproduction pipeline.
"""

from typing import Callable, Dict

from utils.eigenfunction import COS, EigenfunctionSpec, build_spec, stern_spec
from utils.errors import DomainError


def sine_strip(m: int) -> EigenfunctionSpec:
    """sin(mx), constant along the strip; admissible for odd m."""
    return build_spec([(m, 0, COS, 1.0)])


def stern_preset(r: int, epsilon: float = 0.01) -> EigenfunctionSpec:
    return stern_spec(r, epsilon)


# Map preset names to their spec builders
EIGENFUNCTION_PRESETS: Dict[str, Callable[[], EigenfunctionSpec]] = {
    'sin1': lambda: sine_strip(1),
    'sin3': lambda: sine_strip(3),
    'sin5': lambda: sine_strip(5),
    'stern2': lambda: stern_preset(2),
    'stern3': lambda: stern_preset(3),
}


def get_preset(name: str) -> EigenfunctionSpec:
    try:
        return EIGENFUNCTION_PRESETS[name]()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(EIGENFUNCTION_PRESETS)}") from None
