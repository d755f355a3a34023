"""
Dirichlet eigenfunctions of the flat Möbius strip M_1.

M_1 is (0, pi) x R divided by the glide reflection (x, y) -> (pi - x, y + pi).
A mode sin(mx) * {sin, cos}(ny) descends to the quotient iff m + n is odd, and
its eigenvalue is m^2 + n^2. Everything here is vectorized over numpy arrays.
"""

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union

import numpy as np

from utils.errors import AdmissibilityError, DegenerateSpecError, DomainError, UnsupportedOrderError

_LOGGER = logging.getLogger(__name__)

SIN = "sin"
COS = "cos"
TWO_PI = 2.0 * math.pi
PRUNE_BELOW = 1e-15
MAX_DERIVATIVE_ORDER = 4

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class TrigMode:
    m: int
    n: int
    kind: str
    coefficient: float

    def __post_init__(self):
        if self.m < 1 or self.n < 0:
            raise DomainError(f"mode ({self.m}, {self.n}) needs m >= 1 and n >= 0")
        if (self.m + self.n) % 2 == 0:
            raise AdmissibilityError(f"mode ({self.m}, {self.n}) has m + n even")
        if self.kind not in (SIN, COS):
            raise DomainError(f"mode kind must be '{SIN}' or '{COS}', got {self.kind!r}")
        if self.n == 0 and self.kind != COS:
            raise DomainError("an n = 0 mode is sin(mx) alone and must use kind 'cos'")

    @property
    def eigenvalue(self) -> int:
        return self.m * self.m + self.n * self.n


@dataclass(frozen=True)
class EigenfunctionSpec:
    modes: Tuple[TrigMode, ...]
    eigenvalue: float

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise DegenerateSpecError("an eigenfunction needs at least one mode")
        for mode in self.modes:
            if mode.eigenvalue != self.eigenvalue:
                raise DomainError(
                    f"mode ({mode.m}, {mode.n}) has eigenvalue {mode.eigenvalue}, spec says {self.eigenvalue}"
                )
        if all(mode.coefficient == 0.0 for mode in self.modes):
            raise DegenerateSpecError("all mode coefficients are zero")

    def derivative_scale(self, order: int) -> float:
        """sum |c| * frequency^order, the yardstick for deciding a derivative vanishes."""
        freq = math.sqrt(self.eigenvalue)
        return sum(abs(mode.coefficient) for mode in self.modes) * freq ** order

    def to_dict(self) -> Dict:
        return {
            "modes": [{"m": md.m, "n": md.n, "kind": md.kind, "c": md.coefficient} for md in self.modes],
            "eigenvalue": self.eigenvalue,
        }

    @classmethod
    def from_dict(cls, payload: Dict) -> "EigenfunctionSpec":
        try:
            modes = []
            for md in payload["modes"]:
                n = int(md["n"])
                modes.append(TrigMode(int(md["m"]), n, md.get("kind", COS if n == 0 else SIN), float(md["c"])))
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise DomainError(f"malformed spec payload: {e}") from e
        eigenvalue = payload.get("eigenvalue", modes[0].eigenvalue if modes else 0)
        return cls(tuple(modes), int(eigenvalue) if float(eigenvalue).is_integer() else float(eigenvalue))


@dataclass(frozen=True)
class FamilyParams:
    family: Tuple[int, int]
    beta: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "family", tuple(int(v) for v in self.family))
        if len(self.family) != 2:
            raise DomainError(f"family must be a pair (m, n), got {self.family}")
        if not math.isfinite(self.beta) or not math.isfinite(self.theta):
            raise DomainError("beta and theta must be finite")
        beta = math.fmod(self.beta, TWO_PI)
        if beta <= -math.pi:
            beta += TWO_PI
        elif beta > math.pi + 1e-12:
            beta -= TWO_PI
        object.__setattr__(self, "beta", beta)
        if not (-1e-12 <= self.theta <= math.pi / 2 + 1e-12):
            raise DomainError(f"theta={self.theta} outside [0, pi/2]")

    @property
    def m(self) -> int:
        return self.family[0]

    @property
    def n(self) -> int:
        return self.family[1]

    @property
    def is_decomposed(self) -> bool:
        return abs(self.theta) < 1e-15 or abs(self.theta - math.pi / 2) < 1e-15

    @property
    def canonical_beta_range(self) -> Tuple[float, float]:
        """Range covering the family up to translation: [0, pi/n] for [m, n]."""
        return 0.0, math.pi / self.n

    def to_dict(self) -> Dict:
        return {"family": list(self.family), "beta": self.beta, "theta": self.theta}


def _check_family(m: int, n: int) -> None:
    if m < 1 or n < 1:
        raise DomainError(f"family [{m},{n}] needs positive frequencies")
    if (m + n) % 2 == 0:
        raise AdmissibilityError(f"family [{m},{n}] has m + n even")
    if m == n:
        raise AdmissibilityError(f"family [{m},{n}] needs m != n")


def build_spec(terms: Iterable[Tuple[int, int, str, float]]) -> EigenfunctionSpec:
    """Collect (m, n, kind, c) terms, merge duplicates and prune tiny coefficients."""
    acc: Dict[Tuple[int, int, str], float] = {}
    order: List[Tuple[int, int, str]] = []
    for m, n, kind, c in terms:
        key = (m, n, kind)
        if key not in acc:
            acc[key] = 0.0
            order.append(key)
        acc[key] += c
    modes = [TrigMode(m, n, kind, acc[(m, n, kind)]) for (m, n, kind) in order if abs(acc[(m, n, kind)]) >= PRUNE_BELOW]
    if not modes:
        raise DegenerateSpecError("every coefficient was pruned")
    return EigenfunctionSpec(tuple(modes), modes[0].eigenvalue)


def family_to_spec(params: FamilyParams, m: Optional[int] = None, n: Optional[int] = None) -> EigenfunctionSpec:
    """cos(theta) sin(mx) sin(ny) + sin(theta) sin(nx) sin(my + beta) in the real basis."""
    m = params.m if m is None else m
    n = params.n if n is None else n
    _check_family(m, n)
    ct, st = math.cos(params.theta), math.sin(params.theta)
    cb, sb = math.cos(params.beta), math.sin(params.beta)
    return build_spec([
        (m, n, SIN, ct),
        (n, m, SIN, st * cb),
        (n, m, COS, st * sb),
    ])


def stern_spec(r: int, epsilon: float) -> EigenfunctionSpec:
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    if epsilon < 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if epsilon == 0:
        _LOGGER.warning("epsilon = 0 is the symmetric degenerate case; the two-domain property needs epsilon > 0")
    return build_spec([(1, 2 * r, SIN, 1.0), (2 * r, 1, SIN, 1.0 + epsilon)])


def _rotated_sin(k: int, arg: np.ndarray) -> np.ndarray:
    """sin(arg + k*pi/2) without rounding the phase."""
    k %= 4
    if k == 0:
        return np.sin(arg)
    if k == 1:
        return np.cos(arg)
    if k == 2:
        return -np.sin(arg)
    return -np.cos(arg)


def _y_factor(mode: TrigMode, y: np.ndarray, order_y: int = 0) -> np.ndarray:
    if mode.n == 0:
        return np.ones_like(y) if order_y == 0 else np.zeros_like(y)
    shift = order_y + (1 if mode.kind == COS else 0)
    return mode.n ** order_y * _rotated_sin(shift, mode.n * y)


def _sin_ratio(m: int, x: np.ndarray) -> np.ndarray:
    """U_{m-1}(cos x) = sin(mx)/sin(x), finite at x = 0 and pi."""
    c = np.cos(x)
    u_prev = np.zeros_like(c)
    u = np.ones_like(c)
    for _ in range(m - 1):
        u_prev, u = u, 2.0 * c * u - u_prev
    return u


def evaluate(spec: EigenfunctionSpec, x: ArrayLike, y: ArrayLike) -> ArrayLike:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.mod(np.asarray(y, dtype=float), TWO_PI))
    total = np.zeros(x.shape)
    for mode in spec.modes:
        total += mode.coefficient * np.sin(mode.m * x) * _y_factor(mode, y)
    return total if total.ndim else float(total)


def reduced_value(spec: EigenfunctionSpec, x: ArrayLike, y: ArrayLike) -> ArrayLike:
    """Phi / sin(x), extended continuously to x = 0 and x = pi."""
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.mod(np.asarray(y, dtype=float), TWO_PI))
    total = np.zeros(x.shape)
    for mode in spec.modes:
        total += mode.coefficient * _sin_ratio(mode.m, x) * _y_factor(mode, y)
    return total if total.ndim else float(total)


def evaluate_on_grid(spec: EigenfunctionSpec, xs: np.ndarray, ys: np.ndarray, reduced: bool = False) -> np.ndarray:
    """Values on the tensor grid xs x ys, shape (len(xs), len(ys))."""
    xs = np.asarray(xs, dtype=float)
    ys = np.mod(np.asarray(ys, dtype=float), TWO_PI)
    by_m: Dict[int, np.ndarray] = {}
    for mode in spec.modes:
        by_m[mode.m] = by_m.get(mode.m, 0.0) + mode.coefficient * _y_factor(mode, ys)
    out = np.zeros((xs.size, ys.size))
    for m, yfac in by_m.items():
        xfac = _sin_ratio(m, xs) if reduced else np.sin(m * xs)
        out += np.outer(xfac, yfac)
    return out


def partial_derivative(spec: EigenfunctionSpec, x: ArrayLike, y: ArrayLike, order_x: int, order_y: int) -> ArrayLike:
    if order_x < 0 or order_y < 0:
        raise DomainError("derivative orders must be nonnegative")
    if order_x + order_y > MAX_DERIVATIVE_ORDER:
        raise UnsupportedOrderError(f"total order {order_x + order_y} > {MAX_DERIVATIVE_ORDER}")
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.mod(np.asarray(y, dtype=float), TWO_PI))
    total = np.zeros(x.shape)
    for mode in spec.modes:
        xfac = mode.m ** order_x * _rotated_sin(order_x, mode.m * x)
        total += mode.coefficient * xfac * _y_factor(mode, y, order_y)
    return total if total.ndim else float(total)


def gradient(spec: EigenfunctionSpec, x: ArrayLike, y: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    return partial_derivative(spec, x, y, 1, 0), partial_derivative(spec, x, y, 0, 1)


def hessian(spec: EigenfunctionSpec, x: ArrayLike, y: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    return (
        partial_derivative(spec, x, y, 2, 0),
        partial_derivative(spec, x, y, 1, 1),
        partial_derivative(spec, x, y, 0, 2),
    )


def apply_translation(spec: EigenfunctionSpec, t: float) -> EigenfunctionSpec:
    """Spec of Phi(x, y - t)."""
    t = math.fmod(t, TWO_PI)
    terms = []
    for mode in spec.modes:
        c = mode.coefficient
        if mode.n == 0:
            terms.append((mode.m, 0, COS, c))
            continue
        cn, sn = math.cos(mode.n * t), math.sin(mode.n * t)
        if mode.kind == SIN:
            terms += [(mode.m, mode.n, SIN, c * cn), (mode.m, mode.n, COS, -c * sn)]
        else:
            terms += [(mode.m, mode.n, COS, c * cn), (mode.m, mode.n, SIN, c * sn)]
    return build_spec(terms)


def checkerboard_value(beta: float, x: ArrayLike, y: ArrayLike) -> ArrayLike:
    """P_beta = sin(2x) sin(3y) sin(3x) sin(2y + beta); the [2,3] nodal set avoids P_beta > 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    value = np.sin(2 * x) * np.sin(3 * y) * np.sin(3 * x) * np.sin(2 * y + beta)
    return value if value.ndim else float(value)


def lines_in_period(phase: float, freq: int) -> List[float]:
    """Solutions y in [0, pi) of sin(freq*y + phase) = 0."""
    ys = []
    for k in range(-2 * freq - 2, 2 * freq + 3):
        y = (k * math.pi - phase) / freq
        if -1e-12 <= y < math.pi - 1e-12:
            y = max(y, 0.0)
            if all(abs(y - other) > 1e-12 for other in ys):
                ys.append(y)
    return sorted(ys)


def common_zeros(beta: float) -> List[Tuple[float, float]]:
    """Interior points where every member of the [2,3] family at this beta vanishes."""
    points = [(math.pi / 2, y) for y in lines_in_period(beta, 2)]
    for x in (math.pi / 3, 2 * math.pi / 3):
        points += [(x, y) for y in (0.0, math.pi / 3, 2 * math.pi / 3)]
    return sorted(points, key=lambda p: (p[1], p[0]))


def identically_vanishing_lines(params: FamilyParams, samples: int = 64,
                                candidates: int = 257) -> List[Tuple[str, float]]:
    """Coordinate lines {x = xi} or {y = eta} on which Phi vanishes at every sample."""
    spec = family_to_spec(params)
    scale = spec.derivative_scale(0)
    along = np.linspace(0.0, math.pi, samples + 2)[1:-1]
    xs = np.concatenate([np.linspace(0, math.pi, candidates)[1:-1], [math.pi / 3, math.pi / 2, 2 * math.pi / 3]])
    special_y = [0.0, math.pi / 3, 2 * math.pi / 3, math.pi] + lines_in_period(params.beta, params.m)
    ys = np.concatenate([np.linspace(0, math.pi, candidates), special_y])
    found: List[Tuple[str, float]] = []
    for axis, values in (("x", xs), ("y", ys)):
        for value in np.unique(values):
            if any(a == axis and abs(value - v) < 1e-9 for a, v in found):
                continue
            px, py = (np.full_like(along, value), along) if axis == "x" else (along, np.full_like(along, value))
            if np.max(np.abs(evaluate(spec, px, py))) < 1e-12 * scale:
                found.append((axis, float(value)))
    return found


def load_spec(path: Union[str, Path]) -> EigenfunctionSpec:
    with open(path, "r", encoding="utf-8") as f:
        return EigenfunctionSpec.from_dict(json.load(f))
