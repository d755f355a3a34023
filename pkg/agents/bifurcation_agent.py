import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import optimize

from utils.assistant import Assistant
from utils.errors import DomainError, MoebiusError, PoleError, RootFindingError

FAMILY_12 = (1, 2)
FAMILY_23 = (2, 3)
BISECTION_MARGIN = 1e-10
NEAR_DEGENERATE = 1e-6
# Poles of f(beta, .) on [0, pi]
F_POLES = (0.0, math.pi / 3, 2 * math.pi / 3, math.pi)


def arccot(t: float) -> float:
    """Inverse cotangent with values in (0, pi)."""
    return math.pi / 2 - math.atan(t)


@dataclass(frozen=True)
class BifurcationResult:
    family: Tuple[int, int]
    beta: float
    y_beta: float
    m_beta: float
    theta_beta: float
    residuals: Tuple[float, float]
    near_degenerate: bool = False

    @property
    def cot_theta_beta(self) -> float:
        return self.m_beta

    def to_dict(self) -> Dict:
        return {
            "family": list(self.family),
            "beta": self.beta,
            "y_beta": self.y_beta,
            "m_beta": self.m_beta,
            "theta_beta": self.theta_beta,
            "cot_theta_beta": self.cot_theta_beta,
            "residuals": list(self.residuals),
            "near_degenerate": self.near_degenerate,
        }


class BifurcationAgent(Assistant):
    def __init__(self, y_beta_iterations: int = 100, polish_steps: int = 3):
        super().__init__(
            name="Bifurcation Agent",
            description="Bifurcation values y_beta, m_beta, theta_beta of the [1,2] and [2,3] families",
            instructions="Solve the defining equations of the bifurcation angle and report residuals"
        )
        self.y_beta_iterations = y_beta_iterations
        self.polish_steps = polish_steps

    # [2,3] auxiliary functions

    @staticmethod
    def h(t: float) -> float:
        return 0.5 * t * (5 + 3 * t ** 4) / (1 + 5 * t * t)

    @staticmethod
    def h_prime(t: float) -> float:
        return 2.5 * (3 * t * t - 1) ** 2 * (t * t + 1) / (1 + 5 * t * t) ** 2

    @staticmethod
    def ell(t: float) -> float:
        return 2 * t ** 3 * (5 + t * t) / (3 + 5 * t ** 4)

    def f(self, beta: float, y: float) -> float:
        """3/2 sin(2y + beta) / sin(3y)."""
        s = math.sin(3 * y)
        if abs(s) < 1e-14:
            raise PoleError(f"f(beta, .) has a pole at y={y}", self.branch_of(beta, y))
        return 1.5 * math.sin(2 * y + beta) / s

    @staticmethod
    def g(beta: float, y: float) -> float:
        return 2 * math.cos(2 * y + beta) * math.sin(3 * y) - 3 * math.cos(3 * y) * math.sin(2 * y + beta)

    @staticmethod
    def g_prime(beta: float, y: float) -> float:
        """d/dy g(beta, y) = 5 sin(3y) sin(2y + beta)."""
        return 5 * math.sin(3 * y) * math.sin(2 * y + beta)

    def df_dy(self, beta: float, y: float) -> float:
        s = math.sin(3 * y)
        if abs(s) < 1e-14:
            raise PoleError(f"df/dy has a pole at y={y}", self.branch_of(beta, y))
        return 3 * self.g(beta, y) / (2 * s * s)

    def branch_of(self, beta: float, y: float) -> Dict:
        """Monotone branch of f(beta, .) containing y: endpoints and direction."""
        ends = self.branch_endpoints(beta)
        y_mod = y % math.pi
        for lo, hi in zip(ends[:-1], ends[1:]):
            if lo - 1e-12 <= y_mod <= hi + 1e-12:
                mid = 0.5 * (lo + hi)
                return {"lo": lo, "hi": hi, "increasing": self.g(beta, mid) * math.sin(3 * mid) ** 2 > 0}
        return {"lo": None, "hi": None, "increasing": None}

    def branch_endpoints(self, beta: float) -> Tuple[float, ...]:
        """Poles of f together with the minimum point y_beta when beta is inside (0, pi/3)."""
        ends = list(F_POLES)
        if 0 < beta < math.pi / 3:
            ends.append(self.solve_y_beta(FAMILY_23, beta))
        return tuple(sorted(ends))

    # [1,2] auxiliary functions

    @staticmethod
    def f12(beta: float, y: float) -> float:
        """2 sin(y + beta) / sin(2y); cot(theta_beta) is its minimum."""
        return 2 * math.sin(y + beta) / math.sin(2 * y)

    @staticmethod
    def g12(beta: float, y: float) -> float:
        return math.cos(y) ** 3 * math.sin(beta) - math.cos(beta) * math.sin(y) ** 3

    @staticmethod
    def g12_prime(beta: float, y: float) -> float:
        return -3 * math.sin(y) * math.cos(y) * (math.cos(y) * math.sin(beta) + math.cos(beta) * math.sin(y))

    # solvers

    def _family(self, family) -> Tuple[int, int]:
        family = tuple(int(v) for v in family)
        if family not in (FAMILY_12, FAMILY_23):
            raise DomainError(f"bifurcation values exist for families [1,2] and [2,3], not {list(family)}")
        return family

    def _upper(self, family: Tuple[int, int]) -> float:
        return math.pi / 3 if family == FAMILY_23 else math.pi / 2

    def solve_y_beta(self, family, beta: float) -> float:
        family = self._family(family)
        upper = self._upper(family)
        if not (0 < beta < upper):
            raise DomainError(f"beta={beta} outside the open interval (0, {upper:.6f}) for family {list(family)}")

        if family == FAMILY_23:
            def phase(y):
                return arccot(self.h(1 / math.tan(y))) - beta

            def defining(y):
                return self.g(beta, y)

            def defining_prime(y):
                return self.g_prime(beta, y)
        else:
            def phase(y):
                return arccot(1 / math.tan(y) ** 3) - beta

            def defining(y):
                return self.g12(beta, y)

            def defining_prime(y):
                return self.g12_prime(beta, y)

        try:
            y = optimize.bisect(phase, BISECTION_MARGIN, upper - BISECTION_MARGIN,
                                xtol=1e-16, maxiter=self.y_beta_iterations, disp=False)
        except ValueError as e:
            raise RootFindingError(f"y_beta bracket failed for beta={beta}: {e}") from e
        for _ in range(self.polish_steps):
            slope = defining_prime(y)
            if slope == 0:
                break
            candidate = y - defining(y) / slope
            if not (0 < candidate < upper) or abs(defining(candidate)) > abs(defining(y)):
                break
            y = candidate
        return y

    def solve_theta_beta(self, family, beta: float) -> BifurcationResult:
        family = self._family(family)
        y = self.solve_y_beta(family, beta)
        if family == FAMILY_23:
            m = self.f(beta, y)
            theta = arccot(m)
            residuals = (
                abs(self.g(beta, y)),
                abs(2 * math.cos(theta) * math.sin(3 * y) - 3 * math.sin(theta) * math.sin(2 * y + beta)),
            )
        else:
            m = self.f12(beta, y)
            theta = arccot(m)
            residuals = (
                abs(self.g12(beta, y)),
                abs(math.cos(theta) * math.sin(2 * y) - 2 * math.sin(theta) * math.sin(y + beta)),
            )
        upper = self._upper(family)
        near = y < NEAR_DEGENERATE or upper - y < NEAR_DEGENERATE
        if near:
            self.logger.warning("beta=%g is near-degenerate for family %s (y_beta=%g)", beta, list(family), y)
        return BifurcationResult(family, beta, y, m, theta, residuals, near)

    def theta_beta(self, family, beta: float) -> Optional[float]:
        """theta_beta, or None at the decomposed endpoints of the beta range."""
        family = self._family(family)
        if not (0 < beta < self._upper(family)):
            return None
        return self.solve_theta_beta(family, beta).theta_beta

    def sweep(self, family, samples: int) -> pd.DataFrame:
        family = self._family(family)
        upper = self._upper(family)
        betas = (np.arange(samples) + 0.5) * upper / samples
        rows = [self.solve_theta_beta(family, float(b)).to_dict() for b in betas]
        frame = pd.DataFrame(rows)
        return frame[["beta", "y_beta", "m_beta", "theta_beta", "cot_theta_beta", "near_degenerate"]]

    def run_bifurcation(self, family, beta: Optional[float] = None, sweep: Optional[int] = None) -> Dict:
        try:
            if sweep:
                frame = self.sweep(family, sweep)
                return {'status': 'success', 'frame': frame, 'report': {"family": list(family), "rows": frame.to_dict("records")}}
            result = self.solve_theta_beta(family, beta)
            return {'status': 'success', 'result': result, 'report': result.to_dict()}
        except MoebiusError as e:
            return self._failure(e)
