import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from agents.bifurcation_agent import FAMILY_12, FAMILY_23, BifurcationAgent
from agents.critical_agent import INTERIOR, BOUNDARY, CriticalAgent
from agents.nodal_agent import NodalAgent
from utils.assistant import Assistant
from utils.eigenfunction import EigenfunctionSpec, FamilyParams, family_to_spec
from utils.errors import DomainError, EulerViolationError, InternalConsistencyError, MoebiusError


@dataclass
class EulerLedger:
    """k = omega + b1 - b0 + 1/2 sum(nu - 2) + 1/2 sum(rho)."""
    k: int
    omega: int
    b0: int
    b1: int
    interior_term: float
    boundary_term: float
    lhs_minus_rhs: float
    params: Optional[FamilyParams] = None
    interior_zeros: int = 0
    boundary_zeros: int = 0

    def balance(self, omega: Optional[int] = None) -> float:
        omega = self.omega if omega is None else omega
        return self.k - (omega + self.b1 - self.b0 + self.interior_term + self.boundary_term)

    def to_dict(self) -> Dict:
        payload = {
            "k": self.k,
            "omega": self.omega,
            "b0": self.b0,
            "b1": self.b1,
            "interior_term": self.interior_term,
            "boundary_term": self.boundary_term,
            "lhs_minus_rhs": self.lhs_minus_rhs,
            "interior_zeros": self.interior_zeros,
            "boundary_zeros": self.boundary_zeros,
        }
        if self.params is not None:
            payload.update(self.params.to_dict())
        return payload


class EulerAgent(Assistant):
    def __init__(self, resolution: int = 800, nodal: Optional[NodalAgent] = None,
                 critical: Optional[CriticalAgent] = None, bifurcation_margin: float = 0.05):
        super().__init__(
            name="Euler Agent",
            description="Euler-type formula for nodal partitions of the Möbius strip",
            instructions="Combine domain counts, curve topology, critical zeros and orientability into a balanced ledger"
        )
        self.resolution = resolution
        self.nodal = nodal or NodalAgent()
        self.critical = critical or CriticalAgent()
        self.bifurcation = BifurcationAgent()
        self.bifurcation_margin = bifurcation_margin

    def euler_check(self, spec: EigenfunctionSpec, params: Optional[FamilyParams] = None,
                    resolution: Optional[int] = None) -> EulerLedger:
        grid, domains = self.nodal.resolve_nodal_domains(spec, resolution or self.resolution)

        non_orientable = domains.non_orientable
        if len(non_orientable) > 1:
            raise InternalConsistencyError(f"{len(non_orientable)} non-orientable nodal domains; at most one fits in M_1")

        target = params if params is not None else spec
        zeros = self.critical.locate_critical_zeros(target, grid)
        everything = zeros[INTERIOR] + zeros[BOUNDARY]
        curves = self.nodal.extract_curves(spec, grid, [z.location for z in everything])
        self.critical.incidence(target, everything, curves)

        interior_term = 0.5 * sum(z.nu - 2 for z in zeros[INTERIOR])
        boundary_term = 0.5 * sum(z.rho for z in zeros[BOUNDARY])
        ledger = EulerLedger(
            k=domains.count,
            omega=len(non_orientable),
            b0=curves.b0,
            b1=curves.b1,
            interior_term=interior_term,
            boundary_term=boundary_term,
            lhs_minus_rhs=0.0,
            params=params,
            interior_zeros=len(zeros[INTERIOR]),
            boundary_zeros=len(zeros[BOUNDARY]),
        )
        ledger.lhs_minus_rhs = ledger.balance()
        if ledger.lhs_minus_rhs != 0:
            raise EulerViolationError(
                f"unbalanced ledger: k={ledger.k}, omega={ledger.omega}, b1={ledger.b1}, b0={ledger.b0}, "
                f"interior={interior_term}, boundary={boundary_term}",
                ledger,
            )
        return ledger

    def sweep_points(self, family: Sequence[int], beta_samples: int, theta_samples: int,
                     include_bifurcation: bool = False) -> List[Tuple[float, float]]:
        """Cell midpoints in (beta, theta), pushed off theta_beta by the bifurcation margin."""
        if beta_samples < 3 or theta_samples < 3:
            raise DomainError("sweeps need at least 3 samples per axis")
        family = tuple(int(v) for v in family)
        upper = math.pi / family[1]
        margin = self.bifurcation_margin
        points = []
        for beta in (np.arange(beta_samples) + 0.5) * upper / beta_samples:
            beta = float(beta)
            theta_beta = self.bifurcation.theta_beta(family, beta) if family in (FAMILY_12, FAMILY_23) else None
            for theta in (np.arange(theta_samples) + 0.5) * (math.pi / 2) / theta_samples:
                theta = float(theta)
                if theta_beta is not None and abs(theta - theta_beta) < margin:
                    theta = theta_beta - margin if theta < theta_beta else theta_beta + margin
                    theta = min(max(theta, 1e-3), math.pi / 2 - 1e-3)
                if (beta, theta) not in points:
                    points.append((beta, theta))
            if include_bifurcation and theta_beta is not None:
                points.append((beta, theta_beta))
        return points

    def euler_sweep(self, family: Sequence[int], beta_samples: int, theta_samples: int,
                    include_bifurcation: bool = False, resolution: Optional[int] = None) -> List[EulerLedger]:
        ledgers = []
        points = self.sweep_points(family, beta_samples, theta_samples, include_bifurcation)
        for i, (beta, theta) in enumerate(points):
            params = FamilyParams(tuple(family), beta, theta)
            ledgers.append(self.euler_check(family_to_spec(params), params, resolution))
            self.logger.debug("sweep point %d/%d: beta=%.4f theta=%.4f k=%d",
                              i + 1, len(points), beta, theta, ledgers[-1].k)
        return ledgers

    @staticmethod
    def phase_diagram(ledgers: List[EulerLedger]) -> pd.DataFrame:
        rows = [{
            "beta": ledger.params.beta if ledger.params else np.nan,
            "theta": ledger.params.theta if ledger.params else np.nan,
            "k": ledger.k,
            "omega": ledger.omega,
            "b1": ledger.b1,
        } for ledger in ledgers]
        return pd.DataFrame(rows, columns=["beta", "theta", "k", "omega", "b1"])

    def run_euler(self, spec: Optional[EigenfunctionSpec] = None, params: Optional[FamilyParams] = None,
                  sweep_family: Optional[Sequence[int]] = None, beta_samples: int = 8, theta_samples: int = 8,
                  include_bifurcation: bool = False) -> Dict:
        try:
            if sweep_family is not None:
                ledgers = self.euler_sweep(sweep_family, beta_samples, theta_samples, include_bifurcation)
                frame = self.phase_diagram(ledgers)
                report = {"family": list(sweep_family), "ledgers": [ledger.to_dict() for ledger in ledgers],
                          "counts": sorted(set(frame["k"].tolist()))}
                return {'status': 'success', 'ledgers': ledgers, 'frame': frame, 'report': report}
            if spec is None:
                spec = family_to_spec(params)
            ledger = self.euler_check(spec, params)
            return {'status': 'success', 'ledger': ledger, 'report': ledger.to_dict()}
        except MoebiusError as e:
            return self._failure(e)
