import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import pandas as pd

from agents.spectrum_agent import SpectrumAgent, SpectrumTable
from utils.assistant import Assistant
from utils.bessel import J01
from utils.errors import DomainError, MoebiusError, OutOfRangeError, ScreeningError

# Below this label a Courant-sharp eigenfunction may have fewer than 4 domains and the
# Faber-Krahn count does not apply.
FABER_KRAHN_MIN_LABEL = 4


@dataclass(frozen=True)
class ScreeningReport:
    candidates_after_multiplicity: Tuple[int, ...]
    fk_ratios: Dict[int, float]
    weyl_cutoff: float
    weyl_root: float
    survivors: Tuple[int, ...]
    eigenvalues: Dict[int, float] = field(default_factory=dict)
    j01: float = J01

    @property
    def before_faber_krahn(self) -> Tuple[int, ...]:
        """Candidates below the Weyl cutoff, before the Faber-Krahn test."""
        return tuple(k for k in self.candidates_after_multiplicity if self.eigenvalues[k] < self.weyl_cutoff)

    def to_dict(self) -> Dict:
        return {
            "candidates_after_multiplicity": list(self.candidates_after_multiplicity),
            "before_faber_krahn": list(self.before_faber_krahn),
            "fk_ratios": {str(k): round(v, 10) for k, v in self.fk_ratios.items()},
            "weyl_cutoff": self.weyl_cutoff,
            "weyl_root": self.weyl_root,
            "survivors": list(self.survivors),
            "j01": self.j01,
        }

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for k in self.candidates_after_multiplicity:
            lam = self.eigenvalues[k]
            if k in self.survivors:
                verdict = "candidate"
            elif lam >= self.weyl_cutoff:
                verdict = "weyl"
            else:
                verdict = "faber-krahn"
            rows.append({"label": k, "lambda": lam, "lambda*pi/j01^2": round(self.fk_ratios[k], 4), "verdict": verdict})
        return pd.DataFrame(rows, columns=["label", "lambda", "lambda*pi/j01^2", "verdict"])


class ScreeningAgent(Assistant):
    def __init__(self, j01: float = J01):
        super().__init__(
            name="Screening Agent",
            description="Courant-sharp screening by multiplicity, Weyl cutoff and Faber-Krahn",
            instructions="Filter eigenvalue labels that cannot be Courant-sharp and report the survivors"
        )
        self.j01 = j01
        self.spectrum = SpectrumAgent()

    def multiplicity_filter(self, table: SpectrumTable) -> List[int]:
        """First label of every cluster: lambda_{k-1} < lambda_k."""
        if not table.clusters:
            raise OutOfRangeError("empty spectrum table")
        return [c.first_label for c in table.clusters]

    def faber_krahn_ratio(self, lam: float, j01: Optional[float] = None) -> float:
        if lam <= 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        j01 = self.j01 if j01 is None else j01
        return lam * math.pi / (j01 * j01)

    def weyl_quadratic(self, x: float, j01: Optional[float] = None) -> float:
        """P(x) = (pi/j01^2 - pi/4) x^2 + 2x - 2; a Courant-sharp lambda_k needs P(sqrt(lambda_k)) >= 0."""
        j01 = self.j01 if j01 is None else j01
        return (math.pi / (j01 * j01) - math.pi / 4) * x * x + 2 * x - 2

    def weyl_root(self, j01: Optional[float] = None) -> float:
        """Largest real root of the quadratic; P < 0 beyond it."""
        j01 = self.j01 if j01 is None else j01
        lead = math.pi / (j01 * j01) - math.pi / 4
        if lead >= 0:
            raise ScreeningError(f"j01={j01} gives a quadratic with leading coefficient {lead:.4g} >= 0; no finite cutoff")
        disc = 4 + 8 * lead
        if disc < 0:
            return 0.0
        return max((-2 + math.sqrt(disc)) / (2 * lead), (-2 - math.sqrt(disc)) / (2 * lead))

    def weyl_cutoff(self, j01: Optional[float] = None) -> float:
        """Integer square above the root: lambda_k < cutoff for every Courant-sharp label (64 for M_1)."""
        root = self.weyl_root(j01)
        x = math.ceil(root)
        if x == root:
            x += 1
        return float(x * x)

    def screen(self, table: SpectrumTable, j01: Optional[float] = None) -> ScreeningReport:
        j01 = self.j01 if j01 is None else j01
        cutoff = self.weyl_cutoff(j01)
        # the first cluster at or above the cutoff closes the last label range below it (65 for M_1)
        if not any(c.value >= cutoff for c in table.clusters):
            raise OutOfRangeError(f"table stops at {table.lambda_max}, screening needs a cluster at or above {cutoff}")

        candidates = self.multiplicity_filter(table)
        eigenvalues = {k: self.spectrum.eigenvalue_at_label(table, k) for k in candidates}
        ratios = {k: self.faber_krahn_ratio(eigenvalues[k], j01) for k in candidates}
        survivors = tuple(
            k for k in candidates
            if eigenvalues[k] < cutoff and (k < FABER_KRAHN_MIN_LABEL or k <= ratios[k])
        )
        self.logger.debug("screening: %d candidates, cutoff %s, survivors %s", len(candidates), cutoff, survivors)
        return ScreeningReport(tuple(candidates), ratios, cutoff, self.weyl_root(j01), survivors, eigenvalues, j01)

    def run_screen(self, lambda_max: float = 65.0, j01: Optional[float] = None) -> Dict:
        try:
            table = self.spectrum.enumerate_spectrum(1.0, lambda_max)
            report = self.screen(table, j01)
            return {'status': 'success', 'screening': report, 'report': report.to_dict(), 'frame': report.to_frame()}
        except MoebiusError as e:
            return self._failure(e)
