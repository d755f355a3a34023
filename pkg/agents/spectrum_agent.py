import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from utils.assistant import Assistant
from utils.errors import DomainError, MoebiusError, OutOfRangeError

# Clusters of M_1 up to 65: eigenvalue -> generating (m, n) pairs
M1_REFERENCE_CLUSTERS = [
    (1, [(1, 0)]),
    (5, [(1, 2), (2, 1)]),
    (9, [(3, 0)]),
    (13, [(2, 3), (3, 2)]),
    (17, [(1, 4), (4, 1)]),
    (25, [(3, 4), (4, 3), (5, 0)]),
    (29, [(2, 5), (5, 2)]),
    (37, [(1, 6), (6, 1)]),
    (41, [(4, 5), (5, 4)]),
    (45, [(3, 6), (6, 3)]),
    (49, [(7, 0)]),
    (53, [(2, 7), (7, 2)]),
    (61, [(5, 6), (6, 5)]),
    (65, [(1, 8), (8, 1), (4, 7), (7, 4)]),
]


@dataclass(frozen=True)
class ModePair:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 1 or self.n < 0 or (self.m + self.n) % 2 == 0:
            raise DomainError(f"({self.m}, {self.n}) is not an admissible mode pair")

    @property
    def multiplicity(self) -> int:
        return 1 if self.n == 0 else 2


@dataclass(frozen=True)
class EigenvalueCluster:
    value: float
    modes: Tuple[ModePair, ...]
    multiplicity: int
    first_label: int
    last_label: int

    def to_dict(self) -> Dict:
        return {
            "value": self.value,
            "modes": [[p.m, p.n] for p in self.modes],
            "multiplicity": self.multiplicity,
            "labels": [self.first_label, self.last_label],
        }


@dataclass(frozen=True)
class SpectrumTable:
    a: float
    lambda_max: float
    clusters: Tuple[EigenvalueCluster, ...]

    @property
    def last_label(self) -> int:
        return self.clusters[-1].last_label if self.clusters else 0

    def to_dict(self) -> Dict:
        return {"a": self.a, "lambda_max": self.lambda_max, "clusters": [c.to_dict() for c in self.clusters]}

    def to_frame(self) -> pd.DataFrame:
        rows = [{
            "lambda": c.value,
            "modes": " ".join(f"({p.m},{p.n})" for p in c.modes),
            "multiplicity": c.multiplicity,
            "labels": f"{c.first_label}-{c.last_label}",
        } for c in self.clusters]
        return pd.DataFrame(rows, columns=["lambda", "modes", "multiplicity", "labels"])


def _mode_order(pair: ModePair) -> Tuple[bool, int, int]:
    return (pair.n == 0, min(pair.m, pair.n), pair.m)


class SpectrumAgent(Assistant):
    def __init__(self):
        super().__init__(
            name="Spectrum Agent",
            description="Dirichlet spectrum of the flat Möbius strip M_a",
            instructions="Enumerate eigenvalue clusters, multiplicities and labels; evaluate the counting function"
        )

    def enumerate_spectrum(self, a: float, lambda_max: float) -> SpectrumTable:
        if not a > 0:
            raise DomainError(f"width parameter a must be positive, got {a}")
        if not lambda_max >= 0:
            raise DomainError(f"lambda_max must be nonnegative, got {lambda_max}")

        exact = a == 1
        values: List[Tuple[float, ModePair]] = []
        m_max = math.isqrt(math.floor(lambda_max))
        for m in range(1, m_max + 1):
            if exact:
                n_max = math.isqrt(math.floor(lambda_max) - m * m)
            else:
                n_max = int(math.floor(a * math.sqrt(max(lambda_max - m * m, 0.0)))) + 1
            for n in range(0, n_max + 1):
                if (m + n) % 2 == 0:
                    continue
                value = m * m + n * n if exact else m * m + n * n / (a * a)
                if value <= lambda_max:
                    values.append((value, ModePair(m, n)))
        values.sort(key=lambda item: item[0])

        grouped: List[Tuple[float, List[ModePair]]] = []
        for value, pair in values:
            if grouped and self._same_value(grouped[-1][0], value, exact):
                grouped[-1][1].append(pair)
            else:
                grouped.append((value, [pair]))

        clusters = []
        label = 1
        for value, pairs in grouped:
            pairs = tuple(sorted(pairs, key=_mode_order))
            mult = sum(p.multiplicity for p in pairs)
            clusters.append(EigenvalueCluster(value, pairs, mult, label, label + mult - 1))
            label += mult
        self.logger.debug("enumerated %d clusters up to %s (a=%s)", len(clusters), lambda_max, a)
        return SpectrumTable(a, lambda_max, tuple(clusters))

    @staticmethod
    def _same_value(reference: float, value: float, exact: bool) -> bool:
        if exact:
            return reference == value
        return abs(value - reference) <= 1e-9 * (1 + abs(value))

    def counting_function(self, table: SpectrumTable, lam: float) -> int:
        """N(lam) = number of eigenvalues strictly below lam, with multiplicity."""
        if lam > table.lambda_max:
            raise OutOfRangeError(f"lambda={lam} beyond the table (lambda_max={table.lambda_max})")
        values = np.array([c.value for c in table.clusters], dtype=float)
        cumulative = np.concatenate([[0], np.cumsum([c.multiplicity for c in table.clusters])])
        return int(cumulative[np.searchsorted(values, lam, side="left")])

    def weyl_lower_bound(self, lam: float) -> float:
        """pi*lam/4 - 2*sqrt(lam) + 1, a lower bound for N(lam) on M_1."""
        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam}")
        return math.pi * lam / 4 - 2 * math.sqrt(lam) + 1

    def eigenvalue_at_label(self, table: SpectrumTable, k: int) -> float:
        if k < 1 or k > table.last_label:
            raise OutOfRangeError(f"label {k} outside 1..{table.last_label}")
        for cluster in table.clusters:
            if cluster.first_label <= k <= cluster.last_label:
                return cluster.value
        raise OutOfRangeError(f"label {k} not found")

    def first_label_of(self, table: SpectrumTable, eigenvalue: float) -> int:
        """Label used for the Courant bound of an eigenfunction with this eigenvalue."""
        for cluster in table.clusters:
            if self._same_value(cluster.value, eigenvalue, table.a == 1):
                return cluster.first_label
        raise OutOfRangeError(f"{eigenvalue} is not an eigenvalue in the table")

    def matches_reference(self, table: SpectrumTable) -> List[str]:
        """Rows where the M_1 table disagrees with the reference clusters up to 65."""
        mismatches = []
        reference = [(v, tuple(sorted((ModePair(*p) for p in pairs), key=_mode_order)))
                     for v, pairs in M1_REFERENCE_CLUSTERS if v <= table.lambda_max]
        got = [(c.value, c.modes) for c in table.clusters if c.value <= 65]
        for i, (expected, actual) in enumerate(zip(reference, got)):
            if expected[0] != actual[0] or set(expected[1]) != set(actual[1]):
                mismatches.append(f"row {i + 1}: expected {expected[0]} {expected[1]}, got {actual[0]} {actual[1]}")
        if len(reference) != len(got):
            mismatches.append(f"expected {len(reference)} clusters, got {len(got)}")
        return mismatches

    def run_spectrum(self, a: float, lambda_max: float) -> Dict:
        try:
            table = self.enumerate_spectrum(a, lambda_max)
            return {'status': 'success', 'table': table, 'report': table.to_dict(), 'frame': table.to_frame()}
        except MoebiusError as e:
            return self._failure(e)
