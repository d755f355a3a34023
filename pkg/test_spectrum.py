import math

import numpy as np
import pytest

from agents.spectrum_agent import ModePair, SpectrumAgent
from utils.errors import DomainError, OutOfRangeError


def test_m1_clusters_up_to_65():
    spectrum_agent = SpectrumAgent()
    table = spectrum_agent.enumerate_spectrum(1.0, 65.0)

    assert spectrum_agent.matches_reference(table) == []
    assert [c.value for c in table.clusters] == [1, 5, 9, 13, 17, 25, 29, 37, 41, 45, 49, 53, 61, 65]
    assert [c.multiplicity for c in table.clusters] == [1, 4, 1, 4, 4, 5, 4, 4, 4, 4, 1, 4, 4, 8]
    assert [c.first_label for c in table.clusters] == [1, 2, 6, 7, 11, 15, 20, 24, 28, 32, 36, 37, 41, 45]
    assert table.last_label == 52


def test_cluster_modes_are_admissible():
    table = SpectrumAgent().enumerate_spectrum(1.0, 65.0)
    for cluster in table.clusters:
        for pair in cluster.modes:
            assert (pair.m + pair.n) % 2 == 1
            assert pair.m * pair.m + pair.n * pair.n == cluster.value
    lam_25 = next(c for c in table.clusters if c.value == 25)
    assert {(p.m, p.n) for p in lam_25.modes} == {(3, 4), (4, 3), (5, 0)}


def test_mode_pair_rejects_even_sum():
    with pytest.raises(DomainError):
        ModePair(2, 2)
    with pytest.raises(DomainError):
        ModePair(0, 1)


def test_counting_function_is_strict():
    spectrum_agent = SpectrumAgent()
    table = spectrum_agent.enumerate_spectrum(1.0, 65.0)

    assert spectrum_agent.counting_function(table, 1.0) == 0
    assert spectrum_agent.counting_function(table, 5.0) == 1
    assert spectrum_agent.counting_function(table, 5.0001) == 5
    assert spectrum_agent.counting_function(table, 65.0) == 44
    with pytest.raises(OutOfRangeError):
        spectrum_agent.counting_function(table, 66.0)


def test_labels_and_eigenvalues():
    spectrum_agent = SpectrumAgent()
    table = spectrum_agent.enumerate_spectrum(1.0, 65.0)

    assert spectrum_agent.eigenvalue_at_label(table, 7) == 13
    assert spectrum_agent.eigenvalue_at_label(table, 10) == 13
    assert spectrum_agent.first_label_of(table, 13) == 7
    assert spectrum_agent.first_label_of(table, 9) == 6
    with pytest.raises(OutOfRangeError):
        spectrum_agent.eigenvalue_at_label(table, 53)
    with pytest.raises(OutOfRangeError):
        spectrum_agent.first_label_of(table, 10)


def test_weyl_lower_bound_on_coarse_grid():
    spectrum_agent = SpectrumAgent()
    table = spectrum_agent.enumerate_spectrum(1.0, 2000.0)
    for lam in np.arange(9.0, 2000.0, 7.5):
        assert spectrum_agent.counting_function(table, float(lam)) >= spectrum_agent.weyl_lower_bound(float(lam))


@pytest.mark.slow
def test_weyl_lower_bound_half_integer_grid():
    spectrum_agent = SpectrumAgent()
    table = spectrum_agent.enumerate_spectrum(1.0, 10000.0)

    # Vectorized N(lam) over every half-integer from 9 to 10^4
    values = np.array([c.value for c in table.clusters], dtype=float)
    cumulative = np.concatenate([[0], np.cumsum([c.multiplicity for c in table.clusters])])
    grid = np.arange(9.0, 10000.0 + 0.25, 0.5)
    counts = cumulative[np.searchsorted(values, grid, side="left")]
    bound = math.pi * grid / 4 - 2 * np.sqrt(grid) + 1
    assert np.all(counts >= bound)


def test_general_width():
    spectrum_agent = SpectrumAgent()
    table = spectrum_agent.enumerate_spectrum(2.0, 10.0)
    values = [c.value for c in table.clusters]

    assert values[:3] == pytest.approx([1.0, 2.0, 4.25])
    assert values == sorted(values)
    with pytest.raises(DomainError):
        spectrum_agent.enumerate_spectrum(0.0, 10.0)


def test_run_spectrum_report():
    result = SpectrumAgent().run_spectrum(1.0, 65.0)

    assert result['status'] == 'success'
    assert len(result['report']['clusters']) == 14
    assert list(result['frame'].columns) == ["lambda", "modes", "multiplicity", "labels"]
    assert SpectrumAgent().run_spectrum(-1.0, 65.0)['status'] == 'error'
