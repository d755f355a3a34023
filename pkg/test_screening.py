import math

import pytest
from scipy import special

from agents.screening_agent import ScreeningAgent
from agents.spectrum_agent import SpectrumAgent
from utils.bessel import J01, bessel_j0_series, bisect_j01, faber_krahn_constant
from utils.errors import DomainError, OutOfRangeError, ScreeningError

FABER_KRAHN_RATIOS = {
    9: 4.8891, 13: 7.0620, 17: 9.2349, 25: 13.5807, 29: 15.7536, 37: 20.0995,
    41: 22.2724, 45: 24.4453, 49: 26.6182, 53: 28.7911, 61: 33.1370, 65: 35.3099,
}


def test_j01_constant():
    assert J01 == pytest.approx(special.jn_zeros(0, 1)[0], abs=1e-12)
    assert bisect_j01() == pytest.approx(J01, abs=1e-12)
    assert abs(bessel_j0_series(J01)) < 1e-12
    assert faber_krahn_constant() == pytest.approx(math.pi * J01 ** 2)
    with pytest.raises(ValueError):
        bisect_j01(3.0, 4.0)


@pytest.mark.parametrize("lam,expected", sorted(FABER_KRAHN_RATIOS.items()))
def test_faber_krahn_ratios(lam, expected):
    assert ScreeningAgent().faber_krahn_ratio(lam) == pytest.approx(expected, abs=5e-5)


def test_weyl_cutoff_is_64():
    screening_agent = ScreeningAgent()

    assert screening_agent.weyl_root() == pytest.approx(7.094, abs=1e-3)
    assert screening_agent.weyl_quadratic(screening_agent.weyl_root()) == pytest.approx(0.0, abs=1e-9)
    assert screening_agent.weyl_quadratic(8.0) < 0
    assert screening_agent.weyl_cutoff() == 64.0


def test_screen_survivors():
    # 1. Spectrum up to 65
    table = SpectrumAgent().enumerate_spectrum(1.0, 65.0)

    # 2. Screen it
    report = ScreeningAgent().screen(table)

    assert report.candidates_after_multiplicity == (1, 2, 6, 7, 11, 15, 20, 24, 28, 32, 36, 37, 41, 45)
    assert report.before_faber_krahn == (1, 2, 6, 7, 11, 15, 20, 24, 28, 32, 36, 37, 41)
    assert report.survivors == (1, 2, 7)
    assert report.weyl_cutoff == 64.0
    assert set(report.to_frame()["verdict"]) == {"candidate", "weyl", "faber-krahn"}


def test_screen_needs_eigenvalues_to_cutoff():
    table = SpectrumAgent().enumerate_spectrum(1.0, 50.0)
    with pytest.raises(OutOfRangeError):
        ScreeningAgent().screen(table)


def test_screen_needs_the_cluster_past_the_cutoff():
    # 64 is the cutoff itself; the table must reach the 65 cluster
    with pytest.raises(OutOfRangeError):
        ScreeningAgent().screen(SpectrumAgent().enumerate_spectrum(1.0, 64.0))

    report = ScreeningAgent().screen(SpectrumAgent().enumerate_spectrum(1.0, 65.0))
    assert report.candidates_after_multiplicity[-1] == 45


def test_tampered_j01_is_rejected():
    screening_agent = ScreeningAgent(j01=2.0)
    with pytest.raises(ScreeningError):
        screening_agent.weyl_root()

    result = screening_agent.run_screen()
    assert result['status'] == 'error'
    assert result['error_type'] == 'ScreeningError'


def test_faber_krahn_ratio_domain():
    with pytest.raises(DomainError):
        ScreeningAgent().faber_krahn_ratio(0.0)
