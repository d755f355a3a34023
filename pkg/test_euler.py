import math

import pytest

from agents.bifurcation_agent import FAMILY_23, BifurcationAgent
from agents.euler_agent import EulerAgent
from utils.eigenfunction import FamilyParams, family_to_spec
from utils.errors import DomainError, EulerViolationError
from utils.presets import get_preset, sine_strip

RESOLUTION = 200


@pytest.mark.parametrize("m,k,b1", [(1, 1, 1), (3, 2, 2), (5, 3, 3)])
def test_sine_strip_ledgers(m, k, b1):
    ledger = EulerAgent(resolution=RESOLUTION).euler_check(sine_strip(m))

    assert ledger.k == k
    assert ledger.omega == 1
    assert ledger.b1 == b1
    assert ledger.interior_zeros == 0
    assert ledger.boundary_zeros == 0
    assert ledger.lhs_minus_rhs == 0


@pytest.mark.parametrize("beta,theta,k", [
    (math.pi / 6, 0.0, 6),
    (math.pi / 6, math.pi / 2, 6),
    (0.0, 0.2, 4),
    (0.0, math.pi / 4, 4),
    (0.0, 1.2, 4),
    (math.pi / 3, 0.2, 4),
    (math.pi / 3, math.pi / 4, 4),
    (math.pi / 3, 1.2, 4),
])
def test_family_23_special_ledgers(beta, theta, k):
    params = FamilyParams(FAMILY_23, beta, theta)
    ledger = EulerAgent(resolution=RESOLUTION).euler_check(family_to_spec(params), params)

    assert ledger.k == k
    assert ledger.omega == 0
    assert ledger.b1 == 1


def test_family_23_orientability_switches_at_theta_beta():
    euler_agent = EulerAgent(resolution=RESOLUTION)
    beta = math.pi / 4
    theta_beta = BifurcationAgent().theta_beta(FAMILY_23, beta)

    below = FamilyParams(FAMILY_23, beta, theta_beta - 0.2)
    ledger = euler_agent.euler_check(family_to_spec(below), below)
    assert (ledger.k, ledger.omega, ledger.boundary_zeros) == (3, 0, 6)

    above = FamilyParams(FAMILY_23, beta, theta_beta + 0.2)
    ledger = euler_agent.euler_check(family_to_spec(above), above)
    assert (ledger.k, ledger.omega, ledger.boundary_zeros) == (3, 1, 4)


def test_family_12_ledger():
    params = FamilyParams((1, 2), 0.9, 1.2)
    ledger = EulerAgent(resolution=RESOLUTION).euler_check(family_to_spec(params), params)
    assert ledger.k == 2
    # theta above theta_beta: one non-orientable domain
    assert ledger.omega == 1


@pytest.mark.slow
def test_stern_ledger():
    ledger = EulerAgent(resolution=800).euler_check(get_preset("stern2"))

    assert (ledger.k, ledger.omega, ledger.b1) == (2, 0, 1)
    assert ledger.interior_zeros == 1
    assert ledger.boundary_zeros == 2


def test_dropping_omega_breaks_the_balance():
    ledger = EulerAgent(resolution=RESOLUTION).euler_check(sine_strip(3))
    assert ledger.balance() == 0
    assert ledger.balance(omega=0) == 1


def test_unbalanced_ledger_raises(monkeypatch):
    euler_agent = EulerAgent(resolution=RESOLUTION)
    monkeypatch.setattr(euler_agent.critical, "locate_critical_zeros",
                        lambda target, grid=None: {"interior": [], "boundary": []})
    params = FamilyParams(FAMILY_23, math.pi / 6, 0.0)

    with pytest.raises(EulerViolationError) as excinfo:
        euler_agent.euler_check(family_to_spec(params), params)
    assert excinfo.value.ledger.k == 6
    assert excinfo.value.ledger.lhs_minus_rhs == 6


def test_sweep_points_keep_clear_of_theta_beta():
    euler_agent = EulerAgent()
    bifurcation_agent = BifurcationAgent()

    points = euler_agent.sweep_points(FAMILY_23, 4, 6)
    for beta, theta in points:
        assert 0 < beta < math.pi / 3
        assert abs(theta - bifurcation_agent.theta_beta(FAMILY_23, beta)) >= 0.05 - 1e-12

    with_bifurcation = euler_agent.sweep_points(FAMILY_23, 4, 6, include_bifurcation=True)
    assert len(with_bifurcation) == len(points) + 4
    with pytest.raises(DomainError):
        euler_agent.sweep_points(FAMILY_23, 2, 6)


def test_sweep_and_phase_diagram():
    euler_agent = EulerAgent(resolution=RESOLUTION)
    ledgers = euler_agent.euler_sweep(FAMILY_23, 3, 3)
    frame = euler_agent.phase_diagram(ledgers)

    assert list(frame.columns) == ["beta", "theta", "k", "omega", "b1"]
    assert len(frame) == len(ledgers)
    assert set(frame["k"]) == {3}


def test_run_euler_report():
    params = FamilyParams(FAMILY_23, math.pi / 6, 0.0)
    result = EulerAgent(resolution=RESOLUTION).run_euler(params=params)

    assert result['status'] == 'success'
    assert result['report']['k'] == 6
    assert result['report']['family'] == [2, 3]


@pytest.mark.slow
@pytest.mark.parametrize("beta,theta,k", [
    (math.pi / 6, 0.0, 6), (math.pi / 6, math.pi / 2, 6),
    (0.0, 0.2, 4), (0.0, math.pi / 4, 4), (0.0, 1.2, 4),
    (math.pi / 3, 0.2, 4), (math.pi / 3, math.pi / 4, 4), (math.pi / 3, 1.2, 4),
])
def test_family_23_special_ledgers_at_800(beta, theta, k):
    params = FamilyParams(FAMILY_23, beta, theta)
    ledger = EulerAgent(resolution=800).euler_check(family_to_spec(params), params)
    assert (ledger.k, ledger.omega, ledger.lhs_minus_rhs) == (k, 0, 0)


@pytest.mark.slow
def test_family_23_sweep_ledgers_balance():
    euler_agent = EulerAgent(resolution=800)
    bifurcation_agent = BifurcationAgent()
    for ledger in euler_agent.euler_sweep(FAMILY_23, 8, 8):
        assert ledger.k == 3
        assert ledger.lhs_minus_rhs == 0
        above = ledger.params.theta > bifurcation_agent.theta_beta(FAMILY_23, ledger.params.beta)
        assert ledger.omega == int(above)


@pytest.mark.slow
def test_family_12_sweep_ledgers_balance():
    for ledger in EulerAgent(resolution=800).euler_sweep((1, 2), 12, 12):
        assert ledger.k == 2
        assert ledger.lhs_minus_rhs == 0


@pytest.mark.slow
@pytest.mark.parametrize("m", [1, 3, 5])
def test_sine_strip_ledgers_at_800(m):
    ledger = EulerAgent(resolution=800).euler_check(sine_strip(m))
    assert (ledger.omega, ledger.lhs_minus_rhs) == (1, 0)


@pytest.mark.slow
def test_stern3_ledger_balances():
    ledger = EulerAgent(resolution=800).euler_check(get_preset("stern3"))
    assert (ledger.k, ledger.lhs_minus_rhs) == (2, 0)
