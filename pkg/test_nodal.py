import math

import numpy as np
import pytest

from agents.critical_agent import INTERIOR, CriticalAgent
from agents.euler_agent import EulerAgent
from agents.nodal_agent import NodalAgent, NodalDomainSet, m1_distance
from utils.eigenfunction import FamilyParams, apply_translation, common_zeros, family_to_spec
from utils.errors import CourantBoundError, DomainError, NonConvergenceError
from utils.presets import get_preset, sine_strip

RESOLUTION = 200


@pytest.mark.parametrize("m,count", [(1, 1), (3, 2), (5, 3)])
def test_sine_strips(m, count):
    nodal_agent = NodalAgent()
    grid, domains = nodal_agent.resolve_nodal_domains(sine_strip(m), RESOLUTION)

    assert domains.count == count
    # exactly the middle strip is non-orientable
    assert len(domains.non_orientable) == 1
    middle = domains.domain_labels[grid.nx // 2, grid.ny // 2]
    assert domains.orientable[int(middle)] is False
    assert sum(domains.areas.values()) == pytest.approx(math.pi ** 2, rel=1e-9)


@pytest.mark.parametrize("beta,theta,count", [
    (math.pi / 6, 0.0, 6),
    (math.pi / 6, math.pi / 2, 6),
    (0.0, 0.2, 4),
    (0.0, math.pi / 4, 4),
    (0.0, 1.2, 4),
    (math.pi / 3, math.pi / 4, 4),
    (math.pi / 4, 0.3, 3),
    (math.pi / 4, 1.2, 3),
])
def test_family_23_counts(beta, theta, count):
    spec = family_to_spec(FamilyParams((2, 3), beta, theta))
    _, domains = NodalAgent().resolve_nodal_domains(spec, RESOLUTION)
    assert domains.count == count


def test_family_12_has_two_domains():
    nodal_agent = NodalAgent()
    for beta, theta in EulerAgent().sweep_points((1, 2), 4, 4):
        spec = family_to_spec(FamilyParams((1, 2), beta, theta))
        _, domains = nodal_agent.resolve_nodal_domains(spec, RESOLUTION)
        assert domains.count == 2


@pytest.mark.slow
@pytest.mark.parametrize("name", ["stern2", "stern3"])
def test_stern_has_two_domains(name):
    _, domains = NodalAgent().resolve_nodal_domains(get_preset(name), 800)
    assert domains.count == 2


def test_count_is_translation_invariant():
    nodal_agent = NodalAgent()
    spec = family_to_spec(FamilyParams((2, 3), math.pi / 4, 0.3))
    rng = np.random.default_rng(4)
    for t in rng.uniform(0, 2 * math.pi, 3):
        _, domains = nodal_agent.resolve_nodal_domains(apply_translation(spec, float(t)), RESOLUTION)
        assert domains.count == 3


def test_courant_bound():
    nodal_agent = NodalAgent()
    _, domains = nodal_agent.resolve_nodal_domains(sine_strip(3), RESOLUTION)

    nodal_agent.check_courant_bound(domains, 6)
    with pytest.raises(CourantBoundError):
        nodal_agent.check_courant_bound(domains, 1)


def test_curve_topology_of_sine_strips():
    nodal_agent = NodalAgent()
    for m, b1 in ((1, 1), (3, 2), (5, 3)):
        spec = sine_strip(m)
        grid = nodal_agent.sample_grid(spec, RESOLUTION, RESOLUTION)
        curves = nodal_agent.extract_curves(spec, grid)
        assert curves.b1 == b1
        assert curves.b0 == 1

    spec = sine_strip(3)
    curves = nodal_agent.extract_curves(spec, nodal_agent.sample_grid(spec, RESOLUTION, RESOLUTION))
    assert curves.edges
    assert all(kind == "seam" for _, kind in curves.vertices)
    for edge in curves.edges:
        assert np.all(np.minimum(np.abs(edge[:, 0] - math.pi / 3), np.abs(edge[:, 0] - 2 * math.pi / 3)) < 1e-3)
    assert curves.band_fraction > 0.9


def _assert_ends_are_vertices(curves):
    assert len(curves.edge_ends) == len(curves.edges)
    for edge, ends in zip(curves.edges, curves.edge_ends):
        for point, index in ((edge[0], ends[0]), (edge[-1], ends[1])):
            x, y = float(point[0]), float(point[1])
            if y >= math.pi:
                x, y = math.pi - x, y - math.pi
            assert m1_distance((x, y), curves.vertices[index][0]) < 1e-7


def test_sin3_stitches_into_one_closed_curve():
    nodal_agent = NodalAgent()
    spec = sine_strip(3)
    curves = nodal_agent.extract_curves(spec, nodal_agent.sample_grid(spec, RESOLUTION, RESOLUTION))

    _assert_ends_are_vertices(curves)
    assert len(curves.vertices) == 2
    assert len(curves.edges) == 2
    assert [curves.degree(i) for i in range(2)] == [2, 2]
    # each line leaves the top of the window and comes back on the other one
    assert all(set(ends) == {0, 1} for ends in curves.edge_ends)


@pytest.mark.parametrize("beta,theta", [
    (math.pi / 6, 0.0),
    (0.0, math.pi / 4),
    (math.pi / 3, math.pi / 4),
    (math.pi / 4, 0.3),
])
def test_junction_degrees_match_orders(beta, theta):
    nodal_agent = NodalAgent()
    params = FamilyParams((2, 3), beta, theta)
    spec = family_to_spec(params)
    zeros = CriticalAgent().locate_critical_zeros(params)
    everything = zeros["interior"] + zeros["boundary"]
    curves = nodal_agent.extract_curves(spec, nodal_agent.sample_grid(spec, RESOLUTION, RESOLUTION),
                                        [z.location for z in everything])

    _assert_ends_are_vertices(curves)
    for z in everything:
        index = curves.vertex_at(z.location, kind="junction")
        assert curves.degree(index) == (z.nu if z.kind == INTERIOR else z.rho)
    # junctions absorb every boundary hit
    assert all(kind in ("junction", "seam") for _, kind in curves.vertices)


def test_soul_is_extracted():
    nodal_agent = NodalAgent()
    spec = family_to_spec(FamilyParams((1, 2), 0.0, math.pi / 2))
    curves = nodal_agent.extract_curves(spec, nodal_agent.sample_grid(spec, RESOLUTION, RESOLUTION))
    points = np.concatenate(curves.edges)
    on_soul = points[np.abs(points[:, 0] - math.pi / 2) < 1e-3]
    assert on_soul[:, 1].max() - on_soul[:, 1].min() > 2.5


def test_checkerboard_containment():
    nodal_agent = NodalAgent()
    rng = np.random.default_rng(12)
    for _ in range(4):
        beta = float(rng.uniform(0, math.pi / 3))
        theta = float(rng.uniform(0, math.pi / 2))
        spec = family_to_spec(FamilyParams((2, 3), beta, theta))
        grid = nodal_agent.sample_grid(spec, RESOLUTION, RESOLUTION)
        assert nodal_agent.checkerboard_violations(grid, beta) == []
        assert nodal_agent.no_enclosed_loop_check(spec, grid, beta)


def test_incident_arcs():
    nodal_agent = NodalAgent()
    spec = family_to_spec(FamilyParams((2, 3), 0.0, 0.0))

    assert nodal_agent.incident_arcs(spec, (math.pi / 2, math.pi / 3), "interior") == 4
    assert nodal_agent.incident_arcs(spec, (0.0, math.pi / 3), "boundary") == 1
    assert nodal_agent.incident_arcs(spec, (math.pi, math.pi / 3), "boundary") == 1


def test_tangent_signs_shape():
    nodal_agent = NodalAgent()
    beta = math.pi / 4
    points = common_zeros(beta)
    signs = nodal_agent.tangent_signs(family_to_spec(FamilyParams((2, 3), beta, 0.3)), points)
    assert len(signs) == len(points)
    assert set(signs) <= {-1.0, 0.0, 1.0}


def test_sample_grid_validation():
    nodal_agent = NodalAgent()
    with pytest.raises(DomainError):
        nodal_agent.sample_grid(sine_strip(3), 8, 8)
    with pytest.raises(DomainError):
        nodal_agent.sample_grid(sine_strip(3), 64, 64, zero_tol=0.0)

    grid = nodal_agent.sample_grid(sine_strip(3), 64, 64)
    assert np.array_equal(grid.seam_map[grid.seam_map], np.arange(grid.nx))


def test_unstable_count_reports_history(monkeypatch):
    nodal_agent = NodalAgent(max_refinements=1)
    fake = iter([3, 4])

    def flaky(grid):
        return NodalDomainSet(next(fake), np.zeros((grid.nx, grid.ny), dtype=int), {}, {})

    monkeypatch.setattr(nodal_agent, "count_nodal_domains", flaky)
    with pytest.raises(NonConvergenceError) as excinfo:
        nodal_agent.resolve_nodal_domains(sine_strip(3), 64)
    assert excinfo.value.counts == {64: 3, 128: 4}


def test_run_nodal_report():
    result = NodalAgent().run_nodal(sine_strip(3), 64, label=6)
    assert result['status'] == 'success'
    assert result['report']['count'] == 2
    assert result['report']['orientable'].count(False) == 1

    failed = NodalAgent().run_nodal(sine_strip(3), 64, label=1)
    assert failed['error_type'] == 'CourantBoundError'


SPECIAL_23 = [
    (math.pi / 6, 0.0, 6), (math.pi / 6, math.pi / 2, 6),
    (0.0, 0.2, 4), (0.0, math.pi / 4, 4), (0.0, 1.2, 4),
    (math.pi / 3, 0.2, 4), (math.pi / 3, math.pi / 4, 4), (math.pi / 3, 1.2, 4),
]


@pytest.mark.slow
@pytest.mark.parametrize("beta,theta,count", SPECIAL_23)
def test_family_23_counts_are_stable_at_800_and_1600(beta, theta, count):
    nodal_agent = NodalAgent()
    spec = family_to_spec(FamilyParams((2, 3), beta, theta))
    for n in (800, 1600):
        assert nodal_agent.count_nodal_domains(nodal_agent.sample_grid(spec, n, n)).count == count


@pytest.mark.slow
def test_family_23_interior_sweep_has_three_domains():
    nodal_agent = NodalAgent()
    for beta, theta in EulerAgent().sweep_points((2, 3), 8, 8):
        _, domains = nodal_agent.resolve_nodal_domains(family_to_spec(FamilyParams((2, 3), beta, theta)), 800)
        assert domains.count == 3, (beta, theta)


@pytest.mark.slow
def test_family_12_grid_has_two_domains():
    nodal_agent = NodalAgent()
    for beta, theta in EulerAgent().sweep_points((1, 2), 12, 12):
        _, domains = nodal_agent.resolve_nodal_domains(family_to_spec(FamilyParams((1, 2), beta, theta)), 800)
        assert domains.count == 2, (beta, theta)


@pytest.mark.slow
@pytest.mark.parametrize("spec", [
    sine_strip(5),
    family_to_spec(FamilyParams((2, 3), math.pi / 4, 0.3)),
    family_to_spec(FamilyParams((2, 3), 0.0, math.pi / 4)),
    family_to_spec(FamilyParams((1, 2), 0.9, 1.2)),
])
def test_zero_band_grows_with_perimeter(spec):
    # doubling both sides doubles the band along a curve; an area-like band would quadruple
    nodal_agent = NodalAgent()
    coarse = int(nodal_agent.sample_grid(spec, 400, 400).band.sum())
    fine = int(nodal_agent.sample_grid(spec, 800, 800).band.sum())
    assert 1.6 * coarse < fine < 2.4 * coarse
