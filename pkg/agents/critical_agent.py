import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import optimize

from agents.bifurcation_agent import FAMILY_12, FAMILY_23, BifurcationAgent
from agents.nodal_agent import CurveGraph, NodalAgent, SignGrid, m1_distance
from utils.assistant import Assistant
from utils.eigenfunction import (MAX_DERIVATIVE_ORDER, EigenfunctionSpec, FamilyParams, evaluate, family_to_spec,
                                 gradient, hessian, lines_in_period, partial_derivative)
from utils.errors import (ClassificationError, DomainError, InternalConsistencyError, MoebiusError,
                          PoleError, RootFindingError)

INTERIOR = "interior"
BOUNDARY = "boundary"
# Roots closer than this are one critical zero
MERGE_RADIUS = 1e-6
# Boundary roots next to a higher-order root are ill-conditioned; merge them on M_1
BOUNDARY_MERGE_RADIUS = 1e-5
SPECIAL_SNAP = 1e-4
INCIDENCE_RADIUS = (3e-4, 1e-3)
BRANCH_EDGE = 1e-9
SEGMENT_SAMPLES = 2048
BOUNDARY_SAMPLES = 4096

Target = Union[FamilyParams, EigenfunctionSpec]


@dataclass(frozen=True)
class CriticalZero:
    location: Tuple[float, float]
    kind: str
    order: int
    nu: int
    rho: int
    residuals: Dict[str, float] = field(default_factory=dict)
    degenerate: bool = False

    def to_dict(self) -> Dict:
        return {
            "location": [self.location[0], self.location[1]],
            "kind": self.kind,
            "order": self.order,
            "nu": self.nu,
            "rho": self.rho,
            "residuals": dict(self.residuals),
            "degenerate": self.degenerate,
        }


class CriticalAgent(Assistant):
    def __init__(self, derivative_tol: float = 1e-8, residual_tol: float = 1e-10,
                 bisection_iterations: int = 80, newton_iterations: int = 50, polish_steps: int = 3):
        super().__init__(
            name="Critical Agent",
            description="Interior and boundary critical zeros of Möbius eigenfunctions",
            instructions="Locate critical zeros, classify their order with the derivative ladder, cross-check arc counts"
        )
        self.derivative_tol = derivative_tol
        self.residual_tol = residual_tol
        self.bisection_iterations = bisection_iterations
        self.newton_iterations = newton_iterations
        self.polish_steps = polish_steps
        self.bifurcation = BifurcationAgent(polish_steps=polish_steps)
        self.nodal = NodalAgent()

    @staticmethod
    def _resolve(target: Target) -> Tuple[EigenfunctionSpec, Optional[FamilyParams]]:
        if isinstance(target, FamilyParams):
            return family_to_spec(target), target
        if isinstance(target, EigenfunctionSpec):
            return target, None
        raise DomainError(f"expected FamilyParams or EigenfunctionSpec, got {type(target).__name__}")

    # classification

    def classify_order(self, target: Target, location: Tuple[float, float]) -> int:
        """First order whose derivatives do not all vanish; order 1 means the point is not critical."""
        spec, _ = self._resolve(target)
        x, y = location
        for order in range(1, MAX_DERIVATIVE_ORDER + 1):
            largest = max(abs(partial_derivative(spec, x, y, ox, order - ox)) for ox in range(order + 1))
            if largest > self.derivative_tol * spec.derivative_scale(order):
                if order == 1:
                    raise ClassificationError(f"gradient does not vanish at ({x:.9f}, {y:.9f})")
                return order
        raise ClassificationError(f"every derivative up to order {MAX_DERIVATIVE_ORDER} vanishes at ({x:.9f}, {y:.9f})")

    def _make_zero(self, spec: EigenfunctionSpec, location: Tuple[float, float], kind: str,
                   degenerate: bool = False) -> CriticalZero:
        x, y = location
        gx, gy = gradient(spec, x, y)
        residuals = {
            "phi": abs(evaluate(spec, x, y)) / spec.derivative_scale(0),
            "grad": math.hypot(gx, gy) / spec.derivative_scale(1),
        }
        if residuals["phi"] > self.residual_tol:
            raise RootFindingError(f"|Phi| = {residuals['phi']:.3g} at ({x:.9f}, {y:.9f}) is not a zero")
        order = self.classify_order(spec, location)
        if kind == INTERIOR:
            return CriticalZero((x, y), kind, order, 2 * order, 0, residuals, degenerate)
        return CriticalZero((x, y), kind, order, 0, order - 1, residuals, degenerate)

    # 1-D root isolation

    def _newton_or_bisect(self, fn: Callable, dfn: Callable, a: float, b: float) -> float:
        x = 0.5 * (a + b)
        for _ in range(self.newton_iterations):
            slope = dfn(x)
            if slope == 0:
                break
            step = fn(x) / slope
            if not a <= x - step <= b:
                break
            x -= step
            if abs(step) <= 1e-15 * (1 + abs(x)):
                return x
        try:
            return optimize.bisect(fn, a, b, xtol=1e-15, maxiter=self.bisection_iterations, disp=False)
        except ValueError as e:
            raise RootFindingError(f"no bracketed root on [{a}, {b}]: {e}") from e

    def _roots_on_segment(self, fn: Callable, dfn: Callable, d2fn: Callable, a: float, b: float,
                          samples: int, scale: float) -> List[float]:
        """Simple roots from sign changes, double roots from local minima of |fn|."""
        xs = np.linspace(a, b, samples + 1)
        values = np.asarray(fn(xs))
        zero = np.abs(values) <= 1e-13 * scale
        signs = np.where(zero, 0.0, np.sign(values))
        roots = xs[zero].tolist()
        for i in np.nonzero(signs[:-1] * signs[1:] < 0)[0]:
            roots.append(self._newton_or_bisect(fn, dfn, xs[i], xs[i + 1]))

        magnitude = np.abs(values)
        inner = np.arange(1, samples)
        dips = inner[(magnitude[inner] <= magnitude[inner - 1]) & (magnitude[inner] <= magnitude[inner + 1])
                     & (magnitude[inner] < 1e-3 * scale)
                     & (signs[inner - 1] * signs[inner] > 0) & (signs[inner] * signs[inner + 1] > 0)]
        for i in dips:
            lo, hi = xs[i - 1], xs[i + 1]
            found = optimize.minimize_scalar(lambda t: abs(fn(t)), bounds=(lo, hi), method="bounded",
                                             options={"xatol": 1e-14})
            t = float(found.x)
            # a double root of fn is a simple root of its derivative
            for _ in range(self.polish_steps + 2):
                curvature = d2fn(t)
                if curvature == 0:
                    break
                candidate = t - dfn(t) / curvature
                if not lo <= candidate <= hi:
                    break
                t = candidate
            if abs(fn(t)) <= 1e-10 * scale:
                roots.append(t)

        merged: List[float] = []
        for r in sorted(roots):
            if not merged or r - merged[-1] > MERGE_RADIUS:
                merged.append(r)
        return merged

    # interior zeros

    def find_interior_critical_zeros(self, target: Target, grid: Optional[SignGrid] = None) -> List[CriticalZero]:
        spec, params = self._resolve(target)
        if params is None or params.family not in (FAMILY_12, FAMILY_23):
            points = self._interior_numeric(spec, grid)
        elif params.is_decomposed:
            points = self._decomposed_intersections(params)
        else:
            points = self._interior_on_common_lines(spec, params)
        zeros = [self._make_zero(spec, p, INTERIOR) for p in points]
        self.logger.debug("%d interior critical zeros", len(zeros))
        return sorted(zeros, key=lambda z: (z.location[1], z.location[0]))

    def _decomposed_intersections(self, params: FamilyParams) -> List[Tuple[float, float]]:
        """theta in {0, pi/2}: the nodal set is a grid of lines, crossings are the critical zeros."""
        if params.theta < math.pi / 4:
            p, q, phase = params.m, params.n, 0.0
        else:
            p, q, phase = params.n, params.m, params.beta
        xs = [k * math.pi / p for k in range(1, p)]
        return [(x, y) for y in lines_in_period(phase, q) for x in xs]

    def _interior_on_common_lines(self, spec: EigenfunctionSpec, params: FamilyParams) -> List[Tuple[float, float]]:
        """Interior zeros sit on lines where sin(n y) and sin(m y + beta) both vanish; Phi vanishes along them,
        so the remaining condition is dPhi/dy = 0."""
        m, n, beta = params.m, params.n, params.beta
        lines = [y for y in lines_in_period(0.0, n) if abs(math.sin(m * y + beta)) < 1e-12]
        scale = spec.derivative_scale(1)
        points = []
        for y in lines:
            roots = self._roots_on_segment(
                lambda x: partial_derivative(spec, x, y, 0, 1),
                lambda x: partial_derivative(spec, x, y, 1, 1),
                lambda x: partial_derivative(spec, x, y, 2, 1),
                BRANCH_EDGE, math.pi - BRANCH_EDGE, SEGMENT_SAMPLES, scale,
            )
            points += [(x, y) for x in roots if MERGE_RADIUS < x < math.pi - MERGE_RADIUS]
        return points

    def _interior_numeric(self, spec: EigenfunctionSpec, grid: Optional[SignGrid]) -> List[Tuple[float, float]]:
        """Newton on grad Phi = 0 seeded from zero-band cells with a small gradient."""
        if grid is None:
            grid = self.nodal.sample_grid(spec, 256, 256)
        h = max(grid.hx, grid.hy)
        ii, jj = np.nonzero(grid.band)
        x, y = grid.xs[ii], grid.ys[jj]
        gx, gy = gradient(spec, x, y)
        seeds = np.hypot(gx, gy) <= 2 * h * spec.derivative_scale(2)
        x, y = x[seeds], y[seeds]
        if x.size == 0:
            return []

        with np.errstate(divide="ignore", invalid="ignore"):
            for _ in range(self.newton_iterations):
                gx, gy = gradient(spec, x, y)
                hxx, hxy, hyy = hessian(spec, x, y)
                det = hxx * hyy - hxy * hxy
                ok = np.abs(det) > 1e-300
                dx = np.where(ok, (hyy * gx - hxy * gy) / det, 0.0)
                dy = np.where(ok, (hxx * gy - hxy * gx) / det, 0.0)
                step = np.hypot(dx, dy)
                damp = np.where(step > 2 * h, 2 * h / step, 1.0)
                x = x - dx * damp
                y = y - dy * damp

        gx, gy = gradient(spec, x, y)
        accept = (
            (np.hypot(gx, gy) <= self.derivative_tol * spec.derivative_scale(1))
            & (np.abs(evaluate(spec, x, y)) <= self.residual_tol * spec.derivative_scale(0))
            & (x > h / 2) & (x < math.pi - h / 2)
        )
        points: List[Tuple[float, float]] = []
        for px, py in zip(x[accept].tolist(), y[accept].tolist()):
            py = py % (2 * math.pi)
            if py >= math.pi:
                px, py = math.pi - px, py - math.pi
            if py > math.pi - 1e-9:
                px, py = math.pi - px, 0.0
            if not any(m1_distance((px, py), q) < 2 * h for q in points):
                points.append((px, py))
        return points

    # boundary zeros

    def find_boundary_critical_zeros(self, target: Target) -> List[CriticalZero]:
        spec, params = self._resolve(target)
        if (params is not None and params.family == FAMILY_23 and not params.is_decomposed
                and -1e-12 <= params.beta <= math.pi / 3 + 1e-12):
            points = self._boundary_points_23(spec, params)
        else:
            points = [(p, False) for p in self._boundary_points_sampled(spec)]
        zeros = [self._make_zero(spec, p, BOUNDARY, degenerate) for p, degenerate in points]
        self.logger.debug("%d boundary critical zeros", len(zeros))
        return sorted(zeros, key=lambda z: (z.location[0], z.location[1]))

    def _boundary_points_sampled(self, spec: EigenfunctionSpec) -> List[Tuple[float, float]]:
        scale = spec.derivative_scale(1)
        candidates = []
        for xi in (0.0, math.pi):
            roots = self._roots_on_segment(
                lambda y: partial_derivative(spec, xi, y, 1, 0),
                lambda y: partial_derivative(spec, xi, y, 1, 1),
                lambda y: partial_derivative(spec, xi, y, 1, 2),
                0.0, math.pi, BOUNDARY_SAMPLES, scale,
            )
            candidates += [((xi, y), 0) for y in roots]
        return [p for p, _ in self._merge_on_strip(candidates)]

    def _boundary_points_23(self, spec: EigenfunctionSpec, params: FamilyParams) -> List[Tuple[Tuple[float, float], bool]]:
        """Solve cot(theta) = -cos(xi) f(beta, eta) on each monotone branch of f."""
        beta, theta = params.beta, params.theta
        cot_theta = math.cos(theta) / math.sin(theta)
        ends = self.bifurcation.branch_endpoints(beta)
        y_beta = self.bifurcation.solve_y_beta(FAMILY_23, beta) if 0 < beta < math.pi / 3 else None
        special = []
        if abs(beta) < 1e-12:
            special = [0.0]
        elif abs(beta - math.pi / 3) < 1e-12:
            special = [math.pi / 3]

        candidates: List[Tuple[Tuple[float, float], int]] = []
        for xi in (0.0, math.pi):
            target = -math.cos(xi) * cot_theta

            def excess(eta: float) -> float:
                return self.bifurcation.f(beta, eta) - target

            for lo, hi in zip(ends[:-1], ends[1:]):
                a, b = lo + BRANCH_EDGE, hi - BRANCH_EDGE
                try:
                    fa, fb = excess(a), excess(b)
                except PoleError:
                    continue
                if fa * fb < 0:
                    eta = optimize.bisect(excess, a, b, xtol=1e-15, maxiter=self.bisection_iterations, disp=False)
                    candidates.append(((xi, self._polish_boundary(spec, xi, eta, lo, hi)), 0))
            if y_beta is not None and abs(excess(y_beta)) <= 1e-12 * (1 + abs(target)):
                candidates.append(((xi, y_beta), 1))
            candidates += [((xi, eta), 2) for eta in special]
        return [(p, tag == 1) for p, tag in self._merge_on_strip(candidates)]

    def _polish_boundary(self, spec: EigenfunctionSpec, xi: float, eta: float, lo: float, hi: float) -> float:
        for _ in range(self.polish_steps):
            slope = partial_derivative(spec, xi, eta, 1, 1)
            if slope == 0:
                break
            candidate = eta - partial_derivative(spec, xi, eta, 1, 0) / slope
            if not lo < candidate < hi:
                break
            if abs(partial_derivative(spec, xi, candidate, 1, 0)) > abs(partial_derivative(spec, xi, eta, 1, 0)):
                break
            eta = candidate
        return eta

    @staticmethod
    def _merge_on_strip(candidates: List[Tuple[Tuple[float, float], int]]) -> List[Tuple[Tuple[float, float], int]]:
        """One root per cluster on M_1; special points beat the bifurcation ordinate, which beats plain roots.

        Around a multiple root f - cot(theta) is flat, so rounding noise yields extra sign changes a few
        1e-6 away, on either side of the seam. Anything within SPECIAL_SNAP of a special point is that point.
        """
        kept: List[Tuple[Tuple[float, float], int]] = []
        for (xi, eta), tag in sorted(candidates, key=lambda item: -item[1]):
            point = (math.pi - xi, 0.0) if eta > math.pi - 1e-12 else (xi, eta)
            if any(m1_distance(point, p) <= (SPECIAL_SNAP if t == 2 else BOUNDARY_MERGE_RADIUS) for p, t in kept):
                continue
            kept.append((point, tag))
        return kept

    # general specs

    def locate_critical_zeros(self, target: Target, grid: Optional[SignGrid] = None) -> Dict[str, List[CriticalZero]]:
        return {
            INTERIOR: self.find_interior_critical_zeros(target, grid),
            BOUNDARY: self.find_boundary_critical_zeros(target),
        }

    def incidence(self, target: Target, zeros: List[CriticalZero], curves: Optional[CurveGraph] = None) -> List[int]:
        """Arc counts around each zero, checked against nu = 2*order and rho = order - 1.

        With a curve graph built on these zeros the count is the degree of the junction vertex;
        without one it is the number of sign changes of Phi on a small circle.
        """
        spec, _ = self._resolve(target)
        floor, ceiling = INCIDENCE_RADIUS
        counts = []
        for z in zeros:
            if curves is not None:
                index = curves.vertex_at(z.location, kind="junction")
                if index is None:
                    raise InternalConsistencyError(
                        f"curve graph has no junction at ({z.location[0]:.9f}, {z.location[1]:.9f})")
                arcs = curves.degree(index)
            else:
                nearest = min((m1_distance(z.location, o.location) for o in zeros if o is not z), default=math.inf)
                radius = max(floor, min(ceiling, 0.3 * nearest))
                arcs = self.nodal.incident_arcs(spec, z.location, z.kind, radius)
            expected = z.nu if z.kind == INTERIOR else z.rho
            if arcs != expected:
                raise InternalConsistencyError(
                    f"{z.kind} zero at ({z.location[0]:.9f}, {z.location[1]:.9f}) of order {z.order} "
                    f"has {arcs} incident arcs, expected {expected}"
                )
            counts.append(arcs)
        return counts

    def run_critical(self, target: Target, cross_check: bool = True) -> Dict:
        try:
            zeros = self.locate_critical_zeros(target)
            everything = zeros[INTERIOR] + zeros[BOUNDARY]
            if cross_check:
                self.incidence(target, everything)
            report = {"interior": [z.to_dict() for z in zeros[INTERIOR]],
                      "boundary": [z.to_dict() for z in zeros[BOUNDARY]]}
            return {'status': 'success', 'zeros': zeros, 'report': report}
        except MoebiusError as e:
            return self._failure(e)
