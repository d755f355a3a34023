import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from contourpy import LineType, contour_generator
from scipy import ndimage

from utils.assistant import Assistant
from utils.eigenfunction import (EigenfunctionSpec, checkerboard_value, evaluate, evaluate_on_grid, gradient,
                                 lines_in_period)
from utils.errors import (CourantBoundError, DegenerateSpecError, DomainError, ExtractionError,
                          InternalConsistencyError, MoebiusError, NonConvergenceError)
from utils.union_find import UnionFind

STRUCTURE_4 = ndimage.generate_binary_structure(2, 1)
STRUCTURE_8 = ndimage.generate_binary_structure(2, 2)
MIN_CELLS = 16
# Contour grids avoid vertices at x = k*pi/q for small q, where nodal lines of these
# eigenfunctions sit exactly.
SMALL_PRIMES = (2, 3, 5, 7)
WINDOW_OFFSET = 0.381966
EDGE_TOL = 1e-9
# Seam crossings closer than this are one vertex
VERTEX_TOL = 1e-7
# Junction disks span this many contour cells
JUNCTION_CELLS = 5


@dataclass
class SignGrid:
    """Signs of Phi/sin(x) at cell centers of (0, pi) x [0, pi); 0 marks the zero band."""
    spec: EigenfunctionSpec
    nx: int
    ny: int
    signs: np.ndarray
    values: np.ndarray
    zero_tol: float
    refinement_depth: int = 0
    left_hits: np.ndarray = None
    right_hits: np.ndarray = None
    seam_map: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.seam_map is None:
            self.seam_map = np.arange(self.nx)[::-1].copy()

    @property
    def hx(self) -> float:
        return math.pi / self.nx

    @property
    def hy(self) -> float:
        return math.pi / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def xs(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.hx

    @property
    def ys(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    @property
    def band(self) -> np.ndarray:
        return self.signs == 0


@dataclass
class NodalDomainSet:
    count: int
    domain_labels: np.ndarray
    orientable: Dict[int, bool]
    areas: Dict[int, float]

    @property
    def non_orientable(self) -> List[int]:
        return [label for label, ok in self.orientable.items() if not ok]

    def to_dict(self) -> Dict:
        return {
            "count": self.count,
            "orientable": [self.orientable[k] for k in sorted(self.orientable)],
            "areas": [round(self.areas[k], 6) for k in sorted(self.areas)],
        }


def m1_distance(p: Tuple[float, float], q: Tuple[float, float]) -> float:
    """Distance on M_1 between points of the fundamental rectangle, looking across the seam."""
    direct = math.hypot(p[0] - q[0], p[1] - q[1])
    across = min(math.hypot(p[0] - (math.pi - q[0]), p[1] - (q[1] + s * math.pi)) for s in (-1, 1))
    return min(direct, across)


def _to_fundamental(x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Reduce points of the strip into (0, pi) x [0, pi) using (x, y) ~ (pi - x, y + pi)."""
    y = np.mod(y, 2 * math.pi)
    upper = y >= math.pi
    return np.where(upper, math.pi - x, x), np.where(upper, y - math.pi, y)


@dataclass
class CurveGraph:
    """Nodal curves as a graph on M_1.

    Vertices carry fundamental-rectangle points; edges are polylines in the contour window
    y in [y0, y0 + pi] and `edge_ends` holds the vertex indices of their two ends. A seam vertex
    is shared by the polyline leaving the top of the window and the one entering at the bottom.
    """
    vertices: List[Tuple[Tuple[float, float], str]]
    edges: List[np.ndarray]
    b1: int
    b0: int = 1
    component_labels: Optional[np.ndarray] = field(default=None, repr=False)
    touches_boundary: Dict[int, bool] = field(default_factory=dict)
    band_fraction: float = 1.0
    edge_ends: List[Tuple[int, int]] = field(default_factory=list)

    def degree(self, index: int) -> int:
        return sum((a == index) + (b == index) for a, b in self.edge_ends)

    def vertex_at(self, point: Tuple[float, float], kind: Optional[str] = None, tol: float = 1e-9) -> Optional[int]:
        for i, (p, k) in enumerate(self.vertices):
            if (kind is None or k == kind) and m1_distance(p, point) <= tol:
                return i
        return None

    def fundamental_pieces(self) -> List[np.ndarray]:
        """Edges mapped into the fundamental rectangle, cut where they wrap across the seam."""
        pieces = []
        for edge in self.edges:
            fx, fy = _to_fundamental(edge[:, 0], edge[:, 1])
            mapped = np.column_stack([fx, fy])
            jumps = np.nonzero(np.abs(np.diff(mapped[:, 1])) > math.pi / 2)[0]
            pieces += [piece for piece in np.split(mapped, jumps + 1) if len(piece) >= 2]
        return pieces

    def to_dict(self) -> Dict:
        return {
            "b0": self.b0,
            "b1": self.b1,
            "vertices": [{"point": [round(p[0], 9), round(p[1], 9)], "kind": kind, "degree": self.degree(i)}
                         for i, (p, kind) in enumerate(self.vertices)],
            "polylines": len(self.edges),
        }


def _coprime_at_least(n: int) -> int:
    while any(n % p == 0 for p in SMALL_PRIMES):
        n += 1
    return n


def _window_images(point: Tuple[float, float], y0: float, reach: float) -> List[Tuple[float, float]]:
    """Copies of a fundamental point in the window [y0, y0 + pi], plus the deck image when it lies within reach."""
    x, y = point
    if y < y0:
        x, y = math.pi - x, y + math.pi
    images = [(x, y)]
    if y - y0 < reach:
        images.append((math.pi - x, y + math.pi))
    if y0 + math.pi - y < reach:
        images.append((math.pi - x, y - math.pi))
    return images


class NodalAgent(Assistant):
    def __init__(self, zero_tol: float = 1e-9, max_refinements: int = 2):
        super().__init__(
            name="Nodal Agent",
            description="Nodal domains, orientability and nodal curves on M_1",
            instructions="Sample sign grids with seam gluing, count domains, test orientability on the double cover"
        )
        self.zero_tol = zero_tol
        self.max_refinements = max_refinements

    def sample_grid(self, spec: EigenfunctionSpec, nx: int, ny: int, zero_tol: Optional[float] = None,
                    refinement_depth: int = 0) -> SignGrid:
        zero_tol = self.zero_tol if zero_tol is None else zero_tol
        if nx < MIN_CELLS or ny < MIN_CELLS:
            raise DomainError(f"grid needs at least {MIN_CELLS} cells per side, got {nx}x{ny}")
        if not zero_tol > 0:
            raise DomainError(f"zero_tol must be positive, got {zero_tol}")

        xs = (np.arange(nx) + 0.5) * math.pi / nx
        ys = (np.arange(ny) + 0.5) * math.pi / ny
        centers = evaluate_on_grid(spec, xs, ys, reduced=True)
        corners = evaluate_on_grid(spec, np.linspace(0, math.pi, nx + 1), np.linspace(0, math.pi, ny + 1), reduced=True)
        scale = max(np.abs(centers).max(), np.abs(corners).max())
        if scale == 0:
            raise DegenerateSpecError("eigenfunction vanishes on the whole grid")

        threshold = zero_tol * scale
        center_sign = np.where(np.abs(centers) < threshold, 0, np.sign(centers)).astype(np.int8)
        corner_sign = np.where(np.abs(corners) < threshold, 0, np.sign(corners)).astype(np.int8)
        band = center_sign == 0
        for corner in (corner_sign[:-1, :-1], corner_sign[1:, :-1], corner_sign[:-1, 1:], corner_sign[1:, 1:]):
            band |= corner != center_sign
        signs = np.where(band, 0, center_sign).astype(np.int8)

        left, right = corner_sign[0], corner_sign[-1]
        left_hits = (left[:-1] != left[1:]) | (left[:-1] == 0) | (left[1:] == 0)
        right_hits = (right[:-1] != right[1:]) | (right[:-1] == 0) | (right[1:] == 0)
        self.logger.debug("sampled %dx%d grid, %d zero-band cells", nx, ny, int(band.sum()))
        return SignGrid(spec, nx, ny, signs, centers, zero_tol, refinement_depth, left_hits, right_hits)

    def _label_signed(self, signs: np.ndarray) -> Tuple[np.ndarray, int]:
        pos, n_pos = ndimage.label(signs > 0, structure=STRUCTURE_4)
        neg, n_neg = ndimage.label(signs < 0, structure=STRUCTURE_4)
        labels = np.where(neg > 0, neg + n_pos, pos)
        return labels, n_pos + n_neg

    def count_nodal_domains(self, grid: SignGrid) -> NodalDomainSet:
        labels, n = self._label_signed(grid.signs)
        if n == 0:
            raise ExtractionError("every cell lies in the zero band; refine the grid")

        uf = UnionFind(n + 1)
        top = labels[:, -1]
        bottom = labels[grid.seam_map, 0]
        glue = (top > 0) & (bottom > 0) & (grid.signs[:, -1] == grid.signs[grid.seam_map, 0])
        uf.union_pairs(top[glue], bottom[glue])

        compact = uf.compact_labels()
        # element 0 (the zero band) is compact label 0; domains become 1..count
        domain_labels = np.where(labels > 0, compact[labels], 0)
        count = int(domain_labels.max())

        areas = self._areas(grid, domain_labels, count)
        domains = NodalDomainSet(count, domain_labels, {}, areas)
        domains.orientable = self.orientability(grid, domains)
        self.logger.debug("counted %d nodal domains (%d non-orientable)", count, len(domains.non_orientable))
        return domains

    def _areas(self, grid: SignGrid, domain_labels: np.ndarray, count: int) -> Dict[int, float]:
        band = domain_labels == 0
        assigned = domain_labels
        if band.any():
            _, (ii, jj) = ndimage.distance_transform_edt(band, return_indices=True)
            assigned = domain_labels[ii, jj]
        cells = np.bincount(assigned.ravel(), minlength=count + 1)
        return {k: float(cells[k] * grid.cell_area) for k in range(1, count + 1)}

    def orientability(self, grid: SignGrid, domains: NodalDomainSet) -> Dict[int, bool]:
        """A domain is orientable iff its preimage in the double cover has two components."""
        cover_signs = np.concatenate([grid.signs, grid.signs[::-1, :]], axis=1)
        cover_domains = np.concatenate([domains.domain_labels, domains.domain_labels[::-1, :]], axis=1)
        labels, n = self._label_signed(cover_signs)

        uf = UnionFind(n + 1)
        top, bottom = labels[:, -1], labels[:, 0]
        glue = (top > 0) & (bottom > 0) & (cover_signs[:, -1] == cover_signs[:, 0])
        uf.union_pairs(top[glue], bottom[glue])
        components = uf.compact_labels()[labels]

        inside = cover_domains > 0
        pairs = np.unique(np.stack([cover_domains[inside], components[inside]]), axis=1)
        per_domain = np.bincount(pairs[0], minlength=domains.count + 1)
        result = {}
        for label in range(1, domains.count + 1):
            preimages = int(per_domain[label])
            if preimages not in (1, 2):
                raise InternalConsistencyError(f"domain {label} has {preimages} preimage components in the double cover")
            result[label] = preimages == 2
        return result

    def resolve_nodal_domains(self, spec: EigenfunctionSpec, resolution: int,
                              zero_tol: Optional[float] = None) -> Tuple[SignGrid, NodalDomainSet]:
        """Count at N and 2N; refine further while the two finest levels disagree."""
        history: Dict[int, Tuple[int, int]] = {}
        previous = None
        for depth in range(self.max_refinements + 1):
            n = resolution * 2 ** depth
            grid = self.sample_grid(spec, n, n, zero_tol, refinement_depth=depth)
            domains = self.count_nodal_domains(grid)
            key = (domains.count, len(domains.non_orientable))
            history[n] = key
            if previous is not None and key == previous:
                return grid, domains
            previous = key
        raise NonConvergenceError(
            f"nodal count did not stabilize: {', '.join(f'{n}: {c} ({o} non-orientable)' for n, (c, o) in history.items())}",
            {n: c for n, (c, _) in history.items()},
        )

    def check_courant_bound(self, domains: NodalDomainSet, label: int) -> None:
        if domains.count > label:
            raise CourantBoundError(f"{domains.count} nodal domains exceed the Courant bound {label}")

    def band_components(self, grid: SignGrid) -> Tuple[np.ndarray, int, Dict[int, bool]]:
        """Components of the zero band on M_1 (8-connected, seam glued) and whether each reaches the boundary."""
        band = grid.band
        labels, n = ndimage.label(band, structure=STRUCTURE_8)
        if n == 0:
            return labels, 0, {}
        uf = UnionFind(n + 1)
        top = labels[:, -1]
        for shift in (-1, 0, 1):
            partner = np.clip(grid.seam_map + shift, 0, grid.nx - 1)
            bottom = labels[partner, 0]
            glue = (top > 0) & (bottom > 0)
            uf.union_pairs(top[glue], bottom[glue])
        compact = uf.compact_labels()
        components = np.where(labels > 0, compact[labels], 0)
        count = int(components.max())

        touches = {k: False for k in range(1, count + 1)}
        for column, hits in ((0, grid.left_hits), (grid.nx - 1, grid.right_hits)):
            for k in np.unique(components[column][hits & (components[column] > 0)]):
                touches[int(k)] = True
        return components, count, touches

    def extract_curves(self, spec: EigenfunctionSpec, grid: SignGrid,
                       junctions: Optional[Sequence[Tuple[float, float]]] = None) -> CurveGraph:
        """Marching-squares polylines of Phi/sin(x) = 0, assembled into a graph on M_1.

        Each junction (a critical zero) owns a disk a few contour cells wide. Polylines are cut where
        they enter it and joined to its center, so the degree of a junction counts the arcs leaving it
        however the saddle cells were resolved.
        """
        nxc, nyc = _coprime_at_least(grid.nx), _coprime_at_least(grid.ny)
        y0 = WINDOW_OFFSET * math.pi / nyc
        xv = np.linspace(0.0, math.pi, nxc + 1)
        yv = y0 + np.linspace(0.0, math.pi, nyc + 1)
        z = evaluate_on_grid(spec, xv, yv, reduced=True).T
        lines = contour_generator(x=xv, y=yv, z=z, line_type=LineType.Separate).lines(0.0)

        junctions = [(float(x), float(y)) for x, y in (junctions or [])]
        radius = JUNCTION_CELLS * math.pi / min(nxc, nyc)
        for i, p in enumerate(junctions):
            for q in junctions[i + 1:]:
                radius = min(radius, 0.3 * m1_distance(p, q))
        images = [(image, i) for i, p in enumerate(junctions) for image in _window_images(p, y0, radius)]
        centers = np.array([image for image, _ in images], dtype=float).reshape(-1, 2)
        owners = [i for _, i in images]

        vertices: List[Tuple[Tuple[float, float], str]] = [(p, "junction") for p in junctions]
        edges: List[np.ndarray] = []
        edge_ends: List[Tuple[int, int]] = []

        def end_vertex(x: float, y: float) -> int:
            if x < EDGE_TOL or x > math.pi - EDGE_TOL:
                kind = "boundary"
            elif abs(y - y0) < EDGE_TOL or abs(y - y0 - math.pi) < EDGE_TOL:
                kind = "seam"
            else:
                raise ExtractionError(f"nodal polyline ends inside the strip at ({x:.6f}, {y:.6f})")
            fx, fy = _to_fundamental(np.array([x]), np.array([y]))
            point = (float(fx[0]), float(fy[0]))
            for i, (p, k) in enumerate(vertices):
                if k == kind and m1_distance(p, point) < VERTEX_TOL:
                    return i
            vertices.append((point, kind))
            return len(vertices) - 1

        for line in lines:
            line = np.asarray(line, dtype=float)
            if len(line) < 2:
                continue
            if len(centers):
                dist = np.hypot(line[:, :1] - centers[:, 0], line[:, 1:] - centers[:, 1])
                nearest = dist.argmin(axis=1)
                inside = dist[np.arange(len(line)), nearest] < radius
            else:
                nearest = np.zeros(len(line), dtype=int)
                inside = np.zeros(len(line), dtype=bool)

            if np.allclose(line[0], line[-1], atol=EDGE_TOL):
                if not inside.any():
                    fx, fy = _to_fundamental(line[:1, 0], line[:1, 1])
                    vertices.append(((float(fx[0]), float(fy[0])), "loop"))
                    edges.append(line)
                    edge_ends.append((len(vertices) - 1, len(vertices) - 1))
                    continue
                # restart the loop inside a junction disk so no outside run wraps around
                k = int(np.argmax(inside[:-1]))
                order = np.r_[np.arange(k, len(line) - 1), np.arange(0, k + 1)]
                line, nearest, inside = line[order], nearest[order], inside[order]

            bounds = np.flatnonzero(np.diff(np.r_[0, (~inside).astype(int), 0]))
            for a, b in zip(bounds[0::2], bounds[1::2]):
                piece = line[a:b]
                if a > 0:
                    piece = np.vstack([centers[nearest[a - 1]], piece])
                    first = owners[nearest[a - 1]]
                else:
                    first = end_vertex(*line[0])
                if b < len(line):
                    piece = np.vstack([piece, centers[nearest[b]]])
                    last = owners[nearest[b]]
                else:
                    last = end_vertex(*line[-1])
                if len(piece) >= 2:
                    edges.append(piece)
                    edge_ends.append((first, last))

        components, count, touches = self.band_components(grid)
        b1 = 1 + sum(1 for k in range(1, count + 1) if not touches[k])
        graph = CurveGraph(vertices, edges, b1, 1, components, touches, edge_ends=edge_ends)
        graph.band_fraction = self._band_fraction(grid, graph.fundamental_pieces())
        self.logger.debug("curve graph: %d vertices (%d junctions), %d edges, b1=%d",
                          len(vertices), len(junctions), len(edges), b1)
        if graph.band_fraction < 0.9:
            self.logger.warning("only %.1f%% of polyline points fall in the zero band", 100 * graph.band_fraction)
        return graph

    def _band_fraction(self, grid: SignGrid, edges: List[np.ndarray]) -> float:
        if not edges:
            return 1.0
        points = np.concatenate(edges)
        i = np.clip((points[:, 0] / grid.hx).astype(int), 0, grid.nx - 1)
        j = np.clip((points[:, 1] / grid.hy).astype(int), 0, grid.ny - 1)
        return float(np.mean(grid.band[i, j]))

    def checkerboard_cells(self, beta: float) -> Tuple[np.ndarray, np.ndarray]:
        """Breakpoints in x and y of the rectangles on which P_beta has constant sign."""
        xb = np.array([0.0, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi])
        yb = np.unique(np.round([0.0, math.pi / 3, 2 * math.pi / 3, math.pi] + lines_in_period(beta, 2), 14))
        return xb, yb

    def enclosed_loops(self, spec: EigenfunctionSpec, grid: SignGrid, beta: float) -> List[Dict]:
        """Zero-band components confined to a single rectangle of the P_beta checkerboard."""
        components, count, _ = self.band_components(grid)
        xb, yb = self.checkerboard_cells(beta)
        ci = np.searchsorted(xb, grid.xs) - 1
        cj = np.searchsorted(yb, grid.ys) - 1
        failures = []
        for k in range(1, count + 1):
            ii, jj = np.nonzero(components == k)
            cells = set(zip(ci[ii].tolist(), cj[jj].tolist()))
            if len(cells) == 1:
                rect = cells.pop()
                failures.append({
                    "component": k,
                    "rectangle": [[float(xb[rect[0]]), float(xb[rect[0] + 1])], [float(yb[rect[1]]), float(yb[rect[1] + 1])]],
                    "cells": int(ii.size),
                })
        return failures

    def no_enclosed_loop_check(self, spec: EigenfunctionSpec, grid: SignGrid, beta: float) -> bool:
        failures = self.enclosed_loops(spec, grid, beta)
        for failure in failures:
            self.logger.warning("nodal component %d enclosed in checkerboard cell %s", failure["component"], failure["rectangle"])
        return not failures

    def checkerboard_violations(self, grid: SignGrid, beta: float, slack: Optional[float] = None) -> List[Tuple[int, int, float]]:
        """Zero-band cells whose center has P_beta above the slack (default grows with the cell size)."""
        slack = 20 * max(grid.hx, grid.hy) if slack is None else slack
        ii, jj = np.nonzero(grid.band)
        values = checkerboard_value(beta, grid.xs[ii], grid.ys[jj])
        bad = values > slack
        return list(zip(ii[bad].tolist(), jj[bad].tolist(), values[bad].tolist()))

    def incident_arcs(self, spec: EigenfunctionSpec, point: Tuple[float, float], kind: str,
                      radius: float = 1e-3, samples: int = 720) -> int:
        """Nodal arcs leaving a point: sign changes of Phi on a small circle (half-circle at the boundary)."""
        x0, y0 = point
        if kind == "interior":
            angles = (np.arange(samples) + 0.5) * 2 * math.pi / samples
        elif x0 < math.pi / 2:
            angles = -math.pi / 2 + (np.arange(samples) + 0.5) * math.pi / samples
        else:
            angles = math.pi / 2 + (np.arange(samples) + 0.5) * math.pi / samples
        values = evaluate(spec, x0 + radius * np.cos(angles), y0 + radius * np.sin(angles))
        signs = np.sign(values)
        signs = signs[signs != 0]
        if kind == "interior":
            return int(np.count_nonzero(signs != np.roll(signs, 1)))
        return int(np.count_nonzero(signs[1:] != signs[:-1]))

    def tangent_signs(self, spec: EigenfunctionSpec, points: List[Tuple[float, float]]) -> List[float]:
        """Sign of dPhi/dx * dPhi/dy at each point; nodal tangents run SE-NW where it is positive."""
        xs = np.array([p[0] for p in points])
        ys = np.array([p[1] for p in points])
        gx, gy = gradient(spec, xs, ys)
        return np.sign(np.asarray(gx) * np.asarray(gy)).tolist()

    def analyze(self, spec: EigenfunctionSpec, resolution: int, zero_tol: Optional[float] = None) -> Dict:
        grid, domains = self.resolve_nodal_domains(spec, resolution, zero_tol)
        curves = self.extract_curves(spec, grid)
        return {"grid": grid, "domains": domains, "curves": curves}

    def run_nodal(self, spec: EigenfunctionSpec, resolution: int, label: Optional[int] = None) -> Dict:
        try:
            result = self.analyze(spec, resolution)
            if label is not None:
                self.check_courant_bound(result["domains"], label)
            report = {**result["domains"].to_dict(), "b0": result["curves"].b0, "b1": result["curves"].b1,
                      "resolution": result["grid"].nx}
            return {'status': 'success', **result, 'report': report}
        except MoebiusError as e:
            return self._failure(e)
