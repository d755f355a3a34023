import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib import colors as mcolors  # noqa: E402
from scipy import ndimage  # noqa: E402

from agents.nodal_agent import CurveGraph, NodalAgent, NodalDomainSet, SignGrid  # noqa: E402
from utils.artifacts import atomic_path, resolve_output  # noqa: E402
from utils.assistant import Assistant  # noqa: E402
from utils.eigenfunction import EigenfunctionSpec, evaluate  # noqa: E402
from utils.errors import DomainError, MoebiusError, RenderError  # noqa: E402
from utils.union_find import UnionFind  # noqa: E402

NON_CONFORMAL_NOTE = (
    "The embedding F of the Moebius strip is not conformal: "
    "angles between nodal arcs at critical zeros are distorted in 3-D views."
)


@dataclass(frozen=True)
class PlotStyle:
    nodal_color: str = "#ff0000"
    boundary_color: str = "#0000ff"
    seam_color: str = "#000000"
    seam_style: str = "--"
    domain_labels: bool = False

    def __post_init__(self):
        for name in ("nodal_color", "boundary_color", "seam_color"):
            value = getattr(self, name)
            if not mcolors.is_color_like(value):
                raise DomainError(f"{name}={value!r} is not a color")
            object.__setattr__(self, name, mcolors.to_hex(value, keep_alpha=False))

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass(frozen=True)
class EmbeddingParams:
    R: float = 3.0
    a: float = 1.0
    u_samples: int = 256
    v_samples: int = 256

    def __post_init__(self):
        if not self.R > math.pi / 2:
            raise DomainError(f"R={self.R} must exceed pi/2 for F to be an embedding")
        if self.a != 1.0:
            raise DomainError("only the strip M_1 (a = 1) is embedded")
        if self.u_samples < 8 or self.v_samples < 8:
            raise DomainError("mesh needs at least 8 samples per direction")


@dataclass
class MeshData:
    vertices: np.ndarray
    faces: np.ndarray
    uv: np.ndarray
    soul: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class MeshSummary:
    vertices: int
    edges: int
    faces: int
    boundary_loops: int
    boundary_edges: int
    soul_length: int

    @property
    def euler_characteristic(self) -> int:
        return self.vertices - self.edges + self.faces

    def to_dict(self) -> Dict:
        return {**asdict(self), "euler_characteristic": self.euler_characteristic}


class RenderAgent(Assistant):
    def __init__(self, resolution: int = 400):
        super().__init__(
            name="Render Agent",
            description="Nodal figures in the fundamental rectangle and meshes of the embedded strip",
            instructions="Write SVG figures and OBJ meshes atomically; keep the non-conformal caveat in metadata"
        )
        self.resolution = resolution
        self.nodal = NodalAgent()

    @staticmethod
    def embed_point(params: EmbeddingParams, w, v) -> np.ndarray:
        """F(w, v) = (w cos v, (R + w sin v) cos 2v, (R + w sin v) sin 2v), w = u - pi/2."""
        w, v = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(v, dtype=float))
        radius = params.R + w * np.sin(v)
        return np.stack([w * np.cos(v), radius * np.cos(2 * v), radius * np.sin(2 * v)], axis=-1)

    @staticmethod
    def embed_partials(params: EmbeddingParams, w, v) -> Tuple[np.ndarray, np.ndarray]:
        w, v = np.broadcast_arrays(np.asarray(w, dtype=float), np.asarray(v, dtype=float))
        radius = params.R + w * np.sin(v)
        dw = np.stack([np.cos(v), np.sin(v) * np.cos(2 * v), np.sin(v) * np.sin(2 * v)], axis=-1)
        dv = np.stack([
            -w * np.sin(v),
            w * np.cos(v) * np.cos(2 * v) - 2 * radius * np.sin(2 * v),
            w * np.cos(v) * np.sin(2 * v) + 2 * radius * np.cos(2 * v),
        ], axis=-1)
        return dw, dv

    def build_mesh(self, params: EmbeddingParams) -> MeshData:
        """Triangulated grid over u in [0, pi], v in [0, pi); the row v = pi is welded to v = 0 reversed."""
        nu, nv = params.u_samples, params.v_samples
        u = np.arange(nu + 1) * math.pi / nu
        v = np.arange(nv) * math.pi / nv
        uu, vv = np.meshgrid(u, v)
        vertices = self.embed_point(params, (uu - math.pi / 2).ravel(), vv.ravel())
        uv = np.column_stack([uu.ravel(), vv.ravel()])

        def index(i: np.ndarray, j: np.ndarray) -> np.ndarray:
            wrap = j == nv
            return np.where(wrap, nu - i, i) + np.where(wrap, 0, j) * (nu + 1)

        ii, jj = np.meshgrid(np.arange(nu), np.arange(nv))
        ii, jj = ii.ravel(), jj.ravel()
        a, b = index(ii, jj), index(ii + 1, jj)
        c, d = index(ii + 1, jj + 1), index(ii, jj + 1)
        faces = np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])
        soul = (np.arange(nv) * (nu + 1) + nu // 2).tolist() if nu % 2 == 0 else []
        return MeshData(vertices, faces, uv, soul)

    @staticmethod
    def summarize_mesh(mesh: MeshData) -> MeshSummary:
        edges = np.sort(np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]], mesh.faces[:, [2, 0]]]), axis=1)
        unique, uses = np.unique(edges, axis=0, return_counts=True)
        boundary = unique[uses == 1]
        uf = UnionFind(len(mesh.vertices))
        uf.union_pairs(boundary[:, 0], boundary[:, 1])
        loops = len({uf.find_parent(int(i)) for i in np.unique(boundary)})
        return MeshSummary(len(mesh.vertices), len(unique), len(mesh.faces), loops, len(boundary), len(mesh.soul))

    def export_mesh(self, params: EmbeddingParams, spec: Optional[EigenfunctionSpec] = None,
                    path: Optional[str] = None) -> Dict:
        """OBJ of F(M_1); with a spec, the nodal polylines go to a `.nodal.obj` sidecar."""
        target = resolve_output(path, "moebius_strip.obj")
        mesh = self.build_mesh(params)
        summary = self.summarize_mesh(mesh)
        lines = [
            "# Moebius strip M_1 embedded by F",
            f"# {NON_CONFORMAL_NOTE}",
            f"# R={params.R} u_samples={params.u_samples} v_samples={params.v_samples}",
            f"# vertices={summary.vertices} faces={summary.faces} euler_characteristic={summary.euler_characteristic}",
            "o moebius_strip",
        ]
        lines += [f"v {p[0]:.9f} {p[1]:.9f} {p[2]:.9f}" for p in mesh.vertices]
        lines += [f"vt {t[0] / math.pi:.9f} {t[1] / math.pi:.9f}" for t in mesh.uv]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
        self._write_lines(target, lines)
        written = {"mesh": str(target), "summary": summary.to_dict()}

        if spec is not None:
            grid = self.nodal.sample_grid(spec, self.resolution, self.resolution)
            curves = self.nodal.extract_curves(spec, grid)
            sidecar = target.with_name(target.stem + ".nodal.obj")
            nodal_lines = ["# nodal curves mapped through F", "o nodal_curves"]
            offset = 1
            for edge in curves.edges:
                points = self.embed_point(params, edge[:, 0] - math.pi / 2, edge[:, 1])
                nodal_lines += [f"v {p[0]:.9f} {p[1]:.9f} {p[2]:.9f}" for p in points]
                nodal_lines.append("l " + " ".join(str(offset + i) for i in range(len(points))))
                offset += len(points)
            self._write_lines(sidecar, nodal_lines)
            written["nodal"] = str(sidecar)
            written["polylines"] = len(curves.edges)
        self.logger.debug("exported mesh %s", written)
        return written

    @staticmethod
    def _write_lines(path: Path, lines: List[str]) -> None:
        with atomic_path(path) as tmp:
            with open(tmp, "w", encoding="utf-8") as f:
                f.write("\n".join(lines) + "\n")

    def seam_is_nodal(self, spec: EigenfunctionSpec, samples: int = 257) -> bool:
        xs = np.linspace(0, math.pi, samples)[1:-1]
        return bool(np.max(np.abs(evaluate(spec, xs, 0.0))) < 1e-12 * spec.derivative_scale(0))

    @staticmethod
    def label_anchor(grid: SignGrid, domains: NodalDomainSet, label: int) -> Tuple[float, float]:
        """Center of the cell lying deepest inside the domain."""
        depth = ndimage.distance_transform_edt(domains.domain_labels == label)
        i, j = np.unravel_index(int(np.argmax(depth)), depth.shape)
        return float(grid.xs[i]), float(grid.ys[j])

    def plot_fundamental_domain(self, spec: EigenfunctionSpec, curves: CurveGraph, style: PlotStyle,
                                path: Optional[str] = None, grid: Optional[SignGrid] = None,
                                domains: Optional[NodalDomainSet] = None) -> Path:
        target = resolve_output(path, "nodal.svg")
        fig, ax = plt.subplots(figsize=(6, 6))
        try:
            for piece in curves.fundamental_pieces():
                ax.plot(piece[:, 0], piece[:, 1], color=style.nodal_color, linewidth=1.5)
            ax.plot([0, 0], [0, math.pi], color=style.boundary_color, linewidth=2.5)
            ax.plot([math.pi, math.pi], [0, math.pi], color=style.boundary_color, linewidth=2.5)
            if not self.seam_is_nodal(spec):
                for y in (0.0, math.pi):
                    ax.plot([0, math.pi], [y, y], color=style.seam_color, linestyle=style.seam_style, linewidth=1.0)

            if style.domain_labels and grid is not None and domains is not None:
                for label in range(1, domains.count + 1):
                    ax.text(*self.label_anchor(grid, domains, label), str(label), ha="center", va="center", fontsize=10)

            ticks = [0, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi]
            labels = ["0", "π/3", "π/2", "2π/3", "π"]
            ax.set_xticks(ticks, labels)
            ax.set_yticks(ticks, labels)
            ax.set_xlim(-0.05, math.pi + 0.05)
            ax.set_ylim(-0.05, math.pi + 0.05)
            ax.set_aspect("equal")
            ax.set_xlabel("x")
            ax.set_ylabel("y")

            with plt.rc_context({"svg.hashsalt": "moebius-nodal"}):
                with atomic_path(target, suffix=".svg") as tmp:
                    fig.savefig(tmp, format="svg",
                                metadata={"Title": "Nodal set in the fundamental rectangle",
                                          "Description": NON_CONFORMAL_NOTE, "Date": None})
        except OSError as e:
            raise RenderError(f"cannot write {target}: {e}") from e
        finally:
            plt.close(fig)
        return target

    def run_render(self, spec: EigenfunctionSpec, path: Optional[str] = None,
                   style: Optional[PlotStyle] = None) -> Dict:
        try:
            grid, domains = self.nodal.resolve_nodal_domains(spec, self.resolution)
            curves = self.nodal.extract_curves(spec, grid)
            written = self.plot_fundamental_domain(spec, curves, style or PlotStyle(), path, grid, domains)
            return {'status': 'success', 'path': written, 'report': {"path": str(written), "count": domains.count}}
        except MoebiusError as e:
            return self._failure(e)

    def run_mesh(self, params: EmbeddingParams, spec: Optional[EigenfunctionSpec] = None,
                 path: Optional[str] = None) -> Dict:
        try:
            written = self.export_mesh(params, spec, path)
            return {'status': 'success', 'report': written}
        except MoebiusError as e:
            return self._failure(e)
