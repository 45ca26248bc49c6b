"""Structured triangulations of axis-aligned rectangles with tagged boundaries.

Each subdomain of a decomposition gets its own lattice mesh. Boundary edges
carry an integer tag: ``EXTERIOR`` (-1) for edges on the outer boundary, or
the non-negative id of the interface the edge lies on.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EXTERIOR = -1
GEOM_TOL = 1e-12


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def sides(self) -> dict[str, tuple[tuple[float, float], tuple[float, float]]]:
        """Sides as (A, B) with A the lower/left endpoint."""
        return {
            "bottom": ((self.x0, self.y0), (self.x1, self.y0)),
            "right": ((self.x1, self.y0), (self.x1, self.y1)),
            "top": ((self.x0, self.y1), (self.x1, self.y1)),
            "left": ((self.x0, self.y0), (self.x0, self.y1)),
        }


@dataclass(frozen=True)
class InterfaceDecl:
    """Straight interface shared by two subdomains.

    ``segment`` is ordered so that ``A`` is the lower (vertical interface) or
    left (horizontal interface) endpoint; arclength coordinates on the
    interface are measured from ``A``. The normal points from ``left`` (the
    lower-indexed subdomain) to ``right``.
    """

    id: int
    segment: tuple[tuple[float, float], tuple[float, float]]
    left: int
    right: int

    def __post_init__(self):
        (ax, ay), (bx, by) = self.segment
        if not (abs(ax - bx) <= GEOM_TOL or abs(ay - by) <= GEOM_TOL):
            raise ValueError(f"interface {self.id} is not axis-aligned")
        if self.left >= self.right:
            raise ValueError("interface must be declared with left < right")

    @property
    def length(self) -> float:
        (ax, ay), (bx, by) = self.segment
        return float(np.hypot(bx - ax, by - ay))

    def arclength(self, points: np.ndarray) -> np.ndarray:
        (ax, ay), (bx, by) = self.segment
        t = np.array([bx - ax, by - ay]) / self.length
        return (np.asarray(points) - np.array([ax, ay])) @ t

    def contains(self, points: np.ndarray, tol: float = GEOM_TOL) -> np.ndarray:
        (ax, ay), (bx, by) = self.segment
        pts = np.atleast_2d(points)
        s = self.arclength(pts)
        t = np.array([bx - ax, by - ay]) / self.length
        normal_dist = np.abs((pts - np.array([ax, ay])) @ np.array([-t[1], t[0]]))
        return (normal_dist <= tol) & (s >= -tol) & (s <= self.length + tol)


@dataclass
class Mesh2D:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counter-clockwise
    boundary_edges: np.ndarray  # (nb, 2)
    boundary_tags: np.ndarray  # (nb,)
    rect: Rect
    interfaces: dict[int, InterfaceDecl] = field(default_factory=dict)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        lengths = [np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)]
        return np.max(lengths, axis=0)

    @property
    def h_max(self) -> float:
        return float(self.diameters().max())

    def aspect_ratios(self) -> np.ndarray:
        """h_T / rho_T with rho_T the inscribed-circle diameter."""
        p = self.vertices[self.triangles]
        lengths = np.stack(
            [np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)], axis=1
        )
        inradius = 2.0 * np.abs(self.signed_areas()) / lengths.sum(axis=1)
        return lengths.max(axis=1) / (2.0 * inradius)

    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted vertex pairs."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def edge_triangle_counts(self) -> dict[tuple[int, int], int]:
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        keys, counts = np.unique(e, axis=0, return_counts=True)
        return {(int(a), int(b)): int(c) for (a, b), c in zip(keys, counts)}

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + self.n_triangles

    def exterior_vertices(self) -> np.ndarray:
        ext = self.boundary_edges[self.boundary_tags == EXTERIOR]
        return np.unique(ext.ravel())

    def interface_vertices(self, interface_id: int) -> np.ndarray:
        """Vertex indices on an interface, sorted by arclength."""
        if interface_id not in self.interfaces:
            raise KeyError(f"unknown interface id {interface_id}")
        tagged = self.boundary_edges[self.boundary_tags == interface_id]
        if len(tagged) == 0:
            raise KeyError(f"no edge tagged with interface {interface_id}")
        decl = self.interfaces[interface_id]
        idx = np.unique(tagged.ravel())
        if not decl.contains(self.vertices[idx]).all():
            raise ValueError(f"edges tagged {interface_id} are not on the interface segment")
        s = decl.arclength(self.vertices[idx])
        order = np.argsort(s, kind="stable")
        return idx[order]

    def dump(self, path: str | Path) -> None:
        """Write the ``mesh2d v1`` plain-text format."""
        lines = [f"mesh2d v1 {self.n_vertices} {self.n_triangles} {len(self.boundary_edges)}"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines += [f"{i} {j} {k}" for i, j, k in self.triangles.tolist()]
        lines += [f"{i} {j} {t}" for (i, j), t in zip(self.boundary_edges.tolist(), self.boundary_tags.tolist())]
        Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path: str | Path, rect: Rect, interfaces=()) -> Mesh2D:
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if head[:2] != ["mesh2d", "v1"]:
        raise ValueError("not a mesh2d v1 file")
    nv, nt, nb = map(int, head[2:5])
    verts = np.array([[float(v) for v in l.split()] for l in lines[1:1 + nv]])
    tris = np.array([[int(v) for v in l.split()] for l in lines[1 + nv:1 + nv + nt]], dtype=int)
    bnd = np.array([[int(v) for v in l.split()] for l in lines[1 + nv + nt:1 + nv + nt + nb]], dtype=int)
    return Mesh2D(verts, tris.reshape(-1, 3), bnd[:, :2].reshape(-1, 2), bnd[:, 2],
                  rect, {d.id: d for d in interfaces})


def _match_side(rect: Rect, decl: InterfaceDecl) -> str:
    for name, (a, b) in rect.sides().items():
        if np.allclose(a, decl.segment[0], atol=GEOM_TOL, rtol=0) and np.allclose(
            b, decl.segment[1], atol=GEOM_TOL, rtol=0
        ):
            return name
    raise ValueError(f"interface {decl.id} does not match a side of {rect}")


def generate_structured(rect: Rect, nx: int, ny: int, diag: str = "same",
                        interfaces=()) -> Mesh2D:
    """Uniform ``nx`` by ``ny`` lattice split into triangles.

    ``diag="same"`` cuts every cell along its SW-NE diagonal; ``"alternate"``
    flips to the NW-SE diagonal on a checkerboard pattern. Sides matching one
    of ``interfaces`` are tagged with its id, all others are exterior.
    """
    if nx < 1 or ny < 1:
        raise ValueError("need at least one cell in each direction")
    if diag not in ("same", "alternate"):
        raise ValueError(f"unknown diagonal rule {diag!r}")
    xs = np.linspace(rect.x0, rect.x1, nx + 1)
    ys = np.linspace(rect.y0, rect.y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(nx), np.arange(ny))
    i, j = i.ravel(), j.ravel()
    v00 = j * (nx + 1) + i
    v10 = v00 + 1
    v01 = v00 + nx + 1
    v11 = v01 + 1
    flip = ((i + j) % 2 == 1) if diag == "alternate" else np.zeros_like(i, dtype=bool)
    t1 = np.where(flip[:, None], np.column_stack([v00, v10, v01]), np.column_stack([v00, v10, v11]))
    t2 = np.where(flip[:, None], np.column_stack([v10, v11, v01]), np.column_stack([v00, v11, v01]))
    triangles = np.stack([t1, t2], axis=1).reshape(-1, 3)

    side_tag = {name: EXTERIOR for name in ("bottom", "right", "top", "left")}
    for decl in interfaces:
        side_tag[_match_side(rect, decl)] = decl.id

    row = lambda jj: jj * (nx + 1) + np.arange(nx + 1)
    col = lambda ii: np.arange(ny + 1) * (nx + 1) + ii
    chains = {
        "bottom": row(0),
        "right": col(nx),
        "top": row(ny)[::-1],
        "left": col(0)[::-1],
    }
    edges, tags = [], []
    for name in ("bottom", "right", "top", "left"):
        c = chains[name]
        edges.append(np.column_stack([c[:-1], c[1:]]))
        tags.append(np.full(len(c) - 1, side_tag[name]))
    return Mesh2D(vertices, triangles, np.concatenate(edges), np.concatenate(tags),
                  rect, {d.id: d for d in interfaces})


def refine_uniform(mesh: Mesh2D) -> Mesh2D:
    """Split every triangle into four through its edge midpoints."""
    edges = mesh.edges()
    nv = mesh.n_vertices
    mid_index = {(int(a), int(b)): nv + k for k, (a, b) in enumerate(edges)}
    midpoints = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])

    def mid(a, b):
        return np.array([mid_index[(min(x, y), max(x, y))] for x, y in zip(a, b)], dtype=int)

    t = mesh.triangles
    a, b, c = t[:, 0], t[:, 1], t[:, 2]
    mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
    children = np.stack([
        np.column_stack([a, mab, mca]),
        np.column_stack([mab, b, mbc]),
        np.column_stack([mca, mbc, c]),
        np.column_stack([mab, mbc, mca]),
    ], axis=1).reshape(-1, 3)

    be = mesh.boundary_edges
    m = mid(be[:, 0], be[:, 1])
    new_edges = np.stack([np.column_stack([be[:, 0], m]), np.column_stack([m, be[:, 1]])],
                         axis=1).reshape(-1, 2)
    new_tags = np.repeat(mesh.boundary_tags, 2)
    return Mesh2D(np.vstack([mesh.vertices, midpoints]), children, new_edges, new_tags,
                  mesh.rect, dict(mesh.interfaces))


def interface_trace_nodes(mesh: Mesh2D, interface_id: int) -> np.ndarray:
    """Strictly increasing arclength coordinates of the interface vertices."""
    idx = mesh.interface_vertices(interface_id)
    s = mesh.interfaces[interface_id].arclength(mesh.vertices[idx])
    if np.any(np.diff(s) <= 0):
        raise ValueError("interface vertices are not strictly ordered")
    return s


def detect_interfaces(rects: list[Rect]) -> list[InterfaceDecl]:
    """Find full shared sides between rectangles of an edge-to-edge tiling."""
    decls = []
    for k, rk in enumerate(rects):
        for l in range(k + 1, len(rects)):
            rl = rects[l]
            sk, sl = rk.sides(), rl.sides()
            for name_k, seg in sk.items():
                for name_l, seg_l in sl.items():
                    if np.allclose(seg, seg_l, atol=GEOM_TOL, rtol=0):
                        decls.append(InterfaceDecl(len(decls), seg, k, l))
    return decls
