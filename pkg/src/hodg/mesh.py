"""Unstructured 2D mesh: triangles and quadrilaterals with derived
face connectivity, geometry scalars, plain-text file I/O, and structured
mesh generators used as stand-ins for external grids.

Layout: topology and per-entity geometry live in flat numpy arrays indexed
by entity id. Faces store their two incident cells (left, right); the unit
normal points from the left cell toward the right cell, or outward at
boundaries. Meshes are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "BC_KINDS",
    "MeshError",
    "MeshParseError",
    "TopologyError",
    "BoundaryPatch",
    "Node",
    "Face",
    "Cell",
    "Mesh",
    "load_mesh",
    "save_mesh",
    "generate_quad_grid",
    "generate_tri_grid",
    "validate",
]

BC_KINDS = ("far_field", "slip_wall", "no_slip_wall")

_TRI_EDGES = ((0, 1), (1, 2), (2, 0))
_QUAD_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


class MeshError(Exception):
    pass


class MeshParseError(MeshError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.line_no = line_no


class TopologyError(MeshError):
    pass


@dataclass(frozen=True)
class BoundaryPatch:
    name: str
    kind: str
    face_ids: np.ndarray

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise MeshError(f"unknown boundary kind {self.kind!r}")


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Face:
    id: int
    node_a: int
    node_b: int
    left_cell: int
    right_cell: int  # -1 at boundaries
    patch: str | None
    normal: np.ndarray
    length: float


@dataclass(frozen=True)
class Cell:
    id: int
    shape: str
    node_ids: np.ndarray
    face_ids: np.ndarray
    neighbor_ids: np.ndarray  # -1 where the face is a boundary
    centroid: np.ndarray
    area: float
    h: float


@dataclass
class Mesh:
    """Connected, validated unstructured mesh.

    Arrays with a trailing per-cell slot dimension are padded with -1 for
    triangles (which use only the first three slots).
    """

    node_xy: np.ndarray  # (n_nodes, 2)
    cell_nodes: np.ndarray  # (n_cells, 4) int32, -1 padded
    cell_nvert: np.ndarray  # (n_cells,) int8, 3 or 4
    cell_faces: np.ndarray  # (n_cells, 4) int32, -1 padded
    cell_fsign: np.ndarray  # (n_cells, 4) int8: +1 left of face, -1 right
    cell_neighbors: np.ndarray  # (n_cells, 4) int32, -1 at boundary slots
    cell_centroid: np.ndarray  # (n_cells, 2)
    cell_area: np.ndarray  # (n_cells,)
    cell_h: np.ndarray  # (n_cells,)
    face_nodes: np.ndarray  # (n_faces, 2) int32
    face_cells: np.ndarray  # (n_faces, 2) int32, right = -1 at boundary
    face_normal: np.ndarray  # (n_faces, 2), unit, left -> right
    face_length: np.ndarray  # (n_faces,)
    face_patch: np.ndarray  # (n_faces,) int32, patch index or -1
    patches: list[BoundaryPatch] = field(default_factory=list)

    @property
    def n_nodes(self) -> int:
        return self.node_xy.shape[0]

    @property
    def n_cells(self) -> int:
        return self.cell_nodes.shape[0]

    @property
    def n_faces(self) -> int:
        return self.face_nodes.shape[0]

    @property
    def n_interior_faces(self) -> int:
        return int(np.count_nonzero(self.face_cells[:, 1] >= 0))

    def node(self, i: int) -> Node:
        return Node(i, float(self.node_xy[i, 0]), float(self.node_xy[i, 1]))

    def face(self, i: int) -> Face:
        p = int(self.face_patch[i])
        return Face(
            id=i,
            node_a=int(self.face_nodes[i, 0]),
            node_b=int(self.face_nodes[i, 1]),
            left_cell=int(self.face_cells[i, 0]),
            right_cell=int(self.face_cells[i, 1]),
            patch=self.patches[p].name if p >= 0 else None,
            normal=self.face_normal[i].copy(),
            length=float(self.face_length[i]),
        )

    def cell(self, i: int) -> Cell:
        nv = int(self.cell_nvert[i])
        return Cell(
            id=i,
            shape="triangle" if nv == 3 else "quadrilateral",
            node_ids=self.cell_nodes[i, :nv].copy(),
            face_ids=self.cell_faces[i, :nv].copy(),
            neighbor_ids=self.cell_neighbors[i, :nv].copy(),
            centroid=self.cell_centroid[i].copy(),
            area=float(self.cell_area[i]),
            h=float(self.cell_h[i]),
        )

    def boundary_kind_codes(self) -> np.ndarray:
        """Per-face BC code: 0 interior, 1 far_field, 2 slip_wall,
        3 no_slip_wall, -1 boundary without a patch."""
        codes = np.zeros(self.n_faces, dtype=np.int8)
        boundary = self.face_cells[:, 1] < 0
        codes[boundary] = -1
        for p, patch in enumerate(self.patches):
            codes[self.face_patch == p] = BC_KINDS.index(patch.kind) + 1
        return codes


def _polygon_area_centroid(xy: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed area and centroid of a simple polygon (shoelace formulas)."""
    x = xy[:, 0]
    y = xy[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * np.sum(cross)
    if area == 0.0:
        return 0.0, xy.mean(axis=0)
    cx = np.sum((x + xn) * cross) / (6.0 * area)
    cy = np.sum((y + yn) * cross) / (6.0 * area)
    return float(area), np.array([cx, cy])


def build_mesh(
    node_xy: np.ndarray,
    cells: list[tuple[int, ...]],
    patch_specs: list[tuple[str, str, list[tuple[int, int]]]] | None = None,
) -> Mesh:
    """Assemble a mesh from nodes, cell->node lists, and boundary patch
    descriptors (name, kind, [(node_a, node_b), ...]).

    Derives faces, connectivity and geometry scalars; raises TopologyError
    on non-manifold faces, inverted cells, or bad references.
    """
    node_xy = np.ascontiguousarray(node_xy, dtype=np.float64)
    if node_xy.ndim != 2 or node_xy.shape[1] != 2:
        raise MeshError("node coordinates must be an (n, 2) array")
    if not np.all(np.isfinite(node_xy)):
        raise TopologyError("non-finite node coordinates")
    n_nodes = node_xy.shape[0]
    n_cells = len(cells)
    if n_cells == 0:
        raise MeshError("mesh has no cells")

    cell_nodes = np.full((n_cells, 4), -1, dtype=np.int32)
    cell_nvert = np.zeros(n_cells, dtype=np.int8)
    for c, nodes in enumerate(cells):
        nv = len(nodes)
        if nv not in (3, 4):
            raise TopologyError(f"cell {c}: expected 3 or 4 nodes, got {nv}")
        for n in nodes:
            if not (0 <= n < n_nodes):
                raise TopologyError(f"cell {c}: node {n} out of range 0..{n_nodes - 1}")
        if len(set(nodes)) != nv:
            raise TopologyError(f"cell {c}: repeated node")
        cell_nodes[c, :nv] = nodes
        cell_nvert[c] = nv

    cell_area = np.empty(n_cells)
    cell_centroid = np.empty((n_cells, 2))
    for c in range(n_cells):
        nv = cell_nvert[c]
        area, centroid = _polygon_area_centroid(node_xy[cell_nodes[c, :nv]])
        if area <= 0.0:
            raise TopologyError(
                f"cell {c}: non-positive signed area {area:.3e} "
                "(nodes must be counterclockwise)"
            )
        cell_area[c] = area
        cell_centroid[c] = centroid
    cell_h = np.sqrt(cell_area)

    # Face discovery: first traversal of an edge defines the face and its
    # left cell; the matching cell must traverse it reversed.
    face_key_to_id: dict[tuple[int, int], int] = {}
    face_nodes_l: list[tuple[int, int]] = []
    face_cells_l: list[list[int]] = []
    cell_faces = np.full((n_cells, 4), -1, dtype=np.int32)
    cell_fsign = np.zeros((n_cells, 4), dtype=np.int8)
    for c in range(n_cells):
        nv = cell_nvert[c]
        edges = _TRI_EDGES if nv == 3 else _QUAD_EDGES
        for slot, (ea, eb) in enumerate(edges):
            a = int(cell_nodes[c, ea])
            b = int(cell_nodes[c, eb])
            key = (a, b) if a < b else (b, a)
            fid = face_key_to_id.get(key)
            if fid is None:
                fid = len(face_nodes_l)
                face_key_to_id[key] = fid
                face_nodes_l.append((a, b))
                face_cells_l.append([c, -1])
                cell_fsign[c, slot] = 1
            else:
                fa, fb = face_nodes_l[fid]
                if face_cells_l[fid][1] != -1:
                    raise TopologyError(
                        f"face {key} shared by more than two cells (non-manifold)"
                    )
                if (a, b) != (fb, fa):
                    raise TopologyError(
                        f"cells {face_cells_l[fid][0]} and {c} traverse edge {key} "
                        "in the same direction (inconsistent orientation)"
                    )
                face_cells_l[fid][1] = c
                cell_fsign[c, slot] = -1
            cell_faces[c, slot] = fid

    face_nodes = np.array(face_nodes_l, dtype=np.int32)
    face_cells = np.array(face_cells_l, dtype=np.int32)
    n_faces = face_nodes.shape[0]

    d = node_xy[face_nodes[:, 1]] - node_xy[face_nodes[:, 0]]
    face_length = np.hypot(d[:, 0], d[:, 1])
    if np.any(face_length <= 0.0):
        raise TopologyError("zero-length face")
    # CCW traversal in the left cell => outward normal is (dy, -dx)
    face_normal = np.column_stack([d[:, 1], -d[:, 0]]) / face_length[:, None]

    cell_neighbors = np.full((n_cells, 4), -1, dtype=np.int32)
    for c in range(n_cells):
        for slot in range(cell_nvert[c]):
            fid = cell_faces[c, slot]
            l, r = face_cells[fid]
            cell_neighbors[c, slot] = r if l == c else l

    face_patch = np.full(n_faces, -1, dtype=np.int32)
    patches: list[BoundaryPatch] = []
    if patch_specs:
        for p, (name, kind, pairs) in enumerate(patch_specs):
            ids = []
            for a, b in pairs:
                key = (a, b) if a < b else (b, a)
                fid = face_key_to_id.get(key)
                if fid is None:
                    raise TopologyError(f"patch {name!r}: no face with nodes {a}, {b}")
                if face_cells[fid, 1] != -1:
                    raise TopologyError(
                        f"patch {name!r}: face {fid} ({a}, {b}) is interior"
                    )
                if face_patch[fid] != -1:
                    raise TopologyError(
                        f"patch {name!r}: face {fid} already in another patch"
                    )
                face_patch[fid] = p
                ids.append(fid)
            patches.append(BoundaryPatch(name, kind, np.array(sorted(ids), dtype=np.int32)))

    return Mesh(
        node_xy=node_xy,
        cell_nodes=cell_nodes,
        cell_nvert=cell_nvert,
        cell_faces=cell_faces,
        cell_fsign=cell_fsign,
        cell_neighbors=cell_neighbors,
        cell_centroid=cell_centroid,
        cell_area=cell_area,
        cell_h=cell_h,
        face_nodes=face_nodes,
        face_cells=face_cells,
        face_normal=face_normal,
        face_length=face_length,
        face_patch=face_patch,
        patches=patches,
    )


# ---------------------------------------------------------------------------
# Generators

def _grid_nodes(nx: int, ny: int, extent) -> np.ndarray:
    x0, y0, x1, y1 = extent
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([X.ravel(), Y.ravel()])


def _grid_patches(nx: int, ny: int, bc):
    """Boundary node-pair descriptors for the four sides of an nx x ny grid."""
    if isinstance(bc, str):
        bc = {"bottom": bc, "right": bc, "top": bc, "left": bc}
    nid = lambda i, j: j * (nx + 1) + i
    sides = {
        "bottom": [(nid(i, 0), nid(i + 1, 0)) for i in range(nx)],
        "right": [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)],
        "top": [(nid(i + 1, ny), nid(i, ny)) for i in range(nx)],
        "left": [(nid(0, j + 1), nid(0, j)) for j in range(ny)],
    }
    return [(side, bc[side], pairs) for side, pairs in sides.items()]


def generate_quad_grid(nx: int, ny: int, extent=(0.0, 0.0, 1.0, 1.0), bc="far_field") -> Mesh:
    """Structured quad mesh stored as unstructured; cells numbered row-major.

    `bc` is a single kind for all sides or a dict keyed by
    bottom/right/top/left.
    """
    if nx < 1 or ny < 1:
        raise MeshError("grid dimensions must be at least 1")
    nodes = _grid_nodes(nx, ny, extent)
    nid = lambda i, j: j * (nx + 1) + i
    cells = [
        (nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1))
        for j in range(ny)
        for i in range(nx)
    ]
    return build_mesh(nodes, cells, _grid_patches(nx, ny, bc))


def generate_tri_grid(nx: int, ny: int, extent=(0.0, 0.0, 1.0, 1.0), bc="far_field") -> Mesh:
    """Triangular mesh: each cell of the quad grid split along its
    bottom-left to top-right diagonal."""
    if nx < 1 or ny < 1:
        raise MeshError("grid dimensions must be at least 1")
    nodes = _grid_nodes(nx, ny, extent)
    nid = lambda i, j: j * (nx + 1) + i
    cells = []
    for j in range(ny):
        for i in range(nx):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            cells.append((a, b, c))
            cells.append((a, c, d))
    return build_mesh(nodes, cells, _grid_patches(nx, ny, bc))


def perturb_interior_nodes(mesh: Mesh, amplitude: float, seed: int = 0) -> Mesh:
    """New mesh with interior nodes jiggled by a uniform random offset of
    the given amplitude (fraction of the local shortest incident face).
    Boundary nodes stay fixed; patches are preserved."""
    rng = np.random.default_rng(seed)
    boundary_nodes = set()
    for f in range(mesh.n_faces):
        if mesh.face_cells[f, 1] < 0:
            boundary_nodes.add(int(mesh.face_nodes[f, 0]))
            boundary_nodes.add(int(mesh.face_nodes[f, 1]))
    min_len = np.full(mesh.n_nodes, np.inf)
    for f in range(mesh.n_faces):
        a, b = mesh.face_nodes[f]
        min_len[a] = min(min_len[a], mesh.face_length[f])
        min_len[b] = min(min_len[b], mesh.face_length[f])
    xy = mesh.node_xy.copy()
    offsets = rng.uniform(-1.0, 1.0, size=xy.shape)
    for n in range(mesh.n_nodes):
        if n not in boundary_nodes:
            xy[n] += amplitude * min_len[n] * offsets[n]
    cells = [tuple(mesh.cell_nodes[c, : mesh.cell_nvert[c]]) for c in range(mesh.n_cells)]
    specs = [
        (
            p.name,
            p.kind,
            [tuple(mesh.face_nodes[f]) for f in p.face_ids],
        )
        for p in mesh.patches
    ]
    return build_mesh(xy, cells, specs)


# ---------------------------------------------------------------------------
# HODG-MESH v1 plain-text format

def save_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as fh:
        fh.write("hodg-mesh 1\n")
        fh.write(f"nodes {mesh.n_nodes}\n")
        for x, y in mesh.node_xy:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"cells {mesh.n_cells}\n")
        for c in range(mesh.n_cells):
            nv = mesh.cell_nvert[c]
            tag = "t" if nv == 3 else "q"
            fh.write(tag + " " + " ".join(str(n) for n in mesh.cell_nodes[c, :nv]) + "\n")
        fh.write(f"patches {len(mesh.patches)}\n")
        for p in mesh.patches:
            fh.write(f"{p.name} {p.kind} {len(p.face_ids)}\n")
            for f in p.face_ids:
                a, b = mesh.face_nodes[f]
                fh.write(f"{a} {b}\n")


def load_mesh(path) -> Mesh:
    """Read a HODG-MESH v1 file and return a connected, validated mesh.

    Raises MeshParseError with a line number on malformed input and
    TopologyError on bad connectivity.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()

    pos = 0

    def next_line():
        nonlocal pos
        while pos < len(lines):
            raw = lines[pos]
            pos += 1
            s = raw.strip()
            if s and not s.startswith("#"):
                return pos, s
        return pos, None

    def parse_error(line_no, msg):
        return MeshParseError(path, line_no, msg)

    ln, header = next_line()
    if header is None or header.split() != ["hodg-mesh", "1"]:
        raise parse_error(ln, "expected header 'hodg-mesh 1'")

    ln, s = next_line()
    if s is None or not s.startswith("nodes "):
        raise parse_error(ln, "expected 'nodes N'")
    try:
        n_nodes = int(s.split()[1])
    except (IndexError, ValueError):
        raise parse_error(ln, "bad node count") from None
    coords = np.empty((n_nodes, 2))
    for i in range(n_nodes):
        ln, s = next_line()
        if s is None:
            raise parse_error(ln, f"expected {n_nodes} node lines, got {i}")
        parts = s.split()
        if len(parts) != 2:
            raise parse_error(ln, "expected 'x y'")
        try:
            coords[i] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise parse_error(ln, f"bad coordinate {s!r}") from None

    ln, s = next_line()
    if s is None or not s.startswith("cells "):
        raise parse_error(ln, "expected 'cells M'")
    try:
        n_cells = int(s.split()[1])
    except (IndexError, ValueError):
        raise parse_error(ln, "bad cell count") from None
    cells = []
    for i in range(n_cells):
        ln, s = next_line()
        if s is None:
            raise parse_error(ln, f"expected {n_cells} cell lines, got {i}")
        parts = s.split()
        want = {"t": 3, "q": 4}.get(parts[0])
        if want is None or len(parts) != want + 1:
            raise parse_error(ln, "expected 't i j k' or 'q i j k l'")
        try:
            cells.append(tuple(int(v) for v in parts[1:]))
        except ValueError:
            raise parse_error(ln, f"bad node index in {s!r}") from None

    patch_specs = []
    ln, s = next_line()
    if s is not None:
        if not s.startswith("patches "):
            raise parse_error(ln, "expected 'patches P'")
        try:
            n_patches = int(s.split()[1])
        except (IndexError, ValueError):
            raise parse_error(ln, "bad patch count") from None
        for _ in range(n_patches):
            ln, s = next_line()
            if s is None:
                raise parse_error(ln, "expected 'name kind count'")
            parts = s.split()
            if len(parts) != 3:
                raise parse_error(ln, "expected 'name kind count'")
            name, kind = parts[0], parts[1]
            if kind not in BC_KINDS:
                raise parse_error(ln, f"unknown boundary kind {kind!r}")
            try:
                count = int(parts[2])
            except ValueError:
                raise parse_error(ln, "bad face count") from None
            pairs = []
            for _ in range(count):
                ln, s = next_line()
                if s is None:
                    raise parse_error(ln, "expected 'nodeA nodeB'")
                parts = s.split()
                if len(parts) != 2:
                    raise parse_error(ln, "expected 'nodeA nodeB'")
                try:
                    pairs.append((int(parts[0]), int(parts[1])))
                except ValueError:
                    raise parse_error(ln, f"bad node index in {s!r}") from None
            patch_specs.append((name, kind, pairs))

    mesh = build_mesh(coords, cells, patch_specs)
    problems = validate(mesh)
    if problems:
        raise TopologyError(f"{path}: " + "; ".join(problems[:5]))
    return mesh


# ---------------------------------------------------------------------------
# Validation

def validate(mesh: Mesh) -> list[str]:
    """Check mesh invariants; returns a list of violation descriptions
    (empty when the mesh is consistent). Violations are data, not errors."""
    problems: list[str] = []

    if not np.all(np.isfinite(mesh.node_xy)):
        problems.append("non-finite node coordinates")

    for c in range(mesh.n_cells):
        nv = int(mesh.cell_nvert[c])
        nodes = mesh.cell_nodes[c, :nv]
        if np.any(nodes < 0) or np.any(nodes >= mesh.n_nodes):
            problems.append(f"cell {c}: node index out of range")
            continue
        area, _ = _polygon_area_centroid(mesh.node_xy[nodes])
        if area <= 0.0:
            problems.append(f"cell {c}: non-positive area {area:.3e}")
        elif abs(area - mesh.cell_area[c]) > 1e-12 * max(1.0, area):
            problems.append(f"cell {c}: stored area inconsistent with nodes")

        # geometric closure: sum of outward normal * length over the faces
        closure = np.zeros(2)
        perimeter = 0.0
        for slot in range(nv):
            fid = int(mesh.cell_faces[c, slot])
            if fid < 0 or fid >= mesh.n_faces:
                problems.append(f"cell {c}: face index out of range")
                break
            sign = float(mesh.cell_fsign[c, slot])
            closure += sign * mesh.face_normal[fid] * mesh.face_length[fid]
            perimeter += float(mesh.face_length[fid])
        else:
            if np.linalg.norm(closure) > 1e-12 * perimeter:
                problems.append(f"cell {c}: geometric closure violated")

    referenced = np.zeros(mesh.n_faces, dtype=np.int32)
    for c in range(mesh.n_cells):
        for slot in range(int(mesh.cell_nvert[c])):
            fid = int(mesh.cell_faces[c, slot])
            if 0 <= fid < mesh.n_faces:
                referenced[fid] += 1
                l, r = mesh.face_cells[fid]
                if c not in (l, r):
                    problems.append(f"cell {c}: face {fid} does not reference it back")
                want_sign = 1 if l == c else -1
                if mesh.cell_fsign[c, slot] != want_sign:
                    problems.append(f"cell {c}: wrong orientation sign on face {fid}")
                neighbor = r if l == c else l
                if mesh.cell_neighbors[c, slot] != neighbor:
                    problems.append(f"cell {c}: neighbor list inconsistent at face {fid}")

    for f in range(mesh.n_faces):
        expect = 1 if mesh.face_cells[f, 1] < 0 else 2
        if referenced[f] != expect:
            problems.append(
                f"face {f}: referenced by {referenced[f]} cells, expected {expect}"
            )
        n = mesh.face_normal[f]
        if abs(np.hypot(n[0], n[1]) - 1.0) > 1e-14:
            problems.append(f"face {f}: normal not unit length")
        if mesh.face_length[f] <= 0.0:
            problems.append(f"face {f}: non-positive length")

    return problems
