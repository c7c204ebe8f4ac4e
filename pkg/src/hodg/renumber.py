"""Cell renumbering to improve memory locality: adjacency graph over
cells, bandwidth measurement, Reverse Cuthill-McKee ordering, permutation
application to a mesh, and MatrixMarket export of the adjacency pattern.

All orderings are deterministic: neighbor visits ascend by (degree, old
index), components are processed in ascending order of their smallest
vertex, and the pseudo-peripheral start vertex comes from the standard
double-BFS heuristic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .mesh import BoundaryPatch, Mesh

__all__ = [
    "AdjacencyGraph",
    "Permutation",
    "build_adjacency",
    "bandwidth",
    "cuthill_mckee",
    "rcm",
    "apply_permutation",
    "random_permutation",
    "export_spy",
]


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric graph in CSR form, no self-loops."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray

    @classmethod
    def from_edges(cls, n: int, edges) -> "AdjacencyGraph":
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            if edges.min() < 0 or edges.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise ValueError("self-loop")
            u = np.minimum(edges[:, 0], edges[:, 1])
            v = np.maximum(edges[:, 0], edges[:, 1])
            uniq = np.unique(np.stack([u, v], axis=1), axis=0)
            both = np.concatenate([uniq, uniq[:, ::-1]], axis=0)
        else:
            both = np.empty((0, 2), dtype=np.int64)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, both[:, 0] + 1, 1)
        np.cumsum(indptr, out=indptr)
        return cls(n=n, indptr=indptr, indices=both[:, 1].copy())

    def degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v] : self.indptr[v + 1]]

    def edges(self) -> np.ndarray:
        """Unique edges as an (m, 2) array with u < v."""
        u = np.repeat(np.arange(self.n), self.degree())
        v = self.indices
        keep = u < v
        return np.stack([u[keep], v[keep]], axis=1)

    @property
    def n_edges(self) -> int:
        return self.indices.size // 2


def build_adjacency(mesh: Mesh) -> AdjacencyGraph:
    """Graph with one vertex per cell and one edge per interior face."""
    interior = mesh.face_cells[:, 1] >= 0
    return AdjacencyGraph.from_edges(mesh.n_cells, mesh.face_cells[interior])


@dataclass(frozen=True)
class Permutation:
    """Bijection over 0..n-1: forward maps old index to new index."""

    forward: np.ndarray
    inverse: np.ndarray

    @classmethod
    def from_forward(cls, forward) -> "Permutation":
        forward = np.asarray(forward, dtype=np.int64)
        n = forward.size
        inverse = np.empty(n, dtype=np.int64)
        seen = np.zeros(n, dtype=bool)
        if forward.size and (forward.min() < 0 or forward.max() >= n):
            raise ValueError("permutation values out of range")
        seen[forward] = True
        if not seen.all():
            raise ValueError("not a bijection")
        inverse[forward] = np.arange(n)
        return cls(forward=forward, inverse=inverse)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        idx = np.arange(n, dtype=np.int64)
        return cls(forward=idx, inverse=idx.copy())

    @property
    def n(self) -> int:
        return self.forward.size


def random_permutation(n: int, seed: int = 0) -> Permutation:
    rng = np.random.default_rng(seed)
    return Permutation.from_forward(rng.permutation(n))


def bandwidth(graph: AdjacencyGraph, perm: Permutation | None = None) -> int:
    """Max |perm(i) - perm(j)| over edges; 0 for edgeless graphs."""
    if perm is not None and perm.n != graph.n:
        raise ValueError(f"permutation size {perm.n} != graph size {graph.n}")
    e = graph.edges()
    if e.shape[0] == 0:
        return 0
    if perm is None:
        return int(np.max(np.abs(e[:, 0] - e[:, 1])))
    f = perm.forward
    return int(np.max(np.abs(f[e[:, 0]] - f[e[:, 1]])))


def _bfs_levels(graph: AdjacencyGraph, start: int, level: np.ndarray) -> list[int]:
    """Levels of the component containing start; level array is reused and
    must come in filled with -1 for unvisited vertices. Returns the members
    in BFS order."""
    level[start] = 0
    queue = deque([start])
    members = [start]
    while queue:
        v = queue.popleft()
        lv = level[v] + 1
        for w in graph.neighbors(v):
            if level[w] < 0:
                level[w] = lv
                queue.append(w)
                members.append(int(w))
    return members


def _pseudo_peripheral(graph: AdjacencyGraph, component: list[int], degree) -> int:
    """George-Liu double-BFS heuristic, deterministic tie-breaking."""
    r = min(component, key=lambda v: (degree[v], v))
    level = np.full(graph.n, -1, dtype=np.int64)
    while True:
        level[component] = -1
        _bfs_levels(graph, r, level)
        ecc = int(level[component].max())
        last = [v for v in component if level[v] == ecc]
        candidate = min(last, key=lambda v: (degree[v], v))
        level[component] = -1
        _bfs_levels(graph, candidate, level)
        if int(level[component].max()) > ecc:
            r = candidate
        else:
            return r


def cuthill_mckee(graph: AdjacencyGraph) -> np.ndarray:
    """Cuthill-McKee visit order (old vertex ids in visit sequence)."""
    n = graph.n
    degree = graph.degree()
    # presorted neighbor lists make each BFS visit O(deg)
    sorted_adj = [
        sorted(graph.neighbors(v).tolist(), key=lambda w: (degree[w], w))
        for v in range(n)
    ]
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    pos = 0
    level = np.full(n, -1, dtype=np.int64)
    for seed in range(n):
        if visited[seed]:
            continue
        level[:] = -1
        component = _bfs_levels(graph, seed, level)
        start = _pseudo_peripheral(graph, component, degree)
        visited[start] = True
        queue = deque([start])
        while queue:
            v = queue.popleft()
            order[pos] = v
            pos += 1
            for w in sorted_adj[v]:
                if not visited[w]:
                    visited[w] = True
                    queue.append(w)
    return order


def rcm(graph: AdjacencyGraph) -> Permutation:
    """Reverse Cuthill-McKee ordering as a Permutation (old -> new)."""
    order = cuthill_mckee(graph)[::-1]
    forward = np.empty(graph.n, dtype=np.int64)
    forward[order] = np.arange(graph.n)
    return Permutation(forward=forward, inverse=order.copy())


def apply_permutation(mesh: Mesh, perm: Permutation) -> Mesh:
    """Renumber cells by `perm` and re-sort the face list so faces ascend
    by (min incident new cell id, max incident new cell id).

    Face orientation (left/right and the normal) and each cell's local
    face order are preserved, so per-face and per-cell arithmetic is
    unchanged by renumbering.
    """
    if perm.n != mesh.n_cells:
        raise ValueError(f"permutation size {perm.n} != cell count {mesh.n_cells}")
    fwd = perm.forward
    inv = perm.inverse

    l_new = fwd[mesh.face_cells[:, 0]]
    r_old = mesh.face_cells[:, 1]
    r_new = np.where(r_old >= 0, fwd[np.clip(r_old, 0, None)], l_new)
    kmin = np.minimum(l_new, r_new)
    kmax = np.maximum(l_new, r_new)
    face_order = np.lexsort((np.arange(mesh.n_faces), kmax, kmin))
    face_map = np.empty(mesh.n_faces, dtype=np.int64)
    face_map[face_order] = np.arange(mesh.n_faces)

    new_face_cells = mesh.face_cells.copy()
    new_face_cells[:, 0] = fwd[mesh.face_cells[:, 0]]
    interior = mesh.face_cells[:, 1] >= 0
    new_face_cells[interior, 1] = fwd[mesh.face_cells[interior, 1]]
    new_face_cells = new_face_cells[face_order].astype(np.int32)

    new_cell_faces = np.where(
        mesh.cell_faces >= 0, face_map[np.clip(mesh.cell_faces, 0, None)], -1
    )[inv].astype(np.int32)
    new_cell_neighbors = np.where(
        mesh.cell_neighbors >= 0, fwd[np.clip(mesh.cell_neighbors, 0, None)], -1
    )[inv].astype(np.int32)

    patches = [
        BoundaryPatch(
            p.name, p.kind, np.sort(face_map[p.face_ids]).astype(np.int32)
        )
        for p in mesh.patches
    ]

    return Mesh(
        node_xy=mesh.node_xy,
        cell_nodes=mesh.cell_nodes[inv],
        cell_nvert=mesh.cell_nvert[inv],
        cell_faces=new_cell_faces,
        cell_fsign=mesh.cell_fsign[inv],
        cell_neighbors=new_cell_neighbors,
        cell_centroid=mesh.cell_centroid[inv],
        cell_area=mesh.cell_area[inv],
        cell_h=mesh.cell_h[inv],
        face_nodes=mesh.face_nodes[face_order],
        face_cells=new_face_cells,
        face_normal=mesh.face_normal[face_order],
        face_length=mesh.face_length[face_order],
        face_patch=mesh.face_patch[face_order],
        patches=patches,
    )


def export_spy(graph: AdjacencyGraph, perm: Permutation | None, path) -> None:
    """Write the permuted adjacency pattern (plus the diagonal) as a
    MatrixMarket coordinate pattern file, 1-based indices, both triangles
    stored explicitly."""
    n = graph.n
    f = perm.forward if perm is not None else np.arange(n, dtype=np.int64)
    e = graph.edges()
    if e.shape[0]:
        pu = f[e[:, 0]]
        pv = f[e[:, 1]]
        rows = np.concatenate([np.arange(n, dtype=np.int64), pu, pv])
        cols = np.concatenate([np.arange(n, dtype=np.int64), pv, pu])
    else:
        rows = cols = np.arange(n, dtype=np.int64)
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate pattern symmetric\n")
        fh.write(f"{n} {n} {rows.size}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i + 1} {j + 1}\n")
