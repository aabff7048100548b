"""Tetrahedral volume meshes, boundary extraction and uniform refinement.

The built-in experiments run on axis-aligned cubes centered at the origin;
each subcube is split into six tetrahedra sharing the main diagonal (Kuhn
subdivision), which refines conformingly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np


class MeshError(ValueError):
    pass


def _tet_volumes(vertices, tets):
    v = vertices[tets]
    return np.einsum("ij,ij->i", np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]),
                     v[:, 3] - v[:, 0]) / 6.0


@dataclass(frozen=True)
class VolumeMesh:
    vertices: np.ndarray          # (nv, 3) float
    tets: np.ndarray              # (nt, 4) int
    region_tags: np.ndarray       # (nt,) int

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.ascontiguousarray(self.vertices, dtype=float))
        object.__setattr__(self, "tets", np.ascontiguousarray(self.tets, dtype=np.int64))
        object.__setattr__(self, "region_tags", np.ascontiguousarray(self.region_tags, dtype=np.int64))
        if self.tets.shape[0] != self.region_tags.shape[0]:
            raise MeshError("region tags must match tet count")
        vols = _tet_volumes(self.vertices, self.tets)
        if self.tets.size and vols.min() <= 0.0:
            raise MeshError("tet with nonpositive volume (orientation broken)")
        self._check_conforming()
        for a in (self.vertices, self.tets, self.region_tags):
            a.flags.writeable = False

    def _check_conforming(self):
        key = np.sort(self.tets, axis=1)
        if len(np.unique(key, axis=0)) != len(key):
            raise MeshError("duplicate element")
        faces = self.face_counts()
        if faces and max(faces.values()) > 2:
            raise MeshError("non-conforming mesh: face shared by more than two tets")

    def face_counts(self):
        counts = {}
        for t in self.tets:
            for f in ((t[0], t[1], t[2]), (t[0], t[1], t[3]),
                      (t[0], t[2], t[3]), (t[1], t[2], t[3])):
                k = tuple(sorted(f))
                counts[k] = counts.get(k, 0) + 1
        return counts

    @property
    def num_tets(self):
        return self.tets.shape[0]

    def tet_volumes(self):
        return _tet_volumes(self.vertices, self.tets)

    def total_volume(self):
        return float(self.tet_volumes().sum())


@dataclass(frozen=True)
class SurfaceMesh:
    vertices: np.ndarray          # (ns, 3), bit-for-bit copies of parent coords
    triangles: np.ndarray         # (np, 3) indices into `vertices`
    parent_vertex: np.ndarray     # (ns,) index into the VolumeMesh vertices
    parent_face: np.ndarray       # (np, 2): (tet index, local face index)
    normals: np.ndarray           # (np, 3) unit outward normals

    def __post_init__(self):
        for name in ("vertices", "normals"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=float))
        for name in ("triangles", "parent_vertex", "parent_face"):
            object.__setattr__(self, name, np.ascontiguousarray(getattr(self, name), dtype=np.int64))
        edges = {}
        for i, t in enumerate(self.triangles):
            for e in ((t[0], t[1]), (t[1], t[2]), (t[0], t[2])):
                k = tuple(sorted(e))
                edges[k] = edges.get(k, 0) + 1
        if any(c != 2 for c in edges.values()):
            raise MeshError("boundary surface is not closed")
        for name in ("vertices", "triangles", "parent_vertex", "parent_face", "normals"):
            getattr(self, name).flags.writeable = False

    @property
    def num_triangles(self):
        return self.triangles.shape[0]

    def corners(self):
        """Triangle corner coordinates, shape (np, 3, 3)."""
        return self.vertices[self.triangles]

    def areas(self):
        v = self.corners()
        return np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1) / 2.0

    def total_area(self):
        return float(self.areas().sum())


_TET_FACES = ((1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1))  # local face i opposite vertex i


def cube_mesh(side, n, region_fn=None):
    """Kuhn-subdivided mesh of the cube (-side/2, side/2)^3 with n**3 subcubes.

    region_fn, if given, maps a tet centroid to an integer region tag.
    """
    if n < 1:
        raise MeshError("need at least one subdivision per edge")
    grid = np.linspace(-side / 2.0, side / 2.0, n + 1)
    idx = lambda i, j, k: (i * (n + 1) + j) * (n + 1) + k
    II, JJ, KK = np.meshgrid(np.arange(n + 1), np.arange(n + 1), np.arange(n + 1),
                             indexing="ij")
    vertices = np.column_stack([grid[II.ravel()], grid[JJ.ravel()], grid[KK.ravel()]])

    tets = []
    e = {0: (1, 0, 0), 1: (0, 1, 0), 2: (0, 0, 1)}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for perm in permutations((0, 1, 2)):
                    path = [(i, j, k)]
                    for ax in perm:
                        last = path[-1]
                        path.append(tuple(last[d] + e[ax][d] for d in range(3)))
                    tet = [idx(*p) for p in path]
                    if _tet_volumes(vertices, np.array([tet]))[0] < 0:
                        tet[2], tet[3] = tet[3], tet[2]
                    tets.append(tet)
    tets = np.array(tets, dtype=np.int64)
    if region_fn is None:
        tags = np.zeros(len(tets), dtype=np.int64)
    else:
        centroids = vertices[tets].mean(axis=1)
        tags = np.array([region_fn(c) for c in centroids], dtype=np.int64)
    return VolumeMesh(vertices, tets, tags)


def refine_uniform(mesh):
    """Red refinement: each tet split into 4 corner tets + 4 octahedron tets.

    The interior octahedron is cut along its shortest diagonal (ties broken
    by the lexicographically smallest parent-edge index pair).
    """
    verts = [mesh.vertices]
    edge_mid = {}
    next_id = len(mesh.vertices)

    def midpoint(a, b):
        nonlocal next_id
        k = (a, b) if a < b else (b, a)
        if k not in edge_mid:
            edge_mid[k] = next_id
            verts.append(0.5 * (mesh.vertices[k[0]] + mesh.vertices[k[1]])[None, :])
            next_id += 1
        return edge_mid[k]

    new_tets = []
    new_tags = []
    coord_cache = {}

    def coord(i):
        if i < len(mesh.vertices):
            return mesh.vertices[i]
        return coord_cache[i]

    for t, tag in zip(mesh.tets, mesh.region_tags):
        v0, v1, v2, v3 = (int(x) for x in t)
        mids = {}
        for a, b in ((v0, v1), (v0, v2), (v0, v3), (v1, v2), (v1, v3), (v2, v3)):
            m = midpoint(a, b)
            mids[(a, b)] = m
            coord_cache[m] = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        m01, m02, m03 = mids[(v0, v1)], mids[(v0, v2)], mids[(v0, v3)]
        m12, m13, m23 = mids[(v1, v2)], mids[(v1, v3)], mids[(v2, v3)]
        children = [(v0, m01, m02, m03), (v1, m01, m12, m13),
                    (v2, m02, m12, m23), (v3, m03, m13, m23)]
        # octahedron: pick the shortest of the three interior diagonals
        diags = [((m01, m23), (m02, m03, m13, m12)),
                 ((m02, m13), (m01, m03, m23, m12)),
                 ((m03, m12), (m01, m02, m23, m13))]
        best = min(diags, key=lambda d: (np.linalg.norm(coord(d[0][0]) - coord(d[0][1])),
                                         tuple(sorted(d[0]))))
        (a, b), ring = best
        for c, d in zip(ring, ring[1:] + ring[:1]):
            children.append((a, b, c, d))
        for child in children:
            child = list(child)
            p = np.array([coord(i) for i in child])
            if np.dot(np.cross(p[1] - p[0], p[2] - p[0]), p[3] - p[0]) < 0:
                child[2], child[3] = child[3], child[2]
            new_tets.append(child)
            new_tags.append(tag)
    return VolumeMesh(np.vstack(verts), np.array(new_tets), np.array(new_tags))


def extract_boundary(mesh):
    """Boundary surface of the mesh with outward normals."""
    counts = {}
    owner = {}
    for i, t in enumerate(mesh.tets):
        for lf, f in enumerate(_TET_FACES):
            tri = (int(t[f[0]]), int(t[f[1]]), int(t[f[2]]))
            k = tuple(sorted(tri))
            counts[k] = counts.get(k, 0) + 1
            owner[k] = (i, lf, tri)
    boundary = [owner[k] for k, c in counts.items() if c == 1]
    if not boundary:
        raise MeshError("mesh has no boundary faces")

    used = sorted({v for _, _, tri in boundary for v in tri})
    parent_vertex = np.array(used, dtype=np.int64)
    remap = {p: i for i, p in enumerate(used)}
    vertices = mesh.vertices[parent_vertex].copy()

    triangles, parent_face, normals = [], [], []
    for tet_idx, lf, tri in boundary:
        p = mesh.vertices[list(tri)]
        nrm = np.cross(p[1] - p[0], p[2] - p[0])
        nrm /= np.linalg.norm(nrm)
        tet_centroid = mesh.vertices[mesh.tets[tet_idx]].mean(axis=0)
        if np.dot(nrm, p.mean(axis=0) - tet_centroid) < 0:
            tri = (tri[0], tri[2], tri[1])
            nrm = -nrm
        triangles.append([remap[v] for v in tri])
        parent_face.append((tet_idx, lf))
        normals.append(nrm)
    return SurfaceMesh(vertices, np.array(triangles), parent_vertex,
                       np.array(parent_face), np.array(normals))


def mesh_size(mesh):
    """Largest tet diameter (longest edge)."""
    if mesh.num_tets == 0:
        raise MeshError("empty mesh")
    v = mesh.vertices[mesh.tets]
    h = 0.0
    for a in range(4):
        for b in range(a + 1, 4):
            h = max(h, float(np.linalg.norm(v[:, a] - v[:, b], axis=1).max()))
    return h


def load_gmsh(path):
    """Read a Gmsh MSH 2.2 ASCII file (tet elements, optional surface tris)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]

    def find(tag):
        try:
            return lines.index(tag)
        except ValueError:
            raise MeshError(f"missing section {tag}") from None

    i = find("$MeshFormat")
    version = lines[i + 1].split()[0]
    if not version.startswith("2."):
        raise MeshError(f"line {i + 2}: unsupported MSH version {version}")

    i = find("$Nodes")
    n_nodes = int(lines[i + 1])
    node_ids = {}
    coords = np.empty((n_nodes, 3))
    for j in range(n_nodes):
        parts = lines[i + 2 + j].split()
        if len(parts) != 4:
            raise MeshError(f"line {i + 3 + j}: malformed node record")
        node_ids[int(parts[0])] = j
        coords[j] = [float(x) for x in parts[1:]]

    i = find("$Elements")
    n_elem = int(lines[i + 1])
    tets, tags = [], []
    seen = set()
    for j in range(n_elem):
        ln_no = i + 3 + j
        parts = lines[i + 2 + j].split()
        if len(parts) < 3:
            raise MeshError(f"line {ln_no}: malformed element record")
        etype = int(parts[1])
        ntags = int(parts[2])
        conn = [int(x) for x in parts[3 + ntags:]]
        if etype == 2:
            continue  # surface triangles: region hints only
        if etype != 4:
            raise MeshError(f"line {ln_no}: unsupported element type {etype}")
        if len(conn) != 4:
            raise MeshError(f"line {ln_no}: tet needs 4 nodes")
        tet = [node_ids[c] for c in conn]
        key = tuple(sorted(tet))
        if key in seen:
            raise MeshError(f"line {ln_no}: duplicate element")
        seen.add(key)
        if _tet_volumes(coords, np.array([tet]))[0] < 0:
            tet[2], tet[3] = tet[3], tet[2]
        tets.append(tet)
        tags.append(int(parts[3]) if ntags >= 1 else 0)
    if not tets:
        raise MeshError("no tetrahedra in file")
    return VolumeMesh(coords, np.array(tets), np.array(tags))
