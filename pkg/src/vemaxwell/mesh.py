"""Polyhedral mesh data model, PVM-JSON I/O, structured generators and checks.

A mesh is a flat polyhedral complex: planar polygonal faces shared between
cells, cells described as signed face lists (sign +1 means the stored face
normal points out of the cell).  Edges are derived, each oriented from its
lower to its higher vertex index, so edge-based quantities are globally
well defined without an orientation table.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


class MeshError(Exception):
    """Base class for mesh construction failures."""


class MeshFormatError(MeshError):
    """Malformed mesh file."""


class MeshTopologyError(MeshError):
    """Inconsistent connectivity (open cell boundary, bad face sharing...)."""


class MeshGeometryError(MeshError):
    """Degenerate or invalid geometry (nonplanar face, nonpositive volume...)."""


# Faces must be planar up to this fraction of the face diameter.
PLANARITY_TOL = 1e-10
# Per-cell closed-surface identity tolerance, relative to h_K^2.
CLOSURE_TOL = 1e-12


@dataclass(frozen=True)
class PolyMesh:
    """Immutable polyhedral mesh with derived topology and element geometry.

    Face normals follow the right-hand rule of the stored vertex loop.
    ``cell_face_signs[k][j] = +1`` iff that stored normal points out of
    cell ``k``.  ``face_edge_signs[f][j] = +1`` iff edge ``j`` of the loop
    is traversed from its lower to its higher vertex index.
    """

    vertices: np.ndarray                 # (nv, 3)
    faces: tuple                         # per face: vertex loop, int array
    cell_faces: tuple                    # per cell: face indices, int array
    cell_face_signs: tuple               # per cell: +-1 per face
    edges: np.ndarray                    # (ne, 2), lo < hi
    face_edges: tuple                    # per face: edge ids in loop order
    face_edge_signs: tuple               # per face: +-1 per loop edge
    cell_edges: tuple                    # per cell: sorted unique edge ids
    boundary_vertices: np.ndarray        # bool (nv,)
    boundary_edges: np.ndarray           # bool (ne,)
    boundary_faces: np.ndarray           # bool (nf,)
    edge_lengths: np.ndarray             # (ne,)
    edge_tangents: np.ndarray            # (ne, 3), unit, lo -> hi
    edge_midpoints: np.ndarray           # (ne, 3)
    face_areas: np.ndarray               # (nf,)
    face_normals: np.ndarray             # (nf, 3), unit
    face_centroids: np.ndarray           # (nf, 3)
    face_diameters: np.ndarray           # (nf,)
    cell_volumes: np.ndarray             # (nc,)
    cell_centroids: np.ndarray           # (nc, 3)
    cell_diameters: np.ndarray           # (nc,)
    name: str = ""

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_cells(self) -> int:
        return len(self.cell_faces)

    @property
    def h(self) -> float:
        """Mesh size: largest cell diameter."""
        return float(self.cell_diameters.max())

    def cell_vertex_ids(self, k: int) -> np.ndarray:
        """Sorted unique vertex indices of cell k."""
        return np.unique(np.concatenate([self.faces[f] for f in self.cell_faces[k]]))


@dataclass
class MeshStats:
    """Size and shape summary; ratios are proxies for shape regularity."""

    h: float
    cell_diameters: np.ndarray
    face_diameters: np.ndarray
    edge_lengths: np.ndarray
    min_face_cell_ratio: float      # min over cells of min_F h_F / h_K
    min_edge_face_ratio: float      # min over faces of min_e h_e / h_F
    n_vertices: int
    n_edges: int
    n_faces: int
    n_cells: int


@dataclass
class ValidationReport:
    """Report-only mesh quality check; hard violations listed, never raised."""

    planarity_residuals: np.ndarray      # per face, relative to h_F
    face_closure_residuals: np.ndarray   # |sum sigma |e| t_e|, relative to h_F
    cell_closure_residuals: np.ndarray   # |sum sigma |F| n_F|, relative to h_K^2
    min_face_cell_ratio: float
    min_edge_face_ratio: float
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _polygon_geometry(points: np.ndarray):
    """Area, unit normal, centroid, diameter and planarity residual of a loop.

    Area and centroid come from a fan about the vertex mean with signed
    triangle areas, which is exact for any simple polygon (the signed
    pieces telescope), then the centroid is the area-weighted mean of the
    triangle centroids.  Planarity is measured against the best-fit plane
    through the vertex mean.
    """
    m = points.shape[0]
    apex = points.mean(axis=0)
    rel = points - apex
    # Total area vector; orientation of the loop fixes the normal.
    cross = np.cross(rel, np.roll(rel, -1, axis=0))
    area_vec = 0.5 * cross.sum(axis=0)
    area = float(np.linalg.norm(area_vec))
    diam = _point_set_diameter(points)
    if area <= 0.0 or not np.isfinite(area):
        raise MeshGeometryError("face with zero area")
    normal = area_vec / area
    signed = 0.5 * cross @ normal                      # per fan triangle
    tri_centroids = (apex + points + np.roll(points, -1, axis=0)) / 3.0
    centroid = (signed[:, None] * tri_centroids).sum(axis=0) / signed.sum()
    # Best-fit plane normal: singular vector of the centered vertex cloud.
    _, _, vt = np.linalg.svd(points - points.mean(axis=0))
    residual = float(np.abs((points - points.mean(axis=0)) @ vt[2]).max())
    if m >= 3 and residual > PLANARITY_TOL * diam:
        raise MeshGeometryError(
            f"nonplanar face: residual {residual:.3e} exceeds "
            f"{PLANARITY_TOL:.0e} * h_F = {PLANARITY_TOL * diam:.3e}"
        )
    return area, normal, centroid, diam, residual


def _point_set_diameter(points: np.ndarray) -> float:
    d = points[:, None, :] - points[None, :, :]
    return float(np.sqrt((d * d).sum(axis=2)).max())


def derive_topology(vertices, faces, cells, name: str = "") -> PolyMesh:
    """Build a PolyMesh from raw vertices, face loops and signed face lists.

    ``cells`` uses 1-based signed face references: +k means face k-1 with
    its stored normal pointing outward, -k means inward.
    """
    vertices = np.ascontiguousarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise MeshFormatError("vertices must be an (n, 3) array")
    nv = vertices.shape[0]

    face_loops = []
    for i, loop in enumerate(faces):
        loop = np.asarray(loop, dtype=int)
        if loop.size < 3:
            raise MeshTopologyError(f"face {i} has fewer than 3 vertices")
        if loop.min() < 0 or loop.max() >= nv:
            raise MeshTopologyError(f"face {i} references a missing vertex")
        if np.unique(loop).size != loop.size:
            raise MeshTopologyError(f"inconsistent loop: face {i} repeats a vertex")
        face_loops.append(loop)
    nf = len(face_loops)

    cf_list, cs_list = [], []
    for k, refs in enumerate(cells):
        refs = np.asarray(refs, dtype=int)
        if refs.size < 4 or np.any(refs == 0):
            raise MeshTopologyError(f"cell {k} has an invalid face list")
        idx = np.abs(refs) - 1
        if idx.max() >= nf:
            raise MeshTopologyError(f"cell {k} references a missing face")
        if np.unique(idx).size != idx.size:
            raise MeshTopologyError(f"cell {k} repeats a face")
        cf_list.append(idx)
        cs_list.append(np.sign(refs).astype(int))
    nc = len(cf_list)

    # Deduplicate edges; canonical orientation is lower -> higher index.
    edge_ids: dict = {}
    face_edges, face_edge_signs = [], []
    for loop in face_loops:
        a, b = loop, np.roll(loop, -1)
        eids = np.empty(loop.size, dtype=int)
        esigns = np.empty(loop.size, dtype=int)
        for j in range(loop.size):
            lo, hi = (a[j], b[j]) if a[j] < b[j] else (b[j], a[j])
            eids[j] = edge_ids.setdefault((lo, hi), len(edge_ids))
            esigns[j] = 1 if a[j] < b[j] else -1
        face_edges.append(eids)
        face_edge_signs.append(esigns)
    edges = np.array(sorted(edge_ids, key=edge_ids.get), dtype=int).reshape(-1, 2)
    ne = edges.shape[0]

    # Face sharing: interior faces belong to exactly two cells, with
    # opposite outward signs; more than two is a dangling face.
    face_use: list = [[] for _ in range(nf)]
    for k in range(nc):
        for f, s in zip(cf_list[k], cs_list[k]):
            face_use[f].append((k, int(s)))
    for f, use in enumerate(face_use):
        if len(use) > 2:
            raise MeshTopologyError(f"dangling face {f}: referenced by {len(use)} cells")
        if len(use) == 2 and use[0][1] == use[1][1]:
            raise MeshTopologyError(
                f"inconsistent face sharing: face {f} has equal signs in both cells"
            )

    # Per-face geometry (validates planarity and degeneracy).
    face_areas = np.empty(nf)
    face_normals = np.empty((nf, 3))
    face_centroids = np.empty((nf, 3))
    face_diameters = np.empty(nf)
    for f, loop in enumerate(face_loops):
        area, normal, centroid, diam, _ = _polygon_geometry(vertices[loop])
        face_areas[f] = area
        face_normals[f] = normal
        face_centroids[f] = centroid
        face_diameters[f] = diam

    # Edge geometry.
    vec = vertices[edges[:, 1]] - vertices[edges[:, 0]]
    edge_lengths = np.linalg.norm(vec, axis=1)
    if np.any(edge_lengths <= 0.0):
        raise MeshGeometryError("zero-length edge")
    edge_tangents = vec / edge_lengths[:, None]
    edge_midpoints = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])

    # Per-cell geometry: closure check, divergence-theorem volume,
    # pyramid-decomposition centroid, vertex diameter.
    cell_volumes = np.empty(nc)
    cell_centroids = np.empty((nc, 3))
    cell_diameters = np.empty(nc)
    cell_edge_list = []
    for k in range(nc):
        fids, signs = cf_list[k], cs_list[k]
        verts_k = np.unique(np.concatenate([face_loops[f] for f in fids]))
        h_k = _point_set_diameter(vertices[verts_k])
        cell_diameters[k] = h_k
        closure = (signs[:, None] * face_areas[fids, None] * face_normals[fids]).sum(axis=0)
        if np.linalg.norm(closure) > CLOSURE_TOL * h_k**2:
            raise MeshTopologyError(
                f"open cell boundary: cell {k} surface residual "
                f"{np.linalg.norm(closure):.3e}"
            )
        vol = (signs * face_areas[fids]
               * np.einsum("ij,ij->i", face_centroids[fids], face_normals[fids])).sum() / 3.0
        if vol <= 0.0:
            raise MeshGeometryError(f"nonpositive volume {vol:.3e} in cell {k}")
        cell_volumes[k] = vol
        apex = vertices[verts_k].mean(axis=0)
        moment = np.zeros(3)
        vol_check = 0.0
        for f, s in zip(fids, signs):
            pts = vertices[face_loops[f]]
            a_f = pts.mean(axis=0)
            p, q = pts - apex, np.roll(pts, -1, axis=0) - apex
            base = a_f - apex
            tet_vols = s * np.einsum("j,ij->i", base, np.cross(p, q)) / 6.0
            tet_cents = (apex + a_f + pts + np.roll(pts, -1, axis=0)) / 4.0
            moment += (tet_vols[:, None] * tet_cents).sum(axis=0)
            vol_check += tet_vols.sum()
        cell_centroids[k] = moment / vol_check
        cell_edge_list.append(np.unique(np.concatenate([face_edges[f] for f in fids])))

    # Boundary flags: face iff referenced once, edge/vertex iff on such a face.
    boundary_faces = np.array([len(u) == 1 for u in face_use], dtype=bool)
    if nc > 0 and not boundary_faces.any():
        raise MeshTopologyError("mesh has no boundary faces")
    boundary_edges = np.zeros(ne, dtype=bool)
    boundary_vertices = np.zeros(nv, dtype=bool)
    for f in np.flatnonzero(boundary_faces):
        boundary_edges[face_edges[f]] = True
        boundary_vertices[face_loops[f]] = True

    return PolyMesh(
        vertices=vertices,
        faces=tuple(face_loops),
        cell_faces=tuple(cf_list),
        cell_face_signs=tuple(cs_list),
        edges=edges,
        face_edges=tuple(face_edges),
        face_edge_signs=tuple(face_edge_signs),
        cell_edges=tuple(cell_edge_list),
        boundary_vertices=boundary_vertices,
        boundary_edges=boundary_edges,
        boundary_faces=boundary_faces,
        edge_lengths=edge_lengths,
        edge_tangents=edge_tangents,
        edge_midpoints=edge_midpoints,
        face_areas=face_areas,
        face_normals=face_normals,
        face_centroids=face_centroids,
        face_diameters=face_diameters,
        cell_volumes=cell_volumes,
        cell_centroids=cell_centroids,
        cell_diameters=cell_diameters,
        name=name,
    )


def load_mesh(path) -> PolyMesh:
    """Read a PVM-JSON mesh file.

    Format: object with "vertices" ([x, y, z] triples), "faces" (0-based
    vertex loops; loop order defines the normal), "cells" (1-based signed
    face indices) and an optional "name".
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MeshFormatError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise MeshFormatError(f"{path}: top-level JSON object expected")
    for key in ("vertices", "faces", "cells"):
        if key not in doc:
            raise MeshFormatError(f"{path}: missing key '{key}'")
    try:
        return derive_topology(
            doc["vertices"], doc["faces"], doc["cells"],
            name=str(doc.get("name", "")),
        )
    except (TypeError, ValueError) as exc:
        raise MeshFormatError(f"{path}: malformed arrays: {exc}") from exc


def save_mesh(mesh: PolyMesh, path) -> None:
    """Write PVM-JSON; coordinates round-trip bit-exactly (repr of floats)."""
    cells = []
    for fids, signs in zip(mesh.cell_faces, mesh.cell_face_signs):
        cells.append([int(s) * (int(f) + 1) for f, s in zip(fids, signs)])
    doc = {
        "name": mesh.name,
        "vertices": [[float(c) for c in v] for v in mesh.vertices],
        "faces": [[int(i) for i in loop] for loop in mesh.faces],
        "cells": cells,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def generate_cube_mesh(n: int, domain=None, name: str = "") -> PolyMesh:
    """Uniform n x n x n hexahedral mesh of an axis-aligned box.

    Vertices, faces and cells are ordered lexicographically by (i, j, k),
    so two calls with the same arguments yield identical meshes.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    if domain is None:
        domain = ((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    lo = np.asarray(domain[0], dtype=float)
    hi = np.asarray(domain[1], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("domain box must have positive extent")

    m = n + 1
    def vid(i, j, k):
        return (i * m + j) * m + k

    coords = np.empty((m**3, 3))
    for i in range(m):
        for j in range(m):
            for k in range(m):
                frac = np.array([i, j, k]) / n
                coords[vid(i, j, k)] = lo + frac * (hi - lo)

    faces = []
    fid = {}
    # x-normal faces: loop oriented so the stored normal is +x.
    for i in range(m):
        for j in range(n):
            for k in range(n):
                fid[("x", i, j, k)] = len(faces)
                faces.append([vid(i, j, k), vid(i, j + 1, k),
                              vid(i, j + 1, k + 1), vid(i, j, k + 1)])
    for j in range(m):
        for i in range(n):
            for k in range(n):
                fid[("y", i, j, k)] = len(faces)
                faces.append([vid(i, j, k), vid(i, j, k + 1),
                              vid(i + 1, j, k + 1), vid(i + 1, j, k)])
    for k in range(m):
        for i in range(n):
            for j in range(n):
                fid[("z", i, j, k)] = len(faces)
                faces.append([vid(i, j, k), vid(i + 1, j, k),
                              vid(i + 1, j + 1, k), vid(i, j + 1, k)])

    cells = []
    for i in range(n):
        for j in range(n):
            for k in range(n):
                cells.append([
                    -(fid[("x", i, j, k)] + 1), +(fid[("x", i + 1, j, k)] + 1),
                    -(fid[("y", i, j, k)] + 1), +(fid[("y", i, j + 1, k)] + 1),
                    -(fid[("z", i, j, k)] + 1), +(fid[("z", i, j, k + 1)] + 1),
                ])

    return derive_topology(coords, faces, cells, name=name or f"cube{n**3}")


def mesh_stats(mesh: PolyMesh) -> MeshStats:
    """Size parameters and observed shape-regularity ratios."""
    min_fc = math.inf
    for k in range(mesh.n_cells):
        hk = mesh.cell_diameters[k]
        min_fc = min(min_fc, float(mesh.face_diameters[mesh.cell_faces[k]].min()) / hk)
    min_ef = math.inf
    for f in range(mesh.n_faces):
        hf = mesh.face_diameters[f]
        min_ef = min(min_ef, float(mesh.edge_lengths[mesh.face_edges[f]].min()) / hf)
    return MeshStats(
        h=mesh.h,
        cell_diameters=mesh.cell_diameters.copy(),
        face_diameters=mesh.face_diameters.copy(),
        edge_lengths=mesh.edge_lengths.copy(),
        min_face_cell_ratio=min_fc,
        min_edge_face_ratio=min_ef,
        n_vertices=mesh.n_vertices,
        n_edges=mesh.n_edges,
        n_faces=mesh.n_faces,
        n_cells=mesh.n_cells,
    )


def validate_mesh(mesh: PolyMesh) -> ValidationReport:
    """Recompute the construction invariants and report residuals.

    Never raises: violations of the hard invariants (planarity, closure,
    degenerate measures) are collected as strings.
    """
    violations = []
    nf, nc = mesh.n_faces, mesh.n_cells

    planarity = np.zeros(nf)
    face_closure = np.zeros(nf)
    for f in range(nf):
        pts = mesh.vertices[mesh.faces[f]]
        centered = pts - pts.mean(axis=0)
        _, _, vt = np.linalg.svd(centered)
        planarity[f] = np.abs(centered @ vt[2]).max() / mesh.face_diameters[f]
        if planarity[f] > PLANARITY_TOL:
            violations.append(f"face {f}: planarity residual {planarity[f]:.3e}")
        if mesh.face_areas[f] <= 0:
            violations.append(f"face {f}: nonpositive area")
        eids = mesh.face_edges[f]
        s = mesh.face_edge_signs[f]
        closure = (s[:, None] * mesh.edge_lengths[eids, None]
                   * mesh.edge_tangents[eids]).sum(axis=0)
        face_closure[f] = np.linalg.norm(closure) / mesh.face_diameters[f]
        if face_closure[f] > 1e-12:
            violations.append(f"face {f}: open edge loop, residual {face_closure[f]:.3e}")

    cell_closure = np.zeros(nc)
    for k in range(nc):
        fids = mesh.cell_faces[k]
        s = mesh.cell_face_signs[k]
        closure = (s[:, None] * mesh.face_areas[fids, None]
                   * mesh.face_normals[fids]).sum(axis=0)
        cell_closure[k] = np.linalg.norm(closure) / mesh.cell_diameters[k] ** 2
        if cell_closure[k] > 1e-12:
            violations.append(f"cell {k}: open boundary, residual {cell_closure[k]:.3e}")
        if mesh.cell_volumes[k] <= 0:
            violations.append(f"cell {k}: nonpositive volume")

    stats = mesh_stats(mesh)
    return ValidationReport(
        planarity_residuals=planarity,
        face_closure_residuals=face_closure,
        cell_closure_residuals=cell_closure,
        min_face_cell_ratio=stats.min_face_cell_ratio,
        min_edge_face_ratio=stats.min_edge_face_ratio,
        violations=violations,
    )
