import pathlib

import numpy as np
import pytest

from vemaxwell import derham, generate_cube_mesh, load_mesh
from vemaxwell.mesh import derive_topology

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def cube1():
    return generate_cube_mesh(1)


@pytest.fixture(scope="session")
def cube2():
    return generate_cube_mesh(2)


@pytest.fixture(scope="session")
def cube4():
    return generate_cube_mesh(4)


@pytest.fixture(scope="session")
def voro8():
    return load_mesh(DATA / "voro8.json")


@pytest.fixture(scope="session")
def voro27():
    return load_mesh(DATA / "voro27.json")


def build_two_prisms():
    """Unit cube split by the diagonal plane x = y into two prisms."""
    verts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
             (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)]
    faces = [
        [0, 1, 2],          # bottom of prism A (normal +z)
        [4, 5, 6],          # top of prism A
        [0, 1, 5, 4],       # y = 0
        [1, 2, 6, 5],       # x = 1
        [0, 2, 6, 4],       # diagonal, normal (1, -1, 0): outward for B
        [0, 2, 3],          # bottom of prism B
        [4, 6, 7],          # top of prism B
        [2, 3, 7, 6],       # y = 1
        [3, 0, 4, 7],       # x = 0
    ]
    cells = [[-1, 2, 3, 4, -5], [-6, 7, 8, 9, 5]]
    return derive_topology(verts, faces, cells, name="two_prisms")


def build_lcell():
    """Right prism of height 1 over an L-shaped (nonconvex) hexagon."""
    poly = [(0, 0), (1, 0), (1, 0.5), (0.5, 0.5), (0.5, 1), (0, 1)]
    verts = [(x, y, 0.0) for x, y in poly] + [(x, y, 1.0) for x, y in poly]
    bottom = list(range(6))              # CCW from +z, so stored normal is +z
    top = list(range(6, 12))
    faces = [bottom, top]
    cell = [-1, 2]
    for i in range(6):
        j = (i + 1) % 6
        faces.append([i, j, 6 + j, 6 + i])   # outward normal by construction
        cell.append(len(faces))
    return derive_topology(verts, faces, [cell], name="lcell")


@pytest.fixture(scope="session")
def two_prisms():
    return build_two_prisms()


@pytest.fixture(scope="session")
def lcell():
    return build_lcell()


@pytest.fixture(scope="session")
def cube4_proj(cube4):
    return derham.build_projectors(cube4)


def constant_edge_dofs(mesh, c):
    """Edge DOFs of the constant vector field c."""
    return mesh.edge_tangents @ np.asarray(c, dtype=float)


def constant_face_dofs(mesh, c):
    """Face DOFs of the constant vector field c."""
    return mesh.face_normals @ np.asarray(c, dtype=float)
