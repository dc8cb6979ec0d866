import pytest

from tochkit import geometry as geo


@pytest.fixture(scope="session")
def unit_cube():
    return geo.make_box(size=(1.0, 1.0, 1.0), subdivisions=2)


@pytest.fixture(scope="session")
def unit_cube_bvh(unit_cube):
    return geo.Bvh(unit_cube)


@pytest.fixture(scope="session")
def sphere_mesh():
    return geo.make_uv_sphere(radius=0.4, n_theta=14, n_phi=18)


@pytest.fixture(scope="session")
def sphere_bvh(sphere_mesh):
    return geo.Bvh(sphere_mesh)
