import numpy as np
import pytest
from hypothesis import given, strategies as st

from subradiance.lattice import FieldConfig, build_lattice, pairwise_xi


def test_single_atom_at_origin():
    geom = build_lattice(1, 1, 1, 0.5)
    assert geom.n == 1
    np.testing.assert_array_equal(geom.positions, [[0.0, 0.0, 0.0]])


def test_x_fastest_labeling():
    geom = build_lattice(2, 2, 4, 0.25)
    assert geom.n == 16
    np.testing.assert_array_equal(geom.positions[1], [0.25, 0, 0])
    np.testing.assert_array_equal(geom.positions[2], [0, 0.25, 0])
    np.testing.assert_array_equal(geom.positions[4], [0, 0, 0.25])


def test_last_atom_of_3x3x10():
    geom = build_lattice(3, 3, 10, 0.25)
    assert geom.n == 90
    np.testing.assert_allclose(geom.positions[89], [0.5, 0.5, 2.25], rtol=0, atol=1e-15)


def test_z_fastest_labeling():
    geom = build_lattice(2, 2, 4, 0.25, labeling="zyx")
    np.testing.assert_array_equal(geom.positions[1], [0, 0, 0.25])
    np.testing.assert_array_equal(geom.positions[4], [0, 0.25, 0])
    np.testing.assert_array_equal(geom.positions[8], [0.25, 0, 0])


@pytest.mark.parametrize("args", [(0, 1, 1, 0.5), (1, -2, 1, 0.5), (1, 1, 1, 0.0), (1, 1, 1, -0.1),
                                  (1.5, 1, 1, 0.5)])
def test_invalid_arguments(args):
    with pytest.raises(ValueError):
        build_lattice(*args)


def test_invalid_labeling():
    with pytest.raises(ValueError):
        build_lattice(2, 2, 2, 0.3, labeling="xxz")


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4),
       st.sampled_from(["xyz", "zyx", "yxz", "xzy", "yzx", "zxy"]))
def test_index_round_trip(nx, ny, nz, labeling):
    geom = build_lattice(nx, ny, nz, 0.3, labeling=labeling)
    for mu in range(1, geom.n + 1):
        site = geom.site_of(mu)
        assert geom.index_of(*site) == mu
        np.testing.assert_allclose(geom.positions[mu - 1], np.array(site) * 0.3)


def test_xyz_index_formula():
    geom = build_lattice(3, 2, 4, 0.1)
    for mu in range(1, geom.n + 1):
        ix, iy, iz = geom.site_of(mu)
        assert mu - 1 == ix + iy * 3 + iz * 6


@pytest.mark.parametrize("spacing, expected", [(0.5, np.pi), (1.0, 2 * np.pi)])
def test_two_atom_xi(spacing, expected):
    xi = pairwise_xi(build_lattice(1, 1, 2, spacing))
    assert xi[0, 1] == pytest.approx(expected, rel=1e-15)


def test_face_diagonal_xi():
    xi = pairwise_xi(build_lattice(2, 2, 4, 0.25))
    assert xi[0, 3] == pytest.approx(2 * np.pi * 0.25 * np.sqrt(2), rel=1e-15)


def test_distance_matrix_properties():
    xi = pairwise_xi(build_lattice(3, 2, 2, 0.4))
    np.testing.assert_array_equal(xi, xi.T)
    assert np.all(np.diag(xi) == 0)
    assert np.all(xi[~np.eye(12, dtype=bool)] > 0)


def test_rebuild_is_bit_identical():
    a = build_lattice(3, 3, 3, 0.25)
    b = build_lattice(3, 3, 3, 0.25)
    assert a.positions.tobytes() == b.positions.tobytes()


def test_positions_immutable():
    geom = build_lattice(2, 1, 1, 0.5)
    with pytest.raises(ValueError):
        geom.positions[0, 0] = 1.0


def test_field_config_requires_unit_vectors():
    FieldConfig(k_direction=(0, 1, 0), dipole_direction=(0, 0, 1))
    with pytest.raises(ValueError):
        FieldConfig(k_direction=(0, 0, 2))
    with pytest.raises(ValueError):
        FieldConfig(dipole_direction=(1, 1e-5, 0))


def test_positions_csv(tmp_path):
    geom = build_lattice(2, 1, 1, 0.25)
    path = tmp_path / "pos.csv"
    geom.to_csv(path)
    assert path.read_text().splitlines() == ["index,x,y,z", "1,0,0,0", "2,0.25,0,0"]
