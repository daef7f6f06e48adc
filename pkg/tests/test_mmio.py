import numpy as np
import pytest

from bregman_precond import read_matrix, write_matrix

from conftest import random_spd


def test_coordinate_roundtrip(tmp_path):
    a = random_spd(7, 31)
    path = tmp_path / "a.mtx"
    write_matrix(path, a)
    assert np.allclose(read_matrix(path).entries, a, atol=0)


def test_array_roundtrip(tmp_path):
    a = random_spd(5, 37)
    path = tmp_path / "a.mtx"
    write_matrix(path, a, fmt="array")
    assert np.allclose(read_matrix(path).entries, a, atol=0)


def test_coordinate_drops_small_entries(tmp_path):
    a = np.diag([1.0, 1e-14, 2.0])
    path = tmp_path / "a.mtx"
    write_matrix(path, a, tol=1e-12)
    assert np.allclose(read_matrix(path).entries, np.diag([1.0, 0.0, 2.0]))


def test_general_coordinate_read(tmp_path):
    path = tmp_path / "g.mtx"
    path.write_text(
        "%%MatrixMarket matrix coordinate real general\n"
        "% comment line\n"
        "2 2 3\n"
        "1 1 2.0\n"
        "1 2 1.0\n"
        "2 1 1.0\n"
    )
    assert np.allclose(read_matrix(path).entries, [[2.0, 1.0], [1.0, 0.0]])


def test_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.mtx"
    path.write_text("not a matrix market file\n1 1 1\n")
    with pytest.raises(ValueError):
        read_matrix(path)


def test_rejects_complex_field(tmp_path):
    path = tmp_path / "c.mtx"
    path.write_text("%%MatrixMarket matrix coordinate complex symmetric\n1 1 1\n1 1 1 0\n")
    with pytest.raises(ValueError):
        read_matrix(path)


def test_rejects_nonsquare(tmp_path):
    path = tmp_path / "r.mtx"
    path.write_text("%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n")
    with pytest.raises(ValueError):
        read_matrix(path)
