"""Tests for file formats."""

import numpy as np
import pytest

from armc.errors import DataFormatError, DimensionMismatchError
from armc.ingest.formats import (
    FACTORS_MAGIC,
    instance_paths,
    is_matrix_file,
    read_coo,
    read_factors,
    read_instance,
    read_matrix,
    read_metadata,
    read_observations,
    write_factors,
    write_instance,
    write_matrix,
    write_metadata,
    write_observations,
)
from armc.observations.store import build_observations
from armc.types import ProblemParams
from tests.oracles import random_factors


class TestCoo:
    def test_round_trip_is_exact(self, tmp_path):
        vals = np.array([0.1, 1 / 3, -2.5e-17, 12345.678901234567])
        obs = build_observations([0, 1, 2, 3], [3, 2, 1, 0], vals, n=4, p=0.25)
        path = write_observations(tmp_path / "obs.coo", obs)
        back = read_observations(path)
        np.testing.assert_array_equal(back.vals, obs.vals)
        np.testing.assert_array_equal(back.rows, obs.rows)
        assert back.p == 0.25
        assert back.n == 4

    def test_header_format(self, tmp_path):
        obs = build_observations([1], [0], [2.0], n=3, p=0.5)
        text = write_observations(tmp_path / "obs.coo", obs).read_text()
        assert text.splitlines() == ["# n=3 p=0.5", "1,0,2.0"]

    def test_out_of_range_names_line(self, tmp_path):
        path = tmp_path / "bad.coo"
        path.write_text("# n=3 p=0.5\n0,0,1.0\n1,3,2.0\n")
        with pytest.raises(DataFormatError) as info:
            read_coo(path)
        assert info.value.line == 3
        assert ":3:" in str(info.value)

    def test_malformed_line(self, tmp_path):
        path = tmp_path / "bad.coo"
        path.write_text("# n=3\n0,0\n")
        with pytest.raises(DataFormatError) as info:
            read_coo(path)
        assert info.value.line == 2

    def test_unparseable_value(self, tmp_path):
        path = tmp_path / "bad.coo"
        path.write_text("# n=3\n0,x,1.0\n")
        with pytest.raises(DataFormatError):
            read_coo(path)

    def test_missing_header(self, tmp_path):
        path = tmp_path / "bad.coo"
        path.write_text("0,0,1.0\n")
        with pytest.raises(DataFormatError):
            read_coo(path)

    def test_duplicate_entries(self, tmp_path):
        path = tmp_path / "dup.coo"
        path.write_text("# n=3\n0,0,1.0\n0,0,2.0\n")
        with pytest.raises(DataFormatError):
            read_observations(path)

    def test_rate_override_and_empirical_default(self, tmp_path):
        path = tmp_path / "obs.coo"
        path.write_text("# n=2\n0,0,1.0\n1,1,1.0\n")
        assert read_observations(path).p == 0.5
        assert read_observations(path, p=0.3).p == 0.3

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError):
            read_coo(tmp_path / "absent.coo")


class TestBinary:
    def test_factors_round_trip(self, tmp_path):
        f = random_factors(12, 3, seed=0)
        back = read_factors(write_factors(tmp_path / "f.armcf", f))
        np.testing.assert_array_equal(back.u, f.u)
        np.testing.assert_array_equal(back.sigma, f.sigma)
        np.testing.assert_array_equal(back.v, f.v)

    def test_factors_layout(self, tmp_path):
        f = random_factors(5, 2, seed=1)
        data = write_factors(tmp_path / "f.armcf", f).read_bytes()
        assert data[:6] == FACTORS_MAGIC
        assert int.from_bytes(data[6:14], "little") == 5
        assert int.from_bytes(data[14:22], "little") == 2
        assert len(data) == 22 + 8 * (2 * 5 * 2 + 2)
        first = np.frombuffer(data[22:30], dtype="<f8")[0]
        assert first == f.u[0, 0]

    def test_factors_bad_magic(self, tmp_path):
        path = tmp_path / "f.armcf"
        path.write_bytes(b"NOTARM" + bytes(16))
        with pytest.raises(DataFormatError):
            read_factors(path)

    def test_factors_truncated(self, tmp_path):
        path = write_factors(tmp_path / "f.armcf", random_factors(5, 2, seed=1))
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataFormatError):
            read_factors(path)

    def test_matrix_round_trip(self, tmp_path):
        m = np.random.default_rng(0).standard_normal((6, 6))
        path = write_matrix(tmp_path / "m.bin", m)
        assert is_matrix_file(path)
        np.testing.assert_array_equal(read_matrix(path), m)

    def test_matrix_non_square_rejected(self, tmp_path):
        path = write_matrix(tmp_path / "m.bin", np.ones((3, 4)))
        with pytest.raises(DimensionMismatchError):
            read_matrix(path)

    def test_coo_is_not_matrix_file(self, tmp_path):
        path = tmp_path / "obs.coo"
        path.write_text("# n=1\n0,0,1.0\n")
        assert not is_matrix_file(path)


class TestInstances:
    def test_metadata_round_trip(self, tmp_path):
        params = ProblemParams(n=60, r=3, kappa=2.0, p=0.5, alpha=0.05, sigma=0.0, seed=2)
        assert read_metadata(write_metadata(tmp_path / "x.meta", params)) == params

    def test_metadata_missing_key(self, tmp_path):
        path = tmp_path / "x.meta"
        path.write_text("n=3\nr=1\n")
        with pytest.raises(DataFormatError):
            read_metadata(path)

    def test_instance_round_trip(self, tmp_path, small_instance):
        paths = write_instance(tmp_path / "inst", small_instance)
        assert paths == instance_paths(tmp_path / "inst")
        assert all(p.is_file() for p in paths)
        back = read_instance(tmp_path / "inst")
        np.testing.assert_array_equal(back.obs.vals, small_instance.obs.vals)
        np.testing.assert_array_equal(back.outlier_positions, small_instance.outlier_positions)
        np.testing.assert_array_equal(back.outlier_values, small_instance.outlier_values)
        np.testing.assert_array_equal(back.truth.u, small_instance.truth.u)
        assert back.params == small_instance.params
        assert back.truth_linf == small_instance.truth_linf
