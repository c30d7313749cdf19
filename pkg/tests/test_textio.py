import numpy as np
import pytest

from blocksparse import BlockSparseSignal, InputError, random_unit_norm, sample_signal
from blocksparse.textio import (
    matrix_to_text,
    observation_to_signal,
    read_matrix,
    read_vector,
    vector_to_text,
    write_matrix,
    write_vector,
)


class TestMatrixFormat:
    def test_round_trip_is_exact(self, tmp_path):
        d = random_unit_norm(5, 8, 2, seed=3)
        path = tmp_path / "dict.txt"
        write_matrix(str(path), d)
        back = read_matrix(str(path))
        assert back.block_size == 2
        assert np.array_equal(back.entries, d.entries)

    def test_header_carries_dimensions(self, tmp_path):
        d = random_unit_norm(3, 6, 3, seed=1)
        assert matrix_to_text(d).splitlines()[0] == "3 6 3"

    def test_block_size_override(self, tmp_path):
        d = random_unit_norm(4, 6, 3, seed=2)
        path = tmp_path / "dict.txt"
        write_matrix(str(path), d)
        assert read_matrix(str(path), block_size=1).block_size == 1

    def test_malformed_header_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 6\n")
        with pytest.raises(InputError, match=r":1:"):
            read_matrix(str(path))

    def test_short_row_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3 1\n1 0 0\n0 1\n")
        with pytest.raises(InputError, match=r":3:"):
            read_matrix(str(path))

    def test_non_numeric_entry(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 1\n1 x\n")
        with pytest.raises(InputError, match=r":2:"):
            read_matrix(str(path))

    def test_non_unit_columns_renormalized_with_flag(self, tmp_path):
        path = tmp_path / "scaled.txt"
        path.write_text("2 2 1\n2 0\n0 3\n")
        d = read_matrix(str(path))
        assert d.renormalized
        assert np.allclose(d.entries, np.eye(2), atol=1e-15)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            read_matrix(str(tmp_path / "nope.txt"))


class TestVectorFormat:
    def test_round_trip(self, tmp_path, rng):
        sig = sample_signal((0, 2), 4, 3, rng)
        path = tmp_path / "sig.txt"
        write_vector(str(path), sig)
        back = read_vector(str(path))
        assert back.support == sig.support
        assert back.block_size == sig.block_size
        assert np.array_equal(back.beta, sig.beta)

    def test_empty_support_round_trip(self, tmp_path, rng):
        sig = sample_signal((), 3, 2, rng)
        path = tmp_path / "zero.txt"
        write_vector(str(path), sig)
        back = read_vector(str(path))
        assert back.support == () and np.array_equal(back.beta, np.zeros(6))

    def test_header_format(self, rng):
        sig = sample_signal((1,), 3, 2, rng)
        lines = vector_to_text(sig).splitlines()
        assert lines[0] == "6 2 1"
        assert lines[1] == "1"

    def test_support_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("4 2 2\n0\n1\n0\n0\n0\n")
        with pytest.raises(InputError, match=r":2:"):
            read_vector(str(path))

    def test_value_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("4 2 1\n0\n1\n0\n")
        with pytest.raises(InputError, match="expected 4 values"):
            read_vector(str(path))

    def test_observation_wrapper(self):
        y = np.array([1.5, 0.0, -2.0])
        sig = observation_to_signal(y)
        assert isinstance(sig, BlockSparseSignal)
        assert np.array_equal(sig.beta, y)
        assert sig.block_size == 1
