import numpy as np
import pytest
import scipy.sparse as sp

from lewisl1.errors import DimensionError, ParseError
from lewisl1.instances import GenSpec, generate
from lewisl1.mmio import (
    ingest,
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)


def test_median_array_file(tmp_path):
    (tmp_path / "A.mtx").write_text("%%MatrixMarket matrix array real general\n3 1\n1\n1\n1\n")
    (tmp_path / "b.txt").write_text("1\n2\n4\n")
    inst = ingest(tmp_path / "A.mtx", tmp_path / "b.txt")
    np.testing.assert_array_equal(inst.A, np.ones((3, 1)))
    np.testing.assert_array_equal(inst.b, [1, 2, 4])


def test_array_column_major(tmp_path):
    p = tmp_path / "A.mtx"
    p.write_text("%%MatrixMarket matrix array real general\n% c\n2 2\n1\n2\n3\n4\n")
    np.testing.assert_array_equal(read_matrix_market(p), [[1, 3], [2, 4]])


def test_coordinate_duplicates_summed(tmp_path):
    p = tmp_path / "A.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n% dup\n2 2 3\n"
                 "1 1 1.5\n2 2 1\n1 1 2.5\n")
    A = read_matrix_market(p)
    assert sp.issparse(A)
    np.testing.assert_array_equal(A.toarray(), [[4.0, 0.0], [0.0, 1.0]])


def test_coordinate_symmetric_and_pattern(tmp_path):
    p = tmp_path / "S.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n2 1 -1\n")
    np.testing.assert_array_equal(read_matrix_market(p).toarray(), [[2, -1], [-1, 0]])
    p.write_text("%%MatrixMarket matrix coordinate pattern general\n2 3 2\n1 3\n2 1\n")
    np.testing.assert_array_equal(read_matrix_market(p).toarray(), [[0, 0, 1], [1, 0, 0]])


@pytest.mark.parametrize("text, line", [
    ("%%MatrixMarket matrix weird real general\n1 1\n1\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2\n", 2),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n% x\n2 2 abc\n", 5),
    ("%%MatrixMarket matrix array real general\n2 1\n1\n", 3),
    ("not a banner\n", 1),
])
def test_malformed_files_report_line(tmp_path, text, line):
    p = tmp_path / "bad.mtx"
    p.write_text(text)
    with pytest.raises(ParseError) as info:
        read_matrix_market(p)
    assert info.value.line == line
    assert f":{line}:" in str(info.value)


def test_vector_formats(tmp_path):
    (tmp_path / "b.csv").write_text("1.5, 2, -3\n4\n")
    np.testing.assert_array_equal(read_vector(tmp_path / "b.csv"), [1.5, 2, -3, 4])
    (tmp_path / "b.mtx").write_text("%%MatrixMarket matrix array real general\n2 1\n7\n8\n")
    np.testing.assert_array_equal(read_vector(tmp_path / "b.mtx"), [7, 8])
    (tmp_path / "bad.txt").write_text("1\nx\n")
    with pytest.raises(ParseError) as info:
        read_vector(tmp_path / "bad.txt")
    assert info.value.line == 2


def test_dimension_mismatch(tmp_path):
    (tmp_path / "A.mtx").write_text("%%MatrixMarket matrix array real general\n2 1\n1\n1\n")
    (tmp_path / "b.txt").write_text("1\n2\n3\n")
    with pytest.raises(DimensionError):
        ingest(tmp_path / "A.mtx", tmp_path / "b.txt")


@pytest.mark.parametrize("kind", ["heavy-tail-outliers", "incidence-like"])
def test_round_trip_bit_exact(tmp_path, kind):
    inst = generate(GenSpec(kind, 120, 5, seed=7))
    write_matrix_market(tmp_path / "A.mtx", inst.A, comment="round trip")
    write_vector(tmp_path / "b.rhs", inst.b)
    back = ingest(tmp_path / "A.mtx", tmp_path / "b.rhs")
    assert sp.issparse(back.A) == sp.issparse(inst.A)
    A0 = inst.A.toarray() if sp.issparse(inst.A) else inst.A
    A1 = back.A.toarray() if sp.issparse(back.A) else back.A
    assert A0.tobytes() == A1.tobytes()
    assert inst.b.tobytes() == back.b.tobytes()
