"""Matrix Market and plain-text readers/writers with line-numbered errors."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, ParseError
from .instances import ProblemInstance
from .linalg import is_sparse

BANNER = "%%matrixmarket"
FORMATS = ("coordinate", "array")
FIELDS = ("real", "integer", "double", "pattern")
SYMMETRIES = ("general", "symmetric", "skew-symmetric")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _lines(path):
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, start=1):
            yield no, raw.strip()


def _number(tok: str, path, no: int, integer: bool = False):
    try:
        return int(tok) if integer else float(tok)
    except ValueError:
        kind = "integer" if integer else "number"
        raise ParseError(f"expected {kind}, got {tok!r}", path, no) from None


def read_matrix_market(path):
    """Read a real Matrix Market file.

    Coordinate files give a CSR matrix with duplicate entries summed; array
    files give a dense column-major-filled ndarray. ``symmetric`` and
    ``skew-symmetric`` storage is expanded.
    """
    it = _lines(path)
    try:
        no, header = next(it)
    except StopIteration:
        raise ParseError("empty file", path, 1) from None
    parts = header.split()
    if len(parts) != 5 or parts[0].lower() != BANNER or parts[1].lower() != "matrix":
        raise ParseError("expected '%%MatrixMarket matrix <format> <field> <symmetry>'", path, no)
    fmt, fld, sym = (p.lower() for p in parts[2:])
    if fmt not in FORMATS:
        raise ParseError(f"unsupported format {fmt!r}", path, no)
    if fld not in FIELDS or (fld == "pattern" and fmt == "array"):
        raise ParseError(f"unsupported field {fld!r}", path, no)
    if sym not in SYMMETRIES:
        raise ParseError(f"unsupported symmetry {sym!r}", path, no)

    size = None
    for no, line in it:
        if line and not line.startswith("%"):
            size = line.split()
            break
    if size is None:
        raise ParseError("missing size line", path, no)
    want = 3 if fmt == "coordinate" else 2
    if len(size) != want:
        raise ParseError(f"size line needs {want} integers", path, no)
    dims = [_number(t, path, no, integer=True) for t in size]
    if min(dims[:2]) < 1 or (fmt == "coordinate" and dims[2] < 0):
        raise ParseError("dimensions must be positive", path, no)
    m, n = dims[:2]
    if sym != "general" and m != n:
        raise ParseError(f"{sym} storage needs a square matrix", path, no)

    entries = []
    last = no
    for no, line in it:
        last = no
        if not line or line.startswith("%"):
            continue
        entries.append((no, line.split()))

    if fmt == "array":
        return _array_values(entries, m, n, sym, path, last)
    return _coordinate(entries, m, n, dims[2], fld, sym, path, last)


def _array_values(entries, m, n, sym, path, last):
    if sym == "general":
        slots = [(i, j) for j in range(n) for i in range(m)]
    else:
        lo = 0 if sym == "symmetric" else 1
        slots = [(i, j) for j in range(n) for i in range(j + lo, m)]
    if len(entries) != len(slots):
        no = entries[len(slots)][0] if len(entries) > len(slots) else last
        raise ParseError(f"expected {len(slots)} values, found {len(entries)}", path, no)
    M = np.zeros((m, n))
    for (no, toks), (i, j) in zip(entries, slots):
        if len(toks) != 1:
            raise ParseError("array entries hold one value per line", path, no)
        v = _number(toks[0], path, no)
        M[i, j] = v
        if sym == "symmetric":
            M[j, i] = v
        elif sym == "skew-symmetric":
            M[j, i] = -v
    return M


def _coordinate(entries, m, n, nz, fld, sym, path, last):
    if len(entries) != nz:
        no = entries[nz][0] if len(entries) > nz else last
        raise ParseError(f"expected {nz} entries, found {len(entries)}", path, no)
    want = 2 if fld == "pattern" else 3
    rows, cols, vals = [], [], []
    for no, toks in entries:
        if len(toks) != want:
            raise ParseError(f"coordinate entries need {want} fields", path, no)
        i = _number(toks[0], path, no, integer=True)
        j = _number(toks[1], path, no, integer=True)
        if not (1 <= i <= m and 1 <= j <= n):
            raise ParseError(f"index ({i}, {j}) outside {m} x {n}", path, no)
        v = 1.0 if fld == "pattern" else _number(toks[2], path, no)
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if sym != "general" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            vals.append(v if sym == "symmetric" else -v)
    # coo -> csr sums duplicate entries
    A = sp.coo_matrix((vals, (rows, cols)), shape=(m, n)).tocsr()
    A.sum_duplicates()
    A.sort_indices()
    return A


def write_matrix_market(path, A, comment: str | None = None) -> None:
    """Write ``A`` as coordinate (sparse) or array (dense) with 17 significant digits."""
    out = []
    if is_sparse(A):
        C = sp.coo_matrix(A)
        out.append("%%MatrixMarket matrix coordinate real general")
        if comment:
            out.append(f"% {comment}")
        out.append(f"{C.shape[0]} {C.shape[1]} {C.nnz}")
        order = np.lexsort((C.col, C.row))
        out.extend(f"{C.row[k] + 1} {C.col[k] + 1} {_fmt(C.data[k])}" for k in order)
    else:
        M = np.atleast_2d(np.asarray(A, dtype=np.float64))
        out.append("%%MatrixMarket matrix array real general")
        if comment:
            out.append(f"% {comment}")
        out.append(f"{M.shape[0]} {M.shape[1]}")
        out.extend(_fmt(v) for v in M.ravel(order="F"))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def read_vector(path) -> np.ndarray:
    """Read a right-hand side: one value per line, CSV, or a one-column Matrix Market file."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.lower().startswith(BANNER):
        M = read_matrix_market(path)
        if M.shape[1] != 1:
            raise ParseError(f"right-hand side must have one column, got {M.shape[1]}", path, 1)
        return np.asarray(M.toarray() if is_sparse(M) else M).ravel()
    vals = []
    for no, line in _lines(path):
        if not line or line.startswith("#") or line.startswith("%"):
            continue
        toks = [t.strip() for t in line.replace(",", " ").split()]
        vals.extend(_number(t, path, no) for t in toks if t)
    if not vals:
        raise ParseError("no values found", path, None)
    return np.asarray(vals, dtype=np.float64)


def write_vector(path, v) -> None:
    v = np.asarray(v, dtype=np.float64).ravel()
    Path(path).write_text("".join(_fmt(x) + "\n" for x in v), encoding="utf-8")


def ingest(matrix_path, rhs_path) -> ProblemInstance:
    """Load ``(A, b)``; sparse coordinate input stays sparse."""
    A = read_matrix_market(matrix_path)
    b = read_vector(rhs_path)
    if A.shape[0] != b.shape[0]:
        raise DimensionError(f"matrix has {A.shape[0]} rows but right-hand side has {b.shape[0]}")
    return ProblemInstance(A, b, kind="file", meta={"matrix": str(matrix_path),
                                                    "rhs": str(rhs_path)})
