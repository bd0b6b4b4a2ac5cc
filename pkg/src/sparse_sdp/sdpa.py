"""SDPA sparse-format reading and writing (single symmetric block).

Layout: optional comment lines ('*' or '"'), then the number of
constraints m, the number of blocks (must be 1 here), the block size
line, the right-hand-side vector, and one entry per line as

    matno blockno i j value

with 1-based indices on the upper triangle.  ``matno`` 0 is the
objective matrix C, ``matno`` p the constraint matrix A_p; the vector
line is b.  The file therefore encodes  min C.X  s.t.  A_p.X = b_p,
X PSD, directly in this library's convention.
"""

from __future__ import annotations

import numpy as np

from .errors import SdpaParseError
from .sparsemat import SparseSymMatrix, SparseSymPattern

_PUNCT = str.maketrans({c: " " for c in "{}(),"})


def read_sdpa(path):
    """Parse a .dat-s file into (C, [A_1..A_m], b)."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    lines = [(no, ln.strip()) for no, ln in enumerate(raw, 1)]
    body = [(no, ln) for no, ln in lines
            if ln and not ln.startswith("*") and not ln.startswith('"')]
    if len(body) < 4:
        raise SdpaParseError(len(raw) or 1, "file ends before the header is complete")

    def ints(text, no, count):
        parts = text.translate(_PUNCT).split()
        try:
            vals = [int(p) for p in parts]
        except ValueError:
            raise SdpaParseError(no, f"expected integers, got {text!r}") from None
        if count is not None and len(vals) != count:
            raise SdpaParseError(no, f"expected {count} integer(s), got {len(vals)}")
        return vals

    no_m, text_m = body[0]
    m = ints(text_m, no_m, 1)[0]
    if m < 0:
        raise SdpaParseError(no_m, "negative constraint count")
    no_nb, text_nb = body[1]
    nblocks = ints(text_nb, no_nb, 1)[0]
    if nblocks != 1:
        raise SdpaParseError(no_nb, f"only a single block is supported, got {nblocks}")
    no_bs, text_bs = body[2]
    sizes = ints(text_bs, no_bs, None)
    if len(sizes) != 1:
        raise SdpaParseError(no_bs, "block size line must hold exactly one size")
    n = abs(sizes[0])
    if n < 1:
        raise SdpaParseError(no_bs, "block size must be nonzero")
    no_b, text_b = body[3]
    parts = text_b.translate(_PUNCT).split()
    try:
        b = np.asarray([float(p) for p in parts], dtype=float)
    except ValueError:
        raise SdpaParseError(no_b, f"malformed b vector {text_b!r}") from None
    if len(b) != m:
        raise SdpaParseError(no_b, f"b has {len(b)} entries, expected {m}")

    diags = [np.zeros(n) for _ in range(m + 1)]
    offs = [dict() for _ in range(m + 1)]
    for no, ln in body[4:]:
        parts = ln.split()
        if len(parts) != 5:
            raise SdpaParseError(no, f"entry line needs 5 fields, got {len(parts)}")
        try:
            mat = int(parts[0])
            blk = int(parts[1])
            i = int(parts[2])
            j = int(parts[3])
            val = float(parts[4])
        except ValueError:
            raise SdpaParseError(no, f"malformed entry {ln!r}") from None
        if not 0 <= mat <= m:
            raise SdpaParseError(no, f"matrix index {mat} out of range 0..{m}")
        if blk != 1:
            raise SdpaParseError(no, f"block index {blk} must be 1")
        if not (1 <= i <= n and 1 <= j <= n):
            raise SdpaParseError(no, f"entry ({i},{j}) outside block of size {n}")
        if i == j:
            if diags[mat][i - 1] != 0.0:
                raise SdpaParseError(no, f"duplicate diagonal entry ({i},{i})")
            diags[mat][i - 1] = val
        else:
            key = (max(i, j) - 1, min(i, j) - 1)
            if key in offs[mat]:
                raise SdpaParseError(no, f"duplicate entry ({i},{j})")
            offs[mat][key] = val

    def build(t):
        pat = SparseSymPattern(n, list(offs[t]))
        off = np.zeros(pat.nnz)
        for key, val in offs[t].items():
            off[pat.edge_index(*key)] = val
        return SparseSymMatrix(pat, diags[t], off)

    return build(0), [build(p) for p in range(1, m + 1)], b


def write_sdpa(path, c, constraints, b):
    """Write a single-block .dat-s file (upper triangle entries)."""
    n = c.n
    with open(path, "w") as fh:
        fh.write(f"{len(constraints)}\n1\n{n}\n")
        fh.write(" ".join(repr(float(v)) for v in b) + "\n")
        for t, mat in enumerate([c] + list(constraints)):
            for v in range(n):
                if mat.diag[v] != 0.0:
                    fh.write(f"{t} 1 {v + 1} {v + 1} {float(mat.diag[v])!r}\n")
            for i, j, k in sorted(mat.pattern.edges(), key=lambda e: (e[1], e[0])):
                if mat.offdiag[k] != 0.0:
                    fh.write(f"{t} 1 {j + 1} {i + 1} {float(mat.offdiag[k])!r}\n")
