"""Derivatives of sparse-Cholesky log-determinants on the fill pattern.

``sparse_inverse`` produces the entries of S^-1 restricted to the filled
pattern (the gradient of ln det S there) at factorization cost, via the
selected-inverse recurrences that run backward over the factor columns.
``hess_vec`` pushes a direction Z through the tangent of that same
computation, yielding the entries on the pattern of S^-1 Z S^-1 -- the
log-det Hessian applied to Z, up to sign -- with the same time and space
footprint.  No dense intermediate is ever formed.
"""

from __future__ import annotations

from .sparsemat import SparseSymMatrix


def _unit_factor(factor):
    """Split L L^T into unit-lower L~ and pivots d (lists for scalar loops)."""
    pat = factor.pattern
    ldiag = factor.diag.tolist()
    loff = factor.offdiag.tolist()
    d = [v * v for v in ldiag]
    lt = [0.0] * pat.nnz
    start = pat.col_ptr.tolist()
    for j in range(pat.n):
        root = ldiag[j]
        for k in range(start[j], start[j + 1]):
            lt[k] = loff[k] / root
    return lt, d, start


def sparse_inverse(factor):
    """Entries on the fill pattern of the inverse of the factored matrix.

    Backward recurrences over the columns of the factor; every referenced
    inverse entry lies on the pattern because the pattern is
    elimination-closed.
    """
    pat = factor.pattern
    n = pat.n
    cols = pat._cols
    eindex = pat._index
    lt, d, start = _unit_factor(factor)
    wdiag = [0.0] * n
    woff = [0.0] * pat.nnz
    for j in range(n - 1, -1, -1):
        rows_j = cols[j]
        base = start[j]
        for t, i in enumerate(rows_j):
            s = 0.0
            for u, k in enumerate(rows_j):
                if k == i:
                    wk = wdiag[i]
                elif k > i:
                    wk = woff[eindex[(k, i)]]
                else:
                    wk = woff[eindex[(i, k)]]
                s -= lt[base + u] * wk
            woff[base + t] = s
        s = 1.0 / d[j]
        for u in range(len(rows_j)):
            s -= lt[base + u] * woff[base + u]
        wdiag[j] = s
    return SparseSymMatrix(pat, wdiag, woff, check=False)


def hess_vec(factor, z, sinv=None):
    """Entries on the fill pattern of S^-1 Z S^-1 for pattern-supported Z.

    Differentiates the factorization and the selected-inverse recurrences
    along the direction Z; intermediates are overwritten in place, so the
    auxiliary storage stays proportional to the factor's.  ``sinv`` may
    pass a precomputed ``sparse_inverse(factor)`` to share work across
    repeated calls.
    """
    pat = factor.pattern
    n = pat.n
    if z.pattern is not pat and not z.pattern.is_subset_of(pat):
        raise ValueError("Z must be supported on the factor's pattern")
    if z.pattern is not pat and z.pattern != pat:
        z = z.embedded(pat)
    cols = pat._cols
    row_cols = pat.row_columns()
    eindex = pat._index
    start = pat.col_ptr.tolist()
    ldiag = factor.diag.tolist()
    loff = factor.offdiag.tolist()
    zdiag = z.diag.tolist()
    zoff = z.offdiag.tolist()

    # Tangent of the Cholesky factorization in direction Z.
    ldd = [0.0] * n
    ldo = [0.0] * pat.nnz
    work = [0.0] * n
    for j in range(n):
        rows_j = cols[j]
        base = start[j]
        work[j] = zdiag[j]
        for t, i in enumerate(rows_j):
            work[i] = zoff[base + t]
        for k in row_cols[j]:
            e_jk = eindex[(j, k)]
            ljk = loff[e_jk]
            ljk_dot = ldo[e_jk]
            kbase = start[k]
            krows = cols[k]
            for t, i in enumerate(krows):
                if i < j:
                    continue
                work[i] -= ljk_dot * loff[kbase + t] + ljk * ldo[kbase + t]
        root = ldiag[j]
        droot = work[j] / (2.0 * root)
        ldd[j] = droot
        for t, i in enumerate(rows_j):
            ldo[base + t] = (work[i] - loff[base + t] * droot) / root

    # Tangents of the unit factor and pivots.
    lt, d, _ = _unit_factor(factor)
    ltd = [0.0] * pat.nnz
    dd = [0.0] * n
    for j in range(n):
        root = ldiag[j]
        dd[j] = 2.0 * root * ldd[j]
        for k in range(start[j], start[j + 1]):
            ltd[k] = (ldo[k] - lt[k] * ldd[j]) / root

    # Base and tangent selected-inverse sweeps, interleaved per column.
    if sinv is not None:
        wdiag = sinv.diag.tolist()
        woff = sinv.offdiag.tolist()
        have_base = True
    else:
        wdiag = [0.0] * n
        woff = [0.0] * pat.nnz
        have_base = False
    vdiag = [0.0] * n
    voff = [0.0] * pat.nnz
    for j in range(n - 1, -1, -1):
        rows_j = cols[j]
        base = start[j]
        for t, i in enumerate(rows_j):
            s = 0.0
            sv = 0.0
            for u, k in enumerate(rows_j):
                if k == i:
                    wk = wdiag[i]
                    vk = vdiag[i]
                elif k > i:
                    e = eindex[(k, i)]
                    wk = woff[e]
                    vk = voff[e]
                else:
                    e = eindex[(i, k)]
                    wk = woff[e]
                    vk = voff[e]
                s -= lt[base + u] * wk
                sv -= ltd[base + u] * wk + lt[base + u] * vk
            if not have_base:
                woff[base + t] = s
            voff[base + t] = sv
        s = 1.0 / d[j]
        sv = -dd[j] / (d[j] * d[j])
        for u in range(len(rows_j)):
            s -= lt[base + u] * woff[base + u]
            sv -= ltd[base + u] * woff[base + u] + lt[base + u] * voff[base + u]
        if not have_base:
            wdiag[j] = s
        vdiag[j] = sv

    # W(t) = entries of (S + tZ)^-1, so the Hessian product is -W'.
    return SparseSymMatrix(
        pat, [-v for v in vdiag], [-v for v in voff], check=False
    )
