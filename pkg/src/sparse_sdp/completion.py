"""Partial symmetric matrices and their max-determinant PD completions.

A partial matrix carries values only on a chordal, elimination-ordered
pattern (plus the diagonal).  Among all positive definite completions the
determinant-maximizing one is singled out by having an inverse supported
exactly on the pattern; everything here (log-determinant, inverse,
Hessian products, factor form) works clique by clique against that
completion without ever forming it densely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chordal import CliqueSequence
from .errors import NotCompletable
from .logdet import hess_vec
from .sparsemat import SparseSymMatrix, SparseSymPattern, cholesky_factorize


class PartialSymMatrix:
    """Values on a chordal pattern plus the diagonal; the rest unspecified."""

    def __init__(self, pattern, diag, offdiag, check=True):
        self.pattern = pattern
        self.diag = np.asarray(diag, dtype=float)
        self.offdiag = np.asarray(offdiag, dtype=float)
        if check:
            if self.diag.shape != (pattern.n,):
                raise ValueError("diag length mismatch")
            if self.offdiag.shape != (pattern.nnz,):
                raise ValueError("offdiag length mismatch")
            if not (np.all(np.isfinite(self.diag)) and np.all(np.isfinite(self.offdiag))):
                raise ValueError("entries must be finite")

    @property
    def n(self):
        return self.pattern.n

    @classmethod
    def identity(cls, pattern):
        return cls(pattern, np.ones(pattern.n), np.zeros(pattern.nnz), check=False)

    @classmethod
    def from_dense(cls, pattern, dense):
        dense = np.asarray(dense, dtype=float)
        off = np.empty(pattern.nnz)
        for i, j, k in pattern.edges():
            off[k] = dense[i, j]
        return cls(pattern, np.diagonal(dense).copy(), off)

    def copy(self):
        return PartialSymMatrix(self.pattern, self.diag.copy(), self.offdiag.copy(), check=False)

    def as_sparse(self):
        """View the specified entries as a sparse matrix (zeros elsewhere)."""
        return SparseSymMatrix(self.pattern, self.diag, self.offdiag, check=False)

    def block(self, verts):
        """Dense submatrix over ``verts`` (all pairs must lie on the pattern)."""
        k = len(verts)
        out = np.empty((k, k))
        pat = self.pattern
        off = self.offdiag
        for a in range(k):
            va = verts[a]
            out[a, a] = self.diag[va]
            for b in range(a + 1, k):
                v = off[pat.edge_index(va, verts[b])]
                out[a, b] = out[b, a] = v
        return out

    def __repr__(self):
        return f"PartialSymMatrix(n={self.n}, nnz={self.pattern.nnz})"


@dataclass
class CompletionFactors:
    """Clique-wise factor form of the max-determinant completion.

    For each non-final clique, ``couplings[r]`` is the |U_r| x |S_r| block
    inv(X_{U_r,U_r}) @ X_{U_r,S_r}; ``blocks[r]`` is the dense residual
    (Schur-complement) block on S_r.  ``logdet`` is ln det of the
    completion.
    """

    cliques: CliqueSequence
    couplings: list
    blocks: list
    logdet: float

    @property
    def n(self):
        return self.cliques.n


def clique_pd_check(xbar, cs):
    """True iff every clique submatrix is positive definite.

    For a chordal pattern this is exactly the condition for a positive
    definite completion to exist.
    """
    for c in cs.cliques:
        try:
            np.linalg.cholesky(xbar.block(c))
        except np.linalg.LinAlgError:
            return False
    return True


def completion_factors(xbar, cs):
    """Clique factorization of the max-determinant completion."""
    couplings = []
    blocks = []
    logdet = 0.0
    l = len(cs)
    for r in range(l):
        s_r = cs.residuals[r]
        u_r = cs.separators[r]
        ss = xbar.block(s_r)
        if len(u_r) == 0:
            coup = np.zeros((0, len(s_r)))
            d_block = ss
        else:
            uu = xbar.block(u_r)
            us = _cross_block(xbar, u_r, s_r)
            try:
                cu = np.linalg.cholesky(uu)
            except np.linalg.LinAlgError as exc:
                raise NotCompletable(f"clique {r}: separator block not PD") from exc
            coup = np.linalg.solve(cu.T, np.linalg.solve(cu, us))
            d_block = ss - us.T @ coup
        try:
            cd = np.linalg.cholesky(d_block)
        except np.linalg.LinAlgError as exc:
            raise NotCompletable(f"clique {r}: residual block not PD") from exc
        couplings.append(coup)
        blocks.append(d_block)
        logdet += 2.0 * float(np.sum(np.log(np.diagonal(cd))))
    return CompletionFactors(cs, couplings, blocks, logdet)


def logdet_completion(xbar, cs):
    """ln det of the max-determinant completion.

    Sum of clique-block log-determinants minus separator-block
    log-determinants, each from a fresh dense factorization.
    """
    total = 0.0
    for r in range(len(cs)):
        total += _dense_logdet(xbar.block(cs.cliques[r]), f"clique {r}")
        u_r = cs.separators[r]
        if len(u_r):
            total -= _dense_logdet(xbar.block(u_r), f"separator {r}")
    return total


def completion_inverse(xbar, cs):
    """Inverse of the max-determinant completion, supported exactly on F.

    Assembled as the clique-block inverses minus the separator-block
    inverses scattered onto the pattern.
    """
    pat = xbar.pattern
    diag = np.zeros(pat.n)
    off = np.zeros(pat.nnz)
    for r in range(len(cs)):
        c = cs.cliques[r]
        _scatter(diag, off, pat, c, _pd_inverse(xbar.block(c), f"clique {r}"), +1.0)
        u = cs.separators[r]
        if len(u):
            _scatter(diag, off, pat, u, _pd_inverse(xbar.block(u), f"separator {r}"), -1.0)
    return SparseSymMatrix(pat, diag, off, check=False)


def completion_hess_apply(xbar, cs, z, inverse=None, inverse_factor=None):
    """Entries on F of (completion) @ Z @ (completion).

    Uses the fact that the completion is itself the inverse of an
    F-sparse positive definite matrix: factorize that sparse inverse and
    push Z through the selected-inverse tangent kernel.  ``inverse`` /
    ``inverse_factor`` let callers reuse work across many applications.
    """
    if inverse_factor is None:
        if inverse is None:
            inverse = completion_inverse(xbar, cs)
        inverse_factor = cholesky_factorize(inverse)
    return hess_vec(inverse_factor, z)


def completion_vectors(factors):
    """Dense V with V^T V equal to the max-determinant completion.

    Rows of V live in the same (elimination) labels as the partial
    matrix; column i is the Gram vector of vertex i.
    """
    cs = factors.cliques
    n = cs.n
    v = np.eye(n)
    for r in range(len(cs) - 1):
        coup = factors.couplings[r]
        if coup.size:
            u = cs.separators[r]
            s = cs.residuals[r]
            v[u, :] += coup @ v[s, :]
    for r in range(len(cs)):
        s = cs.residuals[r]
        v[s, :] = np.linalg.cholesky(factors.blocks[r]).T @ v[s, :]
    return v


def reconstruct_dense(factors):
    """Dense max-determinant completion (small-n checks and rounding)."""
    v = completion_vectors(factors)
    return v.T @ v


# ---------------------------------------------------------------------------
# Cholesky-factor updates: drop rows, re-triangularize by Givens rotations,
# append rows.  Plain-float row lists keep the per-operation cost uniform,
# so measured time tracks the flop count.
# ---------------------------------------------------------------------------

def factor_drop_rows(rows, drop):
    """Remove factor rows and restore lower-triangular form.

    ``rows`` is a lower-triangular factor as a list of row lists (row i
    has i+1 entries); ``drop`` the sorted row indices to remove.  The
    survivors' Gram matrix is preserved, so the result is the factor of
    the corresponding principal submatrix (rows keep their relative
    order).
    """
    dropset = set(drop)
    work = [list(rows[i]) for i in range(len(rows)) if i not in dropset]
    k = len(work)
    for t in range(k):
        row = work[t]
        for c in range(len(row) - 1, t, -1):
            y = row[c]
            if y == 0.0:
                row.pop()
                continue
            x = row[c - 1]
            r = math.hypot(x, y)
            if r == 0.0:
                raise NotCompletable("factor became singular after row removal")
            co = x / r
            si = y / r
            row[c - 1] = r
            row.pop()
            for q in range(t + 1, k):
                wq = work[q]
                if len(wq) <= c:
                    continue
                a = wq[c - 1]
                b = wq[c]
                wq[c - 1] = co * a + si * b
                wq[c] = co * b - si * a
        if row[t] < 0.0:  # keep pivots positive (rotation sign freedom)
            for q in range(t, k):
                if len(work[q]) > t:
                    work[q][t] = -work[q][t]
    return work


def factor_append_row(rows, off, diag):
    """Grow a factor by one trailing row of the underlying matrix.

    ``off`` holds the new matrix row against the existing vertices,
    ``diag`` its diagonal entry.  Raises NotCompletable when the extended
    matrix is not positive definite.
    """
    k = len(rows)
    new = [0.0] * (k + 1)
    for j in range(k):
        s = off[j]
        rj = rows[j]
        for q in range(j):
            s -= rj[q] * new[q]
        new[j] = s / rj[j]
    rem = diag - sum(x * x for x in new)
    if rem <= 0.0:
        raise NotCompletable("appended pivot is not positive")
    new[k] = math.sqrt(rem)
    rows.append(new)
    return new[k]


def banded_pattern(n, bandwidth):
    """Pattern with every entry 0 < i - j <= bandwidth present."""
    edges = [(i, j) for j in range(n) for i in range(j + 1, min(j + bandwidth + 1, n))]
    return SparseSymPattern(n, edges)


def logdet_completion_banded(xbar, bandwidth=None):
    """ln det of the completion for a banded partial matrix.

    Walks the clique chain {r..r+p} reusing each clique's Cholesky
    factor: drop the departing leading row, re-triangularize with Givens
    rotations, append the entering row.  The separator determinants
    cancel against the retained rows, leaving one log per new pivot.
    Cost is O((n-p) p^2) against O((n-p) p^3) for fresh per-clique
    factorizations.
    """
    n = xbar.n
    p = _bandwidth_of(xbar.pattern) if bandwidth is None else int(bandwidth)
    _require_full_band(xbar.pattern, p)
    if p >= n - 1:  # single clique: one dense factorization
        rows = _dense_chol_rows(xbar.block(np.arange(n)))
        return 2.0 * sum(math.log(r[t]) for t, r in enumerate(rows))

    col_start = xbar.pattern.col_ptr.tolist()
    off = xbar.offdiag.tolist()
    diag = xbar.diag.tolist()

    def entry(i, j):  # i > j, inside the band
        return off[col_start[j] + (i - j - 1)]

    rows = _dense_chol_rows([[entry(i, j) if i > j else (entry(j, i) if j > i else diag[i])
                              for j in range(p + 1)] for i in range(p + 1)])
    logdet = 2.0 * sum(math.log(r[t]) for t, r in enumerate(rows))
    sqrt = math.sqrt
    log = math.log
    for new in range(p + 1, n):
        # Drop the departing leading row, then one Givens rotation per row
        # re-triangularizes the survivors in place (their Gram matrix is
        # the clique block without the departed vertex).
        del rows[0]
        for t in range(p):
            row = rows[t]
            y = row.pop()
            x = row[t]
            r = sqrt(x * x + y * y)
            if r == 0.0:
                raise NotCompletable("factor became singular after row removal")
            co = x / r
            si = y / r
            row[t] = r
            t1 = t + 1
            for q in range(t1, p):
                wq = rows[q]
                a = wq[t]
                b = wq[t1]
                wq[t] = co * a + si * b
                wq[t1] = co * b - si * a
        # Append the entering vertex: forward-substitute its matrix column
        # through the refreshed factor, then take the new pivot.
        colbase = new - p
        newrow = []
        s2 = 0.0
        for j in range(p):
            acc = off[col_start[colbase + j] + (p - j - 1)]
            rj = rows[j]
            for q in range(j):
                acc -= rj[q] * newrow[q]
            w = acc / rj[j]
            newrow.append(w)
            s2 += w * w
        rem = diag[new] - s2
        if rem <= 0.0:
            raise NotCompletable("appended pivot is not positive")
        piv = sqrt(rem)
        newrow.append(piv)
        rows.append(newrow)
        logdet += 2.0 * log(piv)
    return logdet


# -- helpers ----------------------------------------------------------------

def _cross_block(xbar, rows, cols):
    pat = xbar.pattern
    off = xbar.offdiag
    out = np.empty((len(rows), len(cols)))
    for a, va in enumerate(rows):
        for b, vb in enumerate(cols):
            out[a, b] = off[pat.edge_index(va, vb)]
    return out


def _pd_inverse(block, what):
    try:
        c = np.linalg.cholesky(block)
    except np.linalg.LinAlgError as exc:
        raise NotCompletable(f"{what}: block not PD") from exc
    ci = np.linalg.inv(c)
    return ci.T @ ci


def _dense_logdet(block, what):
    try:
        c = np.linalg.cholesky(block)
    except np.linalg.LinAlgError as exc:
        raise NotCompletable(f"{what}: block not PD") from exc
    return 2.0 * float(np.sum(np.log(np.diagonal(c))))


def _scatter(diag, off, pat, verts, block, sign):
    k = len(verts)
    for a in range(k):
        va = verts[a]
        diag[va] += sign * block[a, a]
        for b in range(a + 1, k):
            off[pat.edge_index(va, verts[b])] += sign * block[a, b]


def _dense_chol_rows(a):
    """Scalar unblocked Cholesky returning packed row lists."""
    m = len(a)
    rows = []
    for i in range(m):
        row = [0.0] * (i + 1)
        for j in range(i):
            s = a[i][j]
            rj = rows[j]
            for q in range(j):
                s -= row[q] * rj[q]
            row[j] = s / rj[j]
        rem = a[i][i] - sum(x * x for x in row[:i])
        if rem <= 0.0:
            raise NotCompletable(f"leading block pivot {i} is not positive")
        row[i] = math.sqrt(rem)
        rows.append(row)
    return rows


def _require_full_band(pattern, p):
    n = pattern.n
    counts = np.minimum(p, n - 1 - np.arange(n))
    counts = np.maximum(counts, 0)
    if not np.array_equal(np.diff(pattern.col_ptr), counts):
        raise ValueError("pattern is not the full band of the stated bandwidth")
    total = int(counts.sum())
    if total:
        starts = pattern.col_ptr[:-1]
        within = np.arange(total) - np.repeat(starts, counts)
        expected = np.repeat(np.arange(n), counts) + within + 1
        if not np.array_equal(pattern.rows, expected):
            raise ValueError("pattern is not the full band of the stated bandwidth")


def _bandwidth_of(pattern):
    if pattern.nnz == 0:
        return 0
    width = 0
    for j in range(pattern.n):
        rows = pattern.column_rows(j)
        if rows:
            width = max(width, rows[-1] - j)
    return width
