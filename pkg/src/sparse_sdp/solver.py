"""Decoupled primal-dual potential reduction over partial primal matrices.

One main iteration computes two projected Newton directions (one across
the primal feasible slice, one across the dual slice), derives the two
cheap companion directions from the same quantities, and then runs a
fixed-unit-step steepest descent over the four step coefficients to
reduce the potential

    rho * ln(S.X) - ln det X - ln det S,    rho = n + gamma*sqrt(n).

Both Newton systems are solved matrix-free by conjugate gradient; each
operator application is one Hessian-product sweep over the fill pattern.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from io import StringIO

import numpy as np

from .completion import (PartialSymMatrix, completion_inverse,
                         logdet_completion)
from .errors import (CgStall, InfeasiblePoint, InfeasibleStart, IterationLimit,
                     NoDecrease, NotCompletable, NotPositiveDefinite)
from .logdet import hess_vec, sparse_inverse
from .sparsemat import SparseSymMatrix, cholesky_factorize

FEAS_TOL = 1e-8          # strict-feasibility residual bound at entry
STALL_DECREASE = 1e-12   # potential decrease below this counts as stalled
MAX_DAMPINGS = 60        # halvings applied to an infeasible start point


@dataclass
class SolverConfig:
    """Solver knobs; ``gamma=None`` resolves to sqrt(n) at solve time."""

    gamma: float | None = None
    gap_tol: float = 1e-3
    extra_iters: int = 3
    cg_rel_tol: float = 1e-5
    cg_max_iter: int | None = None
    max_main_iters: int = 200
    direction_mode: str = "four"
    potential_descent_max_steps: int = 20

    def __post_init__(self):
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.gap_tol <= 0 or self.cg_rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.direction_mode not in ("four", "two"):
            raise ValueError("direction_mode must be 'four' or 'two'")


@dataclass
class CgResult:
    x: np.ndarray
    iterations: int
    converged: bool
    residual_norm: float


def conjugate_gradient(apply_h, rhs, rel_tol=1e-5, max_iter=None, precond=None,
                       strict=False):
    """Solve H z = rhs for a symmetric positive definite operator.

    Stops when the residual 2-norm drops below ``rel_tol`` times the
    2-norm of ``rhs``.  On hitting ``max_iter`` first, returns the best
    iterate flagged ``converged=False`` (or raises CgStall when strict).
    """
    rhs = np.asarray(rhs, dtype=float)
    m = len(rhs)
    if max_iter is None:
        max_iter = m
    nb = float(np.linalg.norm(rhs))
    x = np.zeros(m)
    if nb == 0.0:
        return CgResult(x, 0, True, 0.0)
    r = rhs.copy()
    z = precond(r) if precond else r
    p = z.copy()
    rz = float(r @ z)
    best_x = x.copy()
    best_res = nb
    iters = 0
    while iters < max_iter:
        hp = apply_h(p)
        php = float(p @ hp)
        if php <= 0.0:
            break  # operator numerically lost definiteness along p
        alpha = rz / php
        x = x + alpha * p
        r = r - alpha * hp
        iters += 1
        rn = float(np.linalg.norm(r))
        if rn < best_res:
            best_res = rn
            best_x = x.copy()
        if rn <= rel_tol * nb:
            return CgResult(x, iters, True, rn)
        z = precond(r) if precond else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    result = CgResult(best_x, iters, False, best_res)
    if strict:
        raise CgStall(result)
    return result


class IterateState:
    """Strictly feasible iterate with its factor and completion caches."""

    def __init__(self, problem, xbar, y, s, s_factor, xhat_inv, gap,
                 logdet_x, rho):
        self.problem = problem
        self.xbar = xbar
        self.y = y
        self.s = s
        self.s_factor = s_factor
        self.xhat_inv = xhat_inv
        self.gap = gap
        self.logdet_x = logdet_x
        self.rho = rho
        self._sinv = None
        self._xhat_inv_factor = None

    @classmethod
    def create(cls, problem, xbar, y, rho, validate=False):
        y = np.asarray(y, dtype=float)
        s = problem.dual_slack(y)
        try:
            s_factor = cholesky_factorize(s)
        except NotPositiveDefinite as exc:
            raise InfeasibleStart("dual slack is not positive definite") from exc
        try:
            logdet_x = logdet_completion(xbar, problem.cliques)
        except NotCompletable as exc:
            raise InfeasibleStart("primal partial matrix is not completable") from exc
        gap = _dot(s, xbar)
        if gap <= 0.0:
            raise InfeasibleStart(f"duality gap {gap:.3e} is not positive")
        if validate:
            pres = float(np.max(np.abs(problem.apply_map(xbar.as_sparse()) - problem.b))) \
                if problem.m else 0.0
            if pres > FEAS_TOL:
                raise InfeasibleStart(f"primal residual {pres:.3e} exceeds {FEAS_TOL}")
        xhat_inv = completion_inverse(xbar, problem.cliques)
        return cls(problem, xbar, y, s, s_factor, xhat_inv, gap, logdet_x, rho)

    @property
    def logdet_s(self):
        return self.s_factor.logdet

    @property
    def phi(self):
        return self.rho * math.log(self.gap) - self.logdet_x - self.logdet_s

    @property
    def sinv(self):
        """Entries on F of S^-1 (lazy, shared across direction builds)."""
        if self._sinv is None:
            self._sinv = sparse_inverse(self.s_factor)
        return self._sinv

    @property
    def xhat_inv_factor(self):
        if self._xhat_inv_factor is None:
            self._xhat_inv_factor = cholesky_factorize(self.xhat_inv)
        return self._xhat_inv_factor

    def objective_primal(self):
        return _dot(self.problem.c, self.xbar)

    def objective_dual(self):
        return float(self.problem.b @ self.y)

    def residuals(self):
        prob = self.problem
        pres = float(np.max(np.abs(prob.apply_map(self.xbar.as_sparse()) - prob.b))) \
            if prob.m else 0.0
        slack = prob.dual_slack(self.y)
        dres = max(float(np.max(np.abs(slack.diag - self.s.diag))),
                   float(np.max(np.abs(slack.offdiag - self.s.offdiag)))
                   if len(slack.offdiag) else 0.0)
        return pres, dres


def potential(state):
    """Potential value at a state; InfeasiblePoint if the caches are bad."""
    if state.gap <= 0.0:
        raise InfeasiblePoint("nonpositive duality gap")
    return state.phi


@dataclass
class DualStep:
    ds2: SparseSymMatrix
    dx2: PartialSymMatrix
    lam_tilde: float
    z: np.ndarray
    dy2: np.ndarray
    cg_iterations: int
    cg_converged: bool


@dataclass
class PrimalStep:
    dx1: PartialSymMatrix
    ds1: SparseSymMatrix
    lam: float
    lambda_mult: np.ndarray
    dy1: np.ndarray
    cg_iterations: int
    cg_converged: bool


@dataclass
class Directions:
    dx1: PartialSymMatrix
    dx2: PartialSymMatrix | None
    ds1: SparseSymMatrix
    ds2: SparseSymMatrix | None
    z: np.ndarray | None
    lambda_mult: np.ndarray
    lam: float
    lam_tilde: float | None
    dy1: np.ndarray
    dy2: np.ndarray | None
    cg_primal: int = 0
    cg_dual: int = 0


def dual_direction(state, cfg):
    """Projected Newton direction across the dual slice and its companion.

    Solves A(S^-1 N~ S^-1) = A(S^-1 - M~) for the coefficients of
    N~ = sum z_p A_p by conjugate gradient, with M~ = (rho/gap) X.  Then
      dS2 = N~ / (1 + lam~),        lam~ = [(S^-1 N~ S^-1) . N~]^(1/2),
      dX2 = (gap/rho) (S^-1 - S^-1 N~ S^-1) - X   restricted to F,
    and dX2 is projected onto the constraint null space so primal
    feasibility is preserved exactly.
    """
    prob = state.problem
    rho = state.rho
    mu = state.gap / rho
    sinv = state.sinv
    xbar_sparse = state.xbar.as_sparse()
    rhs = prob.apply_map(sinv) - prob.apply_map(xbar_sparse) / mu

    def op(zv):
        return prob.apply_map(hess_vec(state.s_factor, prob.adjoint_map(zv),
                                       sinv=sinv))

    res = conjugate_gradient(op, rhs, rel_tol=cfg.cg_rel_tol,
                             max_iter=cfg.cg_max_iter or prob.m)
    ntilde = prob.adjoint_map(res.x)
    curved = hess_vec(state.s_factor, ntilde, sinv=sinv)
    lam_tilde = math.sqrt(max(_dot(curved, ntilde), 0.0))
    ds2 = ntilde.scaled(1.0 / (1.0 + lam_tilde))
    dy2 = -res.x / (1.0 + lam_tilde)
    raw = SparseSymMatrix(prob.fill,
                          mu * (sinv.diag - curved.diag) - xbar_sparse.diag,
                          mu * (sinv.offdiag - curved.offdiag) - xbar_sparse.offdiag,
                          check=False)
    raw = prob.project_out_constraints(raw)
    dx2 = PartialSymMatrix(prob.fill, raw.diag, raw.offdiag, check=False)
    return DualStep(ds2, dx2, lam_tilde, res.x, dy2, res.iterations, res.converged)


def primal_direction(state, cfg):
    """Projected Newton direction across the primal slice and its companion.

    Works against the completion X^ through its sparse inverse Y: with
    M = (rho/gap) S, solve A(sum lam_p X^ A_p X^) = A(X^ M X^ - X) for
    the multipliers by conjugate gradient, where every product
    (X^ Z X^)|_F is one Hessian sweep on Y's factor.  Then
      N|_F = X - (X^ M X^)|_F + sum lam_p (X^ A_p X^)|_F,
      dX1 = N / (1 + lam),   lam = [G . N]^(1/2),
      G = Y - M + sum lam_p A_p  (equals X^-1 N X^-1 on F),
      dS1 = (gap/rho) (Y - G) - S = -(gap/rho) sum lam_p A_p.
    N is projected onto the constraint null space before scaling.
    """
    prob = state.problem
    rho = state.rho
    mu = state.gap / rho
    xbar_sparse = state.xbar.as_sparse()
    y_factor = state.xhat_inv_factor
    m_mat = state.s.scaled(1.0 / mu)
    xmx = hess_vec(y_factor, m_mat, sinv=xbar_sparse)
    rhs = prob.apply_map(xmx) - prob.apply_map(xbar_sparse)

    def op(lv):
        return prob.apply_map(hess_vec(y_factor, prob.adjoint_map(lv),
                                       sinv=xbar_sparse))

    res = conjugate_gradient(op, rhs, rel_tol=cfg.cg_rel_tol,
                             max_iter=cfg.cg_max_iter or prob.m)
    lam_mult = res.x
    xlx = hess_vec(y_factor, prob.adjoint_map(lam_mult), sinv=xbar_sparse)
    n_mat = SparseSymMatrix(prob.fill,
                            xbar_sparse.diag - xmx.diag + xlx.diag,
                            xbar_sparse.offdiag - xmx.offdiag + xlx.offdiag,
                            check=False)
    n_mat = prob.project_out_constraints(n_mat)
    lam_a = prob.adjoint_map(lam_mult)
    g_mat = SparseSymMatrix(prob.fill,
                            state.xhat_inv.diag - m_mat.diag + lam_a.diag,
                            state.xhat_inv.offdiag - m_mat.offdiag + lam_a.offdiag,
                            check=False)
    lam = math.sqrt(max(_dot(g_mat, n_mat), 0.0))
    scale = 1.0 / (1.0 + lam)
    dx1 = PartialSymMatrix(prob.fill, scale * n_mat.diag, scale * n_mat.offdiag,
                           check=False)
    dy1 = mu * lam_mult
    ds1 = lam_a.scaled(-mu)
    return PrimalStep(dx1, ds1, lam, lam_mult, dy1, res.iterations, res.converged)


class _Trial:
    """One evaluated step-coefficient point of the potential search."""

    __slots__ = ("coeffs", "xdiag", "xoff", "y", "s", "s_factor", "gap",
                 "logdet_x", "phi", "_xinv", "_sinv")

    def __init__(self, coeffs, xdiag, xoff, y, s, s_factor, gap, logdet_x, phi):
        self.coeffs = coeffs
        self.xdiag = xdiag
        self.xoff = xoff
        self.y = y
        self.s = s
        self.s_factor = s_factor
        self.gap = gap
        self.logdet_x = logdet_x
        self.phi = phi
        self._xinv = None
        self._sinv = None


@dataclass
class StepChoice:
    """Outcome of the potential minimization over step coefficients."""

    coeffs: np.ndarray            # (h1, h2, k1, k2)
    phi: float
    steps_per_start: list
    trial: object | None          # None means the all-zero point won

    @property
    def h1(self):
        return self.coeffs[0]

    @property
    def h2(self):
        return self.coeffs[1]

    @property
    def k1(self):
        return self.coeffs[2]

    @property
    def k2(self):
        return self.coeffs[3]

    @property
    def mean_steps(self):
        if not self.steps_per_start:
            return 0.0
        return sum(self.steps_per_start) / len(self.steps_per_start)


def potential_minimize(state, dirs, cfg):
    """Steepest descent on the potential over the step coefficients.

    Starts from each unit coefficient point (damped by halving while the
    point is infeasible), then repeatedly moves a fixed unit-length step
    along the negative gradient while that keeps the point feasible and
    decreases the potential; no line search.  Returns the best terminal
    point against the all-zero point.  In two-direction mode only
    (h1, k1) are searched.  Raises NoDecrease when no start can be made
    feasible.
    """
    prob = state.problem
    rho = state.rho
    active = [0, 2] if cfg.direction_mode == "two" else [0, 1, 2, 3]
    dxs = [dirs.dx1, dirs.dx2]
    dys = [dirs.dy1, dirs.dy2]
    phi0 = state.phi

    def evaluate(q):
        xdiag = state.xbar.diag.copy()
        xoff = state.xbar.offdiag.copy()
        y = state.y.copy()
        for t, h in ((0, q[0]), (1, q[1])):
            if h != 0.0 and dxs[t] is not None:
                xdiag += h * dxs[t].diag
                xoff += h * dxs[t].offdiag
        for t, k in ((0, q[2]), (1, q[3])):
            if k != 0.0 and dys[t] is not None:
                y += k * dys[t]
        s = prob.dual_slack(y)
        try:
            s_factor = cholesky_factorize(s)
        except NotPositiveDefinite:
            return None
        xbar_t = PartialSymMatrix(prob.fill, xdiag, xoff, check=False)
        try:
            logdet_x = logdet_completion(xbar_t, prob.cliques)
        except NotCompletable:
            return None
        gap = _dot(s, xbar_t)
        if gap <= 0.0:
            return None
        phi = rho * math.log(gap) - logdet_x - s_factor.logdet
        return _Trial(q.copy(), xdiag, xoff, y, s, s_factor, gap, logdet_x, phi)

    def gradient(trial):
        if trial._xinv is None:
            xbar_t = PartialSymMatrix(prob.fill, trial.xdiag, trial.xoff, check=False)
            trial._xinv = completion_inverse(xbar_t, prob.cliques)
            trial._sinv = sparse_inverse(trial.s_factor)
        scale = rho / trial.gap
        g = np.zeros(4)
        for t, mat in enumerate(dxs):
            if mat is not None:
                g[t] = scale * _arr_dot(trial.s.diag, trial.s.offdiag, mat.diag, mat.offdiag) \
                    - _arr_dot(trial._xinv.diag, trial._xinv.offdiag, mat.diag, mat.offdiag)
        for t, mat in enumerate((dirs.ds1, dirs.ds2)):
            if mat is not None:
                g[2 + t] = scale * _arr_dot(trial.xdiag, trial.xoff, mat.diag, mat.offdiag) \
                    - _arr_dot(trial._sinv.diag, trial._sinv.offdiag, mat.diag, mat.offdiag)
        mask = np.zeros(4)
        mask[active] = 1.0
        return g * mask

    terminals = []
    steps_per_start = []
    any_feasible = False
    for start in active:
        q = np.zeros(4)
        q[start] = 1.0
        trial = evaluate(q)
        dampings = 0
        while trial is None and dampings < MAX_DAMPINGS:
            q[start] *= 0.5
            trial = evaluate(q)
            dampings += 1
        if trial is None:
            steps_per_start.append(0)
            continue
        any_feasible = True
        steps = 0
        while steps < cfg.potential_descent_max_steps:
            g = gradient(trial)
            norm = float(np.linalg.norm(g))
            if norm == 0.0:
                break
            cand = evaluate(trial.coeffs - g / norm)
            if cand is None or not cand.phi < trial.phi:
                break
            trial = cand
            steps += 1
        steps_per_start.append(steps)
        terminals.append((trial.phi, start, trial))
    if not any_feasible:
        raise NoDecrease("no feasible starting point for the potential search")
    terminals.sort(key=lambda t: (t[0], t[1]))
    best_phi, _, best = terminals[0]
    if best_phi >= phi0:
        return StepChoice(np.zeros(4), phi0, steps_per_start, None)
    return StepChoice(best.coeffs, best_phi, steps_per_start, best)


@dataclass
class IterationRecord:
    index: int
    gap: float
    phi: float
    cg_primal: int
    cg_dual: int
    descent_steps: float
    primal_residual: float
    dual_residual: float


@dataclass
class SolverReport:
    """Per-iteration trace plus final objectives and state."""

    n: int
    m: int
    direction_mode: str
    gamma: float
    gap_tol: float
    initial_gap: float
    initial_phi: float
    records: list = field(default_factory=list)
    status: str = "running"
    converged_iteration: int | None = None
    objective_primal: float = math.nan
    objective_dual: float = math.nan
    gap: float = math.nan
    state: object | None = None

    @property
    def iterations(self):
        return len(self.records)

    def csv_text(self):
        out = StringIO()
        out.write("iter,gap,phi,cg_primal,cg_dual,descent_steps\n")
        for r in self.records:
            out.write(f"{r.index},{r.gap!r},{r.phi!r},{r.cg_primal},"
                      f"{r.cg_dual},{r.descent_steps!r}\n")
        return out.getvalue()

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def summary(self):
        return {
            "status": self.status,
            "n": self.n,
            "m": self.m,
            "direction_mode": self.direction_mode,
            "gamma": self.gamma,
            "gap_tol": self.gap_tol,
            "iterations": self.iterations,
            "converged_iteration": self.converged_iteration,
            "objective_primal": self.objective_primal,
            "objective_dual": self.objective_dual,
            "gap": self.gap,
            "initial_gap": self.initial_gap,
            "max_primal_residual": max((r.primal_residual for r in self.records),
                                       default=0.0),
            "max_dual_residual": max((r.dual_residual for r in self.records),
                                     default=0.0),
            "mean_cg_primal": _mean(r.cg_primal for r in self.records),
            "mean_cg_dual": _mean(r.cg_dual for r in self.records),
            "mean_descent_steps": _mean(r.descent_steps for r in self.records),
        }

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def solve(problem, x0, y0, cfg=None, observer=None):
    """Run the main loop from a strictly feasible start.

    Iterates until the duality gap falls below ``cfg.gap_tol``, then runs
    ``cfg.extra_iters`` polishing iterations.  Raises InfeasibleStart for
    a bad initial point and IterationLimit (with the partial report
    attached) when the iteration budget runs out or progress stalls.
    """
    cfg = cfg or SolverConfig()
    gamma = cfg.gamma if cfg.gamma is not None else math.sqrt(problem.n)
    rho = problem.n + gamma * math.sqrt(problem.n)
    state = IterateState.create(problem, x0, np.asarray(y0, dtype=float), rho,
                                validate=True)
    report = SolverReport(n=problem.n, m=problem.m,
                          direction_mode=cfg.direction_mode, gamma=gamma,
                          gap_tol=cfg.gap_tol, initial_gap=state.gap,
                          initial_phi=state.phi)

    def finish(status):
        report.status = status
        report.objective_primal = state.objective_primal()
        report.objective_dual = state.objective_dual()
        report.gap = state.gap
        report.state = state
        return report

    converged_at = None
    for it in range(1, cfg.max_main_iters + 1):
        prim = primal_direction(state, cfg)
        dual = dual_direction(state, cfg) if cfg.direction_mode == "four" else None
        dirs = Directions(
            dx1=prim.dx1,
            dx2=dual.dx2 if dual else None,
            ds1=prim.ds1,
            ds2=dual.ds2 if dual else None,
            z=dual.z if dual else None,
            lambda_mult=prim.lambda_mult,
            lam=prim.lam,
            lam_tilde=dual.lam_tilde if dual else None,
            dy1=prim.dy1,
            dy2=dual.dy2 if dual else None,
            cg_primal=prim.cg_iterations,
            cg_dual=dual.cg_iterations if dual else 0,
        )
        try:
            choice = potential_minimize(state, dirs, cfg)
        except NoDecrease:
            if converged_at is not None or state.gap <= cfg.gap_tol:
                return finish("converged")
            raise IterationLimit("no feasible potential-reducing step",
                                 finish("stalled"))
        if choice.trial is None or state.phi - choice.phi < STALL_DECREASE:
            if converged_at is not None or state.gap <= cfg.gap_tol:
                return finish("converged")
            raise IterationLimit(
                f"potential decrease below {STALL_DECREASE} at gap "
                f"{state.gap:.3e}", finish("stalled"))
        trial = choice.trial
        xbar = PartialSymMatrix(problem.fill, trial.xdiag, trial.xoff, check=False)
        xhat_inv = trial._xinv if trial._xinv is not None \
            else completion_inverse(xbar, problem.cliques)
        state = IterateState(problem, xbar, trial.y, trial.s, trial.s_factor,
                             xhat_inv, trial.gap, trial.logdet_x, rho)
        pres, dres = state.residuals()
        record = IterationRecord(it, state.gap, state.phi, dirs.cg_primal,
                                 dirs.cg_dual, choice.mean_steps, pres, dres)
        report.records.append(record)
        if observer is not None:
            observer(record)
        if converged_at is None and state.gap <= cfg.gap_tol:
            converged_at = it
            report.converged_iteration = it
        if converged_at is not None and it >= converged_at + cfg.extra_iters:
            return finish("converged")
    if converged_at is not None:
        return finish("converged")
    raise IterationLimit(f"gap {state.gap:.3e} above {cfg.gap_tol} after "
                         f"{cfg.max_main_iters} iterations",
                         finish("iteration_limit"))


def _dot(a, b):
    """Inner product for same-pattern operands (arrays aligned)."""
    return float(a.diag @ b.diag) + 2.0 * float(a.offdiag @ b.offdiag)


def _arr_dot(diag_a, off_a, diag_b, off_b):
    s = float(diag_a @ diag_b)
    if len(off_a):
        s += 2.0 * float(off_a @ off_b)
    return s


def _mean(values):
    values = list(values)
    return sum(values) / len(values) if values else 0.0
