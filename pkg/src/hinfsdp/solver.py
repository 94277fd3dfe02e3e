"""Dense primal-dual interior-point solver for small semidefinite programs.

Problems are reduced to the real standard form::

    (P)  min <C, X>  s.t.  A(X) = b,  X in K
    (D)  max b'y     s.t.  A*(y) + Z = C,  Z in K

where ``K`` is a product of real PSD cones and nonnegative orthants.
Complex Hermitian blocks enter through :func:`hinfsdp.hermitian.embed_real`.
The iteration is an infeasible-start path-following method with the HKM
search direction and a Mehrotra predictor-corrector step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import InputError, SolverError
from .hermitian import embed_real, hermitian_basis, symmetrize, unembed_real
from .problems import ConicProblem, DualProblem

__all__ = [
    "Status",
    "Settings",
    "Residuals",
    "SolverSolution",
    "DualSolution",
    "solve",
    "solve_dual_lmi",
    "P_NORM_CAP",
    "raise_for_status",
]

log = logging.getLogger(__name__)
log.addHandler(logging.NullHandler())

P_NORM_CAP = 1e8
STEP_FRACTION = 0.98
_REFINE_STEPS = 5
_POLISH_GAIN = 0.5
# certificate thresholds for infeasibility / unboundedness rays
_RAY_TOL = 1e-8


class Status(str, Enum):
    OPTIMAL = "Optimal"
    NEAR_OPTIMAL = "NearOptimal"
    MAX_ITERS = "MaxIters"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Settings:
    tol_feas: float = 1e-8
    tol_gap: float = 1e-8
    max_iters: int = 200
    max_size: int = 200
    # extra iterations after convergence while the residuals keep halving
    polish_iters: int = 5

    def __post_init__(self):
        if not (self.tol_feas > 0 and self.tol_gap > 0):
            raise InputError("tolerances must be positive")
        if self.max_iters < 1:
            raise InputError("max_iters must be at least 1")
        if self.polish_iters < 0:
            raise InputError("polish_iters must be nonnegative")


@dataclass(frozen=True)
class Residuals:
    primal_eq: float
    psd_violation: float
    duality_gap: float


@dataclass(frozen=True, eq=False)
class SolverSolution:
    """Solved lifted SDP.

    ``objective`` is the primal (maximized) value, ``dual_objective`` the
    value of the dual multipliers. ``dual`` holds the raw multipliers of
    the scalar equalities, then the inequalities, then the side-constraint
    equalities, all in the problem's scaled coordinates.
    """

    V: np.ndarray
    objective: float
    dual_objective: float
    status: Status
    residuals: Residuals
    iterations: int
    dual: np.ndarray = field(repr=False, default=None)
    gap_history: tuple = field(repr=False, default=())


@dataclass(frozen=True, eq=False)
class DualSolution:
    lam: float
    P: np.ndarray
    Q: Optional[np.ndarray]
    status: Status
    residuals: Residuals
    iterations: int
    primal_objective: float
    not_attained: bool = False
    p_norm: float = 0.0


# --- standard form ------------------------------------------------------------

@dataclass
class _Cone:
    """Real standard-form data: per-block constraint stacks and costs."""

    kinds: list  # 's' or 'l'
    A: list  # 's': (m, d, d), 'l': (m, d)
    C: list
    b: np.ndarray

    @property
    def m(self):
        return len(self.b)

    def op(self, X):
        out = np.zeros(self.m)
        for kind, Ab, Xb in zip(self.kinds, self.A, X):
            out += Ab.reshape(self.m, Xb.size) @ Xb.reshape(-1)
        return out

    def adj(self, y):
        return [np.tensordot(y, Ab, 1) for Ab in self.A]

    @property
    def nu(self):
        return sum(Cb.shape[0] for Cb in self.C)


def _dot(X, Z):
    return float(sum(np.vdot(a, b) for a, b in zip(X, Z)).real)


def _fnorm(X):
    return math.sqrt(sum(float(np.vdot(a, a).real) for a in X))


def _max_step(kind, X, dX):
    """Largest alpha with X + alpha dX in the cone (inf if unbounded)."""
    if kind == "l":
        neg = dX < 0
        if not np.any(neg):
            return math.inf
        return float(np.min(-X[neg] / dX[neg]))
    try:
        Lc = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    W = scipy.linalg.solve_triangular(Lc, dX, lower=True)
    W = scipy.linalg.solve_triangular(Lc, W.T, lower=True)
    lam_min = np.linalg.eigvalsh(0.5 * (W + W.T))[0]
    return math.inf if lam_min >= 0 else -1.0 / lam_min


@dataclass
class _IPMResult:
    X: list
    y: np.ndarray
    Z: list
    status: Status
    iterations: int
    pinf: float
    dinf: float
    gap: float
    pobj: float
    dobj: float
    gap_history: list


def _initial_point(cone: _Cone):
    X, Z = [], []
    m = cone.m
    for kind, Ab, Cb in zip(cone.kinds, cone.A, cone.C):
        d = Cb.shape[0]
        norms = np.linalg.norm(Ab.reshape(m, -1), axis=1) if m else np.zeros(0)
        xi = max(10.0, math.sqrt(d))
        if m:
            xi = max(xi, d * float(np.max((1 + np.abs(cone.b)) / (1 + norms))))
        eta = max(10.0, math.sqrt(d), float(np.linalg.norm(Cb)), float(np.max(norms, initial=0.0)))
        if kind == "s":
            X.append(xi * np.eye(d))
            Z.append(eta * np.eye(d))
        else:
            X.append(xi * np.ones(d))
            Z.append(eta * np.ones(d))
    return X, np.zeros(m), Z


def _schur_system(cone: _Cone, X, Z):
    """Factor the HKM Schur complement ``M_ij = <A_i, X A_j Z^-1>``.

    Solves are followed by a few steps of iterative refinement, kept only
    while they reduce the residual; near the optimum ``M`` is badly
    conditioned and this is what lets the primal residual reach 1e-10.
    """
    m = cone.m
    Zinv = []
    for kind, Zb in zip(cone.kinds, Z):
        if kind == "s":
            Zi = np.linalg.inv(Zb)
            Zinv.append(0.5 * (Zi + Zi.T))
        else:
            Zinv.append(1.0 / Zb)
    M = np.zeros((m, m))
    for kind, Ab, Xb, Zi in zip(cone.kinds, cone.A, X, Zinv):
        flat = Ab.reshape(m, -1)
        if kind == "s":
            G = np.matmul(np.matmul(Xb, Ab), Zi)
            M += flat @ G.reshape(m, -1).T
        else:
            M += (flat * (Xb * Zi)) @ flat.T
    M = 0.5 * (M + M.T)
    try:
        factor = scipy.linalg.cho_factor(M)
        base = lambda r: scipy.linalg.cho_solve(factor, r)  # noqa: E731
    except np.linalg.LinAlgError:
        lu = scipy.linalg.lu_factor(M + 1e-14 * np.trace(M) / max(m, 1) * np.eye(m))
        base = lambda r: scipy.linalg.lu_solve(lu, r)  # noqa: E731

    def msolve(r):
        x = base(r)
        res = r - M @ x
        for _ in range(_REFINE_STEPS):
            x_new = x + base(res)
            res_new = r - M @ x_new
            if not np.linalg.norm(res_new) < np.linalg.norm(res):
                break
            x, res = x_new, res_new
        return x

    return msolve, Zinv


def _ipm(cone: _Cone, settings: Settings, keep_going=None, obj_scale: float = 1.0) -> _IPMResult:
    """Run the predictor-corrector iteration.

    ``keep_going(result)`` may return True to continue past the normal
    stopping test (used to chase non-attained dual optima). Without it the
    iteration continues for up to ``settings.polish_iters`` steps after
    convergence while the residual score at least halves, and returns the
    best converged iterate. ``obj_scale`` is the factor by which the cost
    was divided; the gap test is applied in the original units.
    """
    kinds = cone.kinds
    m = cone.m
    X, y, Z = _initial_point(cone)
    nu = cone.nu
    normb = 1.0 + float(np.linalg.norm(cone.b))
    normC = 1.0 + _fnorm(cone.C)
    history = []
    stall = 0
    best = None
    polished = None  # (score, snapshot, first converged iteration)
    it = 0

    def snapshot(status, it, pinf, dinf, gap, pobj, dobj):
        return _IPMResult([x.copy() for x in X], y.copy(), [z.copy() for z in Z],
                          status, it, pinf, dinf, gap, pobj, dobj, list(history))

    for it in range(settings.max_iters + 1):
        ATy = cone.adj(y)
        rp = cone.b - cone.op(X)
        Rd = [Cb - Zb - Ab for Cb, Zb, Ab in zip(cone.C, Z, ATy)]
        pobj = _dot(cone.C, X)
        dobj = float(cone.b @ y)
        compl = _dot(X, Z)
        pinf = float(np.linalg.norm(rp)) / normb
        dinf = _fnorm(Rd) / normC
        gap = max(compl, abs(pobj - dobj))
        history.append(gap)
        gap_tol = settings.tol_gap * (1.0 / obj_scale + abs(pobj))
        converged = pinf <= settings.tol_feas and dinf <= settings.tol_feas and gap <= gap_tol
        score = max(pinf / settings.tol_feas, dinf / settings.tol_feas, gap / gap_tol)
        if best is None or score <= best[0]:
            best = (score, snapshot(Status.NEAR_OPTIMAL, it, pinf, dinf, gap, pobj, dobj))
        if converged:
            res = snapshot(Status.OPTIMAL, it, pinf, dinf, gap, pobj, dobj)
            if keep_going is not None:
                if not keep_going(res):
                    return res
            elif polished is None:
                polished = (score, res, it)
            elif score < _POLISH_GAIN * polished[0]:
                polished = (score, res, polished[2])
            else:
                return polished[1]
            if polished is not None and it - polished[2] >= settings.polish_iters:
                return polished[1]
        elif polished is not None:
            return polished[1]
        # ray certificates
        if dobj > 0:
            ray = _fnorm([Cb - Rb for Cb, Rb in zip(cone.C, Rd)]) / dobj
            if ray < _RAY_TOL:
                return snapshot(Status.INFEASIBLE, it, pinf, dinf, gap, pobj, dobj)
        if pobj < 0:
            ray = float(np.linalg.norm(cone.b - rp)) / -pobj
            if ray < _RAY_TOL:
                return snapshot(Status.UNBOUNDED, it, pinf, dinf, gap, pobj, dobj)
        if it == settings.max_iters:
            break

        mu = compl / nu
        try:
            msolve, Zinv = _schur_system(cone, X, Z)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            log.debug("iteration %d: linear algebra failure %s", it, exc)
            break

        def direction(sigma_mu, corr):
            K = []
            for i, (kind, Xb, Zi) in enumerate(zip(kinds, X, Zinv)):
                if kind == "s":
                    Kb = sigma_mu * Zi - Xb
                    if corr is not None:
                        T = corr[i] @ Zi
                        Kb = Kb - 0.5 * (T + T.T)
                else:
                    Kb = sigma_mu * Zi - Xb
                    if corr is not None:
                        Kb = Kb - corr[i] * Zi
                K.append(Kb)
            XRZ = [Xb @ Rb @ Zi if kind == "s" else Xb * Rb * Zi
                   for kind, Xb, Rb, Zi in zip(kinds, X, Rd, Zinv)]
            rhs = rp - cone.op(K) + cone.op(XRZ)
            dy = msolve(rhs)
            ATdy = cone.adj(dy)
            dZ = [Rb - Ab for Rb, Ab in zip(Rd, ATdy)]
            dX = []
            for kind, Kb, Xb, dZb, Zi in zip(kinds, K, X, dZ, Zinv):
                if kind == "s":
                    T = Xb @ dZb @ Zi
                    dX.append(Kb - 0.5 * (T + T.T))
                else:
                    dX.append(Kb - Xb * dZb * Zi)
            return dX, dy, dZ

        def steps(dX, dZ):
            ap = min([_max_step(k, Xb, d) for k, Xb, d in zip(kinds, X, dX)] + [math.inf])
            ad = min([_max_step(k, Zb, d) for k, Zb, d in zip(kinds, Z, dZ)] + [math.inf])
            return ap, ad

        try:
            dXa, dya, dZa = direction(0.0, None)
            ap, ad = steps(dXa, dZa)
            ap, ad = min(1.0, ap), min(1.0, ad)
            mu_a = _dot([x + ap * d for x, d in zip(X, dXa)],
                        [z + ad * d for z, d in zip(Z, dZa)]) / nu
            sigma = min(1.0, max(0.0, mu_a / mu)) ** 3 if mu > 0 else 0.0
            corr = [a @ b if k == "s" else a * b for k, a, b in zip(kinds, dXa, dZa)]
            dX, dy, dZ = direction(sigma * mu, corr)
            ap, ad = steps(dX, dZ)
        except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
            log.debug("iteration %d: linear algebra failure %s", it, exc)
            break
        if not all(np.all(np.isfinite(d)) for d in dX + dZ) or not np.all(np.isfinite(dy)):
            break
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)
        if ap < 1e-12 and ad < 1e-12:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
        X = [x + ap * d for x, d in zip(X, dX)]
        X = [0.5 * (x + x.T) if k == "s" else x for k, x in zip(kinds, X)]
        y = y + ad * dy
        Z = [z + ad * d for z, d in zip(Z, dZ)]
        Z = [0.5 * (z + z.T) if k == "s" else z for k, z in zip(kinds, Z)]

    if polished is not None:
        return polished[1]
    res = best[1]
    # loose acceptance when progress stops close to the target
    if res.status is Status.NEAR_OPTIMAL and best[0] > 1e3:
        res.status = Status.MAX_ITERS
    return res


# --- lifted primal ------------------------------------------------------------

def _primal_cone(problem: ConicProblem, cost_scale: float = 1.0):
    k = problem.k
    half = lambda H: 0.5 * embed_real(H)  # noqa: E731
    rows_V, rows_t, rows_S, b = [], [], [], []
    n_ineq = len(problem.ineq_rhs)
    sides = problem.side_maps
    side_sizes = [s.out_size for s in sides]

    def blank_t():
        return np.zeros(n_ineq)

    def blank_S():
        return [np.zeros((2 * s, 2 * s)) for s in side_sizes]

    for E, rhs in zip(problem.eq_coeffs, problem.eq_rhs):
        rows_V.append(half(E))
        rows_t.append(blank_t())
        rows_S.append(blank_S())
        b.append(rhs)
    for j, (G, rhs) in enumerate(zip(problem.ineq_coeffs, problem.ineq_rhs)):
        t = blank_t()
        t[j] = 1.0
        rows_V.append(half(G))
        rows_t.append(t)
        rows_S.append(blank_S())
        b.append(rhs)
    for si, smap in enumerate(sides):
        for E in hermitian_basis(smap.out_size):
            S = blank_S()
            S[si] = half(E)
            rows_V.append(-half(smap.adjoint(E)))
            rows_t.append(blank_t())
            rows_S.append(S)
            b.append(0.0)
    m = len(b)
    kinds = ["s"]
    A = [np.array(rows_V).reshape(m, 2 * k, 2 * k) if m else np.zeros((0, 2 * k, 2 * k))]
    C = [-half(problem.cost) / cost_scale]
    if n_ineq:
        kinds.append("l")
        A.append(np.array(rows_t).reshape(m, n_ineq))
        C.append(np.zeros(n_ineq))
    for si, s in enumerate(side_sizes):
        kinds.append("s")
        A.append(np.array([r[si] for r in rows_S]).reshape(m, 2 * s, 2 * s))
        C.append(np.zeros((2 * s, 2 * s)))
    return _Cone(kinds, A, C, np.array(b, dtype=float))


def solve(problem: ConicProblem, settings: Settings = Settings()) -> SolverSolution:
    """Solve a lifted SDP; ``V`` is returned symmetrized and eigenvalue-clipped.

    The cost is normalized to unit spectral norm before the iteration; the
    reported objectives, gap and multipliers are in the original units.
    """
    if problem.k > settings.max_size:
        raise InputError(f"problem size {problem.k} exceeds cap {settings.max_size}")
    cost_norm = float(np.max(np.abs(np.linalg.eigvalsh(symmetrize(problem.cost)))))
    scale = cost_norm if cost_norm > 0 and np.isfinite(cost_norm) else 1.0
    cone = _primal_cone(problem, scale)
    res = _ipm(cone, settings, obj_scale=scale)
    V_raw = problem.from_solver(unembed_real(res.X[0]))
    lam, U = np.linalg.eigh(V_raw)
    vscale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    psd_violation = max(0.0, -float(lam[0])) / vscale if len(lam) else 0.0
    V = symmetrize((U * np.clip(lam, 0.0, None)) @ U.conj().T)
    residuals = Residuals(primal_eq=res.pinf, psd_violation=psd_violation,
                          duality_gap=res.gap * scale)
    return SolverSolution(
        V=V,
        objective=-res.pobj * scale,
        dual_objective=-res.dobj * scale,
        status=res.status,
        residuals=residuals,
        iterations=res.iterations,
        dual=res.y * scale,
        gap_history=tuple(g * scale for g in res.gap_history),
    )


# --- KYP-type duals -------------------------------------------------------------

def _dual_cone(problem: DualProblem):
    n = problem.n
    nP = len(problem.FP)
    nQ = len(problem.FQ)
    m = 1 + nP + nQ
    K = problem.F0.shape[0]
    # y = [lam, p, q]; slack of the LMI block is -F(y)
    A_lmi = np.zeros((m, 2 * K, 2 * K))
    A_lmi[0] = embed_real(-problem.Ew)
    for i, F in enumerate(problem.FP):
        A_lmi[1 + i] = embed_real(F)
    for i, F in enumerate(problem.FQ):
        A_lmi[1 + nP + i] = embed_real(F)
    kinds = ["s", "l"]
    A = [A_lmi, np.zeros((m, 1))]
    A[1][0, 0] = -1.0
    C = [embed_real(-problem.F0), np.zeros(1)]
    if nQ:
        A_q = np.zeros((m, 2 * n, 2 * n))
        for i, E in enumerate(hermitian_basis(n)):
            A_q[1 + nP + i] = -embed_real(E)
        kinds.append("s")
        A.append(A_q)
        C.append(np.zeros((2 * n, 2 * n)))
    b = np.zeros(m)
    b[0] = -1.0
    return _Cone(kinds, A, C, b)


def _unpack(problem: DualProblem, y):
    basis = hermitian_basis(problem.n)
    nP = len(problem.FP)
    lam = float(y[0])
    if nP:
        P = problem.physical(np.tensordot(y[1:1 + nP], basis, 1))
    else:
        P = np.zeros((0, 0), dtype=complex)
    Q = problem.physical(np.tensordot(y[1 + nP:], basis, 1)) if problem.has_q else None
    return lam, P, Q


def solve_dual_lmi(problem: DualProblem, settings: Settings = Settings(),
                   p_cap: float = P_NORM_CAP) -> DualSolution:
    """Minimize ``lam`` over the KYP / generalized KYP LMI.

    When the infimum is not attained the multiplier ``P`` escapes to
    infinity as ``lam`` approaches the optimum. The iteration is then
    continued until ``||P||`` exceeds ``p_cap`` and the result is flagged
    ``not_attained`` with status ``NearOptimal``.
    """
    cone = _dual_cone(problem)
    trace = []

    def keep_going(res):
        # P grows like 1/gap when no minimizer exists; a bounded P settles
        _, P, _ = _unpack(problem, res.y)
        pn = float(np.linalg.norm(P, 2)) if P.size else 0.0
        trace.append((res.gap, pn))
        if pn > p_cap:
            return False
        if len(trace) < 4:
            return True
        (g0, p0), (g1, p1) = trace[-4], trace[-1]
        if g1 <= 0 or g0 <= g1 or p0 <= 0:
            return False
        slope = math.log(max(p1, 1e-300) / p0) / math.log(g0 / g1)
        return slope > 0.5

    wide = Settings(settings.tol_feas, settings.tol_gap,
                    max(settings.max_iters, 200), settings.max_size)
    res = _ipm(cone, wide, keep_going=keep_going)
    lam, P, Q = _unpack(problem, res.y)
    pn = float(np.linalg.norm(P, 2)) if P.size else 0.0
    not_attained = pn > p_cap
    status = res.status
    if not_attained and status in (Status.OPTIMAL, Status.MAX_ITERS):
        status = Status.NEAR_OPTIMAL
    residuals = Residuals(primal_eq=res.dinf, psd_violation=0.0, duality_gap=res.gap)
    return DualSolution(
        lam=lam,
        P=P,
        Q=Q,
        status=status,
        residuals=residuals,
        iterations=res.iterations,
        primal_objective=-res.pobj,
        not_attained=not_attained,
        p_norm=pn,
    )


def raise_for_status(solution, what: str = "solver"):
    """Raise :class:`SolverError` unless the status is (near) optimal."""
    if solution.status not in (Status.OPTIMAL, Status.NEAR_OPTIMAL):
        raise SolverError(f"{what} failed with status {solution.status.value}", solution)
    return solution
