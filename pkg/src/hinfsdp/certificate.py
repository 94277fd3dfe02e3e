"""Rank-one decomposition of lifted solutions and worst-case sinusoid extraction.

A feasible lifted ``V`` factors as ``V = S S*``. With ``F = [I 0] S`` and
``G = [A B] S`` the equality constraint reads ``F F* = G G*``, so a unitary
``U`` with ``F = G U`` exists. Its eigenvectors ``u_k`` split ``V`` into
rank-one feasible pieces ``S u_k (S u_k)*``, each generated by a pure
sinusoid at the eigenphase of ``u_k``. The piece with the best output to
input energy ratio, rescaled to unit input power, is a rank-one optimum
from which the worst-case input is read off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import (
    DegenerateCertificateError,
    DegenerateDilationError,
    ExtractionError,
    InputError,
)
from .hermitian import DEFAULT_REL_TOL, numerical_rank, pinv, psd_sqrt, symmetrize
from .lti import FrequencyBand, Sinusoid, StateSpace
from .problems import build_primal, effective_problem
from .solver import Settings, SolverSolution, raise_for_status, solve

__all__ = [
    "TOL_CERT",
    "TOL_PRE",
    "EPS_P",
    "RankOneCertificate",
    "RankOnePiece",
    "AnalysisResult",
    "unitary_dilation",
    "unitary_dilation_band",
    "rank_one_split",
    "select_best",
    "extract_input",
    "analyze",
]

TOL_CERT = 1e-6
TOL_PRE = 1e-6
EPS_P = 1e-10
BAND_ANGLE_TOL = 1e-4
# Cayley residuals above this (relative) trigger a rotated retry
_RETRY_REL = 1e-10
# eigenvalues of V below this (relative) are round-off and carry no piece
_ROUNDOFF_REL = 1e-12


@dataclass(frozen=True, eq=False)
class RankOneCertificate:
    """Worst-case sinusoid ``w_k = exp(j theta k) w_opt`` with steady state ``x_opt``.

    ``mu_opt = ||C x_opt + D w_opt||^2`` is the output power it achieves.
    """

    x_opt: np.ndarray
    w_opt: np.ndarray
    theta_opt: float
    mu_opt: float

    @property
    def sinusoid(self) -> Sinusoid:
        return Sinusoid(self.w_opt, self.theta_opt)

    def dynamics_residual(self, sys: StateSpace) -> float:
        """``||e^{j theta} x - (A x + B w)|| / (||x|| + ||w||)``."""
        x, w = self.x_opt, self.w_opt
        r = np.exp(1j * self.theta_opt) * x - (sys.A @ x + sys.B @ w)
        return float(np.linalg.norm(r) / (np.linalg.norm(x) + np.linalg.norm(w)))

    def to_dict(self) -> dict:
        return {
            "theta_opt": self.theta_opt,
            "mu_opt": self.mu_opt,
            "x_opt": [[z.real, z.imag] for z in self.x_opt],
            "w_opt": [[z.real, z.imag] for z in self.w_opt],
        }


@dataclass(frozen=True, eq=False)
class RankOnePiece:
    V: np.ndarray
    p: float
    mu: float
    theta: float = 0.0


# --- unitary dilations ------------------------------------------------------

def _cayley_solve(P, Q, rel_tol, inner_block):
    """Skew-Hermitian ``Delta`` with ``Q = P Delta`` built in the right
    singular basis of ``P``; ``inner_block(R, S)`` fills the lower-right block.
    """
    c = P.shape[1]
    _, s, Vh = np.linalg.svd(P, full_matrices=True)
    VP = Vh.conj().T
    r = int(np.sum(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    RS = (VP.conj().T @ pinv(P, rel_tol) @ Q @ VP)[:r, :]
    R, Sb = RS[:, :r], RS[:, r:]
    R = 0.5 * (R - R.conj().T)
    Dt = np.zeros((c, c), dtype=complex)
    Dt[:r, :r] = R
    Dt[:r, r:] = Sb
    Dt[r:, :r] = -Sb.conj().T
    Dt[r:, r:] = inner_block(R, Sb)
    Delta = VP @ Dt @ VP.conj().T
    return 0.5 * (Delta - Delta.conj().T)


def _cayley(Delta, scale=1.0):
    c = Delta.shape[0]
    I = np.eye(c)
    M = I - scale * Delta
    if np.linalg.cond(M) > 1e12:
        raise DegenerateDilationError("I - Delta is numerically singular")
    return np.linalg.solve(M.T, (I + scale * Delta).T).T


def _check_gram(F, G, tol_pre):
    FF = F @ F.conj().T
    err = np.linalg.norm(FF - G @ G.conj().T)
    if err > tol_pre * max(1.0, np.linalg.norm(FF)):
        raise InputError(f"dilation precondition FF* = GG* violated (error {err:.3e})")
    return FF


def _algorithm1(F, G, rel_tol):
    Delta = _cayley_solve(F + G, F - G, rel_tol, lambda R, S: np.zeros((S.shape[1],) * 2))
    return _cayley(Delta)


def unitary_dilation(F, G, tol_pre: float = TOL_PRE, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Unitary ``U`` with ``F = G U`` given ``F F* = G G*``.

    Uses the Cayley transform ``U = (I + Delta)(I - Delta)^{-1}`` of a
    skew-Hermitian ``Delta`` solving ``F - G = (F + G) Delta``. The Cayley
    transform cannot produce the eigenvalue -1, so if the first attempt
    leaves a residual the problem is rotated by ``e^{j phi}`` to move the
    spectrum away from -1 and the best attempt is returned.
    """
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    if F.shape != G.shape:
        raise InputError("F and G must have the same shape")
    _check_gram(F, G, tol_pre)
    gnorm = max(np.linalg.norm(G), np.finfo(float).tiny)

    def attempt(phi):
        rot = np.exp(1j * phi)
        U = rot * _algorithm1(F, rot * G, rel_tol)
        return np.linalg.norm(F - G @ U) / gnorm, U

    best = attempt(0.0)
    if best[0] <= _RETRY_REL:
        return best[1]
    # rotate the largest eigenphase gap of the first estimate onto -1
    phases = np.sort(np.angle(np.linalg.eigvals(best[1])))
    gaps = np.diff(np.concatenate([phases, phases[:1] + 2 * np.pi]))
    i = int(np.argmax(gaps))
    mid = phases[i] + 0.5 * gaps[i]
    for phi in (mid - np.pi, 0.5 * np.pi, -0.5 * np.pi, np.pi):
        try:
            cand = attempt(phi)
        except DegenerateDilationError:
            continue
        if cand[0] < best[0]:
            best = cand
        if best[0] <= _RETRY_REL:
            break
    return best[1]


def unitary_dilation_band(F, G, theta0: float, tol_pre: float = TOL_PRE,
                          rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Unitary ``U`` with ``F = G U`` and ``U + U* >= 2 cos(theta0) I``.

    Requires ``F F* = G G*`` and ``F G* + G F* >= 2 cos(theta0) F F*``.
    The eigenphases of the result lie in ``[-theta0, theta0]``.
    """
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    if F.shape != G.shape:
        raise InputError("F and G must have the same shape")
    if not 0.0 < theta0 < math.pi:
        raise InputError("theta0 must lie in (0, pi)")
    FF = _check_gram(F, G, tol_pre)
    c0 = math.cos(theta0)
    side = symmetrize(F @ G.conj().T + G @ F.conj().T - 2 * c0 * FF)
    if side.size and np.linalg.eigvalsh(side)[0] < -tol_pre * max(1.0, np.linalg.norm(FF)):
        raise InputError("band precondition FG* + GF* >= 2cos(theta0) FF* violated")
    root_mu = math.sqrt((1 - c0) / (1 + c0))

    def inner(R, S):
        r = R.shape[0]
        return -S.conj().T @ R @ pinv(np.eye(r) + R @ R, rel_tol) @ S

    Delta = _cayley_solve(root_mu * (F + G), F - G, rel_tol, inner)
    return _cayley(Delta, root_mu)


# --- rank-one machinery -------------------------------------------------------

def _blocks(sys: StateSpace):
    n, m = sys.n, sys.m
    R = np.hstack([np.eye(n), np.zeros((n, m))])
    L = np.hstack([sys.A, sys.B])
    CD = np.hstack([sys.C, sys.D])
    return R, L, CD


def _band_unitary(F, G, band: FrequencyBand):
    if band.kind == "full":
        return unitary_dilation(F, G)
    if band.kind == "low":
        return unitary_dilation_band(F, G, band.theta0)
    if band.kind == "high":
        # F = (-G)(-U) with -U confined to [-(pi - t0), pi - t0]
        return -unitary_dilation_band(F, -G, math.pi - band.theta0)
    raise InputError(f"unsupported band {band}")


def rank_one_split(V, sys: StateSpace, band: FrequencyBand = FrequencyBand.full()) -> list:
    """Split a feasible ``V`` into rank-one feasible pieces summing to ``V``.

    Each piece records its input energy ``p``, output energy ``mu`` and the
    frequency ``theta`` of the sinusoid generating it.
    """
    V = symmetrize(V)
    eff, eband, theta_c = effective_problem(sys, band)
    if not np.any(V):
        return []
    S = psd_sqrt(V)
    energy = np.sum(np.abs(S) ** 2, axis=0)
    S = S[:, energy > _ROUNDOFF_REL * energy.max()]
    R, L, CD = _blocks(eff)
    U = _band_unitary(R @ S, L @ S, eband)
    # complex Schur form of a normal matrix: orthonormal eigenvectors
    T, Z = scipy.linalg.schur(U, output="complex")
    phases = np.angle(np.diag(T))
    n = eff.n
    pieces = []
    for k in range(Z.shape[1]):
        v = S @ Z[:, k]
        Vk = np.outer(v, v.conj())
        w = v[n:]
        z = CD @ v
        # F u = e^{j phi} G u reads x = e^{j phi} (A x + B w): frequency -phi
        theta = math.remainder(theta_c - phases[k], 2 * math.pi)
        pieces.append(RankOnePiece(Vk, float(np.vdot(w, w).real), float(np.vdot(z, z).real), theta))
    return pieces


def _piece_residual(piece: RankOnePiece, sys: StateSpace) -> float:
    """Relative violation of ``[I 0] V [I 0]* = [A B] V [A B]*`` for one piece."""
    R, L, _ = _blocks(sys)
    Vk = piece.V
    diff = R @ Vk @ R.conj().T - L @ Vk @ L.conj().T
    return float(np.linalg.norm(diff) / max(np.trace(Vk).real, np.finfo(float).tiny))


def select_best(pieces, sys: StateSpace, eps_p: float = EPS_P, tol: float = TOL_CERT) -> np.ndarray:
    """Rescale the piece maximizing ``mu / p`` to unit input energy.

    Only pieces with ``p > eps_p`` are eligible. Pieces whose own constraint
    residual exceeds ``tol`` (numerical debris from near-null directions of
    ``V``) are skipped unless no clean piece remains.
    """
    usable = [pc for pc in pieces if pc.p > eps_p]
    if not usable:
        raise DegenerateCertificateError("no piece carries input energy above eps_p")
    clean = [pc for pc in usable if _piece_residual(pc, sys) <= tol]
    pool = clean or usable
    best = max(pool, key=lambda pc: pc.mu / pc.p)
    return best.V / best.p


def extract_input(V_hat, sys: StateSpace, band: FrequencyBand = FrequencyBand.full(),
                  tol: float = TOL_CERT) -> RankOneCertificate:
    """Read the worst-case sinusoid off a rank-one optimal ``V_hat``.

    The frequency is the phase of ``<x, A x + B w>``, which equals the
    common phase of ``A x + B w = e^{j theta} x``. When ``x`` vanishes
    (pure feedthrough) every frequency is optimal and the band's center is
    returned (0 for the full band).
    """
    V_hat = symmetrize(V_hat)
    if numerical_rank(V_hat) != 1:
        raise InputError(f"V_hat must have numerical rank 1, got {numerical_rank(V_hat)}")
    n = sys.n
    lam, vecs = np.linalg.eigh(V_hat)
    v = vecs[:, -1] * math.sqrt(max(lam[-1], 0.0))
    x, w = v[:n], v[n:]
    wn = np.linalg.norm(w)
    if wn <= 0:
        raise DegenerateCertificateError("rank-one solution has no input component")
    # fix the global phase: largest input entry real positive
    i = int(np.argmax(np.abs(w)))
    v = v * (abs(w[i]) / w[i]) / wn
    x, w = v[:n], v[n:]
    y = sys.A @ x + sys.B @ w
    xn = np.linalg.norm(x)
    if xn <= 1e-9:
        theta = band.center
    else:
        theta = float(np.angle(np.vdot(x, y)))
    z = sys.C @ x + sys.D @ w
    mu = float(np.vdot(z, z).real)
    cert = RankOneCertificate(x, w, theta, mu)

    res = cert.dynamics_residual(sys)
    if res > tol:
        raise ExtractionError(f"dynamics residual {res:.3e} exceeds {tol:g}")
    p_hat = float(np.trace(V_hat[n:, n:]).real)
    CD = np.hstack([sys.C, sys.D])
    mu_v = float(np.vdot(CD.conj().T @ CD, V_hat).real) / p_hat
    if abs(mu - mu_v) > tol * (1.0 + mu_v):
        raise ExtractionError(f"achieved power {mu:.9g} disagrees with lifted value {mu_v:.9g}")
    return cert


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    norm: float
    certificate: RankOneCertificate
    solution: SolverSolution
    band: FrequencyBand = FrequencyBand.full()
    pieces: Optional[list] = field(default=None, repr=False)

    @property
    def objective(self) -> float:
        return self.solution.objective


def analyze(sys: StateSpace, band: FrequencyBand = FrequencyBand.full(),
            settings: Settings = Settings()) -> AnalysisResult:
    """Band-limited H-infinity norm plus a verified worst-case sinusoid."""
    sys.check_stable()
    problem = build_primal(sys, band)
    sol = raise_for_status(solve(problem, settings), "lifted SDP")
    V = sol.V
    n = sys.n
    pieces = None
    if numerical_rank(V) == 1:
        p = float(np.trace(V[n:, n:]).real)
        if p <= EPS_P:
            raise DegenerateCertificateError("optimal V carries no input energy")
        V_hat = V / p
    else:
        pieces = rank_one_split(V, sys, band)
        V_hat = select_best(pieces, sys)
    cert = extract_input(V_hat, sys, band)
    if band.distance(cert.theta_opt) > BAND_ANGLE_TOL:
        raise ExtractionError(f"frequency {cert.theta_opt:.9g} lies outside band {band}")
    return AnalysisResult(
        norm=math.sqrt(max(sol.objective, 0.0)),
        certificate=cert,
        solution=sol,
        band=band,
        pieces=pieces,
    )
