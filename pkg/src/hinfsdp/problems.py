"""Lifted SDPs over the state/input covariance and their KYP-type duals.

Primal (maximize over Hermitian ``V`` of size ``n + m``)::

    max  <[C D]*[C D], V>
    s.t. [I 0] V [I 0]* = [A B] V [A B]*
         tr([0 I] V [0 I]*) <= 1
         V >= 0

Band-limited variants add a PSD side constraint on
``[A B] V [I 0]* + [I 0] V [A B]* - 2 cos(theta0) [I 0] V [I 0]*``
(``>= 0`` for low bands, ``<= 0`` for high bands). Middle bands are
handled as low bands on the modulated system from
:func:`hinfsdp.lti.shift_middle`.

The duals are LMIs in a Hermitian ``P`` (plus ``Q >= 0`` for bands) and a
scalar ``lam >= 0``.

Both builders work internally in controllability-Gramian state coordinates
``x = T x~`` (see :func:`state_scaling`), which keeps lightly damped systems
well conditioned for the interior-point solver. All public methods take and
return matrices in the original coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import InputError
from .hermitian import hermitian_basis, symmetrize
from .lti import FrequencyBand, StateSpace, shift_middle

__all__ = [
    "LinearMap",
    "ConicProblem",
    "DualProblem",
    "effective_problem",
    "state_scaling",
    "build_primal",
    "build_dual_kyp",
    "build_dual_gkyp",
    "build_dual",
]


@dataclass(frozen=True)
class LinearMap:
    """Hermitian-preserving map ``V -> sum_t c_t L_t V R_t*``."""

    terms: tuple  # of (coef, L, R)
    out_size: int

    def __call__(self, V) -> np.ndarray:
        out = np.zeros((self.out_size, self.out_size), dtype=complex)
        for c, L, R in self.terms:
            out += c * (L @ V @ R.conj().T)
        return symmetrize(out)

    def adjoint(self, E) -> np.ndarray:
        """Hermitian ``W`` with ``<E, map(V)> = <W, V>`` for Hermitian ``V``."""
        W = sum(c * (R.conj().T @ E @ L) for c, L, R in self.terms)
        return symmetrize(W)


def _selectors(sys: StateSpace):
    n, m = sys.n, sys.m
    R = np.hstack([np.eye(n), np.zeros((n, m))]).astype(complex)
    L = np.hstack([sys.A, sys.B])
    Ew = np.zeros((n + m, n + m), dtype=complex)
    Ew[n:, n:] = np.eye(m)
    CD = np.hstack([sys.C, sys.D])
    return R, L, Ew, CD.conj().T @ CD


def effective_problem(sys: StateSpace, band: FrequencyBand):
    """Reduce a band to full/low/high on a possibly modulated system.

    Returns ``(system, band, theta_c)``; certificate frequencies computed on
    the returned system must be shifted by ``+theta_c``.
    """
    if band.kind == "middle":
        shifted, theta0, theta_c = shift_middle(sys, band.theta1, band.theta2)
        return shifted, FrequencyBand.low(theta0), theta_c
    return sys, band, 0.0


def state_scaling(sys: StateSpace, floor: float = 1e-8) -> np.ndarray:
    """Square root ``T`` of the controllability Gramian, ``T T* = W``.

    ``W`` solves ``W = A W A* + B B*``. Eigenvalues below
    ``floor * max eig`` are raised to that level so ``T`` is invertible;
    a zero Gramian (``B = 0``) yields the identity.
    """
    n = sys.n
    if n == 0:
        return np.eye(0, dtype=complex)
    if not sys.is_stable():
        return np.eye(n, dtype=complex)
    W = scipy.linalg.solve_discrete_lyapunov(sys.A, sys.B @ sys.B.conj().T)
    lam, U = np.linalg.eigh(symmetrize(W))
    top = float(lam[-1])
    if not np.isfinite(top) or top <= 0:
        return np.eye(n, dtype=complex)
    lam = np.maximum(lam, floor * top)
    return U * np.sqrt(lam)


def _rescaled(sys: StateSpace, T: np.ndarray) -> StateSpace:
    Ti = np.linalg.inv(T)
    return StateSpace(Ti @ sys.A @ T, Ti @ sys.B, sys.C @ T, sys.D)


def _congruence(T: np.ndarray, m: int) -> np.ndarray:
    n = T.shape[0]
    out = np.zeros((n + m, n + m), dtype=complex)
    out[:n, :n] = T
    out[n:, n:] = np.eye(m)
    return out


@dataclass(frozen=True, eq=False)
class ConicProblem:
    """Standard-form lifted SDP over one Hermitian PSD variable of size ``k``.

    The coefficient arrays act on the solver variable ``Vs`` which relates to
    the physical covariance by ``V = S Vs S*`` with ``S = congruence``.
    ``<cost, Vs>`` is maximized subject to ``<eq_coeffs[i], Vs> = eq_rhs[i]``,
    ``<ineq_coeffs[j], Vs> <= ineq_rhs[j]`` and ``side_map(Vs) >= 0`` for each
    entry of ``side_maps``.

    The helper methods (:meth:`objective`, :meth:`equality_residuals`,
    :meth:`dynamics_residual`) take the physical ``V``.
    """

    k: int
    cost: np.ndarray
    eq_coeffs: np.ndarray
    eq_rhs: np.ndarray
    ineq_coeffs: np.ndarray
    ineq_rhs: np.ndarray
    side_maps: tuple = ()
    dynamics: Optional[LinearMap] = None
    system: Optional[StateSpace] = None
    band: FrequencyBand = FrequencyBand.full()
    theta_c: float = 0.0
    congruence: Optional[np.ndarray] = None

    def __post_init__(self):
        k = self.k
        for name in ("eq_coeffs", "ineq_coeffs"):
            arr = np.asarray(getattr(self, name), dtype=complex).reshape(-1, k, k)
            if not np.allclose(arr, arr.conj().transpose(0, 2, 1)):
                raise InputError(f"{name} must be Hermitian")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("eq_rhs", "ineq_rhs"):
            arr = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.cost.shape != (k, k):
            raise InputError("cost must be k x k")
        if len(self.eq_rhs) != len(self.eq_coeffs) or len(self.ineq_rhs) != len(self.ineq_coeffs):
            raise InputError("coefficient / right-hand side count mismatch")
        S = np.eye(k, dtype=complex) if self.congruence is None else np.asarray(self.congruence)
        object.__setattr__(self, "congruence", S)

    def from_solver(self, Vs) -> np.ndarray:
        S = self.congruence
        return symmetrize(S @ Vs @ S.conj().T)

    def to_solver(self, V) -> np.ndarray:
        Si = np.linalg.inv(self.congruence)
        return symmetrize(Si @ V @ Si.conj().T)

    def objective(self, V) -> float:
        return float(np.vdot(self.cost, self.to_solver(V)).real)

    def equality_residuals(self, V) -> np.ndarray:
        Vs = self.to_solver(V)
        return np.einsum("iab,ab->i", self.eq_coeffs.conj(), Vs).real - self.eq_rhs

    def dynamics_residual(self, V) -> float:
        """Frobenius norm of ``[I 0] V [I 0]* - [A B] V [A B]*``."""
        if self.dynamics is None:
            return 0.0
        return float(np.linalg.norm(self.dynamics(V)))

    def input_energy(self, V) -> float:
        """``tr`` of the input block of the physical ``V``."""
        n = self.system.n
        return float(np.trace(V[n:, n:]).real)

    def side_values(self, V) -> list:
        """Side-constraint matrices (expected PSD) evaluated at the physical ``V``."""
        Vs = self.to_solver(V)
        return [smap(Vs) for smap in self.side_maps]


@dataclass(frozen=True, eq=False)
class DualProblem:
    """``min lam`` subject to ``F0 + sum_b p_b FP_b + sum_b q_b FQ_b - lam Ew <= 0``.

    The data live in scaled coordinates: the physical multipliers are
    ``P = Ti* Ps Ti`` and ``Q = Ti* Qs Ti`` with ``Ti = inv(T)``, where
    ``Ps = sum_b p_b E_b`` over the Hermitian basis. ``Q >= 0`` and
    ``lam >= 0``; ``FQ`` is empty for the full-band KYP problem.
    """

    F0: np.ndarray
    FP: np.ndarray
    FQ: np.ndarray
    Ew: np.ndarray
    n: int
    system: StateSpace
    band: FrequencyBand = FrequencyBand.full()
    theta_c: float = 0.0
    T: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.T is None:
            object.__setattr__(self, "T", np.eye(self.n, dtype=complex))

    @property
    def has_q(self) -> bool:
        return len(self.FQ) > 0

    def physical(self, Ms) -> np.ndarray:
        """Map a scaled multiplier to physical coordinates."""
        Ti = np.linalg.inv(self.T)
        return symmetrize(Ti.conj().T @ Ms @ Ti)

    def scaled(self, M) -> np.ndarray:
        return symmetrize(self.T.conj().T @ M @ self.T)

    def lmi(self, P, lam, Q=None) -> np.ndarray:
        """Evaluate the LMI expression at physical ``P``, ``Q`` (NSD when feasible).

        The result is expressed in the original coordinates.
        """
        basis = hermitian_basis(self.n)
        p = np.einsum("bij,ij->b", basis.conj(), self.scaled(P)).real
        F = self.F0 + np.tensordot(p, self.FP, 1) - lam * self.Ew
        if self.has_q:
            if Q is None:
                raise InputError("band dual needs Q")
            q = np.einsum("bij,ij->b", basis.conj(), self.scaled(Q)).real
            F = F + np.tensordot(q, self.FQ, 1)
        Si = np.linalg.inv(_congruence(self.T, self.system.m))
        return symmetrize(Si.conj().T @ F @ Si)


def _side_map(sys: StateSpace, band: FrequencyBand) -> LinearMap:
    R, L, _, _ = _selectors(sys)
    c = 2.0 * math.cos(band.theta0)
    sign = 1.0 if band.kind == "low" else -1.0
    terms = ((sign, L, R), (sign, R, L), (-sign * c, R, R))
    return LinearMap(terms, sys.n)


def build_primal(sys: StateSpace, band: FrequencyBand = FrequencyBand.full(),
                 precondition: bool = True) -> ConicProblem:
    """Lifted SDP whose optimal value is the squared (band-limited) H-infinity norm.

    The Hermitian matrix equality is scalarized over the upper triangle of
    the Hermitian basis (``n*n`` real equalities).
    """
    sys.check_stable()
    eff, eband, theta_c = effective_problem(sys, band)
    T = state_scaling(eff) if precondition else np.eye(eff.n, dtype=complex)
    scaled = _rescaled(eff, T)
    R, L, Ew, cost = _selectors(scaled)
    n, k = eff.n, eff.n + eff.m
    scaled_dynamics = LinearMap(((1.0, R, R), (-1.0, L, L)), n)
    basis = hermitian_basis(n)
    eq = np.array([scaled_dynamics.adjoint(E) for E in basis]).reshape(-1, k, k)
    side = () if eband.kind == "full" else (_side_map(scaled, eband),)
    R0, L0, _, _ = _selectors(eff)
    return ConicProblem(
        k=k,
        cost=symmetrize(cost),
        eq_coeffs=eq,
        eq_rhs=np.zeros(len(eq)),
        ineq_coeffs=Ew[None],
        ineq_rhs=np.ones(1),
        side_maps=side,
        dynamics=LinearMap(((1.0, R0, R0), (-1.0, L0, L0)), n),
        system=eff,
        band=eband,
        theta_c=theta_c,
        congruence=_congruence(T, eff.m),
    )


def _kyp_terms(sys: StateSpace):
    R, L, Ew, cost = _selectors(sys)
    basis = hermitian_basis(sys.n)
    k = sys.n + sys.m
    FP = np.array([symmetrize(L.conj().T @ E @ L - R.conj().T @ E @ R) for E in basis])
    return symmetrize(cost), FP.reshape(-1, k, k), Ew


def build_dual_kyp(sys: StateSpace, precondition: bool = True) -> DualProblem:
    """KYP LMI ``[[A*PA - P, A*PB], [B*PA, B*PB]] + [C D]*[C D] - lam diag(0, I) <= 0``."""
    T = state_scaling(sys) if precondition else np.eye(sys.n, dtype=complex)
    F0, FP, Ew = _kyp_terms(_rescaled(sys, T))
    k = sys.n + sys.m
    return DualProblem(
        F0=F0,
        FP=FP,
        FQ=np.zeros((0, k, k), dtype=complex),
        Ew=Ew,
        n=sys.n,
        system=sys,
        T=T,
    )


def build_dual_gkyp(sys: StateSpace, band: FrequencyBand,
                    precondition: bool = True) -> DualProblem:
    """Generalized KYP LMI for low, high or middle bands.

    Low band::

        [A B; I 0]* [[P, Q], [Q, -P - 2cos(t0) Q]] [A B; I 0]
            + [C D]*[C D] <= lam diag(0, I),   Q >= 0.

    High bands replace ``Q`` by ``-Q``; middle bands use the low form on
    the modulated system.
    """
    if band.kind == "full":
        raise InputError("full band: use build_dual_kyp")
    eff, eband, theta_c = effective_problem(sys, band)
    T = state_scaling(eff) if precondition else np.eye(eff.n, dtype=complex)
    scaled = _rescaled(eff, T)
    F0, FP, Ew = _kyp_terms(scaled)
    side = _side_map(scaled, eband)
    k = eff.n + eff.m
    # the Q multiplier pairs with the side constraint, so its term is the adjoint
    FQ = np.array([side.adjoint(E) for E in hermitian_basis(eff.n)]).reshape(-1, k, k)
    return DualProblem(
        F0=F0,
        FP=FP,
        FQ=FQ,
        Ew=Ew,
        n=eff.n,
        system=eff,
        band=eband,
        theta_c=theta_c,
        T=T,
    )


def build_dual(sys: StateSpace, band: FrequencyBand = FrequencyBand.full(),
               precondition: bool = True) -> DualProblem:
    if band.kind == "full":
        return build_dual_kyp(sys, precondition)
    return build_dual_gkyp(sys, band, precondition)
