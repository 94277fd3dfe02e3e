"""Discrete-time LTI systems: representation, frequency response, simulation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .exceptions import InputError, NumericalError, StabilityError

__all__ = [
    "EPS_STAB",
    "StateSpace",
    "FrequencyBand",
    "Sinusoid",
    "spectral_radius",
    "freq_response",
    "gain",
    "shift_middle",
    "simulate",
    "trajectory",
    "is_controllable",
    "random_stable",
    "load_system",
    "system_from_dict",
    "system_to_dict",
]

EPS_STAB = 1e-9
# resolvent condition numbers above this are treated as singular
_COND_MAX = 1e13


def _as_complex_matrix(M, name: str) -> np.ndarray:
    arr = np.array(M, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise InputError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Discrete-time system ``x+ = A x + B w``, ``z = C x + D w``.

    Matrices are stored as read-only ``complex128`` arrays. Scalars are
    promoted to 1x1 matrices, so ``StateSpace(0.5, 1, 1, 0)`` is valid.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in "ABCD":
            object.__setattr__(self, name, _as_complex_matrix(getattr(self, name), name))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise InputError(f"A must be square, got {self.A.shape}")
        m = self.B.shape[1]
        l = self.C.shape[0]
        if self.B.shape != (n, m):
            raise InputError(f"B must be {n}x{m}, got {self.B.shape}")
        if self.C.shape != (l, n):
            raise InputError(f"C must be {l}x{n}, got {self.C.shape}")
        if self.D.shape != (l, m):
            raise InputError(f"D must be {l}x{m}, got {self.D.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def l(self) -> int:
        return self.C.shape[0]

    @property
    def spectral_radius(self) -> float:
        return spectral_radius(self.A)

    def is_stable(self, eps: float = EPS_STAB) -> bool:
        return self.spectral_radius < 1.0 - eps

    def check_stable(self, eps: float = EPS_STAB) -> None:
        """Raise :class:`StabilityError` unless ``rho(A) < 1 - eps``."""
        rho = self.spectral_radius
        if not rho < 1.0 - eps:
            raise StabilityError(
                f"system is not Schur stable: spectral radius {rho:.12g} >= 1 - {eps:g}"
            )

    def __eq__(self, other):
        if not isinstance(other, StateSpace):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in "ABCD")

    __hash__ = None  # arrays are not hashable

    def __repr__(self):
        return f"StateSpace(n={self.n}, m={self.m}, l={self.l})"


@dataclass(frozen=True)
class FrequencyBand:
    """Spectral restriction on the input frequency.

    Use the constructors :meth:`full`, :meth:`low`, :meth:`high` and
    :meth:`middle` rather than the raw initializer.

    ``low(t0)`` admits ``[-t0, t0]``, ``high(t0)`` admits
    ``[-pi, -t0] U [t0, pi]`` and ``middle(t1, t2)`` admits ``[t1, t2]``.
    A middle band of width ``2*pi`` is the full band.
    """

    kind: str = "full"
    theta0: Optional[float] = None
    theta1: Optional[float] = None
    theta2: Optional[float] = None

    def __post_init__(self):
        if self.kind == "full":
            return
        if self.kind in ("low", "high"):
            t0 = self.theta0
            if t0 is None or not (0.0 < t0 < math.pi):
                raise InputError(f"{self.kind} band needs 0 < theta0 < pi, got {t0}")
            return
        if self.kind == "middle":
            t1, t2 = self.theta1, self.theta2
            if t1 is None or t2 is None or not (-math.pi <= t1 < t2 <= math.pi):
                raise InputError(f"middle band needs -pi <= theta1 < theta2 <= pi, got {t1}, {t2}")
            return
        raise InputError(f"unknown band kind {self.kind!r}")

    @classmethod
    def full(cls) -> "FrequencyBand":
        return cls("full")

    @classmethod
    def low(cls, theta0: float) -> "FrequencyBand":
        return cls("low", theta0=float(theta0))

    @classmethod
    def high(cls, theta0: float) -> "FrequencyBand":
        return cls("high", theta0=float(theta0))

    @classmethod
    def middle(cls, theta1: float, theta2: float) -> "FrequencyBand":
        theta1, theta2 = float(theta1), float(theta2)
        if -math.pi <= theta1 and theta2 <= math.pi and theta2 - theta1 >= 2 * math.pi:
            return cls("full")
        return cls("middle", theta1=theta1, theta2=theta2)

    @property
    def center(self) -> float:
        """A representative frequency inside the band."""
        if self.kind == "high":
            return math.pi
        if self.kind == "middle":
            return 0.5 * (self.theta1 + self.theta2)
        return 0.0

    def segments(self) -> list[tuple[float, float]]:
        """Closed frequency intervals making up the band."""
        if self.kind == "full":
            return [(-math.pi, math.pi)]
        if self.kind == "low":
            return [(-self.theta0, self.theta0)]
        if self.kind == "high":
            return [(-math.pi, -self.theta0), (self.theta0, math.pi)]
        return [(self.theta1, self.theta2)]

    def distance(self, theta: float) -> float:
        """Angular distance from ``theta`` to the band (0 when inside)."""
        t = math.remainder(theta, 2 * math.pi)
        best = math.inf
        for a, b in self.segments():
            for shift in (-2 * math.pi, 0.0, 2 * math.pi):
                u = t + shift
                d = 0.0 if a <= u <= b else min(abs(u - a), abs(u - b))
                best = min(best, d)
        return best

    def contains(self, theta: float, tol: float = 0.0) -> bool:
        return self.distance(theta) <= tol

    def __str__(self):
        if self.kind == "full":
            return "full"
        if self.kind in ("low", "high"):
            return f"{self.kind}({self.theta0:.9g})"
        return f"middle({self.theta1:.9g}, {self.theta2:.9g})"


@dataclass(frozen=True)
class Sinusoid:
    """Input ``w_k = exp(j*theta*k) * w_s``."""

    w_s: np.ndarray
    theta: float
    allow_zero: bool = field(default=False, repr=False)

    def __post_init__(self):
        w = np.array(self.w_s, dtype=complex).reshape(-1)
        w.setflags(write=False)
        object.__setattr__(self, "w_s", w)
        object.__setattr__(self, "theta", float(self.theta))
        if not self.allow_zero and not np.any(w):
            raise InputError("sinusoid direction w_s must be nonzero")


def spectral_radius(A) -> float:
    """Largest eigenvalue modulus of a square matrix."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise InputError(f"spectral_radius needs a square matrix, got {A.shape}")
    if A.size == 0:
        return 0.0
    try:
        eigs = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from exc
    return float(np.max(np.abs(eigs)))


def freq_response(sys: StateSpace, theta) -> np.ndarray:
    """Transfer matrix ``C (e^{j theta} I - A)^{-1} B + D``.

    ``theta`` may be a scalar (returns ``l x m``) or a 1-D array of
    frequencies (returns ``len(theta) x l x m``).
    """
    thetas = np.asarray(theta, dtype=float)
    scalar = thetas.ndim == 0
    thetas = np.atleast_1d(thetas)
    n = sys.n
    z = np.exp(1j * thetas)
    if n == 0:
        H = np.broadcast_to(sys.D, (len(thetas),) + sys.D.shape).copy()
    else:
        resolvent = z[:, None, None] * np.eye(n) - sys.A
        cond = np.linalg.cond(resolvent)
        if not np.all(np.isfinite(cond)) or np.max(cond) > _COND_MAX:
            raise NumericalError(
                "resolvent (e^{j theta} I - A) is numerically singular; is the system stable?"
            )
        X = np.linalg.solve(resolvent, np.broadcast_to(sys.B, (len(thetas),) + sys.B.shape))
        H = sys.C @ X + sys.D
    return H[0] if scalar else H


def gain(sys: StateSpace, theta):
    """Largest singular value of the frequency response at ``theta``."""
    H = freq_response(sys, theta)
    if H.ndim == 2:
        return float(np.linalg.norm(H, 2)) if H.size else 0.0
    if H.shape[1] == 0 or H.shape[2] == 0:
        return np.zeros(H.shape[0])
    return np.linalg.svd(H, compute_uv=False)[:, 0]


def shift_middle(sys: StateSpace, theta1: float, theta2: float):
    """Modulate the system so that the band ``[theta1, theta2]`` becomes
    ``[-theta0, theta0]``.

    With ``w_k = e^{j theta_c k} w~_k`` and ``x_k = e^{j theta_c k} x~_k``
    the modulated system is ``(e^{-j theta_c} A, e^{-j theta_c} B, C, D)``
    and its response satisfies ``H~(theta) = H(theta + theta_c)``.

    Returns
    -------
    shifted : StateSpace
    theta0 : float
        Half width of the band.
    theta_c : float
        Band center.
    """
    if not theta1 < theta2:
        raise InputError(f"need theta1 < theta2, got {theta1}, {theta2}")
    theta_c = 0.5 * (theta1 + theta2)
    theta0 = 0.5 * (theta2 - theta1)
    rot = np.exp(-1j * theta_c)
    shifted = StateSpace(rot * sys.A, rot * sys.B, sys.C, sys.D)
    return shifted, theta0, theta_c


def trajectory(sys: StateSpace, inp: Sinusoid, N: int):
    """Input and output samples ``(w, z)`` for ``k = 0..N-1`` from ``x_0 = 0``.

    Returns arrays of shape ``(N, m)`` and ``(N, l)``.
    """
    N = int(N)
    if N < 1:
        raise InputError("N must be at least 1")
    w_s = inp.w_s
    if w_s.shape != (sys.m,):
        raise InputError(f"input direction must have length {sys.m}")
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    Bw = B @ w_s
    Dw = D @ w_s
    x = np.zeros(sys.n, dtype=complex)
    phase = np.exp(1j * inp.theta * np.arange(N))
    z = np.empty((N, sys.l), dtype=complex)
    for k in range(N):
        p = phase[k]
        z[k] = C @ x + p * Dw
        x = A @ x + p * Bw
    return phase[:, None] * w_s, z


def simulate(sys: StateSpace, inp: Sinusoid, N: int) -> np.ndarray:
    """Running output power of the response to a sinusoid from ``x_0 = 0``.

    Returns the array ``P`` with ``P[N-1] = (1/N) sum_{k<N} |z_k|^2``.
    """
    _, z = trajectory(sys, inp, N)
    energy = np.sum(np.abs(z) ** 2, axis=1)
    return np.cumsum(energy) / np.arange(1, len(energy) + 1)


def is_controllable(sys: StateSpace, tol: float = 1e-9, freqs=None) -> bool:
    """PBH test: ``[A - lambda I, B]`` has full row rank.

    The rank is checked at every eigenvalue of ``A`` plus any extra
    ``freqs`` (points ``e^{j theta}`` on the unit circle).
    """
    n = sys.n
    if n == 0:
        return True
    points = list(np.linalg.eigvals(sys.A))
    if freqs is not None:
        points += list(np.exp(1j * np.asarray(freqs, dtype=float)))
    scale = max(1.0, np.linalg.norm(sys.A, 2), np.linalg.norm(sys.B, 2))
    for lam in points:
        M = np.hstack([sys.A - lam * np.eye(n), sys.B])
        smin = np.linalg.svd(M, compute_uv=False)[n - 1]
        if smin <= tol * scale:
            return False
    return True


def random_stable(
    n: int,
    m: int,
    l: int,
    rho: Optional[float] = None,
    complex_entries: bool = True,
    rng: Union[None, int, np.random.Generator] = None,
) -> StateSpace:
    """Random system with prescribed spectral radius.

    ``A`` is a Gaussian matrix rescaled so that its spectral radius equals
    ``rho`` (drawn uniformly from ``[0.3, 0.95]`` when omitted).
    """
    rng = np.random.default_rng(rng)

    def draw(*shape):
        M = rng.standard_normal(shape)
        if complex_entries:
            M = M + 1j * rng.standard_normal(shape)
        return M

    if rho is None:
        rho = rng.uniform(0.3, 0.95)
    A = draw(n, n)
    r = spectral_radius(A)
    if r > 0:
        A = A * (rho / r)
    return StateSpace(A, draw(n, m), draw(l, n), draw(l, m))


# --- JSON system files -------------------------------------------------------

def _parse_entry(v, where):
    if isinstance(v, bool):
        raise InputError(f"{where}: booleans are not numbers")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(t, (int, float)) and not isinstance(t, bool) for t in v
    ):
        return complex(v[0], v[1])
    raise InputError(f"{where}: entry must be a number or [re, im], got {v!r}")


def _parse_matrix(obj, name) -> np.ndarray:
    if isinstance(obj, (int, float, bool)):
        return np.array([[_parse_entry(obj, name)]])
    if not isinstance(obj, list):
        raise InputError(f"{name}: expected a nested array")
    if len(obj) == 0:
        return np.zeros((0, 0), dtype=complex)
    if not all(isinstance(row, list) for row in obj):
        raise InputError(f"{name}: expected a list of rows")
    width = len(obj[0])
    rows = []
    for i, row in enumerate(obj):
        if len(row) != width:
            raise InputError(f"{name}: ragged rows")
        rows.append([_parse_entry(v, f"{name}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex).reshape(len(obj), width)


def system_from_dict(data: dict) -> StateSpace:
    """Build a :class:`StateSpace` from the JSON object layout.

    Keys ``"A"``, ``"B"``, ``"C"``, ``"D"`` hold nested arrays whose entries
    are plain numbers or ``[re, im]`` pairs. A bare number is accepted as
    a 1x1 matrix.
    """
    if not isinstance(data, dict):
        raise InputError("system file must contain a JSON object")
    missing = [k for k in "ABCD" if k not in data]
    if missing:
        raise InputError(f"system file is missing keys: {', '.join(missing)}")
    mats = {k: _parse_matrix(data[k], k) for k in "ABCD"}
    # empty state dimension: B is n x m with n = 0 etc.
    n = mats["A"].shape[0]
    if n == 0:
        m = mats["D"].shape[1]
        l = mats["D"].shape[0]
        mats["A"] = np.zeros((0, 0))
        mats["B"] = np.zeros((0, m))
        mats["C"] = np.zeros((l, 0))
    return StateSpace(**mats)


def _encode(z: complex):
    return z.real if z.imag == 0 else [z.real, z.imag]


def system_to_dict(sys: StateSpace) -> dict:
    return {k: [[_encode(complex(v)) for v in row] for row in getattr(sys, k)] for k in "ABCD"}


def load_system(path: Union[str, Path]) -> StateSpace:
    """Read a system from a JSON file (see :func:`system_from_dict`)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    return system_from_dict(data)
