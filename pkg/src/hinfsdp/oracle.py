"""Independent frequency-sweep reference for the band-limited norm.

Nothing here touches the SDP code path: the norm is the maximum of
``sigma_max(H(e^{j theta}))`` over a uniform grid on the band, refined by
a bounded scalar search (Brent) around the best grid points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import InputError
from .lti import FrequencyBand, StateSpace, freq_response, gain, simulate

__all__ = ["GridResult", "grid_norm", "verify_certificate"]


@dataclass(frozen=True)
class GridResult:
    theta_star: float
    gain_star: float
    n_evaluations: int


def grid_norm(sys: StateSpace, band: FrequencyBand = FrequencyBand.full(),
              grid_points: int = 4096, refine_tol: float = 1e-8, n_refine: int = 5) -> GridResult:
    """Maximize the gain over ``band`` by sweeping then refining.

    Parameters
    ----------
    sys : StateSpace
        Stable system.
    band : FrequencyBand
        Frequency range; the high band is swept as two segments.
    grid_points : int
        Total grid points (at least 64), split across segments by length.
    refine_tol : float
        Absolute tolerance in theta for the refinement.
    n_refine : int
        Number of best local maxima refined.
    """
    if grid_points < 64:
        raise InputError("grid_points must be at least 64")
    sys.check_stable()
    segs = band.segments()
    total = sum(b - a for a, b in segs)
    thetas = []
    for a, b in segs:
        k = max(3, int(round(grid_points * (b - a) / total)))
        thetas.append(np.linspace(a, b, k))
    evals = 0
    best_g, best_t = -1.0, 0.0
    for grid in thetas:
        g = gain(sys, grid)
        evals += grid.size
        i = int(np.argmax(g))
        if g[i] > best_g:
            best_g, best_t = float(g[i]), float(grid[i])
        # interior local maxima plus endpoints
        cand = [j for j in range(1, grid.size - 1) if g[j] >= g[j - 1] and g[j] >= g[j + 1]]
        cand += [0, grid.size - 1]
        cand = sorted(set(cand), key=lambda j: -g[j])[:n_refine]
        step = grid[1] - grid[0]
        for j in cand:
            lo, hi = max(grid[0], grid[j] - step), min(grid[-1], grid[j] + step)
            res = minimize_scalar(lambda t: -float(gain(sys, t)), bounds=(lo, hi),
                                  method="bounded", options={"xatol": refine_tol})
            evals += res.nfev
            if -res.fun > best_g:
                best_g, best_t = float(-res.fun), float(res.x)
    return GridResult(best_t, best_g, evals)


def verify_certificate(sys: StateSpace, cert, N: int = 10_000) -> dict:
    """Simulate the certificate sinusoid from rest and compare output power.

    Returns ``P_N`` (running output power after ``N`` steps) and
    ``relative_error = |P_N - mu_opt| / max(1, mu_opt)``. The gap between
    ``mu_opt`` and ``||H(e^{j theta}) w||^2`` is included as
    ``response_error`` for diagnostics.
    """
    mu = cert.mu_opt
    power = simulate(sys, cert.sinusoid, N)
    P_N = float(power[-1])
    Hw = freq_response(sys, cert.theta_opt) @ cert.w_opt
    hw = float(np.vdot(Hw, Hw).real)
    return {
        "P_N": P_N,
        "relative_error": abs(P_N - mu) / max(1.0, mu),
        "response_error": abs(hw - mu) / max(1.0, mu),
    }
