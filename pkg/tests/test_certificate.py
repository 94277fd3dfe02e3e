import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from hinfsdp import (
    DegenerateCertificateError,
    FrequencyBand,
    InputError,
    RankOnePiece,
    StateSpace,
    analyze,
    extract_input,
    gain,
    random_stable,
    rank_one_split,
    select_best,
    unitary_dilation,
    unitary_dilation_band,
)
from hinfsdp.hermitian import numerical_rank, psd_sqrt

from conftest import sinusoid_covariance, steady_state

seeds = st.integers(0, 2**31)


def random_unitary(rng, c):
    return unitary_group.rvs(c, random_state=rng) if c > 1 else np.exp(1j * rng.uniform(-np.pi, np.pi, (1, 1)))


def check_dilation(F, G, U, tol=1e-8):
    c = U.shape[0]
    assert np.linalg.norm(U.conj().T @ U - np.eye(c)) <= tol
    assert np.linalg.norm(F - G @ U) <= tol * np.linalg.norm(G)


class TestUnitaryDilation:
    def test_identity(self):
        assert np.allclose(unitary_dilation(np.eye(3), np.eye(3)), np.eye(3))

    def test_scalar_phase(self):
        assert np.allclose(unitary_dilation([[1j]], [[1.0]]), [[1j]])

    def test_eigenvalue_minus_one(self):
        # the Cayley transform cannot produce -1 directly
        G = np.array([[1.0, 2.0], [0.5, -1j]])
        U0 = np.diag([-1.0, 1j])
        U = unitary_dilation(G @ U0, G)
        check_dilation(G @ U0, G, U)
        assert np.allclose(U, U0)

    def test_precondition(self):
        with pytest.raises(InputError):
            unitary_dilation([[2.0]], [[1.0]])
        with pytest.raises(InputError):
            unitary_dilation(np.eye(2), np.eye(3))

    @settings(max_examples=60, deadline=None)
    @given(seed=seeds, c=st.integers(1, 6), r=st.integers(1, 7))
    def test_random(self, seed, c, r):
        rng = np.random.default_rng(seed)
        G = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
        F = G @ random_unitary(rng, c)
        check_dilation(F, G, unitary_dilation(F, G))

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_scalar_unique(self, seed):
        rng = np.random.default_rng(seed)
        g = complex(rng.normal(), rng.normal())
        f = g * np.exp(1j * rng.uniform(-np.pi, np.pi))
        assert unitary_dilation([[f]], [[g]])[0, 0] == pytest.approx(f / g, abs=1e-10)


class TestBandDilation:
    def test_identity(self):
        for t0 in (0.1, 1.0, 3.0):
            assert np.allclose(unitary_dilation_band(np.eye(2), np.eye(2), t0), np.eye(2))

    @pytest.mark.parametrize("phi, t0", [(0.3, 0.5), (-0.5, 0.5), (2.0, 2.5), (-3.0, 3.1)])
    def test_scalar(self, phi, t0):
        U = unitary_dilation_band([[np.exp(1j * phi)]], [[1.0]], t0)
        assert U[0, 0] == pytest.approx(np.exp(1j * phi), abs=1e-12)

    def test_out_of_band_rejected(self):
        with pytest.raises(InputError):
            unitary_dilation_band([[np.exp(1j * 1.0)]], [[1.0]], 0.5)
        with pytest.raises(InputError):
            unitary_dilation_band([[1.0]], [[1.0]], math.pi)

    @settings(max_examples=60, deadline=None)
    @given(seed=seeds, c=st.integers(1, 6), r=st.integers(1, 7), t0=st.floats(0.05, 3.1))
    def test_random(self, seed, c, r, t0):
        rng = np.random.default_rng(seed)
        Q = random_unitary(rng, c)
        U0 = Q @ np.diag(np.exp(1j * rng.uniform(-t0, t0, c))) @ Q.conj().T
        G = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
        F = G @ U0
        U = unitary_dilation_band(F, G, t0)
        check_dilation(F, G, U)
        assert np.linalg.eigvalsh(U + U.conj().T - 2 * math.cos(t0) * np.eye(c))[0] >= -1e-8


def two_tone(sys, thetas, weights, rng):
    V = 0
    for t, a in zip(thetas, weights):
        w = rng.normal(size=sys.m) + 1j * rng.normal(size=sys.m)
        w /= np.linalg.norm(w)
        V = V + a * sinusoid_covariance(sys, t, w)
    return V


class TestRankOneSplit:
    def test_zero(self, scalar05):
        assert rank_one_split(np.zeros((2, 2)), scalar05) == []

    def test_rank_one(self):
        s = random_stable(2, 1, 1, rng=np.random.default_rng(0))
        V = sinusoid_covariance(s, 0.7, [1.0])
        pieces = rank_one_split(V, s)
        big = [p for p in pieces if np.linalg.norm(p.V) > 1e-8 * np.linalg.norm(V)]
        assert len(big) == 1
        assert np.allclose(big[0].V, V)
        assert big[0].theta == pytest.approx(0.7)

    def test_recovers_two_tones(self):
        # with n >= 2 the dilation is unique on the range and tones separate
        rng = np.random.default_rng(1)
        s = random_stable(3, 1, 2, rng=rng)
        V = two_tone(s, (0.4, -1.9), (0.6, 0.4), rng)
        pieces = rank_one_split(V, s)
        thetas = sorted(p.theta for p in pieces if p.p > 1e-8)
        assert thetas == pytest.approx([-1.9, 0.4], abs=1e-8)

    @pytest.mark.parametrize(
        "band, thetas",
        [
            (FrequencyBand.low(1.0), (0.9, -0.2)),
            (FrequencyBand.high(2.0), (2.5, -2.9)),
            (FrequencyBand.middle(0.5, 2.0), (0.6, 1.8)),
        ],
    )
    def test_band_pieces_stay_in_band(self, band, thetas):
        rng = np.random.default_rng(2)
        s = random_stable(3, 2, 2, rng=rng)
        V = two_tone(s, thetas, (0.5, 0.5), rng)
        pieces = rank_one_split(V, s, band)
        assert np.linalg.norm(sum(p.V for p in pieces) - V) <= 1e-8 * np.linalg.norm(V)
        for p in pieces:
            assert band.contains(p.theta, 1e-8)

    @settings(max_examples=25, deadline=None)
    @given(seed=seeds, k=st.integers(1, 4))
    def test_conservation(self, seed, k):
        rng = np.random.default_rng(seed)
        s = random_stable(int(rng.integers(1, 5)), int(rng.integers(1, 3)), 2, rng=rng)
        V = two_tone(s, rng.uniform(-np.pi, np.pi, k), rng.uniform(0.1, 1, k), rng)
        pieces = rank_one_split(V, s)
        n = s.n
        CD = np.hstack([s.C, s.D])
        assert np.linalg.norm(sum(p.V for p in pieces) - V) <= 1e-8 * np.linalg.norm(V)
        assert sum(p.p for p in pieces) == pytest.approx(np.trace(V[n:, n:]).real, rel=1e-8)
        cost = np.vdot(CD.conj().T @ CD, V).real
        assert sum(p.mu for p in pieces) == pytest.approx(cost, rel=1e-8, abs=1e-14)
        for p in pieces:
            assert numerical_rank(p.V) == 1 and p.p >= 0 and p.mu >= 0
            x, w = psd_sqrt(p.V)[:n, -1], psd_sqrt(p.V)[n:, -1]
            if np.linalg.norm(p.V) > 1e-8:
                assert p.p > 1e-10
            # each piece is generated by its own sinusoid
            r = np.exp(1j * p.theta) * x - (s.A @ x + s.B @ w)
            assert np.linalg.norm(r) <= 1e-7 * (np.linalg.norm(x) + np.linalg.norm(w))


class TestSelectBest:
    def test_scaling(self, scalar05):
        V1 = sinusoid_covariance(scalar05, 0.0, [np.sqrt(0.5)])
        out = select_best([RankOnePiece(V1, 0.5, 2.0)], scalar05)
        assert np.allclose(out, 2 * V1)

    def test_ratio(self, scalar05):
        a = sinusoid_covariance(scalar05, 0.0, [np.sqrt(0.5)])
        b = sinusoid_covariance(scalar05, 1.0, [np.sqrt(0.5)])
        out = select_best([RankOnePiece(b, 0.5, 1.0), RankOnePiece(a, 0.5, 2.0)], scalar05)
        assert np.allclose(out, 2 * a)

    def test_degenerate(self, scalar05):
        with pytest.raises(DegenerateCertificateError):
            select_best([RankOnePiece(np.zeros((2, 2)), 0.0, 0.0)], scalar05)
        with pytest.raises(DegenerateCertificateError):
            select_best([], scalar05)


class TestExtractInput:
    def test_first_order(self, scalar05):
        V = sinusoid_covariance(scalar05, 0.0, [1.0])
        c = extract_input(V, scalar05)
        assert c.theta_opt == pytest.approx(0.0, abs=1e-12)
        assert c.mu_opt == pytest.approx(4.0)
        assert c.x_opt[0] == pytest.approx(2 * c.w_opt[0])
        assert np.linalg.norm(c.w_opt) == pytest.approx(1.0)

    def test_feedthrough_convention(self, example1):
        V = np.diag([0.0, 1.0]).astype(complex)
        c = extract_input(V, example1)
        assert c.theta_opt == 0.0
        assert c.mu_opt == pytest.approx(1.0)
        assert np.allclose(c.x_opt, 0)
        assert extract_input(V, example1, FrequencyBand.high(1.0)).theta_opt == pytest.approx(math.pi)

    def test_rank_check(self, scalar05):
        with pytest.raises(InputError):
            extract_input(np.eye(2), scalar05)

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, theta=st.floats(-3.1, 3.1))
    def test_forward_construction(self, seed, theta):
        rng = np.random.default_rng(seed)
        s = random_stable(3, 2, 2, rng=rng)
        w = rng.normal(size=2) + 1j * rng.normal(size=2)
        v = np.concatenate([steady_state(s, theta, w), w]) * np.exp(1j * rng.uniform(0, 6))
        c = extract_input(np.outer(v, v.conj()) / np.vdot(w, w).real, s)
        assert c.theta_opt == pytest.approx(theta, abs=1e-8)
        assert c.dynamics_residual(s) <= 1e-6
        H = s.C @ steady_state(s, theta, c.w_opt) + s.D @ c.w_opt
        assert c.mu_opt == pytest.approx(np.vdot(H, H).real, rel=1e-8)


class TestAnalyze:
    def test_example1(self, example1):
        r = analyze(example1)
        assert r.norm == pytest.approx(1.0, abs=1e-6)
        assert r.certificate.mu_opt == pytest.approx(1.0, abs=1e-6)

    def test_first_order(self, scalar05):
        r = analyze(scalar05)
        assert r.norm == pytest.approx(2.0, abs=1e-6)
        assert r.certificate.theta_opt == pytest.approx(0.0, abs=1e-6)

    def test_first_order_high(self, scalar05):
        r = analyze(scalar05, FrequencyBand.high(math.pi / 2))
        assert r.norm == pytest.approx(math.sqrt(0.8), abs=1e-6)
        # real system: the peak is attained at both +pi/2 and -pi/2
        assert abs(r.certificate.theta_opt) == pytest.approx(math.pi / 2, abs=1e-4)

    def test_middle_certificate_in_original_coordinates(self):
        s = random_stable(3, 2, 2, rng=np.random.default_rng(21))
        band = FrequencyBand.middle(0.4, 1.7)
        r = analyze(s, band)
        c = r.certificate
        assert band.contains(c.theta_opt, 1e-4)
        assert c.dynamics_residual(s) <= 1e-6
        assert gain(s, c.theta_opt) ** 2 == pytest.approx(c.mu_opt, rel=1e-5)

    def test_zero_system(self):
        r = analyze(StateSpace(0.5, 1, 0, 0))
        assert r.norm == pytest.approx(0.0, abs=1e-6)

    def test_selection_bound(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            s = random_stable(int(rng.integers(2, 6)), 2, 2, rng=rng)
            r = analyze(s)
            n = s.n
            CD = np.hstack([s.C, s.D])
            if r.pieces is not None:
                V_hat = select_best(r.pieces, s)
                assert np.vdot(CD.conj().T @ CD, V_hat).real >= r.solution.objective - 1e-6
            assert r.certificate.mu_opt >= r.solution.objective - 1e-6 * (1 + r.solution.objective)
