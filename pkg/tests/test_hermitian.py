import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hinfsdp import NotPSDError
from hinfsdp.hermitian import (
    embed_real,
    hermitian_basis,
    inner,
    numerical_rank,
    pinv,
    psd_sqrt,
    symmetrize,
    unembed_real,
)


def rand_herm(rng, k):
    M = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    return symmetrize(M)


seeds = st.integers(0, 2**31)


class TestSymmetrize:
    def test_examples(self):
        H = np.array([[2, 1 - 1j], [1 + 1j, 3]])
        assert np.array_equal(symmetrize(H), H)
        assert np.array_equal(symmetrize([[0, 1], [0, 0]]), [[0, 0.5], [0.5, 0]])
        assert np.array_equal(symmetrize([[1j]]), [[0]])

    def test_nonsquare(self):
        with pytest.raises(ValueError):
            symmetrize(np.ones((2, 3)))


class TestPsdSqrt:
    def test_identity(self):
        S = psd_sqrt(np.eye(3))
        assert np.allclose(S @ S.conj().T, np.eye(3))

    def test_scalar(self):
        assert np.allclose(psd_sqrt([[4.0]]), [[2.0]])

    def test_rank_one(self):
        v = np.array([1, 1j])
        H = np.outer(v, v.conj())
        S = psd_sqrt(H)
        assert np.linalg.norm(S @ S.conj().T - H) < 1e-12
        assert numerical_rank(S) == 1

    def test_clipping_window(self):
        H = np.diag([1.0, -1e-9])
        S = psd_sqrt(H)
        assert np.allclose(S @ S.conj().T, np.diag([1.0, 0.0]))
        with pytest.raises(NotPSDError):
            psd_sqrt(np.diag([1.0, -1e-3]))

    @settings(max_examples=40, deadline=None)
    @given(seed=seeds, k=st.integers(1, 6))
    def test_reconstruction(self, seed, k):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        H = M @ M.conj().T
        S = psd_sqrt(H)
        tol = 1e-7 * np.linalg.norm(H, 2)
        assert np.linalg.norm(S @ S.conj().T - H) <= 10 * tol * np.linalg.norm(H) + 1e-12


class TestEmbedding:
    def test_real_is_block_diagonal(self):
        H = np.array([[1.0, 2.0], [2.0, 5.0]])
        E = embed_real(H)
        assert np.array_equal(E, np.block([[H, np.zeros((2, 2))], [np.zeros((2, 2)), H]]))

    def test_eigenvalues_doubled(self):
        E = embed_real([[1, 1j], [-1j, 1]])
        assert np.allclose(np.linalg.eigvalsh(E), [0, 0, 2, 2])

    def test_trace(self):
        assert np.trace(embed_real([[3.0]])) == 6.0

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_homomorphism(self, seed):
        rng = np.random.default_rng(seed)
        H1, H2 = rand_herm(rng, 3), rand_herm(rng, 3)
        assert np.allclose(embed_real(H1 @ H2), embed_real(H1) @ embed_real(H2), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds, k=st.integers(1, 5))
    def test_unembed_inverts_and_preserves_inner(self, seed, k):
        rng = np.random.default_rng(seed)
        H, E = rand_herm(rng, k), rand_herm(rng, k)
        assert np.allclose(unembed_real(embed_real(H)), H)
        # any real symmetric X, not only embedded ones
        X = rng.normal(size=(2 * k, 2 * k))
        X = X + X.T
        assert inner(E, unembed_real(X)) == pytest.approx(0.5 * np.sum(embed_real(E) * X))

    def test_unembed_preserves_psd(self):
        rng = np.random.default_rng(5)
        M = rng.normal(size=(6, 6))
        V = unembed_real(M @ M.T)
        assert np.linalg.eigvalsh(V)[0] >= -1e-12


class TestRankAndPinv:
    def test_rank_examples(self):
        assert numerical_rank(np.zeros((3, 3))) == 0
        assert numerical_rank(np.diag([1.0, 1e-15])) == 1
        v = np.array([1.0, 2j, -1])
        assert numerical_rank(np.outer(v, v.conj())) == 1

    def test_pinv_examples(self):
        assert np.allclose(pinv(np.eye(3)), np.eye(3))
        assert np.allclose(pinv([[2.0]]), [[0.5]])
        assert np.array_equal(pinv(np.zeros((2, 3))), np.zeros((3, 2)))

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_penrose(self, seed):
        rng = np.random.default_rng(seed)
        M = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
        assert np.linalg.norm(M @ pinv(M) @ M - M) < 1e-10


def test_hermitian_basis_orthonormal():
    B = hermitian_basis(3)
    assert B.shape == (9, 3, 3)
    G = np.einsum("aij,bij->ab", B.conj(), B).real
    assert np.allclose(G, np.eye(9))
    assert all(np.allclose(b, b.conj().T) for b in B)
