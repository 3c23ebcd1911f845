import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from cnrange.linalg import (
    DimensionError,
    DomainError,
    SizeError,
    as_square,
    c_spectrum,
    check_unitary,
    commutator,
    devectorize,
    expm_skew,
    expm_skew_delta,
    fro_norm,
    haar_random_unitary,
    hs_inner,
    is_skew,
    polar_reproject,
    sort_complex,
    split_skew_herm,
    unitarity_defect,
    vectorize,
)

from conftest import random_complex, random_skew

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


@given(seeds, dims)
def test_hs_inner_is_conjugate_symmetric_and_induces_frobenius(seed, N):
    rng = np.random.default_rng(seed)
    A, B = random_complex(rng, N), random_complex(rng, N)
    assert hs_inner(A, B) == pytest.approx(np.conj(hs_inner(B, A)), abs=1e-12)
    assert hs_inner(A, A).real == pytest.approx(fro_norm(A) ** 2, rel=1e-12)
    assert hs_inner(A, B) == pytest.approx(np.trace(A.conj().T @ B), abs=1e-12)


@given(seeds, dims, st.floats(-5, 5))
def test_expm_skew_matches_scipy(seed, N, t):
    G = random_skew(np.random.default_rng(seed), N)
    V = expm_skew(G, t)
    assert np.allclose(V, expm(-t * G), atol=1e-12)
    assert unitarity_defect(V) < 1e-12


@given(seeds, dims, st.floats(1e-12, 1.0))
def test_expm_delta_keeps_relative_accuracy(seed, N, t):
    G = random_skew(np.random.default_rng(seed), N)
    V, W = expm_skew_delta(G, t)
    assert np.allclose(V - np.eye(N), W, atol=1e-14)
    # first order: W ~ -tG; the relative error must not blow up for tiny t
    assert fro_norm(W + t * G) <= 2 * (t * fro_norm(G)) ** 2 + 1e-15 * t * fro_norm(G)


def test_expm_skew_rejects_non_skew():
    with pytest.raises(DomainError):
        expm_skew(np.eye(2))


@given(seeds, dims)
def test_split_and_commutator_identities(seed, N):
    rng = np.random.default_rng(seed)
    M = random_complex(rng, N)
    S, H = split_skew_herm(M)
    assert np.allclose(S + H, M)
    assert is_skew(S) and np.allclose(H, H.conj().T)
    A, B = random_complex(rng, N), random_complex(rng, N)
    assert np.allclose(commutator(A, B), -commutator(B, A))
    assert abs(np.trace(commutator(A, B))) < 1e-12 * max(1, fro_norm(A) * fro_norm(B))


@given(seeds, dims)
def test_haar_unitary_is_unitary_and_reproducible(seed, N):
    U = haar_random_unitary(N, seed)
    assert unitarity_defect(U) < 1e-12
    assert np.array_equal(U, haar_random_unitary(N, seed))


def test_haar_first_moment():
    # E |U_11|^2 = 1/N and E U_11 = 0 for the Haar measure
    rng = np.random.default_rng(0)
    N, n = 4, 4000
    u = np.array([haar_random_unitary(N, rng)[0, 0] for _ in range(n)])
    assert np.mean(np.abs(u) ** 2) == pytest.approx(1 / N, abs=5 / math.sqrt(n) / N)
    assert abs(np.mean(u)) < 5 / math.sqrt(n * N)


def test_check_unitary_and_polar():
    rng = np.random.default_rng(3)
    U = haar_random_unitary(3, rng)
    check_unitary(U)
    with pytest.raises(DomainError):
        check_unitary(1.01 * U)
    assert unitarity_defect(polar_reproject(U + 1e-6 * random_complex(rng, 3))) < 1e-13


def test_shape_validation():
    with pytest.raises(DimensionError):
        as_square(np.zeros((2, 3)))
    with pytest.raises(DimensionError):
        as_square(np.eye(2), 3)
    with pytest.raises(DomainError):
        as_square([[np.nan, 0], [0, 1]])
    with pytest.raises(DimensionError):
        hs_inner(np.eye(2), np.eye(3))


@given(seeds, st.integers(1, 5))
def test_c_spectrum_matches_permutation_enumeration(seed, N):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    c = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    V = haar_random_unitary(N, rng)
    A = V @ np.diag(a) @ V.conj().T
    pts = c_spectrum(np.diag(c), A)
    ref = [sum(np.conj(c[i]) * a[p[i]] for i in range(N)) for p in itertools.permutations(range(N))]
    assert len(pts) == math.factorial(N)
    assert np.allclose(sort_complex(pts), sort_complex(ref), atol=1e-10)


def test_c_spectrum_guard_and_defective_input():
    with pytest.raises(SizeError):
        c_spectrum(np.eye(9), np.eye(9))
    with pytest.raises(DomainError):
        c_spectrum(np.array([[0, 1], [0, 0]]), np.eye(2))


@given(seeds, dims)
def test_vec_identity(seed, N):
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_complex(rng, N) for _ in range(3))
    assert np.allclose(vectorize(X @ Y @ Z), np.kron(Z.T, X) @ vectorize(Y))
    assert np.array_equal(devectorize(vectorize(X)), X)


def test_devectorize_rejects_non_square_length():
    with pytest.raises(DomainError):
        devectorize(np.zeros(5))


def test_sort_complex_orders_by_real_then_imag():
    z = sort_complex([1 + 2j, 1 - 1j, -3 + 0j])
    assert list(z) == [-3 + 0j, 1 - 1j, 1 + 2j]
