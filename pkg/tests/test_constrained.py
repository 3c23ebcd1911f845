import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm
from scipy.optimize import minimize

from cnrange.constrained import (
    InvarianceConstraint,
    OrthogonalityConstraint,
    SamplingInfeasible,
    ascend_invariance_lagrange,
    ascend_orthogonality,
    ascend_projected,
    cloud_components,
    min_modulus,
    sample_constrained_range,
    stabilizer_algebra,
    su_basis,
)
from cnrange.flows import FlowConfig
from cnrange.linalg import J_PLUS, DomainError, haar_random_unitary, hs_inner

import oracles
from conftest import random_complex

CFG = FlowConfig(restarts=6)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_su_basis_is_orthonormal_and_skew(N):
    B = su_basis(N)
    assert len(B) == N * N - 1
    gram = np.array([[hs_inner(a, b) for b in B] for a in B])
    assert np.allclose(gram / gram[0, 0], np.eye(len(B)), atol=1e-12)
    assert all(np.allclose(b, -b.conj().T) and abs(np.trace(b)) < 1e-12 for b in B)
    assert len(su_basis(N, traceless=False)) == N * N


@settings(max_examples=20)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3, unique=False), st.integers(0, 2**32 - 1))
def test_stabilizer_dimension_of_normal_E(mults, seed):
    # commutant of a normal E with eigenvalue multiplicities m_k is
    # u(m_1) + ... + u(m_k); inside su(N) this loses one dimension
    rng = np.random.default_rng(seed)
    vals = np.repeat(np.arange(len(mults)) * (1.3 + 0.4j), mults)
    N = len(vals)
    V = haar_random_unitary(N, rng)
    E = V @ np.diag(vals) @ V.conj().T
    basis = stabilizer_algebra(E)
    assert basis.dimension == sum(m * m for m in mults) - 1
    for k in basis.generators:
        assert np.linalg.norm(k @ E - E @ k) < 1e-9
    assert basis.closure_residual() < 1e-8


def test_stabilizer_of_non_normal_E():
    assert stabilizer_algebra(J_PLUS).dimension == 0
    assert stabilizer_algebra(J_PLUS, traceless=False).dimension == 1
    E = random_complex(np.random.default_rng(1), 3)
    assert stabilizer_algebra(E).dimension == 0


def test_projection_and_random_elements_stay_in_group():
    rng = np.random.default_rng(2)
    E = np.diag([1.0, 0.0, 0.0])
    basis = stabilizer_algebra(E)
    G = random_complex(rng, 3)
    G = G - G.conj().T
    P = basis.project(G)
    assert np.allclose(basis.project(P), P)
    U = basis.random_element(rng)
    assert np.allclose(U @ E @ U.conj().T, E, atol=1e-12)


def _block_oracle(A, C, starts=40, seed=0):
    """max |f| over U = diag(e^{i a}, expm(i H)) with H Hermitian 2x2."""
    rng = np.random.default_rng(seed)

    def unitary(x):
        H = np.array([[x[1], x[2] + 1j * x[3]], [x[2] - 1j * x[3], x[4]]])
        U = np.zeros((3, 3), dtype=complex)
        U[0, 0] = np.exp(1j * x[0])
        U[1:, 1:] = expm(1j * H)
        return U

    best = 0.0
    for _ in range(starts):
        r = minimize(lambda x: -abs(oracles.transfer(unitary(x), A, C)), rng.uniform(-3, 3, 5),
                     method="L-BFGS-B", options={"gtol": 1e-12, "ftol": 1e-15})
        best = max(best, -r.fun)
    return best


def test_invariance_constrained_maximum_matches_block_oracle():
    rng = np.random.default_rng(3)
    A, C = random_complex(rng, 3), random_complex(rng, 3)
    E = np.diag([1.0, 0.0, 0.0])
    ref = _block_oracle(A, C)
    proj = ascend_projected(A, C, stabilizer_algebra(E), CFG, E=E)
    lag = ascend_invariance_lagrange(A, C, E, CFG)
    assert proj.abs_f_C == pytest.approx(ref, rel=1e-7)
    assert lag.abs_f_C == pytest.approx(ref, rel=1e-7)
    assert lag.converged and lag.constraint_residual <= 1e-8
    assert proj.constraint_residual <= 1e-10
    assert "f_C" in lag.to_record()


def test_trivial_and_vacuous_invariance():
    rng = np.random.default_rng(4)
    A, C = random_complex(rng, 2), random_complex(rng, 2)
    with pytest.raises(DomainError):
        ascend_projected(A, C, stabilizer_algebra(J_PLUS), CFG)
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        res = ascend_invariance_lagrange(A, C, 3 * np.eye(2), CFG)
    assert w and res.diagnostic == "vacuous constraint"


def test_orthogonality_flow_reaches_zero_set():
    rng = np.random.default_rng(5)
    A, C, D = (random_complex(rng, 3) for _ in range(3))
    m0, _ = min_modulus(A, D, CFG, restarts=6)
    assert m0 < 1e-6
    res = ascend_orthogonality(A, C, D, CFG, m0=m0)
    assert res.converged
    assert abs(res.f_D) <= 1e-8
    assert res.abs_f_C <= oracles.radius_bruteforce(A, C, starts=10) + 1e-9
    assert len(res.endpoints) == CFG.restarts + 1


def test_orthogonality_rejects_parallel_C_and_D():
    rng = np.random.default_rng(6)
    A, C = random_complex(rng, 2), random_complex(rng, 2)
    with pytest.raises(DomainError):
        ascend_orthogonality(A, C, 2j * C, CFG)


def test_orthogonality_paths_are_recorded():
    rng = np.random.default_rng(7)
    A, C, D = (random_complex(rng, 2) for _ in range(3))
    res = ascend_orthogonality(A, C, D, FlowConfig(restarts=2), record_paths=True)
    assert len(res.paths) == 3
    fC, fD = res.paths[0]
    assert len(fC) == len(fD) > 0


def test_constrained_sampling():
    rng = np.random.default_rng(8)
    A, C = random_complex(rng, 3), random_complex(rng, 3)
    E = np.diag([1.0, 0.0, 0.0])
    z = sample_constrained_range(A, C, InvarianceConstraint(E), 300, seed=1)
    best = ascend_projected(A, C, stabilizer_algebra(E), CFG).abs_f_C
    assert z.shape == (300,) and np.max(np.abs(z)) <= best + 1e-9
    # a Jordan block has a trivial stabiliser: every sample is f(identity)
    J = np.diag([1.0, 1.0], 1)
    z = sample_constrained_range(A, C, InvarianceConstraint(J), 3)
    assert np.allclose(z, np.trace(C.conj().T @ A))
    with pytest.raises(DomainError):
        sample_constrained_range(A, C, object(), 3)


def test_orthogonality_sampling_raises_when_infeasible():
    rng = np.random.default_rng(9)
    A, C, D = (random_complex(rng, 3) for _ in range(3))
    with pytest.raises(SamplingInfeasible):
        sample_constrained_range(A, C, OrthogonalityConstraint(D, m0=0.0), 10, tol=1e-9)


def test_cloud_components_counts_blobs():
    rng = np.random.default_rng(10)
    a = rng.uniform(0, 1, 500) + 1j * rng.uniform(0, 1, 500)
    for adaptive in (False, True):
        assert cloud_components(np.concatenate([a, a + 5]), adaptive=adaptive) >= 2
    assert cloud_components(np.concatenate([a, a + 5]), adaptive=True) == 2
    assert cloud_components(a, adaptive=True) == 1
    # a regular lattice has one component under the global rule too
    g = np.add.outer(np.arange(20), 1j * np.arange(20)).ravel()
    assert cloud_components(g) == 1


@pytest.mark.parametrize("N,E", [(3, np.diag([1.0, 0.0, 0.0])), (4, np.diag([1.0, 1.0, 0.0, 0.0]))])
def test_invariance_cloud_is_connected(N, E):
    rng = np.random.default_rng(N)
    A, C = random_complex(rng, N), random_complex(rng, N)
    z = sample_constrained_range(A, C, InvarianceConstraint(E), 2000, seed=1)
    assert cloud_components(z, adaptive=True) == 1
