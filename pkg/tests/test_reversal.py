import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from cnrange.linalg import J_PLUS, J_Z, PAULI, DomainError
from cnrange.reversal import (
    HamiltonianNormalForm,
    LadderString,
    kz,
    reversibility_obstruction,
    root_space_orders,
    root_space_pairs,
    search_reversal,
    solve_reversal_angles,
    solve_root_space,
)

import oracles
from conftest import random_hermitian

X, Y, Z = PAULI["x"], PAULI["y"], PAULI["z"]


def test_ladder_string_matrix_orders_and_json():
    t = LadderString("z+", 2 - 1j)
    assert np.array_equal(t.matrix(), (2 - 1j) * np.kron(J_Z, J_PLUS))
    assert t.orders() == (0, 1)
    assert LadderString("Zp").nus == "z+"
    assert LadderString.from_json(t.to_json()) == t
    with pytest.raises(DomainError):
        LadderString("zx")
    with pytest.raises(DomainError):
        LadderString.from_json({"string": "z+"})


def test_normal_form_is_hermitian_and_checks_sizes():
    nf = HamiltonianNormalForm((LadderString("+z", 0.5j), LadderString("-+")))
    H = nf.matrix()
    assert np.allclose(H, H.conj().T)
    assert nf.order_matrix.tolist() == [[1, 0], [-1, 1]]
    with pytest.raises(DomainError):
        HamiltonianNormalForm((LadderString("+"), LadderString("+z")))
    with pytest.raises(DomainError):
        HamiltonianNormalForm(())
    with pytest.raises(DomainError):
        HamiltonianNormalForm.from_json({"string": "+"})


@given(arrays(float, 3, elements=st.floats(-7, 7)))
def test_kz_is_product_of_z_rotations(phi):
    ref = np.kron(np.kron(expm(-1j * phi[0] * J_Z), expm(-1j * phi[1] * J_Z)), expm(-1j * phi[2] * J_Z))
    assert np.allclose(kz(phi).to_full(), ref, atol=1e-12)


order_matrices = st.integers(1, 4).flatmap(
    lambda m: st.integers(1, 3).flatmap(
        lambda n: arrays(int, (m, n), elements=st.sampled_from([-1, 0, 1]))))


@settings(max_examples=150)
@given(order_matrices, st.integers(0, 2**32 - 1))
def test_angle_solver_agrees_with_box_enumeration(P, seed):
    sol = solve_reversal_angles(P)
    assert sol.feasible == oracles.angle_system_box(P)
    if sol.feasible:
        assert sol.residual(P) <= 1e-8
        # every ladder string picks up the phase exp(-i pi) = -1
        rng = np.random.default_rng(seed)
        sym = {1: "+", -1: "-", 0: "z"}
        terms = tuple(LadderString("".join(sym[int(p)] for p in row), complex(*rng.standard_normal(2)))
                      for row in P)
        H = HamiltonianNormalForm(terms).matrix()
        K = kz(sol.angles).to_full()
        assert np.allclose(K @ H @ K.conj().T, -H, atol=1e-10)
    else:
        y = sol.certificate
        assert not np.any(y @ P)
        assert int(np.sum(y)) % 2 == 1


def test_angle_solver_zero_row_and_input_checks():
    sol = solve_reversal_angles([[1, 0], [0, 0]])
    assert not sol.feasible and sol.zero_row == 1
    with pytest.raises(DomainError):
        solve_reversal_angles([[2, 0]])
    with pytest.raises(DomainError):
        solve_reversal_angles(np.zeros((0, 2)))


def test_odd_trace_obstruction():
    H = np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z)
    w = reversibility_obstruction(H)
    assert (w.power, w.trace) == (3, pytest.approx(-24.0))
    assert reversibility_obstruction(np.kron(Z, Z)) is None
    rng = np.random.default_rng(1)
    Hr = random_hermitian(rng, 4) + np.eye(4)
    assert reversibility_obstruction(Hr).power == 1


def test_flow_search_zz_and_heisenberg():
    res = search_reversal(np.kron(Z, Z))
    assert res.reversible and res.residual <= 1e-5
    rev, K, floor = search_reversal(np.kron(X, X) + np.kron(Y, Y) + np.kron(Z, Z))
    assert not rev and K is None
    assert floor == pytest.approx(-1 / 3, abs=1e-8)


def test_flow_search_agrees_with_normal_form_solution():
    nf = HamiltonianNormalForm((LadderString("+z0"), LadderString("0-+", 0.3j)))
    assert solve_reversal_angles(nf.order_matrix).feasible
    res = search_reversal(nf.matrix())
    assert res.reversible
    with pytest.raises(DomainError):
        search_reversal(np.zeros((4, 4)))
    with pytest.raises(DomainError):
        search_reversal(np.array([[0, 1], [0, 0]]))


def test_root_space_form():
    H = np.kron(X, X)
    pairs = root_space_pairs(H)
    assert [(i, j) for i, j, _ in pairs] == [(0, 3), (1, 2)]
    assert root_space_orders(H).tolist() == [[1, 1], [1, -1]]
    sol = solve_root_space(H)
    assert sol.feasible
    K = kz(sol.angles).to_full()
    assert np.allclose(K @ H @ K.conj().T, -H, atol=1e-10)
    assert not solve_root_space(np.kron(Z, Z)).feasible
    with pytest.raises(DomainError):
        root_space_pairs(np.kron(Z, Z))
