import numpy as np
import pytest
from hypothesis import given, strategies as st

from nohair.linalg import (
    SeededRng,
    SubsystemLayout,
    basis_vector,
    check_density,
    check_pure,
    complete_isometry,
    haar_unitary,
    hermitize,
    partial_trace,
    projector,
    random_density,
    random_pure_state,
    random_pure_states,
    tensor_product,
    trace_norm,
)

from conftest import random_hermitian

X = np.array([[0, 1], [1, 0]], dtype=complex)


class TestLayout:
    def test_total_dim(self):
        lay = SubsystemLayout((2, 3, 4), ("F", "BH", "R"))
        assert lay.total_dim == 24
        assert lay.dim("BH") == 3
        assert lay.index("R") == 2

    @pytest.mark.parametrize(
        "dims, roles",
        [((), ()), ((2, 0), ()), ((2, 2), ("I", "I")), ((2, 2), ("I",)), ((2,), ("Q",))],
    )
    def test_rejects(self, dims, roles):
        with pytest.raises(ValueError):
            SubsystemLayout(dims, roles)

    def test_missing_role(self):
        with pytest.raises(KeyError):
            SubsystemLayout((2, 2), ("I", "E")).index("R")


class TestSeededRng:
    def test_replay(self):
        a = SeededRng(7, 3).generator().standard_normal(5)
        b = SeededRng(7, 3).generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = SeededRng(7, 0).generator().standard_normal(5)
        b = SeededRng(7, 1).generator().standard_normal(5)
        assert not np.allclose(a, b)

    @pytest.mark.parametrize("seed", [-1, 2**64, 1.5, True])
    def test_invalid(self, seed):
        with pytest.raises((ValueError, TypeError)):
            SeededRng(seed)

    def test_large_values(self):
        r = SeededRng(2**64 - 1, 2**64 - 1)
        assert r.generator().integers(10) in range(10)


class TestTensorProduct:
    def test_identity(self):
        assert np.array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))

    def test_basis_ordering(self):
        v = tensor_product(basis_vector(0, 2)[:, None], basis_vector(1, 2)[:, None]).ravel()
        assert np.array_equal(v, basis_vector(1, 4))

    def test_single_factor_action(self):
        e00 = basis_vector(0, 4)
        assert np.array_equal(tensor_product(X, np.eye(2)) @ e00, basis_vector(2, 4))


class TestPartialTrace:
    def test_bell(self):
        bell = (basis_vector(0, 4) + basis_vector(3, 4)) / np.sqrt(2)
        assert np.allclose(partial_trace(projector(bell), (2, 2), [0]), np.eye(2) / 2, atol=1e-15)

    def test_product(self, rng):
        a, b = random_density(2, rng), random_density(3, rng)
        assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [0]), a, atol=1e-14)
        assert np.allclose(partial_trace(np.kron(a, b), (2, 3), [1]), b, atol=1e-14)

    def test_keep_all(self, rng):
        rho = random_density(6, rng)
        assert np.array_equal(partial_trace(rho, (2, 3), [0, 1]), rho)

    def test_middle_factor(self, rng):
        a, b, c = random_density(2, rng), random_density(3, rng), random_density(2, rng)
        rho = tensor_product(a, b, c)
        assert np.allclose(partial_trace(rho, SubsystemLayout((2, 3, 2)), [0, 2]), np.kron(a, c), atol=1e-14)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            partial_trace(np.eye(4) / 4, (2, 2), [2])

    def test_empty_keep(self):
        with pytest.raises(ValueError):
            partial_trace(np.eye(4) / 4, (2, 2), [])

    @given(st.integers(0, 2**32), st.sampled_from([(2, 2), (2, 3, 2), (3, 4), (2, 2, 2, 2)]))
    def test_sequential_traces_reach_one(self, seed, dims):
        rho = random_density(int(np.prod(dims)), SeededRng(seed))
        red = partial_trace(rho, dims, range(len(dims) - 1))
        red = partial_trace(red, dims[:-1], [0])
        assert abs(np.trace(red) - 1) <= 1e-10


class TestTraceNorm:
    def test_zero(self):
        assert trace_norm(np.zeros((3, 3))) == 0.0

    def test_hermitian(self):
        assert trace_norm(np.diag([0.5, -0.5])) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("d", [1, 2, 5, 8])
    def test_unitary(self, d):
        assert trace_norm(haar_unitary(d, SeededRng(d))) == pytest.approx(d, abs=1e-12)

    def test_non_square(self):
        with pytest.raises(ValueError):
            trace_norm(np.zeros((2, 3)))

    @given(st.integers(0, 2**32), st.sampled_from([2, 3]), st.sampled_from([2, 3]))
    def test_multiplicative(self, seed, da, db):
        gen = SeededRng(seed).generator()
        a, b = random_hermitian(gen, da), random_hermitian(gen, db)
        assert trace_norm(np.kron(a, b)) == pytest.approx(trace_norm(a) * trace_norm(b), abs=1e-10)


@pytest.mark.parametrize("d", [2, 7, 16, 33, 64])
def test_eigh_reconstructs(d):
    m = random_hermitian(SeededRng(d).generator(), d)
    lam, q = np.linalg.eigh(m)
    assert np.max(np.abs(m - (q * lam) @ q.conj().T)) <= 1e-10


class TestHaar:
    def test_dim_one(self):
        u = haar_unitary(1, SeededRng(0))
        assert u.shape == (1, 1) and abs(abs(u[0, 0]) - 1) < 1e-15

    @given(st.integers(0, 2**32), st.integers(1, 12))
    def test_unitary(self, seed, d):
        u = haar_unitary(d, SeededRng(seed))
        assert np.max(np.abs(u.conj().T @ u - np.eye(d))) <= 1e-12

    def test_deterministic(self):
        assert np.array_equal(haar_unitary(4, SeededRng(9, 2)), haar_unitary(4, SeededRng(9, 2)))

    def test_trace_moment(self):
        # E|Tr U|^2 = 1 and Var = 1 for Haar U at d >= 2
        gen = SeededRng(11).generator()
        n = 10_000
        vals = np.array([abs(np.trace(haar_unitary(4, gen))) ** 2 for _ in range(n)])
        assert abs(vals.mean() - 1) <= 3 / np.sqrt(n)

    def test_invalid_dim(self):
        with pytest.raises(ValueError):
            haar_unitary(0, SeededRng(0))


class TestPureStates:
    def test_dim_one(self):
        psi = random_pure_state(1, SeededRng(0))
        assert abs(abs(psi[0]) - 1) < 1e-15

    def test_norms(self):
        psis = random_pure_states(10_000, 3, SeededRng(1))
        assert np.max(np.abs(np.linalg.norm(psis, axis=1) - 1)) <= 1e-12

    def test_first_moment(self):
        psis = random_pure_states(100_000, 4, SeededRng(2))
        assert np.mean(np.abs(psis[:, 0]) ** 2) == pytest.approx(0.25, abs=0.005)


class TestChecks:
    def test_hermitize_guard(self):
        m = np.array([[1, 1e-13], [0, 1]], dtype=complex)
        assert np.array_equal(hermitize(m), hermitize(m).conj().T)
        with pytest.raises(ValueError):
            hermitize(np.array([[1, 1e-6], [0, 1]]))

    def test_density(self, rng):
        check_density(random_density(4, rng))
        with pytest.raises(ValueError):
            check_density(np.diag([1.2, -0.2]))
        with pytest.raises(ValueError):
            check_density(np.eye(2))

    def test_pure(self):
        check_pure(basis_vector(1, 3))
        with pytest.raises(ValueError):
            check_pure(np.array([1.0, 1e-5]))

    def test_complete_isometry(self, rng):
        v = haar_unitary(6, rng)[:, :2]
        c = complete_isometry(v)
        full = np.hstack([v, c])
        assert np.allclose(full.conj().T @ full, np.eye(6), atol=1e-12)
