import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from nohair.channels import (
    Channel,
    ChannelError,
    ChannelFamilySpec,
    HorizonModel,
    choi_distance,
    complementary_channel,
    embed_family_as_horizon,
    exterior_channel,
    ideal_channel,
    ideal_infall,
    ideal_model,
    identity_channel,
    interior_channel,
    make_family,
    random_model,
    swap_model,
    unitary_with_dilation,
)
from nohair.linalg import (
    SeededRng,
    basis_vector,
    haar_unitary,
    projector,
    random_density,
    random_isometry,
    random_pure_state,
)
from nohair.metrics import trace_distance
from nohair.tradeoff import compute_epsilon


def basis_ops(d):
    return [np.outer(basis_vector(i, d), basis_vector(j, d)) for i in range(d) for j in range(d)]


def random_channel(seed, d_in, d_out, n_kraus):
    w = random_isometry(d_in, d_out * n_kraus, SeededRng(seed))
    return Channel.from_stinespring(w, dim_out=d_out)


def max_action_gap(a, b):
    return max(np.max(np.abs(a.apply(e) - b.apply(e))) for e in basis_ops(a.dim_in))


class TestRepresentations:
    @given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))
    def test_round_trips(self, seed, d_in, d_out, n):
        assume(d_out * n >= d_in)
        ch = random_channel(seed, d_in, d_out, n)
        kraus = Channel.from_kraus(ch.kraus())
        via_choi = Channel.from_choi(kraus.choi(), d_in, d_out)
        via_kraus_again = Channel.from_kraus(via_choi.kraus())
        via_dilation = Channel.from_stinespring(kraus.stinespring(), d_out)
        assert max_action_gap(kraus, via_kraus_again) <= 1e-9
        assert max_action_gap(kraus, via_dilation) <= 1e-9
        assert max_action_gap(kraus, ch) <= 1e-9

    def test_choi_of_identity(self):
        omega = sum(np.kron(basis_vector(i, 3), basis_vector(i, 3)) for i in range(3))
        assert np.allclose(identity_channel(3).choi(), np.outer(omega, omega), atol=1e-15)

    def test_minimal_dilation_drops_zero_kraus(self):
        ch = Channel.from_kraus([np.eye(2), np.zeros((2, 2))])
        assert ch.env_dim() == 1

    def test_invalid(self):
        with pytest.raises(ChannelError):
            Channel.from_kraus([np.eye(2) * 1.1])
        with pytest.raises(ChannelError):
            Channel.from_choi(np.eye(4), 2, 2)
        with pytest.raises(ChannelError):
            Channel.from_stinespring(np.ones((4, 2)), 2)
        with pytest.raises(ChannelError):
            Channel.from_kraus([])
        with pytest.raises(ChannelError):
            identity_channel(2).apply(np.eye(3) / 3)


class TestInterior:
    def test_ideal_construction(self):
        v = random_isometry(2, 4, SeededRng(3))
        model = ideal_model(2, 4, SeededRng(4), dim_i=4, V=v)
        assert model.dim_e == 2
        assert choi_distance(interior_channel(model), ideal_infall(v)) <= 1e-10

    def test_swap_interior_is_constant(self):
        ch = interior_channel(swap_model())
        zero = projector(basis_vector(0, 2))
        for e in basis_ops(2):
            assert np.allclose(ch.apply(e), np.trace(e) * zero, atol=1e-15)

    @pytest.mark.parametrize("dim_f", [2, 3, 4])
    @pytest.mark.parametrize("dim_bh", [2, 4, 8])
    def test_random_models_are_cptp(self, dim_f, dim_bh):
        for k in range(56):  # 500 models across the grid
            m = random_model(dim_f, dim_bh, SeededRng(dim_f * 100 + dim_bh, k))
            Channel.from_choi(interior_channel(m).choi(), dim_f, dim_f).validate()

    def test_dimension_checks(self):
        with pytest.raises(ChannelError):
            HorizonModel(np.eye(4), basis_vector(0, 2), np.eye(2), 2, 3)
        with pytest.raises(ChannelError):
            HorizonModel(np.eye(4) * 1.01, basis_vector(0, 2), np.eye(2), 2, 2)
        with pytest.raises(ChannelError):
            HorizonModel(np.eye(4), basis_vector(0, 2), np.eye(2), 2, 2, charges=(0,))
        with pytest.raises(ChannelError):
            random_model(2, 3, SeededRng(0), dim_i=4)


class TestComplementary:
    def test_ideal_environment_is_constant(self):
        v = random_isometry(2, 4, SeededRng(5))
        env = complementary_channel(ideal_infall(v, dim_env=3))
        zero = projector(basis_vector(0, 3))
        gen = SeededRng(6).generator()
        for _ in range(20):
            assert np.max(np.abs(env.apply(random_density(2, gen)) - zero)) <= 1e-10

    def test_ideal_infall_complement_input_independent(self):
        v = random_isometry(3, 3, SeededRng(7))
        env = complementary_channel(ideal_infall(v, dim_env=2))
        gen = SeededRng(8).generator()
        outs = [env.apply(projector(random_pure_state(3, gen))) for _ in range(100)]
        assert max(trace_distance(o, outs[0]) for o in outs) <= 1e-10

    def test_swap_environment_is_identity(self):
        env = exterior_channel(swap_model())
        gen = SeededRng(9).generator()
        for e in basis_ops(2):
            assert np.allclose(env.apply(e), e, atol=1e-15)
        for _ in range(10):
            a, b = random_density(2, gen), random_density(2, gen)
            assert trace_distance(env.apply(a), env.apply(b)) == pytest.approx(trace_distance(a, b), abs=1e-12)

    @given(st.integers(0, 2**32))
    def test_double_complement(self, seed):
        ch = random_channel(seed, 2, 3, 2)
        back = complementary_channel(complementary_channel(ch))
        assert max_action_gap(ch, back) <= 1e-9
        # Choi spectra agree as well
        assert np.allclose(np.linalg.eigvalsh(ch.choi()), np.linalg.eigvalsh(back.choi()), atol=1e-9)


class TestFamilies:
    def test_depolarizing_zero_is_identity(self):
        assert choi_distance(make_family(ChannelFamilySpec("depolarizing", 3, 0.0)), identity_channel(3)) <= 1e-15

    def test_depolarizing_half(self):
        out = make_family(ChannelFamilySpec("depolarizing", 2, 0.5)).apply(projector(basis_vector(0, 2)))
        assert np.allclose(out, np.diag([0.75, 0.25]), atol=1e-15)

    @pytest.mark.parametrize("d, p", [(2, 0.3), (3, 0.7), (4, 1.0)])
    def test_depolarizing_formula(self, d, p):
        rho = random_density(d, SeededRng(d))
        out = make_family(ChannelFamilySpec("depolarizing", d, p)).apply(rho)
        assert np.allclose(out, (1 - p) * rho + p * np.eye(d) / d, atol=1e-14)

    @pytest.mark.parametrize("d, p", [(2, 0.3), (3, 0.6)])
    def test_dephasing_formula(self, d, p):
        rho = random_density(d, SeededRng(d))
        out = make_family(ChannelFamilySpec("dephasing", d, p)).apply(rho)
        assert np.allclose(out, (1 - p) * rho + p * np.diag(np.diag(rho)), atol=1e-14)

    def test_full_amplitude_damping(self):
        ch = make_family(ChannelFamilySpec("amplitude_damping", 2, 1.0))
        gen = SeededRng(1).generator()
        for _ in range(5):
            assert np.allclose(ch.apply(random_density(2, gen)), np.diag([1.0, 0.0]), atol=1e-15)

    @pytest.mark.parametrize(
        "family, dim, param",
        [("amplitude_damping", 3, 0.1), ("depolarizing", 2, 1.5), ("dephasing", 2, -0.1), ("erasure", 2, 0.1)],
    )
    def test_invalid_specs(self, family, dim, param):
        with pytest.raises(ChannelError):
            ChannelFamilySpec(family, dim, param)


class TestIdealInfall:
    def test_identity(self):
        assert choi_distance(ideal_infall(np.eye(3)), identity_channel(3)) <= 1e-15

    def test_padded_embedding(self):
        v = np.eye(4, 2)
        ch = ideal_infall(v)
        ch.validate()
        assert np.linalg.matrix_rank(ch.choi()) == 1
        Channel.from_choi(ch.choi(), 2, 4).validate()

    def test_rejects_non_isometry(self):
        with pytest.raises(ChannelError):
            ideal_infall(np.ones((2, 2)))


class TestEmbedFamily:
    def test_depolarizing_zero_has_zero_epsilon(self):
        model = embed_family_as_horizon(ChannelFamilySpec("depolarizing", 2, 0.0))
        assert compute_epsilon(model).upper <= 1e-9

    @pytest.mark.parametrize(
        "spec",
        [
            ChannelFamilySpec("dephasing", 2, 0.3),
            ChannelFamilySpec("dephasing", 3, 0.3),
            ChannelFamilySpec("amplitude_damping", 2, 0.1),
            ChannelFamilySpec("depolarizing", 3, 0.4),
        ],
    )
    def test_round_trip(self, spec):
        model = embed_family_as_horizon(spec)
        assert np.allclose(model.V, np.eye(spec.dim))
        assert choi_distance(interior_channel(model), make_family(spec)) <= 1e-9


class TestIdealModels:
    @pytest.mark.parametrize("seed", range(5))
    def test_interior_is_pure(self, seed):
        gen = SeededRng(seed).generator()
        model = ideal_model(3, 4, gen)
        for _ in range(20):
            lam = np.linalg.eigvalsh(model.interior_state(random_pure_state(3, gen)))
            assert lam[-1] >= 1 - 1e-10

    def test_canonical_is_exact(self):
        model = ideal_model(2, 4)
        assert np.array_equal(ideal_channel(model).stinespring(), interior_channel(model).stinespring())

    def test_unitary_with_dilation(self):
        gen = SeededRng(3).generator()
        w = random_isometry(2, 8, gen)
        phi0 = random_pure_state(4, gen)
        u = unitary_with_dilation(w, phi0, gen)
        assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)
        assert np.allclose(u @ np.kron(np.eye(2), phi0[:, None]), w, atol=1e-12)

    def test_sectors(self):
        model = random_model(3, 2, SeededRng(0), charges=(1, 0, 1))
        assert model.sectors() == {0: (1,), 1: (0, 2)}
        assert random_model(3, 2, SeededRng(0)).sectors() == {0: (0, 1, 2)}
