import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import siso
from oracles import markov, tf_markov, zeros_generalized_eig
from regtrack.analysis import (companion_coefficients, invariant_zeros,
                               relative_degrees)
from regtrack.canonical import (brunovsky_matrices, output_chain_matrix,
                                to_controllable_canonical)
from regtrack.errors import (PreconditionError, SolvabilityError,
                             StructuralError, ValidationError)
from regtrack.fixtures import (flat_plant, nonflat_plant, random_exosystem,
                               random_plant)
from regtrack.linalg import multiset_distance
from regtrack.model import Exosystem, LinearSystem
from regtrack.tracking import (UNSTABLE_INTERNAL_DYNAMICS, ErrorDynamicsSpec,
                               TrackingController, brunovsky_gain,
                               design_cancel, design_decoupling, design_fbt,
                               design_ort, gain_from_spec, output_frame_gain,
                               place_poles, verify_equivalence, zero_cancel,
                               zero_cancel_siso, zero_compensate_mimo)

seeds = st.integers(0, 2**32 - 1)


def random_spec(rng, lengths):
    return ErrorDynamicsSpec.from_poles([-rng.uniform(0.5, 3.0, d) for d in lengths])


class TestSpec:
    def test_hurwitz_gate(self):
        with pytest.raises(PreconditionError, match="not Hurwitz"):
            ErrorDynamicsSpec(([-1.0, 0.0],))   # s^2 - 1 has a root at +1

    def test_marginal_rejected(self):
        with pytest.raises(PreconditionError):
            ErrorDynamicsSpec(([1.0, 0.0],))   # s^2 + 1

    def test_from_poles(self):
        spec = ErrorDynamicsSpec.from_poles([[-1.0, -1.0], [-3.0]])
        np.testing.assert_allclose(spec.p[0], [1.0, 2.0])
        np.testing.assert_allclose(spec.p[1], [3.0])
        assert spec.lengths == (2, 1)

    def test_conjugate_pairs_required(self):
        with pytest.raises(ValidationError):
            ErrorDynamicsSpec.from_poles([[-1 + 1j, -1 + 2j]])


class TestPlacePoles:
    def test_single_chain(self):
        A, B = brunovsky_matrices((2,))
        K = place_poles(LinearSystem(A, B, [[1.0, 0.0]]), [[1.0, 2.0]])
        np.testing.assert_array_equal(K, [[1.0, 2.0]])
        np.testing.assert_allclose(np.poly(A - B @ K), [1.0, 2.0, 1.0])

    def test_two_chains(self, two_chains):
        K = place_poles(two_chains, [[1.0, 2.0], [3.0]])
        np.testing.assert_array_equal(K, [[1.0, 2.0, 0.0], [0.0, 0.0, 3.0]])

    def test_unstable_spec(self, two_chains):
        with pytest.raises(PreconditionError, match="Hurwitz"):
            place_poles(two_chains, [[-1.0, 0.0], [3.0]])

    def test_needs_chain_form(self, mp_plant):
        with pytest.raises(PreconditionError):
            place_poles(LinearSystem(np.ones((2, 2)), mp_plant.B, mp_plant.C), [[1.0, 2.0]])

    @given(seeds)
    def test_spectrum_in_original_frame(self, seed):
        rng = np.random.default_rng(seed)
        sys = random_plant(rng)
        kappa = to_controllable_canonical(sys).kappa
        spec = random_spec(rng, kappa)
        K = brunovsky_gain(sys, spec)
        eig = np.linalg.eigvals(sys.A - sys.B @ K)
        want = np.concatenate(spec.roots())
        assert multiset_distance(eig, want) < 1e-5 * (1 + np.abs(want).max())


class TestFBT:
    def test_double_integrator(self, double_integrator):
        c = design_fbt(double_integrator, [[1.0, 2.0]])
        np.testing.assert_array_equal(c.K, [[1.0, 2.0]])
        np.testing.assert_array_equal(c.F, [[1.0, 2.0, 1.0]])
        assert c.kind == "stack" and c.orders == (2,)

    def test_chains(self, two_chains):
        c = design_fbt(two_chains, [[1.0, 2.0], [3.0]])
        np.testing.assert_array_equal(c.K, [[1.0, 2.0, 0.0], [0.0, 0.0, 3.0]])

    def test_singular_decoupling(self):
        # both outputs see the same input direction first: D* rows are parallel
        A = np.zeros((3, 3))
        A[0, 1] = 1.0
        B = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        C = np.array([[0.0, 1.0, 0.0], [1.0, 2.0, 0.0]])
        sys = LinearSystem(A, B, C)
        assert abs(np.linalg.det(relative_degrees(sys).Dstar)) < 1e-12
        with pytest.raises(PreconditionError, match="singular"):
            design_fbt(sys, [[1.0], [1.0]])

    def test_not_flat(self, mp_plant):
        with pytest.raises(PreconditionError, match="output not flat"):
            design_fbt(mp_plant, [[1.0]])

    @given(seeds)
    def test_substitution_identity(self, seed):
        """In companion coordinates ``k_i + a_(i-1) = p_(i-1)``."""
        rng = np.random.default_rng(seed)
        sys = flat_plant(rng, m=1)
        spec = random_spec(rng, (sys.n,))
        c = design_fbt(sys, spec)
        dec = to_controllable_canonical(sys)
        a, _ = companion_coefficients(dec.system)
        K_can = c.K @ np.linalg.inv(dec.T_tilde)
        np.testing.assert_allclose(K_can[0] + a, spec.p[0], atol=1e-8 * (1 + np.abs(a).max()))

    @given(seeds)
    def test_decoupled_error_dynamics(self, seed):
        """Each output obeys its own spec polynomial: ``C_k p_k(A - BK) = 0``."""
        rng = np.random.default_rng(seed)
        sys = flat_plant(rng, m=int(rng.integers(2, 4)))
        rd = relative_degrees(sys)
        spec = random_spec(rng, rd.deltas)
        c = design_fbt(sys, spec)
        Acl = sys.A - sys.B @ c.K
        scale = 1 + np.linalg.norm(Acl, 2) ** sys.n
        for k, (d, p) in enumerate(zip(rd.deltas, spec.p)):
            poly = np.linalg.matrix_power(Acl, d)
            for j, pj in enumerate(p):
                poly = poly + pj * np.linalg.matrix_power(Acl, j)
            assert np.abs(sys.C[k] @ poly).max() < 1e-9 * scale


class TestORT:
    def test_double_integrator_sine(self, double_integrator, sine_exo):
        c = design_ort(double_integrator, sine_exo, K=[[1.0, 2.0]])
        np.testing.assert_allclose(c.F, [[0.0, 2.0]], atol=1e-15)
        assert c.kind == "exo"

    def test_zero_and_step(self, mp_plant, step_exo):
        c = design_ort(mp_plant, step_exo, K=[[2.0, 3.0]])
        np.testing.assert_allclose(c.F, [[1.0]], atol=1e-15)

    def test_non_minimum_phase_step(self, nmp_plant, step_exo):
        c = design_ort(nmp_plant, step_exo, spec=[[2.0, 3.0]])
        np.testing.assert_allclose(c.K, [[2.0, 3.0]], atol=1e-12)
        np.testing.assert_allclose(c.F, [[-1.0]], atol=1e-12)

    def test_unsolvable(self, nmp_plant):
        with pytest.raises(SolvabilityError) as err:
            design_ort(nmp_plant, Exosystem([[2.0]], [[1.0]], [1.0], (1,)), K=[[2.0, 3.0]])
        assert abs(err.value.eigenvalue - 2.0) < 1e-9

    def test_non_hurwitz_gain(self, double_integrator, sine_exo):
        with pytest.raises(PreconditionError, match="Hurwitz"):
            design_ort(double_integrator, sine_exo, K=[[-1.0, 2.0]])

    def test_needs_gain_or_spec(self, double_integrator, sine_exo):
        with pytest.raises(ValidationError):
            design_ort(double_integrator, sine_exo)

    def test_gain_shape(self, double_integrator, sine_exo):
        with pytest.raises(StructuralError):
            design_ort(double_integrator, sine_exo, K=[[1.0, 2.0, 3.0]])

    @given(seeds)
    def test_closed_loop_plant_block_hurwitz(self, seed):
        rng = np.random.default_rng(seed)
        sys = random_plant(rng)
        exo = random_exosystem(rng, sys.m)
        spec = random_spec(rng, to_controllable_canonical(sys).kappa)
        c = design_ort(sys, exo, spec=spec, frame="brunovsky")
        M = np.block([[sys.A - sys.B @ c.K, sys.B @ c.F],
                      [np.zeros((exo.r, sys.n)), exo.S]])
        eig = np.linalg.eigvals(M[:sys.n, :sys.n])
        assert np.all(eig.real < 0)


class TestZeroCancel:
    def test_mp_plant(self, mp_plant):
        c = zero_cancel_siso(mp_plant, [1.0])
        np.testing.assert_allclose(c.K, [[2.0, 3.0]])
        np.testing.assert_allclose(c.F, [[1.0, 1.0]])
        assert c.warnings == []
        # closed loop y / v = (s+2) / ((s+2)(s+1)); with v = y_d + y_d' this is 1
        Acl = mp_plant.A - mp_plant.B @ c.K
        np.testing.assert_allclose(markov(Acl, mp_plant.B, mp_plant.C, 6).ravel(),
                                   tf_markov([1.0], [1.0, 1.0], 6), atol=1e-12)

    def test_nmp_plant(self, nmp_plant):
        c = zero_cancel_siso(nmp_plant, [1.0])
        assert UNSTABLE_INTERNAL_DYNAMICS in c.warnings
        eig = np.linalg.eigvals(nmp_plant.A - nmp_plant.B @ c.K)
        assert np.min(np.abs(eig - 2.0)) < 1e-12

    def test_no_zeros(self, double_integrator):
        with pytest.raises(PreconditionError, match="use design_fbt"):
            zero_cancel_siso(double_integrator, [1.0, 1.0])

    def test_length_mismatch(self, mp_plant):
        with pytest.raises(PreconditionError):
            zero_cancel_siso(mp_plant, [1.0, 2.0])

    @given(seeds)
    def test_reduced_order_markov(self, seed):
        """After cancellation ``y/y_d`` has the Markov parameters of the reduced loop."""
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 7))
        tau = int(rng.integers(1, n))
        b = np.polynomial.polynomial.polyfromroots(-rng.uniform(0.5, 2.0, tau)) * rng.uniform(0.5, 2)
        plant = siso(np.concatenate([b, np.zeros(n - tau - 1)]), a=rng.standard_normal(n))
        delta = n - tau
        hat = ErrorDynamicsSpec.from_poles([-rng.uniform(0.5, 2.0, delta)]).p[0] / b[-1]
        c = zero_cancel_siso(plant, hat)
        Acl = plant.A - plant.B @ c.K
        k = 2 * delta
        got = markov(Acl, plant.B, plant.C, k).ravel()
        # y / v = 1 / (hat_1 + ... + hat_delta s^(delta-1) + s^delta / b_tau)
        den = np.concatenate([[1.0 / b[-1]], hat[::-1]])
        want = tf_markov([1.0], den, k)
        np.testing.assert_allclose(got, want, atol=1e-8 * (1 + np.abs(want).max()))

    def test_arbitrary_coordinates(self, mp_plant, rng):
        P = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        scrambled = mp_plant.transformed(P)
        c = zero_cancel(scrambled, [1.0])
        np.testing.assert_allclose(np.sort(np.linalg.eigvals(scrambled.A - scrambled.B @ c.K)),
                                   [-2.0, -1.0], atol=1e-9)


class TestZeroCompensation:
    def test_flat_output(self, double_integrator):
        comp = zero_compensate_mimo(double_integrator)
        np.testing.assert_array_equal(comp.K_n, np.zeros((1, 2)))
        assert comp.reduced.n == 2 and comp.eta_spectrum.size == 0

    def test_mp(self, mp_plant):
        comp = zero_compensate_mimo(mp_plant)
        np.testing.assert_allclose(comp.eta_spectrum, [-2.0], atol=1e-12)
        assert comp.warnings == []

    def test_nmp(self, nmp_plant):
        comp = zero_compensate_mimo(nmp_plant)
        np.testing.assert_allclose(comp.eta_spectrum, [2.0], atol=1e-12)
        assert comp.warnings == [UNSTABLE_INTERNAL_DYNAMICS]

    def test_singular_decoupling(self):
        sys = LinearSystem(np.zeros((2, 2)), np.eye(2), [[1.0, 1.0], [2.0, 2.0 + 1e-15]])
        with pytest.raises(Exception):
            zero_compensate_mimo(sys)

    @given(seeds)
    def test_spectrum_is_zeros(self, seed):
        rng = np.random.default_rng(seed)
        sys = nonflat_plant(rng)
        comp = zero_compensate_mimo(sys)
        ref = zeros_generalized_eig(sys.A, sys.B, sys.C)
        assert multiset_distance(comp.eta_spectrum, ref) < 1e-6 * (1 + np.abs(ref).max())

    @given(seeds)
    def test_decoupling_design_contains_zeros(self, seed):
        rng = np.random.default_rng(seed)
        sys = nonflat_plant(rng)
        rd = relative_degrees(sys)
        spec = random_spec(rng, rd.deltas)
        c = design_decoupling(sys, spec)
        eig = np.linalg.eigvals(sys.A - sys.B @ c.K)
        want = np.concatenate([np.concatenate(spec.roots()),
                               invariant_zeros(sys).invariant_zeros])
        assert multiset_distance(eig, want) < 1e-5 * (1 + np.abs(want).max())


def test_cancel_mode_siso_equals_decoupling(mp_plant):
    a = design_cancel(mp_plant, [[1.0]])
    b = design_decoupling(mp_plant, [[1.0]])
    np.testing.assert_allclose(a.K, b.K, atol=1e-12)
    np.testing.assert_allclose(a.F, b.F, atol=1e-12)


class TestEquivalence:
    def test_double_integrator(self, double_integrator, sine_exo):
        rep = verify_equivalence(double_integrator, sine_exo, [[1.0, 2.0]])
        assert rep.equal and rep.K_diff == 0.0
        # F_exo = p0 Q + p1 Q S + Q S^2
        Q, S = sine_exo.Q, sine_exo.S
        np.testing.assert_allclose(1.0 * Q + 2.0 * Q @ S + Q @ S @ S, [[0.0, 2.0]])

    def test_chains(self, two_chains, sine_step_exo):
        assert verify_equivalence(two_chains, sine_step_exo, [[1.0, 2.0], [3.0]]).equal

    def test_spec_mismatch(self, two_chains, sine_step_exo):
        with pytest.raises(PreconditionError, match="do not match"):
            verify_equivalence(two_chains, sine_step_exo, [[1.0, 2.0]])

    def test_not_flat(self, mp_plant, step_exo):
        with pytest.raises(PreconditionError):
            verify_equivalence(mp_plant, step_exo, [[1.0]])

    @given(seeds)
    def test_random_flat(self, seed):
        rng = np.random.default_rng(seed)
        sys = flat_plant(rng)
        exo = random_exosystem(rng, sys.m)
        rep = verify_equivalence(sys, exo, random_spec(rng, relative_degrees(sys).deltas))
        assert rep.equal, rep


def test_controller_round_trip(double_integrator):
    c = design_fbt(double_integrator, [[1.0, 2.0]])
    d = TrackingController.from_dict(c.to_dict())
    np.testing.assert_array_equal(d.K, c.K)
    np.testing.assert_array_equal(d.F, c.F)
    assert d.orders == c.orders and d.kind == "stack"


def test_stack_width_checked():
    with pytest.raises(StructuralError):
        TrackingController(np.zeros((1, 2)), "stack", np.zeros((1, 2)), orders=(2,))


def test_output_frame_gain_matches_fbt(rng):
    sys = flat_plant(rng, m=2)
    spec = random_spec(rng, relative_degrees(sys).deltas)
    np.testing.assert_allclose(output_frame_gain(sys, spec), design_fbt(sys, spec).K, atol=1e-8)
    np.testing.assert_allclose(gain_from_spec(sys, spec), design_fbt(sys, spec).K, atol=1e-8)
