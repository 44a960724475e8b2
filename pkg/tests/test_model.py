import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from regtrack.errors import StructuralError, ValidationError
from regtrack.fixtures import random_plant
from regtrack.model import (DampedSinusoid, Exosystem, Exponential,
                            LinearSystem, Polynomial, Sinusoid,
                            TrajectorySpec, assemble_exosystem,
                            eval_derivative_stack, exo_output_derivatives,
                            realize_bohl, validate_system)


class TestLinearSystem:
    def test_double_integrator_passes(self, double_integrator):
        diag = validate_system(LinearSystem(np.zeros((2, 2)), [[0.0], [1.0]], [[1.0, 0.0]]))
        assert diag.checks == {"rank_B": True, "rank_C": True}
        assert validate_system(double_integrator).ok

    def test_duplicate_input_columns_fail(self):
        A = np.diag([1.0, 2.0, 3.0])
        B = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 1.0]])
        C = np.array([[1.0, 0, 0], [0, 1.0, 0]])
        diag = validate_system(LinearSystem(A, B, C))
        assert not diag.ok
        assert not diag.checks["rank_B"]
        assert any("rank(B) < m" in msg for msg in diag.messages)

    def test_random_fixture_passes(self, rng):
        sys = random_plant(rng, n=4, m=2)
        diag = validate_system(sys)
        assert diag.ok
        assert np.linalg.matrix_rank(sys.B) == 2 and np.linalg.matrix_rank(sys.C) == 2

    @pytest.mark.parametrize("A,B,C", [
        (np.zeros((2, 3)), np.zeros((2, 1)), np.zeros((1, 2))),
        (np.zeros((2, 2)), np.zeros((3, 1)), np.zeros((1, 2))),
        (np.zeros((2, 2)), np.zeros((2, 1)), np.zeros((1, 3))),
    ])
    def test_dimension_mismatch(self, A, B, C):
        with pytest.raises(StructuralError):
            LinearSystem(A, B, C)

    def test_non_square_rejected(self):
        with pytest.raises(StructuralError, match="not square"):
            LinearSystem(np.zeros((3, 3)), np.eye(3)[:, :2], np.eye(3)[:1])

    def test_immutable(self, double_integrator):
        with pytest.raises(ValueError):
            double_integrator.A[0, 0] = 5.0

    def test_uncontrollable_reported(self):
        diag = validate_system(LinearSystem(np.eye(2), [[1.0], [1.0]], [[1.0, 0.0]]))
        assert not diag.controllable and not diag.ok


class TestAssembleExosystem:
    def test_single_block(self):
        S = np.array([[0.0, 1.0], [-1.0, 0.0]])
        exo = assemble_exosystem([(S, [1.0, 0.0])], [0.0, 1.0])
        assert exo.S.shape == (2, 2) and exo.Q.shape == (1, 2)
        np.testing.assert_array_equal(exo.S, S)

    def test_two_blocks_block_diagonal(self):
        S1 = np.array([[0.0]])
        S2 = np.array([[0.0, 2.0], [-2.0, 0.0]])
        exo = assemble_exosystem([(S1, [1.0]), (S2, [1.0, 0.5])], np.zeros(3))
        assert exo.S.shape == (3, 3)
        assert np.all(exo.S[:1, 1:] == 0) and np.all(exo.S[1:, :1] == 0)
        np.testing.assert_array_equal(exo.Q, [[1.0, 0, 0], [0, 1.0, 0.5]])

    def test_width_mismatch(self):
        with pytest.raises(ValidationError, match="width mismatch"):
            assemble_exosystem([(np.zeros((1, 1)), [1.0, 2.0])], [0.0])

    def test_block_count_mismatch(self):
        with pytest.raises(ValidationError, match="m=2"):
            assemble_exosystem([(np.zeros((1, 1)), [1.0])], [0.0], m=2)

    def test_negative_real_part_warns(self):
        with pytest.warns(UserWarning, match="negative real part"):
            exo = assemble_exosystem([(np.array([[-1.0]]), [1.0])], [1.0])
        assert exo.r == 1

    @given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**31))
    def test_blocks_round_trip(self, sizes, seed):
        rng = np.random.default_rng(seed)
        blocks = [(rng.standard_normal((r, r)), rng.standard_normal(r)) for r in sizes]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            exo = assemble_exosystem(blocks, np.zeros(sum(sizes)))
        for (S, Q), (S2, Q2) in zip(blocks, exo.blocks):
            np.testing.assert_array_equal(S, S2)
            np.testing.assert_array_equal(Q, Q2)


class TestRealizeBohl:
    def test_constant(self):
        exo = realize_bohl(TrajectorySpec(([Polynomial((1.0,))],)))
        np.testing.assert_array_equal(exo.S, [[0.0]])
        np.testing.assert_array_equal(exo.Q, [[1.0]])
        np.testing.assert_array_equal(exo.omega0, [1.0])

    def test_sine(self):
        exo = realize_bohl(TrajectorySpec(([Sinusoid(1.0)],)))
        np.testing.assert_array_equal(exo.S, [[0.0, 1.0], [-1.0, 0.0]])
        np.testing.assert_array_equal(exo.Q, [[1.0, 0.0]])
        np.testing.assert_allclose(exo.omega0, [0.0, 1.0])
        t = np.linspace(0, 10, 41)
        y = [exo.Q @ expm(exo.S * ti) @ exo.omega0 for ti in t]
        np.testing.assert_allclose(np.ravel(y), np.sin(t), atol=1e-12)

    def test_t_squared(self):
        exo = realize_bohl(TrajectorySpec(([Polynomial((0.0, 0.0, 1.0))],)))
        np.testing.assert_array_equal(exo.S, np.eye(3, k=1))
        np.testing.assert_array_equal(exo.Q, [[1.0, 0.0, 0.0]])
        np.testing.assert_array_equal(exo.omega0, [0.0, 0.0, 2.0])

    def test_unsupported_kind(self):
        with pytest.raises(ValidationError, match="unsupported"):
            realize_bohl(TrajectorySpec((["ramp"],)))

    def test_block_per_output(self):
        spec = TrajectorySpec(([Sinusoid(2.0), Polynomial((1.0,))], [Exponential(0.5)]))
        exo = realize_bohl(spec)
        assert exo.block_sizes == (3, 1)


terms = st.one_of(
    st.builds(Polynomial, st.lists(st.floats(-2, 2), min_size=1, max_size=4).map(tuple)),
    st.builds(Exponential, st.floats(-1, 0.5), st.floats(-2, 2)),
    st.builds(Sinusoid, st.floats(0.2, 3), st.floats(-2, 2), st.floats(-3, 3)),
    st.builds(DampedSinusoid, st.floats(-1, 0.3), st.floats(0.2, 3), st.floats(-2, 2),
              st.floats(-3, 3)),
)
specs = st.lists(st.lists(terms, min_size=1, max_size=3), min_size=1, max_size=2).map(
    lambda o: TrajectorySpec(tuple(o)))


@given(specs)
def test_realization_reproduces_signal(spec):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exo = realize_bohl(spec)
    for t in np.linspace(0.0, 3.0, 7):
        y = exo.Q @ expm(exo.S * t) @ exo.omega0
        np.testing.assert_allclose(y, spec(t), atol=1e-9 * (1 + np.abs(spec(t)).max()))


@given(specs, st.integers(1, 4), st.floats(0.0, 2.0))
def test_derivatives_match_central_differences(spec, order, t):
    h = 1e-4
    stack = lambda tt: eval_derivative_stack(spec, [order] * spec.m, tt).values()
    mid = stack(t)
    fd = (stack(t + h) - stack(t - h)) / (2 * h)
    scale = 1 + np.abs(mid).max() + np.abs(stack(t + h)).max()
    np.testing.assert_allclose(mid[:, 1:], fd[:, :-1], atol=1e-6 * scale)


@given(specs, st.integers(0, 3))
def test_derivatives_match_exosystem(spec, order):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        exo = realize_bohl(spec)
    Y = exo_output_derivatives(exo, [order] * spec.m)
    for t in (0.0, 0.7):
        w = expm(exo.S * t) @ exo.omega0
        ref = eval_derivative_stack(spec, [order] * spec.m, t).flat()
        np.testing.assert_allclose(Y @ w, ref, atol=1e-9 * (1 + np.abs(ref).max()))


class TestDerivativeStack:
    def test_sine_at_zero(self):
        v = eval_derivative_stack(TrajectorySpec(([Sinusoid(1.0)],)), [2], 0.0).values()
        np.testing.assert_allclose(v[0], [0.0, 1.0, 0.0], atol=1e-15)

    def test_constant(self):
        spec = TrajectorySpec(([Polynomial((5.0,))],))
        for t in (0.0, 1.3, -4.0):
            np.testing.assert_array_equal(eval_derivative_stack(spec, [3], t).values()[0],
                                          [5.0, 0.0, 0.0, 0.0])

    def test_t_squared(self):
        spec = TrajectorySpec(([Polynomial((0.0, 0.0, 1.0))],))
        np.testing.assert_array_equal(eval_derivative_stack(spec, [2], 3.0).values()[0],
                                      [9.0, 6.0, 2.0])

    def test_orders_length_checked(self):
        with pytest.raises(ValidationError):
            eval_derivative_stack(TrajectorySpec(([Sinusoid(1.0)],)), [1, 1], 0.0)

    def test_vectorised_time(self):
        spec = TrajectorySpec(([Sinusoid(2.0, 3.0, 0.5)],))
        t = np.linspace(0, 1, 5)
        v = eval_derivative_stack(spec, [1], t).stacks[0]
        np.testing.assert_allclose(v[1], 6.0 * np.cos(2 * t + 0.5))
        assert math.isclose(spec(0.25)[0], 3.0 * math.sin(1.0))


def test_exosystem_non_block_diagonal_has_no_blocks():
    exo = Exosystem(np.eye(2), np.ones((1, 2)), np.zeros(2))
    with pytest.raises(StructuralError):
        exo.blocks
