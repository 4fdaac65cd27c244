import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import ergobounds as eb
from ergobounds.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    InputError,
    NotAContractionError,
    PreconditionError,
    UnsupportedShapeError,
)


def vec_strategy(n, lo=-10.0, hi=10.0):
    return st.lists(
        st.floats(min_value=lo, max_value=hi, allow_nan=False), min_size=n, max_size=n
    )


# ---------------------------------------------------------------------------
# norms and the mass functional


def test_classical_norm():
    assert eb.norm(eb.Classical(2), [0.3, -0.3]) == pytest.approx(0.6, abs=1e-15)


def test_direct_sum_norm():
    assert eb.norm(eb.DirectSum(2, "l2"), [0.0, 3.0, 4.0]) == pytest.approx(5.0)
    assert eb.norm(eb.DirectSum(2, "l1"), [0.5, 0.1, 0.2]) == pytest.approx(0.5)
    assert eb.norm(eb.DirectSum(2, "linf"), [0.1, 0.3, -0.4]) == pytest.approx(0.4)


def test_quantum_norm_matches_eigenvalue_oracle():
    space = eb.Quantum(2)
    x = eb.hermitian_to_coords(np.diag([0.5, -0.5]), 2)
    oracle = float(np.abs(np.linalg.eigvalsh(np.diag([0.5, -0.5]))).sum())
    assert eb.norm(space, x) == pytest.approx(oracle, abs=1e-12)
    assert oracle == 1.0


def test_norm_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        eb.norm(eb.Classical(2), [1.0, 2.0, 3.0])


@given(vec_strategy(3), vec_strategy(3), st.floats(min_value=-5, max_value=5, allow_nan=False))
def test_classical_norm_is_a_norm(x, y, c):
    space = eb.Classical(3)
    x, y = np.array(x), np.array(y)
    assert eb.norm(space, c * x) == pytest.approx(abs(c) * eb.norm(space, x), rel=1e-12, abs=1e-12)
    assert eb.norm(space, x + y) <= eb.norm(space, x) + eb.norm(space, y) + 1e-12


def _random_cone_pair(space, rng):
    if isinstance(space, eb.Classical):
        return rng.uniform(0, 1, space.n), rng.uniform(0, 1, space.n)
    if isinstance(space, eb.DirectSum):
        def point():
            v = rng.standard_normal(space.inner_dim)
            v *= rng.uniform(0, 1) / max(np.linalg.norm(v), 1e-12)
            return np.concatenate([[1.0], v]) * rng.uniform(0.1, 2.0)
        return point(), point()
    def psd():
        a = rng.standard_normal((space.d, space.d)) + 1j * rng.standard_normal((space.d, space.d))
        return eb.hermitian_to_coords(a @ a.conj().T, space.d)
    return psd(), psd()


@pytest.mark.parametrize(
    "space", [eb.Classical(4), eb.DirectSum(3, "l2"), eb.DirectSum(2, "l1"), eb.Quantum(3)]
)
def test_norm_additive_on_cone(space):
    rng = np.random.default_rng(42)
    for _ in range(25):
        x, y = _random_cone_pair(space, rng)
        lhs = eb.norm(space, x + y)
        rhs = eb.norm(space, x) + eb.norm(space, y)
        assert abs(lhs - rhs) < 1e-12 * max(1.0, rhs)


def test_functional_matches_vector():
    for space in (eb.Classical(3), eb.DirectSum(2, "l2"), eb.Quantum(2)):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(space.ambient_dim)
        assert eb.functional(space, x) == pytest.approx(
            float(eb.functional_vector(space) @ x), abs=1e-12
        )


# ---------------------------------------------------------------------------
# base membership


def test_is_in_base_classical():
    space = eb.Classical(2)
    assert eb.is_in_base(space, [0.5, 0.5])
    assert not eb.is_in_base(space, [0.6, 0.5])
    assert not eb.is_in_base(space, [1.5, -0.5])


def test_is_in_base_quantum_maximally_mixed():
    space = eb.Quantum(2)
    coords = eb.hermitian_to_coords(0.5 * np.eye(2), 2)
    assert eb.is_in_base(space, coords)


def test_is_in_base_direct_sum():
    space = eb.DirectSum(2, "l2")
    assert eb.is_in_base(space, [1.0, 0.6, 0.8])
    assert not eb.is_in_base(space, [1.0, 0.9, 0.9])


# ---------------------------------------------------------------------------
# zero-mass decomposition


def test_decompose_classical():
    split = eb.decompose_zero_sum(eb.Classical(2), [0.3, -0.3])
    assert split.xi == pytest.approx(0.3)
    np.testing.assert_allclose(split.u, [1.0, 0.0])
    np.testing.assert_allclose(split.v, [0.0, 1.0])


def test_decompose_quantum_diagonal():
    space = eb.Quantum(2)
    x = eb.hermitian_to_coords(np.diag([0.5, -0.5]), 2)
    split = eb.decompose_zero_sum(space, x)
    assert split.xi == pytest.approx(0.5)
    u_matrix = eb.coords_to_hermitian(split.u, 2)
    v_matrix = eb.coords_to_hermitian(split.v, 2)
    np.testing.assert_allclose(u_matrix, np.diag([1.0, 0.0]), atol=1e-12)
    np.testing.assert_allclose(v_matrix, np.diag([0.0, 1.0]), atol=1e-12)


def test_decompose_direct_sum_structure():
    space = eb.DirectSum(2, "l2")
    x = np.array([0.0, 0.6, 0.8])
    split = eb.decompose_zero_sum(space, x)
    # unit fibre direction lifted to antipodal base points; xi = |v|/2 makes
    # the reconstruction exact and saturates the cone constant
    np.testing.assert_allclose(split.u, [1.0, 0.6, 0.8], atol=1e-12)
    np.testing.assert_allclose(split.v, [1.0, -0.6, -0.8], atol=1e-12)
    assert split.xi == pytest.approx(0.5)
    np.testing.assert_allclose(split.xi * (split.u - split.v), x, atol=1e-12)
    lam = space.lambda_generating
    assert split.xi <= 0.5 * lam * eb.norm(space, x) + 1e-12


@pytest.mark.parametrize(
    "space", [eb.Classical(5), eb.DirectSum(3, "l2"), eb.DirectSum(2, "linf"), eb.Quantum(3)]
)
def test_decomposition_soundness(space):
    rng = np.random.default_rng(7)
    fvec = eb.functional_vector(space)
    for _ in range(25):
        x = rng.standard_normal(space.ambient_dim)
        if isinstance(space, eb.DirectSum):
            x[0] = 0.0
        else:
            x -= fvec * (fvec @ x) / (fvec @ fvec)
        if eb.norm(space, x) < 1e-9:
            continue
        split = eb.decompose_zero_sum(space, x)
        np.testing.assert_allclose(split.xi * (split.u - split.v), x, atol=1e-10)
        assert eb.is_in_base(space, split.u, tol=1e-9)
        assert eb.is_in_base(space, split.v, tol=1e-9)
        assert split.xi <= 0.5 * space.lambda_generating * eb.norm(space, x) + 1e-12


def test_decompose_rejects_nonzero_mass():
    with pytest.raises(PreconditionError):
        eb.decompose_zero_sum(eb.Classical(2), [0.3, -0.2])


def test_decompose_rejects_zero():
    with pytest.raises(DegenerateInputError):
        eb.decompose_zero_sum(eb.Classical(2), [0.0, 0.0])


# ---------------------------------------------------------------------------
# operator validation


def test_validate_markov_classical():
    space = eb.Classical(2)
    good = eb.LinearMap(space, [[0.7, 0.2], [0.3, 0.8]])
    assert eb.validate_markov(good).passed
    bad = eb.LinearMap(space, [[1.1, 0.0], [-0.1, 1.0]])
    report = eb.validate_markov(bad)
    assert not report.passed
    assert "positivity" in report.failures


def test_validate_markov_quantum_depolarizing():
    space = eb.Quantum(2)
    channel = eb.LinearMap(space, np.diag([1.0, 0.75, 0.75, 0.75]))
    report = eb.validate_markov(channel)
    assert report.passed
    # choi spectrum oracle: eigenvalues of the library's choi matrix must be
    # the known depolarizing spectrum {1 - 3p/4 (x1), p/4 (x3)} scaled by d
    choi = eb.choi_matrix(space, channel.matrix)
    eigs = np.sort(np.linalg.eigvalsh(choi))
    np.testing.assert_allclose(eigs, [0.125, 0.125, 0.125, 1.625], atol=1e-12)


def test_validate_markov_quantum_rejects_transpose():
    # the transpose map is positive and trace preserving but not completely
    # positive, so the choi check must fail it
    space = eb.Quantum(2)
    transpose = eb.LinearMap(space, np.diag([1.0, 1.0, 1.0, -1.0]))
    report = eb.validate_markov(transpose)
    assert not report.passed
    assert report.failures == ("choi_psd",)


def test_validate_markov_direct_sum():
    space = eb.DirectSum(2, "l2")
    theta = 1.0
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    block = np.zeros((3, 3))
    block[0, 0] = 1.0
    block[1:, 1:] = 0.9 * rot
    assert eb.validate_markov(eb.LinearMap(space, block)).passed
    expanding = block.copy()
    expanding[1:, 1:] = 1.2 * rot
    assert not eb.validate_markov(eb.LinearMap(space, expanding)).passed


def test_validate_generator_classical():
    space = eb.Classical(2)
    assert eb.validate_generator(eb.LinearMap(space, [[-1.0, 1.0], [1.0, -1.0]])).passed
    report = eb.validate_generator(eb.LinearMap(space, [[-1.0, -0.5], [1.0, 0.5]]))
    assert not report.passed
    assert "offdiagonal_nonnegative" in report.failures


def test_validate_generator_quantum_dephasing():
    # coordinates of rho -> sigma_z rho sigma_z - rho kill the two
    # off-diagonal directions and fix the diagonal ones
    space = eb.Quantum(2)
    gen = eb.LinearMap(space, np.diag([0.0, 0.0, -2.0, -2.0]), eb.Role.GENERATOR)
    report = eb.validate_generator(gen, probe_times=(0.1, 1.0, 10.0))
    assert report.passed
    assert report.certified_at == (0.1, 1.0, 10.0)


def test_validate_generator_rejects_mass_leak():
    space = eb.Quantum(2)
    leak = np.diag([-0.1, 0.0, 0.0, 0.0])
    report = eb.validate_generator(eb.LinearMap(space, leak))
    assert not report.passed
    assert "mass_annihilation" in report.failures


def test_markov_map_factory_raises():
    with pytest.raises(InputError):
        eb.markov_map(eb.Classical(2), [[1.1, 0.0], [-0.1, 1.0]])


# ---------------------------------------------------------------------------
# lifting


def test_lift_identity():
    lifted = eb.lift_contraction("l2", np.eye(2))
    assert isinstance(lifted.space, eb.DirectSum)
    np.testing.assert_allclose(lifted.matrix, np.eye(3))
    assert eb.validate_markov(lifted).passed


def test_lift_scaled_rotation():
    theta = 1.0
    rot = 0.5 * np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    lifted = eb.lift_contraction("l2", rot)
    assert eb.validate_markov(lifted).passed
    np.testing.assert_allclose(lifted.matrix[1:, 1:], rot)


def test_lift_rejects_expansion():
    with pytest.raises(NotAContractionError):
        eb.lift_contraction("l2", 1.2 * np.eye(2))


# ---------------------------------------------------------------------------
# operator norms


def test_operator_norm_classical_examples():
    space = eb.Classical(2)
    assert eb.operator_norm(space, [[0.5, -0.2], [0.1, 0.3]]) == pytest.approx(0.6)
    assert eb.operator_norm(space, [[-0.1, -0.1], [0.1, 0.1]]) == pytest.approx(0.2)


@pytest.mark.parametrize(
    "space", [eb.Classical(3), eb.DirectSum(2, "l2"), eb.Quantum(2)]
)
def test_operator_norm_identity(space):
    assert eb.operator_norm(space, np.eye(space.ambient_dim)) == pytest.approx(1.0, abs=1e-12)


def test_operator_norm_markov_is_one():
    rng = np.random.default_rng(5)
    space = eb.Classical(4)
    from conftest import random_stochastic

    for _ in range(10):
        assert eb.operator_norm(space, random_stochastic(rng, 4)) == pytest.approx(
            1.0, abs=1e-9
        )


def test_operator_norm_direct_sum_block():
    space = eb.DirectSum(2, "l2")
    block = np.zeros((3, 3))
    block[0, 0] = 0.5
    block[1:, 1:] = [[0.0, -0.8], [0.8, 0.0]]
    assert eb.operator_norm(space, block) == pytest.approx(0.8)
    coupled = block.copy()
    coupled[1, 0] = 0.3
    with pytest.raises(UnsupportedShapeError):
        eb.operator_norm(space, coupled)


def test_operator_norm_quantum_is_lower_bound():
    space = eb.Quantum(2)
    estimate = eb.operator_norm_estimate(space, np.eye(4), n_samples=128, seed=1)
    assert not estimate.exact
    assert estimate.n_samples == 128
    assert estimate.value == pytest.approx(1.0, abs=1e-12)


def test_map_matrix_from_action_depolarizing():
    p = 0.25

    def action(rho):
        return (1 - p) * rho + p * np.trace(rho) * np.eye(2) / 2

    matrix = eb.map_matrix_from_action(2, action)
    np.testing.assert_allclose(matrix, np.diag([1.0, 0.75, 0.75, 0.75]), atol=1e-12)


def test_linear_map_shape_check():
    with pytest.raises(DimensionMismatchError):
        eb.LinearMap(eb.Classical(2), np.eye(3))
    frozen = eb.LinearMap(eb.Classical(2), np.eye(2))
    with pytest.raises(ValueError):
        frozen.matrix[0, 0] = 2.0
