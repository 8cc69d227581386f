import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vrrw import (
    BoundaryJacobianError,
    DegenerateSupportError,
    FlowTrajectory,
    ModelParameters,
    ReducibilityError,
    complete_graph,
    fundamental_matrix,
    integrate_flow,
    invariant_measure,
    jacobian,
    lyapunov,
    lyapunov_derivative,
    tangent_eigenvalues,
    transition_kernel,
    vector_field,
)
from vrrw.graph import InteractionMatrix
from vrrw.dynamics import tangent_basis


P3 = ModelParameters.for_complete_graph(3, 1.5)
V = np.array([0.5, 0.3, 0.2])


def random_interior(rng, n):
    v = rng.dirichlet(np.ones(n))
    return np.clip(v, 1e-3, None) / np.clip(v, 1e-3, None).sum()


# hand-computed reference values at v=(0.5,0.3,0.2), alpha=1.5, complete graph
def test_reference_point_oracles():
    assert lyapunov(P3, V) == pytest.approx(0.20882893050298823, abs=1e-16)
    pi = invariant_measure(P3, V)
    want_pi = (0.42962211499479591, 0.34857090190752432, 0.22180698309767982)
    np.testing.assert_allclose(pi, want_pi, rtol=0, atol=1e-15)
    f = vector_field(P3, V)
    want_f = (-0.070377885005204088, 0.048570901907524333, 0.021806983097679811)
    np.testing.assert_allclose(f, want_f, rtol=0, atol=1e-15)
    assert lyapunov_derivative(P3, V) == pytest.approx(0.012622199639149947, abs=1e-15)


def test_kernel_rows_at_reference_point():
    k0 = transition_kernel(P3, 0.0, V).entries
    np.testing.assert_allclose(
        k0[0], (0.0, 0.64752955491057529, 0.35247044508942471), rtol=0, atol=1e-15
    )
    keps = transition_kernel(P3, 0.01, V).entries
    np.testing.assert_allclose(
        keps[0], (0.0, 0.6420325976390967, 0.35796740236090319), rtol=0, atol=1e-15
    )


@given(
    st.integers(min_value=2, max_value=7),
    st.floats(min_value=1.05, max_value=4.0),
    st.floats(min_value=0.0, max_value=0.2),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_kernel_rows_are_stochastic(n, alpha, eps, seed):
    p = ModelParameters.for_complete_graph(n, alpha)
    v = np.random.default_rng(seed).dirichlet(np.ones(n))
    k = transition_kernel(p, eps, v).entries
    np.testing.assert_allclose(k.sum(axis=1), 1.0, rtol=0, atol=1e-12)
    assert np.all(k >= 0)


@given(
    st.integers(min_value=2, max_value=6),
    st.floats(min_value=1.05, max_value=4.0),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_detailed_balance_against_closed_form(n, alpha, seed):
    p = ModelParameters.for_complete_graph(n, alpha)
    v = random_interior(np.random.default_rng(seed), n)
    pi = np.asarray(invariant_measure(p, v))
    k = transition_kernel(p, 0.0, v).entries
    flux = pi[:, None] * k
    closed = p.matrix.entries * np.outer(v**alpha, v**alpha) / lyapunov(p, v)
    np.testing.assert_allclose(flux, closed, rtol=0, atol=1e-12)
    np.testing.assert_allclose(flux, flux.T, rtol=0, atol=1e-12)
    # pi is invariant for the kernel
    np.testing.assert_allclose(pi @ k, pi, rtol=0, atol=1e-12)


def test_epsilon_kernel_is_a_shifted_zero_epsilon_kernel():
    # on a homogeneous graph the finite-step smoothing folds into the state
    n, eps = 3, 0.01
    shifted = (V + eps) / (1 + n * eps)
    a = transition_kernel(P3, eps, V).entries
    b = transition_kernel(P3, 0.0, shifted).entries
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_kernel_rejects_dead_rows():
    with pytest.raises(DegenerateSupportError):
        transition_kernel(P3, 0.0, np.array([1.0, 0.0, 0.0]))


def test_lyapunov_scale_invariance_in_log_regime():
    # tiny coordinates route through the rescaled power path
    v = np.array([1e-280, 0.5, 0.5 - 1e-280])
    h = lyapunov(ModelParameters.for_complete_graph(3, 3.0), v)
    assert np.isfinite(h) and h > 0


def test_vector_field_vanishes_at_face_centers():
    for n in (2, 3, 5):
        p = ModelParameters.for_complete_graph(n, 1.7)
        center = np.full(n, 1.0 / n)
        np.testing.assert_allclose(vector_field(p, center), 0, rtol=0, atol=1e-15)
    face = np.array([0.5, 0.5, 0.0])
    np.testing.assert_allclose(vector_field(P3, face), 0, rtol=0, atol=1e-15)


def test_vector_field_preserves_faces_exactly():
    v = np.array([0.6, 0.4, 0.0])
    f = np.asarray(vector_field(P3, v))
    assert f[2] == 0.0


def test_vector_field_sums_to_zero():
    rng = np.random.default_rng(3)
    for n in (2, 3, 4, 6):
        p = ModelParameters.for_complete_graph(n, 2.2)
        for _ in range(20):
            f = np.asarray(vector_field(p, rng.dirichlet(np.ones(n))))
            assert abs(f.sum()) < 1e-14


@given(
    st.integers(min_value=3, max_value=5),
    st.floats(min_value=1.05, max_value=3.5),
    st.integers(min_value=0, max_value=2**32 - 1),
)
def test_lyapunov_derivative_is_nonnegative_and_strict(n, alpha, seed):
    p = ModelParameters.for_complete_graph(n, alpha)
    v = np.random.default_rng(seed).dirichlet(np.ones(n))
    d = lyapunov_derivative(p, v)
    assert d >= -1e-12
    if np.max(np.abs(vector_field(p, v))) > 1e-8:
        assert d > 0


def test_lyapunov_derivative_matches_gradient_chain_rule():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(3, 6))
        p = ModelParameters.for_complete_graph(n, float(rng.uniform(1.1, 3.0)))
        v = random_interior(rng, n)
        f = np.asarray(vector_field(p, v))
        h = 1e-7
        fd = (lyapunov(p, v + h * f) - lyapunov(p, v - h * f)) / (2 * h)
        assert lyapunov_derivative(p, v) == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_jacobian_matches_central_differences():
    # probe along zero-sum directions so perturbed points stay on the simplex
    rng = np.random.default_rng(7)
    p = ModelParameters.for_complete_graph(4, 1.7)
    basis = tangent_basis(4)
    h = 1e-7
    for _ in range(20):
        v = random_interior(rng, 4)
        j = jacobian(p, v)
        for col in range(basis.shape[1]):
            d = basis[:, col]
            fd = (
                np.asarray(vector_field(p, v + h * d))
                - np.asarray(vector_field(p, v - h * d))
            ) / (2 * h)
            np.testing.assert_allclose(j @ d, fd, rtol=0, atol=1e-6)


def test_jacobian_is_symmetrizable_at_interior_points():
    rng = np.random.default_rng(19)
    for _ in range(30):
        n = int(rng.integers(3, 6))
        p = ModelParameters.for_complete_graph(n, float(rng.uniform(1.1, 3.0)))
        v = np.full(n, 1.0 / n)
        j = jacobian(p, v)
        s = j * v[None, :]
        np.testing.assert_allclose(s, s.T, rtol=0, atol=1e-10)


def test_boundary_jacobian_rules():
    face_point = np.array([0.5, 0.5, 0.0])
    p_steep = ModelParameters.for_complete_graph(3, 2.5)
    j = jacobian(p_steep, face_point)
    # directions pointing off the face decay at unit rate
    d = np.array([0.0, 0.0, 1.0]) - face_point
    np.testing.assert_allclose(j @ d, -d, rtol=0, atol=1e-14)
    with pytest.raises(BoundaryJacobianError):
        jacobian(P3, face_point)  # alpha<2 differentiation blows up at 0


def test_tangent_eigenvalues_center_values():
    for n in (2, 3, 5, 8):
        for alpha in (1.1, 2.0, 3.0):
            p = ModelParameters.for_complete_graph(n, alpha)
            v = np.full(n, 1.0 / n)
            eig = tangent_eigenvalues(jacobian(p, v))
            want = -1 + alpha * (n - 2) / (n - 1)
            np.testing.assert_allclose(eig, want, rtol=0, atol=1e-9)
            assert len(eig) == n - 1


def test_flow_increases_lyapunov_and_stays_on_simplex():
    traj = integrate_flow(P3, np.array([0.62, 0.21, 0.17]), t_end=10.0)
    h = np.asarray(traj.lyapunov_values)
    assert np.all(np.diff(h) >= -1e-9)
    states = np.asarray(traj.states)
    assert np.all(states >= 0)
    np.testing.assert_allclose(states.sum(axis=1), 1.0, rtol=0, atol=1e-9)


def test_flow_near_uniform_start_reaches_center_below_threshold():
    traj = integrate_flow(P3, np.array([0.34, 0.33, 0.33]), t_end=40.0)
    np.testing.assert_allclose(traj.states[-1], np.full(3, 1 / 3), rtol=0, atol=1e-6)


def test_flow_keeps_initial_zeros():
    traj = integrate_flow(P3, np.array([0.6, 0.4, 0.0]), t_end=5.0)
    assert np.all(np.asarray(traj.states)[:, 2] == 0.0)


def test_flow_trajectory_csv_round_trip(tmp_path):
    traj = integrate_flow(P3, np.array([0.5, 0.3, 0.2]), t_end=0.1)
    path = tmp_path / "flow.csv"
    traj.to_csv(path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (len(traj.times), 5)
    np.testing.assert_array_equal(data[:, 1:4], np.asarray(traj.states))


def test_fundamental_matrix_solves_poisson_equation():
    rng = np.random.default_rng(23)
    for n in (3, 4, 5):
        p = ModelParameters.for_complete_graph(n, 1.5)
        v = random_interior(rng, n)
        k = transition_kernel(p, 0.0, v).entries
        pi = np.asarray(invariant_measure(p, v))
        q = fundamental_matrix(p, v)
        g = rng.normal(size=n)
        centered = g - pi @ g
        lhs = (np.eye(n) - k) @ (q @ g)
        np.testing.assert_allclose(lhs, centered, rtol=0, atol=1e-10)
        assert abs(pi @ (q @ g)) < 1e-12


def test_fundamental_matrix_rejects_disconnected_chains():
    # validate() never admits a disconnected matrix, so build one raw to
    # exercise the guard on the solve
    blocks = np.zeros((4, 4))
    blocks[0, 1] = blocks[1, 0] = 1.0
    blocks[2, 3] = blocks[3, 2] = 1.0
    matrix = InteractionMatrix(size=4, entries=blocks, row_sum=1.0)
    p = ModelParameters(matrix=matrix, alpha=1.5)
    with pytest.raises(ReducibilityError):
        fundamental_matrix(p, np.full(4, 0.25))


def test_model_parameters_validation():
    with pytest.raises(Exception):
        ModelParameters.for_complete_graph(3, 1.0)  # need alpha > 1
    with pytest.raises(Exception):
        ModelParameters.for_complete_graph(3, 2.0, loop_c=-0.1)


def test_loop_model_effective_matrix():
    p = ModelParameters.for_complete_graph(3, 2.0, loop_c=0.5)
    assert np.all(np.diag(p.effective_matrix.entries) == 0.5)
    assert np.all(np.diag(p.matrix.entries) == 0.0)
