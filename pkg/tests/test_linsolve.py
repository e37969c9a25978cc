import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from phaseseg.errors import InvalidParameterError, NonConvergenceError, SingularityError
from phaseseg.grid import DiffusionMatrix, Grid, assemble_diffusion
from phaseseg.linsolve import SpdSystem, solve, solve_cg, solve_tridiagonal, thomas
from phaseseg.model import constant_mobility, rational_mobility


def zero_operator(n, one_d=True):
    return DiffusionMatrix(sp.csr_matrix((n, n)), np.zeros(n), np.zeros(n - 1) if one_d else None, ())


def dense_operator(M):
    M = np.asarray(M, dtype=float)
    return DiffusionMatrix(sp.csr_matrix(M), np.diag(M).copy(), None, ())


def test_identity_tridiagonal():
    r = np.array([1.0, -2.0, 3.5])
    sol = solve_tridiagonal(SpdSystem(zero_operator(3), np.ones(3), r))
    np.testing.assert_array_equal(sol.x, r)


def test_two_by_two():
    A = assemble_diffusion(Grid.uniform(2, 2.0), np.zeros(2), constant_mobility(1.0))
    # A = [[1,-1],[-1,1]]; adding I gives [[2,-1],[-1,2]]
    system = SpdSystem(A, np.ones(2), np.array([1.0, 0.0]))
    np.testing.assert_allclose(solve_tridiagonal(system).x, [2 / 3, 1 / 3], atol=1e-15)
    np.testing.assert_allclose(solve_cg(system).x, [2 / 3, 1 / 3], atol=1e-10)


def test_dense_three_cell_oracle():
    A = assemble_diffusion(Grid.uniform(3, 3.0), np.zeros(3), constant_mobility(1.0))
    system = SpdSystem(A, np.ones(3), np.array([1.0, 2.0, 3.0]))
    frozen = np.array([1.5, 2.0, 2.5])
    np.testing.assert_allclose(np.linalg.solve(system.dense(), system.rhs), frozen, atol=1e-15)
    np.testing.assert_allclose(solve(system).x, frozen, atol=1e-14)


def test_cg_identity_one_iteration():
    r = np.array([1.0, 2.0, -1.0, 4.0])
    sol = solve_cg(SpdSystem(zero_operator(4, False), np.ones(4), r))
    assert sol.iterations == 1
    np.testing.assert_allclose(sol.x, r)


def test_cg_diagonal():
    d = np.array([1.0, 4.0, 0.5, 10.0])
    r = np.array([2.0, 2.0, 2.0, 2.0])
    sol = solve_cg(SpdSystem(zero_operator(4, False), d, r))
    np.testing.assert_allclose(sol.x, r / d, rtol=1e-12)


def test_cg_zero_rhs():
    sol = solve_cg(SpdSystem(zero_operator(3, False), np.ones(3), np.zeros(3)))
    assert sol.iterations == 0 and not sol.x.any()


@settings(max_examples=30)
@given(seed=st.integers(0, 2**32 - 1))
def test_cg_random_spd_matches_dense(seed):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(8, 8))
    M = B @ B.T
    system = SpdSystem(dense_operator(M), rng.uniform(0.5, 2.0, 8), rng.normal(size=8),
                       tolerance=1e-13)
    oracle = np.linalg.solve(system.dense(), system.rhs)
    np.testing.assert_allclose(solve_cg(system).x, oracle, atol=1e-9 * max(1, np.abs(oracle).max()))


@settings(max_examples=30)
@given(n=st.integers(1, 60), seed=st.integers(0, 2**32 - 1), tau=st.floats(1e-4, 10))
def test_residual_contract(n, seed, tau):
    rng = np.random.default_rng(seed)
    grid = Grid.uniform(n)
    A = assemble_diffusion(grid, rng.uniform(0, 3, n), rational_mobility(1, 2))
    system = SpdSystem(A, rng.uniform(0.5, 3, n), rng.normal(size=n), scale=tau)
    b = np.linalg.norm(system.rhs)
    for method in ("tridiagonal", "cg"):
        sol = solve(system, method)
        assert np.linalg.norm(system.matvec(sol.x) - system.rhs) <= 1e-10 * b + 1e-14


def test_deterministic():
    rng = np.random.default_rng(3)
    grid = Grid((6, 5), (1.0, 1.0))
    A = assemble_diffusion(grid, rng.uniform(0, 3, 30), rational_mobility(1, 2))
    system = SpdSystem(A, np.full(30, 2.0), rng.normal(size=30), scale=0.01)
    assert np.array_equal(solve(system).x, solve(system).x)


def test_thomas_zero_pivot():
    with pytest.raises(SingularityError):
        thomas([1.0], [0.0, 1.0], [1.0], [1.0, 1.0])
    with pytest.raises(SingularityError):
        thomas([1.0], [1.0, 1.0], [1.0], [1.0, 1.0])


def test_cg_nonconvergence():
    A = assemble_diffusion(Grid.uniform(50), np.zeros(50), constant_mobility(1.0))
    system = SpdSystem(A, np.full(50, 1e-6), np.linspace(-1, 1, 50), tolerance=1e-14,
                       max_iterations=2)
    with pytest.raises(NonConvergenceError) as info:
        solve_cg(system)
    assert info.value.iterations == 2 and info.value.residual > 0


def test_system_guards():
    op = zero_operator(3)
    with pytest.raises(InvalidParameterError):
        SpdSystem(op, np.array([1.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(InvalidParameterError):
        SpdSystem(op, np.ones(2), np.zeros(2))
    with pytest.raises(InvalidParameterError):
        solve(SpdSystem(op, np.ones(3), np.zeros(3)), "lu")
    with pytest.raises(InvalidParameterError):
        solve_tridiagonal(SpdSystem(zero_operator(3, False), np.ones(3), np.zeros(3)))
