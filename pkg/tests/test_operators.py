import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evotherm.exceptions import NotSquare
from evotherm.linalg import normalize
from evotherm.operators import (
    Grid,
    build_Div,
    build_div,
    build_Grad,
    build_grad,
    identity,
    multiplication,
    skew_part,
    sym_part,
    trace_embedding,
)

from conftest import random_spd


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid((1,), (1.0,))
    with pytest.raises(ValueError):
        Grid((4,), (-1.0,))
    with pytest.raises(ValueError):
        Grid((2, 2, 2), (1.0, 1.0, 1.0))
    g = Grid((4, 3), (2.0, 0.9))
    assert g.spacing == (0.5, 0.3)
    assert g.n_nodes == 3 * 2 and g.n_cells == 12


def test_dof_counts_2d():
    g = Grid((4, 3), (1.0, 1.0))
    assert g.space("scalar-node").dof_count == 6
    assert g.space("vector-node").dof_count == 12
    assert g.space("vector-face").dof_count == 4 * 2 + 3 * 3
    assert g.space("symtensor-cell").dof_count == 36
    assert len(g.face_coordinates()) == g.space("vector-face").dof_count
    with pytest.raises(ValueError):
        g.space("tensor")


def test_grad_1d_hand_assembled():
    G = build_grad(Grid((4,), (1.0,))).dense()
    expected = 4.0 * np.array([[1, 0, 0], [-1, 1, 0], [0, -1, 1], [0, 0, -1]], dtype=float)
    assert np.array_equal(G, expected)
    assert build_grad(Grid((4,), (1.0,))).label == "grad°"


def test_grad_of_zero_is_zero(grid2d):
    assert not np.any(build_grad(grid2d) @ np.zeros(grid2d.n_nodes))


def test_grad_of_linear_function_1d():
    # f(x) = x matches the zero Dirichlet value at x = 0 only, so the last face sees f(1) := 0
    g = Grid((4,), (1.0,))
    faces = build_grad(g) @ g.node_coordinates()[:, 0]
    assert np.allclose(faces[:-1], 1.0, rtol=0, atol=1e-15)


@pytest.mark.parametrize("grid", [Grid((7,), (1.3,)), Grid((5, 4), (1.0, 0.7))])
def test_grad_div_pairing(grid, rng):
    grad, div = build_grad(grid), build_div(grid)
    wn, wf = grad.domain.weights, grad.codomain.weights
    for _ in range(100):
        u = rng.standard_normal(grid.n_nodes)
        q = rng.standard_normal(len(wf))
        lhs = np.sum(wf * (grad @ u) * q)
        rhs = -np.sum(wn * u * (div @ q))
        assert abs(lhs - rhs) <= 1e-13 * (1 + abs(lhs))
    # entrywise identity W_node div + grad^T W_face = 0
    assert not np.any(wn[:, None] * div.dense() + grad.dense().T * wf[None, :])


def test_div_of_zero_and_constant_flux():
    g = Grid((6,), (1.0,))
    div = build_div(g)
    assert not np.any(div @ np.zeros(6))
    assert np.allclose(div @ np.full(6, 2.5), 0.0, rtol=0, atol=1e-14)


def test_Grad_equals_grad_in_1d():
    g = Grid((6,), (2.0,))
    assert np.array_equal(build_Grad(g).dense(), build_grad(g).dense())
    assert np.array_equal(build_Div(g).dense(), build_div(g).dense())


def _interior_cells(grid):
    """Indices of cells whose four corners are interior nodes."""
    nx, ny = grid.cells
    return [ix + nx * iy for iy in range(1, ny - 1) for ix in range(1, nx - 1)]


def test_Grad_rigid_rotation_vanishes_2d():
    g = Grid((5, 6), (1.0, 1.2))
    xy = g.node_coordinates()
    u = np.concatenate([-xy[:, 1], xy[:, 0]])
    e = (build_Grad(g) @ u).reshape(3, -1)
    assert np.allclose(e[:, _interior_cells(g)], 0.0, rtol=0, atol=1e-13)


def test_Grad_uniaxial_stretch_2d():
    g = Grid((5, 6), (1.0, 1.2))
    xy = g.node_coordinates()
    u = np.concatenate([xy[:, 0], np.zeros(g.n_nodes)])
    e = (build_Grad(g) @ u).reshape(3, -1)[:, _interior_cells(g)]
    assert np.allclose(e[0], 1.0, rtol=0, atol=1e-13)
    assert np.allclose(e[1:], 0.0, rtol=0, atol=1e-13)


def test_Grad_shear_scaling_2d():
    # u = (y, 0): e12 = 1/2, stored as sqrt(2) * 1/2
    g = Grid((4, 4), (1.0, 1.0))
    xy = g.node_coordinates()
    u = np.concatenate([xy[:, 1], np.zeros(g.n_nodes)])
    e = (build_Grad(g) @ u).reshape(3, -1)[:, _interior_cells(g)]
    assert np.allclose(e[2], np.sqrt(2) / 2, rtol=0, atol=1e-13)


@pytest.mark.parametrize("grid", [Grid((7,), (1.0,)), Grid((4, 5), (1.0, 1.0))])
def test_Grad_Div_pairing(grid, rng):
    E, D = build_Grad(grid), build_Div(grid)
    wv, ws = E.domain.weights, E.codomain.weights
    for _ in range(100):
        u = rng.standard_normal(len(wv))
        s = rng.standard_normal(len(ws))
        lhs = np.sum(ws * (E @ u) * s)
        rhs = -np.sum(wv * u * (D @ s))
        assert abs(lhs - rhs) <= 1e-13 * (1 + abs(lhs))
    assert not np.any(D @ np.zeros(len(ws)))
    assert D.label == "Div"


def test_sym_skew_parts():
    M = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert np.array_equal(sym_part(M), [[0, 0.5], [0.5, 0]])
    assert np.array_equal(skew_part(M), [[0, 0.5], [-0.5, 0]])
    S = np.array([[1.0, 2.0], [2.0, 3.0]])
    assert np.array_equal(sym_part(S), S) and not np.any(skew_part(S))
    K = np.array([[0.0, 2.0], [-2.0, 0.0]])
    assert np.array_equal(skew_part(K), K) and not np.any(sym_part(K))
    with pytest.raises(NotSquare):
        sym_part(np.ones((2, 3)))
    with pytest.raises(NotSquare):
        skew_part(np.ones(3))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.sampled_from([1, 2]))
def test_sym_plus_skew_recovers_matrix(seed, dim):
    # each part is exactly (anti)symmetric; their sum is M up to one rounding per entry
    M = np.random.default_rng(seed).standard_normal((dim + 3, dim + 3))
    S, K = sym_part(M), skew_part(M)
    assert np.array_equal(S, S.T) and np.array_equal(K, -K.T)
    assert np.all(np.abs(S + K - M) <= 2 * np.finfo(float).eps * np.abs(M).max())


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), two_d=st.booleans())
def test_minus_div_kappa_grad_is_selfadjoint_psd(seed, two_d):
    rng = np.random.default_rng(seed)
    g = Grid((3, 4), (1.0, 1.0)) if two_d else Grid((6,), (1.0,))
    grad, div = build_grad(g), build_div(g)
    nf = grad.codomain.dof_count
    K = random_spd(rng, nf, cond=50.0)
    L = -div.dense() @ K @ grad.dense()
    Lh = normalize(L, grad.domain.weights, grad.domain.weights)
    assert np.linalg.norm(Lh - Lh.T) <= 1e-12 * np.linalg.norm(Lh)
    assert np.linalg.eigvalsh(0.5 * (Lh + Lh.T))[0] >= -1e-10 * np.linalg.norm(Lh)


def test_laplacian_second_order_convergence():
    errors = []
    for n in (16, 32, 64):
        g = Grid((n,), (1.0,))
        x = g.node_coordinates()[:, 0]
        lap = build_div(g) @ (build_grad(g) @ np.sin(np.pi * x))
        err = lap + np.pi**2 * np.sin(np.pi * x)
        errors.append(g.space("scalar-node").norm(err))
    rates = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all((rates > 1.9) & (rates < 2.1))


def test_operator_algebra(grid2d):
    grad = build_grad(grid2d)
    div = build_div(grid2d)
    lap = div @ grad
    assert lap.domain == grad.domain and lap.codomain == grad.domain
    assert np.array_equal(grad.adjoint().adjoint().dense(), grad.dense())
    assert np.array_equal(grad.adjoint().dense(), -div.dense())
    assert np.array_equal((2 * grad).dense(), 2 * grad.dense())
    assert np.array_equal((-grad).dense(), -grad.dense())
    with pytest.raises(ValueError):
        grad @ grad
    I = identity(grad.domain)
    assert np.array_equal((grad @ I).dense(), grad.dense())
    m = multiplication(grad.domain, 3.0)
    assert np.array_equal(m.dense(), 3.0 * np.eye(grid2d.n_nodes))
    assert grad.norm() == pytest.approx(np.linalg.norm(grad.dense(), 2), rel=1e-10)


def test_trace_embedding_shapes():
    g = Grid((4, 3), (1.0, 1.0))
    T = trace_embedding(g).dense()
    assert T.shape == (36, g.n_nodes)
    assert not np.any(T[24:])
    assert np.array_equal(T[:12], T[12:24])
