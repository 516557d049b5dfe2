import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import normal_equations
from rfpde.assembly import (
    Block,
    LinearSystem,
    OperatorSpec,
    Solution,
    Term,
    assemble_block,
    assemble_system,
    evaluate_solution,
    identity,
    l2_relative_error,
    laplacian,
    min_norm_lstsq,
    solve_min_norm_lsq,
)
from rfpde.errors import DegenerateReference, InvalidArgument
from rfpde.features import FeatureNetwork, eval_derivative_features, eval_features, init_network


def _net(w, b, act="sine"):
    return FeatureNetwork(np.atleast_2d(np.asarray(w, float)), np.atleast_1d(np.asarray(b, float)), 1.0, act)


def test_poisson_entry_by_hand():
    net = _net([[1.0, 0.0]], [0.0])
    block, rhs = assemble_block({"u": net}, laplacian(2, -1.0), np.array([[math.pi / 2, 0.0]]))
    assert block[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert rhs.tolist() == [0.0]


def test_dirichlet_block_equals_features():
    net = init_network(2, 7, 3.0, "tanh", seed=2)
    x = np.random.default_rng(0).uniform(0, 1, (5, 2))
    block, rhs = assemble_block({"u": net}, identity(), x, data=lambda p, n: p[:, 0])
    assert np.array_equal(block, eval_features(net, x))
    assert np.array_equal(rhs, x[:, 0])


def test_block_matches_term_by_term_sum():
    # grouped evaluation against a plain per-term sum, with varying coefficients
    net = init_network(2, 9, 2.0, "swish", seed=4)
    x = np.random.default_rng(1).uniform(-1, 1, (6, 2))
    n = np.random.default_rng(2).normal(size=(6, 2))
    spec = OperatorSpec((
        Term(2.0, (2, 0)), Term(-3.0, (0, 2)), Term(lambda p, nn: nn[:, 0], (1, 1), uses_normals=True),
        Term(lambda p, nn: p[:, 1] ** 2, (1, 1)), Term(0.5, (0, 0)),
    ))
    block, _ = assemble_block({"u": net}, spec, x, n)
    ref = sum(
        (t.coeff(x, n)[:, None] if callable(t.coeff) else t.coeff) * eval_derivative_features(net, t.multi_index, x)
        for t in spec.terms
    )
    assert np.allclose(block, ref, rtol=1e-13, atol=1e-13)


def test_lame_traction_block_against_scalar_loop():
    from rfpde.problems import make_problem

    problem = make_problem("lame")
    (b1,) = [e for g in problem.groups for e in g.equations if e.label == "B1"]
    nu_net = init_network(2, 3, 2.0, "sine", seed=1)
    nv_net = init_network(2, 4, 2.0, "sine", seed=2)
    x = np.array([[2.0, 0.0], [0.0, 2.0]])
    normals = np.array([[1.0, 0.0], [0.0, 1.0]])
    block, _ = assemble_block({"u": nu_net, "v": nv_net}, b1.spec, x, normals)
    E, mu = 2.1, 0.25
    K = E / (1 - mu**2)
    for p in range(2):
        n1, n2 = normals[p]
        for i in range(3):
            w, b = nu_net.weights[i], nu_net.biases[i]
            c = math.cos(w @ x[p] + b)
            expect = K * (n1 * w[0] * c + n2 * (1 - mu) / 2 * w[1] * c)
            assert block[p, i] == pytest.approx(expect, rel=1e-13, abs=1e-14)
        for i in range(4):
            w, b = nv_net.weights[i], nv_net.biases[i]
            c = math.cos(w @ x[p] + b)
            expect = K * (n1 * mu * w[1] * c + n2 * (1 - mu) / 2 * w[0] * c)
            assert block[p, 3 + i] == pytest.approx(expect, rel=1e-13, abs=1e-14)
    # at n = (1, 0) the row is K (d phi_u / dx1 | mu d phi_v / dx2)
    assert np.allclose(block[0, :3], K * eval_derivative_features(nu_net, (1, 0), x[:1])[0])
    assert np.allclose(block[0, 3:], K * mu * eval_derivative_features(nv_net, (0, 1), x[:1])[0])


def test_missing_normals_rejected():
    net = init_network(2, 3, 1.0)
    spec = OperatorSpec((Term(lambda p, n: n[:, 0], (1, 0), uses_normals=True),))
    with pytest.raises(InvalidArgument):
        assemble_block({"u": net}, spec, np.zeros((2, 2)))


def test_unknown_field_and_method():
    net = init_network(2, 3, 1.0)
    with pytest.raises(InvalidArgument):
        assemble_block({"u": net}, identity("v"), np.zeros((2, 2)))
    with pytest.raises(InvalidArgument):
        assemble_block({"u": net}, identity(), np.zeros((2, 2)), derivative="ad")


def test_assemble_system_weights_rows():
    a = np.arange(6.0).reshape(2, 3)
    b = np.ones((1, 3))
    sys_ = assemble_system([(a, np.array([1.0, 2.0]), 1.0, "F"), (b, np.array([3.0]), 10.0, "B")])
    assert sys_.shape == (3, 3)
    assert np.array_equal(sys_.matrix[2], 10 * b[0]) and sys_.rhs[2] == 30.0
    assert np.array_equal(sys_.matrix[:2], a)
    assert [(lab, r.start, r.stop, w) for lab, r, w in sys_.block_index] == [("F", 0, 2, 1.0), ("B", 2, 3, 10.0)]


def test_assemble_system_width_mismatch():
    with pytest.raises(InvalidArgument):
        assemble_system([Block(np.ones((2, 3)), np.ones(2)), Block(np.ones((1, 2)), np.ones(1))])


def test_identity_solve():
    s = solve_min_norm_lsq(LinearSystem(np.eye(3), np.array([1.0, 2.0, 3.0])))
    assert np.allclose(s.alpha, [1, 2, 3]) and s.residual_norm == pytest.approx(0, abs=1e-15)


def test_overdetermined_against_normal_equations():
    a = np.array([[1.0], [1.0]])
    b = np.array([1.0, 3.0])
    s = solve_min_norm_lsq(LinearSystem(a, b))
    assert s.alpha == pytest.approx(normal_equations(a, b))
    assert s.alpha[0] == pytest.approx(2.0)
    assert s.residual_norm == pytest.approx(math.sqrt(2))


def test_rank_deficient_min_norm():
    a = np.array([[1.0, 1.0]])
    alpha = min_norm_lstsq(a, np.array([2.0]))
    assert alpha == pytest.approx([1.0, 1.0])
    assert alpha == pytest.approx(np.linalg.pinv(a) @ [2.0])


def test_non_finite_rejected():
    with pytest.raises(InvalidArgument):
        min_norm_lstsq(np.array([[np.nan]]), np.array([1.0]))
    with pytest.raises(InvalidArgument):
        min_norm_lstsq(np.zeros((0, 2)), np.zeros(0))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(1, 12), cols=st.integers(1, 8))
def test_least_squares_optimality(seed, rows, cols):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(rows, cols))
    b = rng.normal(size=rows)
    alpha = min_norm_lstsq(a, b)
    base = np.linalg.norm(a @ alpha - b)
    for _ in range(5):
        d = rng.normal(size=cols)
        d *= 1e-3 / np.linalg.norm(d)
        assert np.linalg.norm(a @ (alpha + d) - b) >= base - 1e-12
    assert np.allclose(alpha, np.linalg.pinv(a) @ b, atol=1e-9 * (1 + np.abs(alpha).max()))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0.1, 1e3))
def test_lambda_scaling_consistency(seed, lam):
    rng = np.random.default_rng(seed)
    a, c = rng.normal(size=(6, 4)), rng.normal(size=(3, 4))
    x_true = rng.normal(size=4)
    s1 = assemble_system([(a, a @ x_true, 1.0), (c, c @ x_true, 1.0)])
    s2 = assemble_system([(a, a @ x_true, 1.0), (c, c @ x_true, lam)])
    assert np.array_equal(s2.matrix[:6], s1.matrix[:6])
    assert np.allclose(s2.matrix[6:], lam * s1.matrix[6:], rtol=0, atol=0)
    assert np.allclose(s2.rhs[6:], lam * s1.rhs[6:], rtol=0, atol=0)
    # consistent system: the solution does not depend on lambda
    assert np.allclose(min_norm_lstsq(s1.matrix, s1.rhs), min_norm_lstsq(s2.matrix, s2.rhs), atol=1e-10)


def test_recovers_manufactured_coefficients():
    net = init_network(1, 12, 20.0, "sine", seed=8)
    x = np.linspace(-1, 1, 200)[:, None]
    alpha_true = np.random.default_rng(3).normal(size=12)
    phi = eval_features(net, x)
    cond = np.linalg.cond(phi)
    assert cond < 1e3
    s = solve_min_norm_lsq(LinearSystem(phi, phi @ alpha_true), {"u": net})
    assert np.linalg.norm(s.alpha - alpha_true) <= 1e-12 * cond * np.linalg.norm(alpha_true)


def test_evaluate_solution():
    net = _net([[1.0]], [0.0])
    s = Solution(np.array([2.0]), {"u": net})
    assert evaluate_solution(s, "u", np.array([[math.pi / 2]]))[0] == pytest.approx(2.0)
    zero = Solution(np.zeros(1), {"u": net})
    assert np.all(evaluate_solution(zero, "u", np.linspace(0, 1, 5)[:, None]) == 0)
    with pytest.raises(InvalidArgument):
        evaluate_solution(s, "v", np.zeros((1, 1)))
    with pytest.raises(InvalidArgument):
        Solution(np.zeros(3), {"u": net})


def test_evaluate_derivative_against_richardson():
    from oracles import richardson_derivative

    net = init_network(2, 15, 2.0, "sine", seed=5)
    s = Solution(np.random.default_rng(0).normal(size=15), {"u": net})
    x = np.random.default_rng(1).uniform(-1, 1, (6, 2))
    for m in [(1, 0), (0, 2), (1, 1), (2, 2), (3, 1)]:
        ref = richardson_derivative(lambda p: evaluate_solution(s, "u", p), x, m, 0.5 / 2.0, levels=5)
        got = evaluate_solution(s, "u", x, m)
        assert np.abs(got - ref).max() <= 1e-6 * np.abs(ref).max()


def test_dump_layout(tmp_path):
    sys_ = assemble_system([(np.eye(2), np.array([1.0, 2.0]), 1.0, "F"), (np.ones((1, 2)), np.array([0.5]), 3.0, "B")])
    path = tmp_path / "sys.csv"
    sys_.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# R=3 C=2"
    assert lines[1].startswith("# block F rows=0:2") and lines[2].startswith("# block B rows=2:3")
    data = np.loadtxt(path, delimiter=",")
    assert np.array_equal(data[:, :2], sys_.matrix) and np.array_equal(data[:, 2], sys_.rhs)


def test_l2_relative_error():
    t = np.array([1.0, -2.0, 3.0])
    assert l2_relative_error(t, t) == 0.0
    assert l2_relative_error(np.zeros(3), t) == 1.0
    assert l2_relative_error(1.1 * t, t) == pytest.approx(0.1, abs=1e-15)
    with pytest.raises(DegenerateReference):
        l2_relative_error(t, np.zeros(3))
    with pytest.raises(InvalidArgument):
        l2_relative_error(t, t[:2])


def test_fd_block_close_to_analytic():
    net = init_network(2, 20, 3.0, "sine", seed=6)
    x = np.random.default_rng(4).uniform(0, 1, (10, 2))
    exact, _ = assemble_block({"u": net}, laplacian(2, -1.0), x)
    approx, _ = assemble_block({"u": net}, laplacian(2, -1.0), x, derivative="fd")
    assert np.abs(exact - approx).max() <= 1e-3 * np.abs(exact).max()
    assert not np.array_equal(exact, approx)
