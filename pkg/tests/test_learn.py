import numpy as np
import pytest

from graphfilt import conv, graph
from graphfilt.learn import (
    LmsConfig,
    LmsDivergenceError,
    blind_deconvolve,
    gcn_shift,
    get_params,
    gnn_forward,
    gnn_init,
    gnn_preset,
    gnn_train,
    lifted_objective,
    lifting_operator,
    lms_diffusion,
    loss_and_grad,
    rank_one_factor,
    regressors,
    set_params,
    system_identify,
)

from conftest import dense_poly, random_connected


def _norm_adj(g):
    return graph.gso(g, "normalized_adjacency")


def _planted_stream(S, h, T, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((T, S.n))
    Y = np.stack([conv.apply(conv.ConvFilter(h), S, x) for x in X])
    return X, Y


# ---------------------------------------------------------------- LMS

def test_lms_fixed_point():
    g = random_connected(15, 0.3, 1)
    S = _norm_adj(g)
    h = np.array([0.4, -0.3, 0.2])
    X, Y = _planted_stream(S, h, 50, 2)
    cfg = LmsConfig.metropolis(S, 0.05, 50)
    res = lms_diffusion(X, Y, S, 2, cfg, h0=h, h_true=h)
    assert np.abs(res.taps - h).max() <= 1e-12
    assert res.msd.max() <= 1e-24


def test_lms_planted_recovery():
    g = random_connected(20, 0.25, 3)
    S = _norm_adj(g)
    h = np.array([0.5, 0.3, -0.2])
    X, Y = _planted_stream(S, h, 5000, 4)
    cfg = LmsConfig.metropolis(S, 0.05, 5000)
    res = lms_diffusion(X, Y, S, 2, cfg, h_true=h)
    assert np.linalg.norm(res.taps - h, axis=1).max() <= 1e-3
    assert res.msd[-1] < res.msd[0]


def test_lms_diverges_for_huge_step():
    g = random_connected(10, 0.4, 5)
    S = _norm_adj(g)
    X, Y = _planted_stream(S, [1.0, 0.5], 100, 6)
    with pytest.raises(LmsDivergenceError) as exc:
        lms_diffusion(X, Y, S, 1, LmsConfig.uniform(S, 1e3, 100))
    assert exc.value.round_index < 100


def test_lms_config_validation():
    g = graph.path_graph(4)
    S = graph.gso(g, "adjacency")
    with pytest.raises(ValueError):
        LmsConfig(np.full(4, -0.1), np.eye(4), 10)
    with pytest.raises(ValueError):
        LmsConfig(np.full(4, 0.1), np.full((4, 4), 0.5), 10)
    far = np.eye(4)
    far[:, 0] = [0.5, 0.0, 0.0, 0.5]
    cfg = LmsConfig(np.full(4, 0.1), far, 1)
    with pytest.raises(ValueError):
        lms_diffusion(np.ones((1, 4)), np.ones((1, 4)), S, 1, cfg)


def test_lms_single_round_matches_hand_computation(rng):
    g = random_connected(8, 0.5, 7)
    S = _norm_adj(g)
    cfg = LmsConfig.metropolis(S, 0.1, 1)
    x, y = rng.standard_normal(8), rng.standard_normal(8)
    H0 = rng.standard_normal((8, 3))
    res = lms_diffusion(x[None], y[None], S, 2, cfg, h0=H0)
    Sd = S.dense()
    Z = np.column_stack([x, Sd @ x, Sd @ Sd @ x])
    psi = np.array([H0[i] + 0.1 * Z[i] * (y[i] - Z[i] @ H0[i]) for i in range(8)])
    expect = np.array([sum(cfg.combination[l, i] * psi[l] for l in range(8)) for i in range(8)])
    assert np.allclose(res.taps, expect, atol=1e-13)


def test_regressors_columns():
    g = random_connected(9, 0.4, 8)
    S = graph.gso(g, "laplacian")
    x = np.arange(9.0)
    Z = regressors(S, x, 3)
    for k in range(4):
        assert np.allclose(Z[:, k], np.linalg.matrix_power(S.dense(), k) @ x)


# ------------------------------------------------------ system identification

def test_identify_exact_recovery():
    g = random_connected(20, 0.25, 9)
    S = _norm_adj(g)
    h = np.array([0.7, -0.4, 0.25, 0.1])
    rng = np.random.default_rng(10)
    x = rng.standard_normal((20, 3))
    y = dense_poly(S, h) @ x
    res = system_identify(S, x, y, K=3, gamma=0.0)
    assert np.allclose(res.taps, h, atol=1e-8)


def test_identify_huge_gamma_gives_zero():
    g = random_connected(12, 0.4, 11)
    S = _norm_adj(g)
    x = np.random.default_rng(12).standard_normal(12)
    y = conv.apply(conv.ConvFilter([1.0, 0.5]), S, x)
    res = system_identify(S, x, y, K=3, gamma=1e8)
    assert np.all(res.taps == 0.0)


def test_identify_over_order_shrinks_tail():
    g = random_connected(25, 0.2, 13)
    S = _norm_adj(g)
    h = np.array([1.0, -0.6, 0.3])
    lead_err, tail = [], []
    for trial in range(20):
        rng = np.random.default_rng(200 + trial)
        x = rng.standard_normal((25, 4))
        y = dense_poly(S, h) @ x + 1e-3 * rng.standard_normal((25, 4))
        mask = rng.random(25) < 0.8
        res = system_identify(S, x, y, mask=mask, K=6, gamma=0.005)
        lead_err.append(np.abs(res.taps[:3] - h).max())
        tail.append(np.abs(res.taps[3:]).max())
    assert max(tail) < 1e-4
    assert max(lead_err) < 1e-2


def test_identify_objective_monotone():
    g = random_connected(20, 0.3, 14)
    S = graph.gso(g, "adjacency")
    rng = np.random.default_rng(15)
    x = rng.standard_normal(20)
    y = rng.standard_normal(20)
    res = system_identify(S, x, y, K=4, gamma=0.5)
    assert np.all(np.diff(res.objective) <= 1e-10 * res.objective[0])


def test_identify_matches_convex_oracle():
    cp = pytest.importorskip("cvxpy")
    g = random_connected(14, 0.35, 16)
    S = _norm_adj(g)
    rng = np.random.default_rng(17)
    x, y = rng.standard_normal(14), rng.standard_normal(14)
    mask = rng.random(14) < 0.7
    K, gamma = 3, 0.3
    w = np.arange(1.0, K + 2)
    Phi = np.column_stack([np.linalg.matrix_power(S.dense(), k) @ x for k in range(K + 1)])[mask]
    hv = cp.Variable(K + 1)
    cp.Problem(cp.Minimize(cp.sum_squares(Phi @ hv - y[mask]) + gamma * cp.norm1(cp.multiply(w, hv)))).solve(
        solver=cp.CLARABEL)
    res = system_identify(S, x, y, mask=mask, K=K, gamma=gamma)
    assert np.allclose(res.taps, hv.value, atol=1e-6)


def test_identify_rejects_empty_mask():
    S = graph.gso(graph.path_graph(5), "adjacency")
    with pytest.raises(ValueError):
        system_identify(S, np.ones(5), np.ones(5), mask=np.zeros(5, bool))


# ---------------------------------------------------------- blind deconvolution

def test_lifting_operator_matches_shift_sum(rng):
    g = random_connected(10, 0.4, 18)
    S = _norm_adj(g)
    Z = rng.standard_normal((10, 4))
    A_spec = lifting_operator(S.basis(), 3)
    A_shift = lifting_operator(S, 3)
    direct = sum(np.linalg.matrix_power(S.dense(), k) @ Z[:, k] for k in range(4))
    assert np.allclose(A_shift @ Z.ravel(), direct, atol=1e-12)
    assert np.allclose(A_spec @ Z.ravel(), direct, atol=1e-10)
    # a rank-one Z = x h^T gives the filtered signal
    x, h = rng.standard_normal(10), rng.standard_normal(4)
    assert np.allclose(A_shift @ np.outer(x, h).ravel(), dense_poly(S, h) @ x, atol=1e-12)


def test_lifted_objective_convex():
    rng = np.random.default_rng(19)
    g = random_connected(8, 0.5, 20)
    A = lifting_operator(_norm_adj(g), 2)
    y = rng.standard_normal(8)
    f = lambda Z: lifted_objective(Z, A, y, 0.7, 0.4)
    for _ in range(100):
        Z1, Z2 = rng.standard_normal((2, 8, 3))
        th = rng.random()
        assert f(th * Z1 + (1 - th) * Z2) <= th * f(Z1) + (1 - th) * f(Z2) + 1e-9


def test_blind_zero_regularization_k0_is_least_squares(rng):
    g = random_connected(10, 0.4, 21)
    S = _norm_adj(g)
    y = rng.standard_normal(10)
    sol = blind_deconvolve(S.basis(), y, 0, 0.0, 0.0, max_iter=5000, tol=1e-12)
    A = lifting_operator(S.basis(), 0)
    ref = np.linalg.lstsq(A, y, rcond=None)[0]
    assert np.allclose(sol.Z.ravel(), ref, atol=1e-6)


def test_blind_zero_signal():
    g = random_connected(10, 0.4, 22)
    sol = blind_deconvolve(_norm_adj(g), np.zeros(10), 2, 0.1, 0.1)
    assert np.all(sol.Z == 0.0)


def test_blind_objective_trace_nonincreasing(rng):
    g = random_connected(12, 0.35, 23)
    S = _norm_adj(g)
    y = rng.standard_normal(12)
    sol = blind_deconvolve(S, y, 2, 0.05, 0.05, max_iter=500)
    assert np.all(np.diff(sol.objective) <= 1e-9)
    A = lifting_operator(S, 2)
    assert sol.objective[-1] == pytest.approx(lifted_objective(sol.Z, A, y, 0.05, 0.05))


def test_rank_one_factor_vs_svd(rng):
    Z = rng.standard_normal((12, 4))
    x, h = rank_one_factor(Z)
    U, s, Vt = np.linalg.svd(Z)
    assert np.allclose(np.outer(x, h), s[0] * np.outer(U[:, 0], Vt[0]), atol=1e-12)
    assert h[np.argmax(np.abs(h))] > 0


def test_blind_rejects_negative_weights():
    S = graph.gso(graph.path_graph(4), "adjacency")
    with pytest.raises(ValueError):
        blind_deconvolve(S, np.ones(4), 1, -1.0, 0.0)


# ----------------------------------------------------------------------- GNN

def _fd_grad(model, S, data, loss, eps=1e-6):
    p = get_params(model)
    g = np.zeros_like(p)
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = eps
        fp = loss_and_grad(set_params(model, p + e), S, data, loss, need_grad=False)[0]
        fm = loss_and_grad(set_params(model, p - e), S, data, loss, need_grad=False)[0]
        g[i] = (fp - fm) / (2 * eps)
    return g


def _rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12)


@pytest.mark.parametrize("act", ["tanh", "identity"])
@pytest.mark.parametrize("readout", [None, "per_node_linear", "concat_linear"])
def test_gnn_gradient_check_mse(act, readout):
    rng = np.random.default_rng(24)
    g = random_connected(7, 0.5, 25)
    S = _norm_adj(g)
    model = gnn_init((2, 3, 2), [2, 1], act, rng, readout=readout, readout_dim=2, n_nodes=7)
    X0 = rng.standard_normal((7, 2))
    out = gnn_forward(model, S, X0)
    data = [(X0, rng.standard_normal(out.shape)), (rng.standard_normal((7, 2)), rng.standard_normal(out.shape))]
    _, grad = loss_and_grad(model, S, data, "mse")
    assert _rel(grad, _fd_grad(model, S, data, "mse")) <= 1e-5


@pytest.mark.parametrize("preset", ["gcn", "sgc", "gin", "graphsage"])
def test_gnn_gradient_check_presets_cross_entropy(preset):
    rng = np.random.default_rng(26)
    g = random_connected(8, 0.45, 27)
    S = gcn_shift(g) if preset == "gcn" else _norm_adj(g)
    model = gnn_preset(preset, (3, 4, 3), K=2, rng=rng, eps=0.3, activation=["tanh", "identity"])
    X0 = rng.standard_normal((8, 3))
    labels = rng.integers(0, 3, 8)
    mask = np.array([1, 0, 1, 1, 0, 1, 0, 1], bool)
    data = (X0, labels, mask)
    _, grad = loss_and_grad(model, S, data, "cross_entropy_masked")
    assert _rel(grad, _fd_grad(model, S, data, "cross_entropy_masked")) <= 1e-5


def test_gin_zero_eps_tie_sums_gradients():
    rng = np.random.default_rng(28)
    g = random_connected(6, 0.5, 29)
    S = _norm_adj(g)
    model = gnn_preset("gin", (2, 2), rng=rng, eps=0.0, activation="identity")
    layer = model.layers[0]
    assert np.array_equal(layer.taps[0], layer.taps[1])
    X0 = rng.standard_normal((6, 2))
    data = (X0, rng.standard_normal((6, 2)))
    _, grad = loss_and_grad(model, S, data, "mse")
    # untied reference: same taps as free parameters
    free = gnn_init((2, 2), 1, "identity")
    free = set_params(free, layer.taps.ravel())
    _, gfree = loss_and_grad(free, S, data, "mse")
    gfree = gfree.reshape(2, 2, 2)
    assert np.allclose(grad.reshape(2, 2), gfree[0] + gfree[1], atol=1e-12)


def test_gnn_single_layer_equals_conv_filter(rng):
    g = random_connected(12, 0.35, 30)
    S = _norm_adj(g)
    taps = np.array([0.3, -0.5, 0.8])
    model = gnn_init((1, 1), 2, "identity")
    model = set_params(model, taps)
    x = rng.standard_normal(12)
    out = gnn_forward(model, S, x)
    assert np.allclose(out.ravel(), conv.apply(conv.ConvFilter(taps), S, x), atol=1e-12)


def test_gnn_zero_taps_zero_output(rng):
    g = random_connected(10, 0.4, 31)
    S = _norm_adj(g)
    model = gnn_init((3, 4, 2), 2, "relu", rng)
    model = set_params(model, np.zeros(get_params(model).size))
    assert np.all(gnn_forward(model, S, rng.standard_normal((10, 3))) == 0.0)


def test_gnn_permutation_equivariance():
    rng = np.random.default_rng(32)
    g = random_connected(15, 0.3, 33)
    S = _norm_adj(g)
    model = gnn_init((3, 5, 2), [2, 3], ["relu", "tanh"], rng)
    X = rng.standard_normal((15, 3))
    perm = rng.permutation(15)
    Sp = graph.permute(S, perm)
    out = gnn_forward(model, S, X)
    outp = gnn_forward(model, Sp, X[perm])
    assert np.allclose(outp, out[perm], atol=1e-9)


def test_gcn_preset_structure(rng):
    g = random_connected(9, 0.4, 34)
    S = gcn_shift(g)
    A = g.adjacency().toarray()
    At = A + np.eye(9)
    d = At.sum(axis=1)
    printed = At / np.sqrt(np.outer(d, d))
    assert np.allclose(S.dense(), printed, atol=1e-14)
    model = gnn_preset("gcn", (3, 2), rng=rng, activation="identity")
    X = rng.standard_normal((9, 3))
    H1 = model.layers[0].taps[1]
    assert np.all(model.layers[0].taps[0] == 0.0)
    assert np.allclose(gnn_forward(model, S, X), printed @ X @ H1, atol=1e-12)


def test_sgc_identity_collapses_to_single_filter(rng):
    g = random_connected(10, 0.4, 35)
    S = _norm_adj(g)
    model = gnn_preset("sgc", (2, 3, 1), K=2, rng=rng, activation="identity")
    X = rng.standard_normal((10, 2))
    W = model.layers[0].taps[2] @ model.layers[1].taps[2]
    S4 = np.linalg.matrix_power(S.dense(), 4)
    assert np.allclose(gnn_forward(model, S, X), S4 @ X @ W, atol=1e-12)


def test_gnn_training_reaches_nonspectral_ls():
    g = random_connected(8, 0.45, 36)
    S = _norm_adj(g)
    rng = np.random.default_rng(37)
    B = rng.standard_normal((8, 8))
    K = 2
    ref = conv.design_nonspectral(B, S, K)
    data = [(np.eye(8)[:, j], B[:, j]) for j in range(8)]
    model = gnn_init((1, 1), K, "identity", rng)
    # objective is sum_j ||H e_j - b_j||^2 / 8 = ||H - B||_F^2 / 8
    powers = [np.linalg.matrix_power(S.dense(), k).ravel() for k in range(K + 1)]
    Theta = np.stack(powers, axis=1)
    eta = 0.9 * 8 / (2 * np.linalg.norm(Theta, 2) ** 2)
    model, trace = gnn_train(model, S, data, "mse", eta=eta, epochs=20000)
    assert np.allclose(get_params(model), ref.taps, atol=1e-4)
    assert trace[-1] <= 0.9 * trace[0]


def test_gnn_zero_step_keeps_parameters(rng):
    g = random_connected(8, 0.45, 38)
    S = _norm_adj(g)
    model = gnn_init((2, 2), 1, "tanh", rng)
    data = (rng.standard_normal((8, 2)), rng.standard_normal((8, 2)))
    trained, trace = gnn_train(model, S, data, eta=0.0, epochs=5)
    assert np.array_equal(get_params(trained), get_params(model))
    assert np.all(trace == trace[0])


def test_gnn_train_decreases_loss_on_classification():
    rng = np.random.default_rng(39)
    g, labels = graph.sbm_graph([15, 15], 0.5, 0.05, rng)
    S = gcn_shift(g)
    X0 = np.eye(30)[:, :6] + 0.1 * rng.standard_normal((30, 6))
    X0 = np.column_stack([X0, labels + 0.3 * rng.standard_normal(30)])
    mask = rng.random(30) < 0.5
    model = gnn_init((7, 8, 2), 2, ("relu", "identity"), rng)
    _, trace = gnn_train(model, S, (X0, labels, mask), "cross_entropy_masked", eta=0.1, epochs=200)
    assert trace[-1] <= 0.9 * trace[0]


def test_gnn_errors(rng):
    g = random_connected(6, 0.5, 40)
    S = _norm_adj(g)
    model = gnn_init((2, 2), 1, "relu", rng)
    with pytest.raises(ValueError):
        gnn_forward(model, S, np.ones((6, 3)))
    with pytest.raises(ValueError):
        gnn_preset("transformer", (2, 2))
    with pytest.raises(ValueError):
        gnn_init((2, 2), 1, "softsign")
    bad = set_params(model, np.full(get_params(model).size, 1e308))
    with np.errstate(over="ignore"), pytest.raises(FloatingPointError):
        gnn_train(bad, S, (np.ones((6, 2)) * 1e10, np.zeros((6, 2))), epochs=1)
