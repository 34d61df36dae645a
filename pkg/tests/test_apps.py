import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from graphfilt import apps, conv, graph, spectral
from graphfilt.apps import DetectorSpec, LabelProblem
from graphfilt.learn import gcn_shift

from conftest import random_connected


def _highpass(B, frac=0.5):
    lam = np.real(B.eigenvalues)
    cut = np.sort(lam)[int(frac * lam.size)]
    return apps.band_indicator(B, lo=cut), cut


# ------------------------------------------------------------------- anomaly

def test_anomaly_zero_signal():
    g = random_connected(20, 0.25, 1)
    B = graph.gso(g, "laplacian").basis()
    hp, _ = _highpass(B)
    det = apps.anomaly_detect(DetectorSpec(hp, threshold=0.1), B, np.zeros(20))
    assert det.statistic == 0.0 and det.decision == "H0"


@pytest.mark.parametrize("stat", ["l2_norm", "max_gft_coeff"])
def test_anomaly_lowpass_signal_annihilated(stat, rng):
    g = random_connected(30, 0.2, 2)
    B = graph.gso(g, "laplacian").basis()
    hp, _ = _highpass(B)
    x = B.eigenvectors[:, :10] @ rng.standard_normal(10)
    det = apps.anomaly_detect(DetectorSpec(hp, stat, threshold=0.1), B, x)
    assert det.statistic <= 1e-9 and det.decision == "H0"


def test_anomaly_spike_energy_bookkeeping(rng):
    g = random_connected(40, 0.15, 3)
    B = graph.gso(g, "laplacian").basis()
    hp, _ = _highpass(B)
    smooth = B.eigenvectors[:, :8] @ rng.standard_normal(8)
    spike = B.eigenvectors[:, 35] * 0.7
    e = float(spike @ spike)
    det = apps.anomaly_detect(DetectorSpec(hp, threshold=0.3), B, smooth + spike)
    assert det.statistic ** 2 == pytest.approx(e, rel=0.05)
    assert det.decision == "H1"


def test_anomaly_statistic_permutation_invariant(rng):
    g = random_connected(18, 0.3, 4)
    S = graph.gso(g, "laplacian")
    f = conv.ConvFilter([0.0, 1.0, -0.1])
    x = rng.standard_normal(18)
    perm = rng.permutation(18)
    a = apps.anomaly_detect(DetectorSpec(f), S, x).statistic
    b = apps.anomaly_detect(DetectorSpec(f), graph.permute(S, perm), x[perm]).statistic
    assert a == pytest.approx(b, rel=1e-12)


def test_detector_validation():
    with pytest.raises(ValueError):
        DetectorSpec(None, "median")
    with pytest.raises(ValueError):
        DetectorSpec(None, threshold=0.0)


# ----------------------------------------------------------------------- SSL

def _problem(classes, mask):
    return LabelProblem.from_classes(classes, mask)


def test_ssl_all_labeled_identity_filter():
    g = random_connected(15, 0.3, 5)
    S = graph.gso(g, "normalized_adjacency")
    cls = np.arange(15) % 3
    res = apps.ssl_label_propagate(_problem(cls, np.ones(15, bool)), S, K=0, gamma=0.0)
    assert np.array_equal(res.predictions, cls)
    assert np.allclose(res.filter.taps, [1.0])


def test_ssl_sbm_accuracy():
    accs = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        g, labels = graph.sbm_graph([50, 50], 0.5, 0.05, rng)
        mask = np.zeros(100, bool)
        for c in (0, 1):
            idx = np.flatnonzero(labels == c)
            mask[rng.choice(idx, 5, replace=False)] = True
        S = graph.gso(g, "normalized_adjacency")
        res = apps.ssl_label_propagate(_problem(labels, mask), S, K=3)
        accs.append(np.mean(res.predictions[~mask] == labels[~mask]))
    assert np.median(accs) >= 0.9


def test_ssl_disconnected_components():
    edges = [(i, i + 1) for i in range(5)] + [(6 + i, 7 + i) for i in range(4)]
    g = graph.from_edge_list(edges, node_count=11)
    cls = np.r_[np.zeros(6, int), np.ones(5, int)]
    mask = np.zeros(11, bool)
    mask[[0, 6]] = True
    S = gcn_shift(g)
    res = apps.ssl_label_propagate(_problem(cls, mask), S, K=6, gamma=1e-6)
    assert np.array_equal(res.predictions, cls)


def test_ssl_scale_invariance_at_argmax(rng):
    g, labels = graph.sbm_graph([15, 15], 0.4, 0.05, rng)
    mask = rng.random(30) < 0.3
    mask[[0, 29]] = True
    prob = _problem(labels, mask)
    S = graph.gso(g, "normalized_adjacency")
    gamma = 1e-2
    r1 = apps.ssl_label_propagate(prob, S, K=2, gamma=gamma)
    # labels scaled by c with the ridge weight scaled by c^2 give scores scaled by c
    c = 3.0
    X = c * prob.labels
    Z = conv.shift_powers(S, X, 2)
    A = np.stack([z[mask].ravel() for z in Z], axis=1)
    h = np.linalg.solve(A.T @ A + c * c * gamma * np.eye(3), A.T @ X[mask].ravel())
    Y = sum(hk * z for hk, z in zip(h, Z))
    assert np.allclose(Y, c * r1.scores, atol=1e-9)
    assert np.array_equal(np.argmax(Y, axis=1), r1.predictions)


def test_ssl_ridge_matches_normal_equations(rng):
    g = random_connected(20, 0.25, 6)
    S = graph.gso(g, "normalized_adjacency")
    cls = rng.integers(0, 3, 20)
    cls[:3] = [0, 1, 2]
    mask = rng.random(20) < 0.5
    mask[:3] = True
    prob = _problem(cls, mask)
    gamma = 0.3
    res = apps.ssl_label_propagate(prob, S, K=2, gamma=gamma)
    Sd = S.dense()
    X = prob.labels
    cols = [(np.linalg.matrix_power(Sd, k) @ X)[mask].ravel() for k in range(3)]
    A = np.stack(cols, axis=1)
    h = np.linalg.solve(A.T @ A + gamma * np.eye(3), A.T @ X[mask].ravel())
    assert np.allclose(res.filter.taps, h, atol=1e-10)


def test_ssl_ties_go_to_lowest_class():
    g = graph.from_edge_list([(0, 1), (1, 2)], node_count=3)
    S = graph.gso(g, "adjacency")
    prob = _problem(np.array([0, 0, 1]), np.array([True, False, True]))
    res = apps.ssl_label_propagate(prob, S, K=1, gamma=0.0)
    # node 1 is symmetric between the two labeled ends
    assert res.scores[1, 0] == pytest.approx(res.scores[1, 1])
    assert res.predictions[1] == 0


def test_ssl_rational_family(rng):
    g, labels = graph.sbm_graph([20, 20], 0.4, 0.05, rng)
    mask = rng.random(40) < 0.25
    mask[[0, 39]] = True
    prob = _problem(labels, mask)
    S = graph.gso(g, "normalized_adjacency")
    rr = apps.ssl_label_propagate(prob, S, "rational", K=2, P=1, gamma=1e-3)
    assert rr.filter.den.shape == (1,)
    lo, hi = rr.filter.interval
    lam = np.linspace(lo, hi, 200)
    assert np.all(1.0 + rr.filter.den[0] * lam > 0)
    assert np.mean(rr.predictions[~mask] == labels[~mask]) >= 0.9


def test_label_problem_validation():
    with pytest.raises(ValueError):
        LabelProblem.from_classes([0, 0, 0], [True, True, False], n_classes=2)
    with pytest.raises(ValueError):
        LabelProblem(np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([True, True]))
    with pytest.raises(ValueError):
        LabelProblem(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([True, False]))


# ---------------------------------------------------------------- clustering

def _two_cliques(n=8, bridge=1e-3):
    edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)]
    edges += [(n + i, n + j, 1.0) for i in range(n) for j in range(i + 1, n)]
    edges.append((0, n, bridge))
    return graph.from_edge_list(edges, node_count=2 * n)


def test_cluster_two_cliques():
    g = _two_cliques()
    lab = apps.spectral_cluster(g, 2, "exact", rng=0)
    truth = np.r_[np.zeros(8), np.ones(8)]
    assert adjusted_rand_score(truth, lab) == 1.0


def test_cluster_k1():
    g = random_connected(10, 0.3, 7)
    assert np.all(apps.spectral_cluster(g, 1) == 0)


def test_cluster_k_too_large():
    with pytest.raises(ValueError):
        apps.spectral_cluster(random_connected(5, 0.5, 8), 6)


def test_exact_embedding_rows_unit_norm():
    g = random_connected(30, 0.2, 9)
    E, zero = apps.spectral_embedding(graph.gso(g, "normalized_laplacian"), 3)
    assert not zero.any()
    assert np.allclose(np.linalg.norm(E, axis=1), 1.0, atol=1e-9)


def test_cluster_deterministic():
    g, _ = graph.sbm_graph([20, 20], 0.4, 0.05, np.random.default_rng(10))
    a = apps.spectral_cluster(g, 2, "filtered", rng=5)
    b = apps.spectral_cluster(g, 2, "filtered", rng=5)
    assert np.array_equal(a, b)


def test_filtered_vs_exact_agreement():
    aris = []
    for seed in range(10):
        g, _ = graph.sbm_graph([100, 100], 0.2, 0.01, np.random.default_rng(seed))
        ex = apps.spectral_cluster(g, 2, "exact", rng=seed)
        fi = apps.spectral_cluster(g, 2, "filtered", rng=seed)
        aris.append(adjusted_rand_score(ex, fi))
    assert np.median(aris) >= 0.9


def test_eigencount_estimate(rng):
    g = random_connected(80, 0.08, 11)
    L = graph.gso(g, "normalized_laplacian")
    lam = np.sort(spectral.eigendecompose(L).eigenvalues.real)
    lmax = conv.estimate_lambda_max(L)
    cutoff = 0.5 * (lam[9] + lam[10])
    R = rng.standard_normal((80, 400))
    est = apps.estimate_eigencount(L, cutoff, lmax, 80, R)
    assert est == pytest.approx(10, abs=2.5)


def test_jackson_damping_endpoints():
    w = apps.jackson_damping(10)
    assert w[0] == pytest.approx(1.0)
    assert np.all(np.diff(w) < 0) and w[-1] > 0
