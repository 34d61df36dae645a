"""Learning a filter from data: centrally, adaptively and as a network.

An unknown three-tap filter maps random inputs to outputs.  We recover it
by sparse system identification, by adapt-then-combine diffusion LMS where
each node only talks to its neighbors, and by training a one-layer linear
graph network with gradient descent.
"""

import numpy as np

from graphfilt import conv, graph
from graphfilt.learn import LmsConfig, get_params, gnn_init, gnn_train, lms_diffusion, system_identify

rng = np.random.default_rng(11)
g = graph.erdos_renyi_graph(20, 0.25, rng, connected=True)
S = graph.gso(g, "normalized_adjacency")
h_true = np.array([0.5, 0.3, -0.2])
truth = conv.ConvFilter(h_true)

X = rng.standard_normal((20, 8))
Y = np.stack([conv.apply(truth, S, X[:, j]) for j in range(8)], axis=1)
fit = system_identify(S, X, Y, K=5, gamma=0.005)
print("sparse identification with 6 candidate taps:", np.round(fit.taps, 4))

T = 3000
Xs = rng.standard_normal((T, 20))
Ys = np.stack([conv.apply(truth, S, x) for x in Xs])
res = lms_diffusion(Xs, Ys, S, 2, LmsConfig.metropolis(S, 0.05, T), h_true=h_true)
print(f"diffusion LMS: worst node error {np.linalg.norm(res.taps - h_true, axis=1).max():.1e}, "
      f"mean-square deviation fell from {res.msd[0]:.2e} to {res.msd[-1]:.2e}")

pairs = [(X[:, j], Y[:, j]) for j in range(8)]
# the loss is quadratic in the taps; step just under 1/Lipschitz of its gradient
A = np.concatenate([np.stack(conv.shift_powers(S, X[:, j], 2), axis=1) for j in range(8)])
eta = 0.9 * len(pairs) / (2 * np.linalg.norm(A, 2) ** 2)
model = gnn_init((1, 1), 2, "identity", rng)
model, trace = gnn_train(model, S, pairs, "mse", eta=eta, epochs=3000)
print(f"linear graph network taps {np.round(get_params(model), 4)}, loss {trace[0]:.3f} -> {trace[-1]:.2e}")
