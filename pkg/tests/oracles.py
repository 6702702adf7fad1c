"""Brute-force reference implementations used as test oracles.

These deliberately take different computational paths from the library:
per-pair loops instead of batched distance matrices, explicit inverses and
slogdet instead of congruence + eigenvalues, a general-purpose constrained
optimizer instead of Bregman projections.
"""

from collections import Counter

import numpy as np
from scipy.optimize import minimize

from dynmetric.metric import distance


def random_pd(rng, d, floor=0.1):
    B = rng.standard_normal((d, d))
    return B @ B.T + floor * np.eye(d)


def brute_neighbors(X, labels, A, i):
    best_s = best_d = None
    for j in range(len(X)):
        if j == i:
            continue
        dist = distance(A, X[i], X[j])
        if labels[j] == labels[i]:
            if best_s is None or dist < best_s[0]:
                best_s = (dist, j)
        elif best_d is None or dist < best_d[0]:
            best_d = (dist, j)
    return (None if best_s is None else best_s[1], None if best_d is None else best_d[1])


def brute_pairset(X, labels, A):
    """((i, j) similar list, (i, j) dissimilar list), first unordered occurrence kept."""
    sim, dis = [], []
    for i in range(len(X)):
        s, d = brute_neighbors(X, labels, A, i)
        if s is not None and not any({i, s} == {a, b} for a, b in sim):
            sim.append((i, s))
        if not any({i, d} == {a, b} for a, b in dis):
            dis.append((i, d))
    return sim, dis


def logdet_div(A, P):
    A, P = np.asarray(A, float), np.asarray(P, float)
    Pinv = np.linalg.inv(P)
    s_a, ld_a = np.linalg.slogdet(A)
    s_p, ld_p = np.linalg.slogdet(P)
    assert s_a > 0 and s_p > 0
    return float(np.trace(A @ Pinv) - (ld_a - ld_p) - A.shape[0])


def rank_one(A, z, beta):
    A = np.asarray(A, float)
    z = np.asarray(z, float).reshape(-1, 1)
    return A + beta * (A @ z @ z.T @ A)


def scalar_problem_optimum(a0, z2, xi0, gamma=1.0, similar=True):
    """Minimize the one-pair, one-dimensional LogDet problem numerically.

    Variables ``(a, xi)``; objective ``B(a, a0) + gamma * B(xi, xi0)`` with the
    scalar LogDet divergence ``B(u, v) = u/v - log(u/v) - 1``; constraint
    ``a * z2 <= xi`` (similar) or ``>= xi`` (dissimilar). Solved in log
    coordinates with SLSQP.
    """

    def B(u, v):
        return u / v - np.log(u / v) - 1.0

    def obj(t):
        a, xi = np.exp(t)
        return B(a, a0) + gamma * B(xi, xi0)

    sgn = 1.0 if similar else -1.0
    cons = {"type": "ineq", "fun": lambda t: sgn * (np.exp(t[1]) - np.exp(t[0]) * z2)}
    res = minimize(
        obj,
        x0=np.log([a0, xi0]),
        constraints=[cons],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 1000},
    )
    assert res.success, res.message
    a, xi = np.exp(res.x)
    return float(a), float(xi)


def brute_knn(train_X, train_y, A, q, k):
    ranked = sorted((distance(A, q, x), j) for j, x in enumerate(train_X))[:k]
    votes = Counter(train_y[j] for _, j in ranked)
    sums = Counter()
    for dist, j in ranked:
        sums[train_y[j]] += dist
    return sorted(votes, key=lambda lab: (-votes[lab], sums[lab], lab))[0]
