#!/usr/bin/env python3
"""Exact LP optima for penalized panel quantile regression, frozen as fixtures.

Solves, with HiGHS, the primal LP

    min  sum_r tau*u+_r + (1-tau)*u-_r + lam * sum_i (s+_i + s-_i)
    s.t. mu + a_i(r) + x_r'b + u+_r - u-_r = y_r
         a_i - s+_i + s-_i = 0

(`common` target; the `zero` target drops mu; lam = 0 drops mu and the
penalty rows) and writes the instances together with the optimal objective.
"""
import json
import sys

import numpy as np
from scipy.optimize import linprog

TAUS = [0.25, 0.5, 0.75]
LAMBDAS = [0.0, 1.0, 10.0]


def solve(y, X, ent, n_ent, tau, lam, target):
    n, k = X.shape
    use_mu = lam > 0 and target == "common"
    pen = lam > 0
    p = (1 if use_mu else 0) + n_ent + k
    nvar = p + 2 * n + (2 * n_ent if pen else 0)
    c = np.zeros(nvar)
    c[p:p + n] = tau
    c[p + n:p + 2 * n] = 1 - tau
    if pen:
        c[p + 2 * n:] = lam
    rows = n + (n_ent if pen else 0)
    A = np.zeros((rows, nvar))
    b = np.zeros(rows)
    off = 1 if use_mu else 0
    for r in range(n):
        if use_mu:
            A[r, 0] = 1.0
        A[r, off + ent[r]] = 1.0
        A[r, off + n_ent:p] = X[r]
        A[r, p + r] = 1.0
        A[r, p + n + r] = -1.0
        b[r] = y[r]
    if pen:
        for i in range(n_ent):
            A[n + i, off + i] = 1.0
            A[n + i, p + 2 * n + i] = -1.0
            A[n + i, p + 2 * n + n_ent + i] = 1.0
    bounds = [(None, None)] * p + [(0, None)] * (nvar - p)
    res = linprog(c, A_eq=A, b_eq=b, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    assert res.status == 0, res.message
    return float(res.fun)


def make_instance(rng, n_ent, t_per, k, rounded):
    ent, ys, xs = [], [], []
    shifts = rng.normal(0, 1.5, n_ent)
    beta = rng.normal(0, 1, k)
    for i in range(n_ent):
        t_i = t_per if t_per > 0 else int(rng.integers(4, 10))
        for _ in range(t_i):
            x = rng.normal(0, 1, k)
            y = shifts[i] + x @ beta + rng.standard_t(3)
            if rounded:
                y = round(y, 1)
                x = np.round(x, 1)
            ent.append(i)
            xs.append(x)
            ys.append(y)
    return np.array(ys), np.array(xs).reshape(len(ys), k), ent


def main(out_path):
    rng = np.random.default_rng(20240611)
    shapes = [(3, 8, 2, False)]
    for j in range(1, 25):
        n_ent = int(rng.integers(1, 11))
        t_per = int(rng.integers(5, 19)) if j % 4 else 0
        k = int(rng.integers(0, 4))
        shapes.append((n_ent, t_per, k, j % 5 == 0))
    instances = []
    for n_ent, t_per, k, rounded in shapes:
        y, X, ent = make_instance(rng, n_ent, t_per, k, rounded)
        assert len(y) <= 200
        optima = []
        for target in ("common", "zero"):
            for tau in TAUS:
                for lam in LAMBDAS:
                    optima.append({"target": target, "tau": tau, "lambda": lam,
                                   "objective": solve(y, X, ent, n_ent, tau, lam, target)})
        instances.append({"entities": n_ent, "k": k,
                          "entity": ent, "y": y.tolist(), "x": X.tolist(),
                          "optima": optima})
    with open(out_path, "w") as fh:
        json.dump({"generator": "qr_lp_oracle.py", "instances": instances}, fh, indent=1)


if __name__ == "__main__":
    main(sys.argv[1])
