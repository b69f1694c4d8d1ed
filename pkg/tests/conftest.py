import numpy as np
from scipy import sparse
from scipy.optimize import linprog


def lp_transport_cost(a, b, C):
    """Independent oracle: the transportation problem as an explicit LP."""
    n, m = C.shape
    Arow = sparse.kron(sparse.eye(n), np.ones((1, m)))
    Acol = sparse.kron(np.ones((1, n)), sparse.eye(m))
    A = sparse.vstack([Arow, Acol])
    res = linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b]),
                  bounds=(0, None), method="highs")
    assert res.status == 0, res.message
    return res.fun


def w1_1d_quantile(x_a, w_a, x_b, w_b):
    """Independent 1D oracle: integral of |CDF_A - CDF_B| over the real line."""
    grid = np.unique(np.concatenate([x_a, x_b]))

    def cdf(x, w, t):
        return np.array([w[x <= ti].sum() for ti in t])

    Fa = cdf(np.asarray(x_a), np.asarray(w_a), grid)
    Fb = cdf(np.asarray(x_b), np.asarray(w_b), grid)
    widths = np.diff(grid)
    return float(np.sum(np.abs(Fa[:-1] - Fb[:-1]) * widths))


def random_simplex(rng, k):
    v = rng.dirichlet(np.ones(k))
    return v / v.sum()
