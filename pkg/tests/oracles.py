"""Independent oracles used to pin expected values in the test suite.

Everything here is deliberately primitive: dict-based polynomial arithmetic,
central finite differences, and hand-derived closed forms for constant
curvature spaces.  None of it shares code with the package under test.
"""

from __future__ import annotations

import itertools
from math import factorial

import numpy as np


# ---------------------------------------------------------------------------
# brute-force truncated polynomial arithmetic on {multi-index: coeff} dicts
# ---------------------------------------------------------------------------

def poly_truncate(p, order):
    return {a: c for a, c in p.items() if sum(a) <= order and c != 0.0}


def poly_add(p, q):
    out = dict(p)
    for a, c in q.items():
        out[a] = out.get(a, 0.0) + c
    return out


def poly_mul(p, q, order):
    out = {}
    for a, ca in p.items():
        for b, cb in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            if sum(k) <= order:
                out[k] = out.get(k, 0.0) + ca * cb
    return out


def poly_diff(p, i):
    out = {}
    for a, c in p.items():
        if a[i] > 0:
            b = list(a)
            b[i] -= 1
            out[tuple(b)] = out.get(tuple(b), 0.0) + c * a[i]
    return out


def poly_eval(p, x):
    tot = 0.0
    for a, c in p.items():
        term = c
        for xi, ai in zip(x, a):
            term *= xi ** ai
        tot += term
    return tot


def random_poly(rng, dim, degree, scale=1.0):
    p = {}
    for a in itertools.product(range(degree + 1), repeat=dim):
        if sum(a) <= degree:
            p[a] = scale * rng.uniform(-1.0, 1.0)
    return p


# ---------------------------------------------------------------------------
# finite differences
# ---------------------------------------------------------------------------

def _central_diff_h(f, x, alpha, h):
    x = np.asarray(x, dtype=np.float64)
    alpha = list(alpha)
    if sum(alpha) == 0:
        return f(x)
    a = next(i for i, v in enumerate(alpha) if v > 0)
    alpha[a] -= 1
    ep = x.copy(); ep[a] += h
    em = x.copy(); em[a] -= h
    return (_central_diff_h(f, ep, alpha, h) - _central_diff_h(f, em, alpha, h)) / (2 * h)


def central_diff(f, x, alpha):
    """Richardson-extrapolated central difference for |alpha| <= 3.

    The step is widened with the order so the stencil stays above roundoff.
    """
    h = {0: 1e-5, 1: 1e-5, 2: 1e-4, 3: 1e-3}[sum(alpha)]
    d1 = _central_diff_h(f, x, alpha, h)
    d2 = _central_diff_h(f, x, alpha, h / 2)
    return (4.0 * d2 - d1) / 3.0


# ---------------------------------------------------------------------------
# constant-curvature closed forms
#
# conventions pinned by the package: (grad_a grad_b - grad_b grad_a)V^c =
# R_ab^c_d V^d, Ric_ab = R_ca^c_b, R_abcd = g_ce R_ab^e_d.  A space of
# constant sectional curvature K then has R_abcd = K (g_ac g_bd - g_ad g_bc)
# and Ric = K (d-1) g (positive on the round sphere).
# ---------------------------------------------------------------------------

def riemann_constant_curvature(g, kappa):
    d = g.shape[0]
    r = np.zeros((d, d, d, d))
    for a, b, c, e in itertools.product(range(d), repeat=4):
        r[a, b, c, e] = kappa * (g[a, c] * g[b, e] - g[a, e] * g[b, c])
    return r


def ricci_constant_curvature(g, kappa):
    return kappa * (g.shape[0] - 1) * g


def schouten_constant_curvature(g, kappa):
    # Ric = (d-2)P + Jg with J = Sc/(2(d-1)) forces P = (kappa/2) g
    return 0.5 * kappa * g


# closed-form metrics used to cross-check the chart library
def round_sphere_stereo_metric(x, radius=1.0):
    x = np.asarray(x, dtype=np.float64)
    f = 4.0 * radius ** 2 / (1.0 + x @ x) ** 2
    return f * np.eye(x.size)


def poincare_ball_metric(x):
    x = np.asarray(x, dtype=np.float64)
    f = 4.0 / (1.0 - x @ x) ** 2
    return f * np.eye(x.size)


# ---------------------------------------------------------------------------
# quadric almost-Einstein family on flat space: s = a + b.x + c|x|^2
# ---------------------------------------------------------------------------

def quadric_scale(a, b, c):
    b = np.asarray(b, dtype=np.float64)

    def s(x):
        x = np.asarray(x, dtype=np.float64)
        return a + b @ x + c * (x @ x)

    return s


def quadric_i_norm_sq(a, b, c):
    b = np.asarray(b, dtype=np.float64)
    return float(b @ b - 4.0 * a * c)


# ---------------------------------------------------------------------------
# symbolic curvature oracle (sympy): an entirely separate differentiation
# substrate for low-dimensional polynomial metrics
# ---------------------------------------------------------------------------

def sympy_curvature(metric_exprs, coords, point):
    """Riemann/Ricci/scalar at a point from a symbolic metric matrix.

    metric_exprs: sympy Matrix g_ab(coords); returns numpy arrays
    (R_ab^c_d, Ric, Sc) in the package's conventions.
    """
    import sympy as sp

    d = len(coords)
    g = sp.Matrix(metric_exprs)
    ginv = g.inv()
    gamma = [[[sum(ginv[c, e] * (sp.diff(g[a, e], coords[b]) + sp.diff(g[b, e], coords[a])
                                 - sp.diff(g[a, b], coords[e])) for e in range(d)) / 2
               for b in range(d)] for a in range(d)] for c in range(d)]
    subs = dict(zip(coords, point))

    riem = np.zeros((d, d, d, d))
    for a, b, c, e in itertools.product(range(d), repeat=4):
        expr = (sp.diff(gamma[c][b][e], coords[a]) - sp.diff(gamma[c][a][e], coords[b])
                + sum(gamma[c][a][f] * gamma[f][b][e] - gamma[c][b][f] * gamma[f][a][e]
                      for f in range(d)))
        riem[a, b, c, e] = float(expr.subs(subs))
    ric = np.einsum("cacb->ab", riem)
    gval = np.array([[float(g[i, j].subs(subs)) for j in range(d)] for i in range(d)])
    sc = float(np.einsum("ab,ab->", np.linalg.inv(gval), ric))
    return riem, ric, sc


