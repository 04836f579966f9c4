"""Independent reference computations used by the tests.

Derivatives come from sympy, the tensors from textbook index formulas, and the
Petrov type from the eigen-structure of Q = E + iB in an orthonormal frame.
None of this shares code with the package.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np
import sympy as sp


def _sym_metric(name: str):
    t, x, y, z = sp.symbols("t x y z", real=True)
    if name == "minkowski":
        return (t, x, y, z), sp.diag(1, -1, -1, -1)
    if name == "schwarzschild":
        r, th, ph = sp.symbols("r theta phi", positive=True)
        M = sp.Integer(1)
        f = 1 - 2 * M / r
        return (t, r, th, ph), sp.diag(f, -1 / f, -r**2, -r**2 * sp.sin(th) ** 2)
    if name == "eddington-finkelstein":
        v, r, th, ph = sp.symbols("v r theta phi", real=True)
        g = sp.zeros(4)
        g[0, 0] = 1 - 2 / r
        g[0, 1] = g[1, 0] = -1
        g[2, 2] = -r**2
        g[3, 3] = -r**2 * sp.sin(th) ** 2
        return (v, r, th, ph), g
    if name == "kerr":
        r, th, ph = sp.symbols("r theta phi", real=True)
        M, a = sp.Integer(1), sp.Rational(1, 2)
        S = r**2 + a**2 * sp.cos(th) ** 2
        D = r**2 - 2 * M * r + a**2
        g = sp.zeros(4)
        g[0, 0] = 1 - 2 * M * r / S
        g[0, 3] = g[3, 0] = 2 * M * a * r * sp.sin(th) ** 2 / S
        g[1, 1] = -S / D
        g[2, 2] = -S
        g[3, 3] = -(r**2 + a**2 + 2 * M * a**2 * r * sp.sin(th) ** 2 / S) * sp.sin(th) ** 2
        return (t, r, th, ph), g
    if name == "pp-wave":
        u, v = sp.symbols("u v", real=True)
        g = sp.zeros(4)
        g[0, 0] = x**2 - y**2
        g[0, 1] = g[1, 0] = 1
        g[2, 2] = g[3, 3] = -1
        return (u, v, x, y), g
    if name.startswith("kasner"):
        p = KASNER[name]
        return (t, x, y, z), sp.diag(1, -t ** (2 * p[0]), -t ** (2 * p[1]), -t ** (2 * p[2]))
    if name == "conformally-flat-exp":
        w = sp.exp(2 * (sp.Rational(3, 10) * t + sp.Rational(1, 10) * x**2))
        return (t, x, y, z), w * sp.diag(1, -1, -1, -1)
    raise KeyError(name)


KASNER = {
    "kasner": (sp.Rational(2, 3), sp.Rational(2, 3), sp.Rational(-1, 3)),
    "kasner-generic": (sp.Rational(-2, 7), sp.Rational(3, 7), sp.Rational(6, 7)),
}


@lru_cache(maxsize=None)
def _derivative_functions(name: str):
    X, g = _sym_metric(name)
    dg = [[[sp.diff(g[i, j], X[k]) for j in range(4)] for i in range(4)] for k in range(4)]
    ddg = [[[[sp.diff(g[i, j], X[k], X[l]) for j in range(4)] for i in range(4)] for l in range(4)] for k in range(4)]
    return (
        sp.lambdify([X], g.tolist(), "numpy"),
        sp.lambdify([X], dg, "numpy"),
        sp.lambdify([X], ddg, "numpy"),
    )


def metric_derivatives(name: str, point):
    """``g_ij``, ``d_k g_ij`` as [k, i, j] and ``d_k d_l g_ij`` as [k, l, i, j]."""
    fg, fdg, fddg = _derivative_functions(name)
    p = [float(c) for c in point]
    return (
        np.array(fg(p), dtype=float),
        np.array(fdg(p), dtype=float),
        np.array(fddg(p), dtype=float),
    )


def tensors(name: str, point) -> dict:
    """Christoffel symbols, lowered Riemann, Ricci, scalar and Weyl at a point."""
    g, dg, ddg = metric_derivatives(name, point)
    gi = np.linalg.inv(g)
    # Gamma_{a b c} = (d_b g_ac + d_c g_ab - d_a g_bc) / 2, first index lowered
    low = np.empty((4, 4, 4))
    for a, b, c in itertools.product(range(4), repeat=3):
        low[a, b, c] = 0.5 * (dg[b, a, c] + dg[c, a, b] - dg[a, b, c])
    gamma = np.einsum("ad,dbc->abc", gi, low)
    R = np.empty((4, 4, 4, 4))
    for a, b, c, d in itertools.product(range(4), repeat=4):
        second = 0.5 * (ddg[b, c, a, d] + ddg[a, d, b, c] - ddg[b, d, a, c] - ddg[a, c, b, d])
        quad = sum(
            g[e, f] * (gamma[e, b, c] * gamma[f, a, d] - gamma[e, b, d] * gamma[f, a, c])
            for e in range(4) for f in range(4)
        )
        R[a, b, c, d] = second + quad
    ric = np.einsum("ac,abcd->bd", gi, R)
    scal = float(np.einsum("bd,bd->", gi, ric))
    C = R - 0.5 * (
        np.einsum("ac,bd->abcd", g, ric) - np.einsum("ad,bc->abcd", g, ric)
        - np.einsum("bc,ad->abcd", g, ric) + np.einsum("bd,ac->abcd", g, ric)
    ) + scal / 6.0 * (np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g))
    return {"g": g, "g_inv": gi, "gamma": gamma, "riemann": R, "ricci": ric, "scalar": scal, "weyl": C}


def _levi_civita() -> np.ndarray:
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        inversions = sum(1 for i in range(4) for j in range(i + 1, 4) if perm[i] > perm[j])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


def q_matrix(name: str, point) -> np.ndarray:
    """``Q = E + iB`` of the Weyl tensor in the orthonormal eigenframe of ``g``."""
    T = tensors(name, point)
    w, V = np.linalg.eigh(T["g"])
    basis = (V / np.sqrt(np.abs(w))).T  # rows are orthonormal vectors
    signs = np.sign(w)
    t = int(np.flatnonzero(signs > 0)[0])
    order = [t] + [k for k in range(4) if k != t]
    basis, eta = basis[order], np.diag(signs[order])
    C = np.einsum("ijkl,ai,bj,ck,dl->abcd", T["weyl"], basis, basis, basis, basis)
    eps = _levi_civita()
    dual = 0.5 * np.einsum("abef,ee,ff,efcd->abcd", eps, eta, eta, C)
    E = C[1:, 0, 1:, 0]
    B = dual[1:, 0, 1:, 0]
    return E + 1j * B


def petrov_type(name: str, point, rel: float = 1e-8) -> str:
    """Petrov type from the minimal polynomial of ``Q``."""
    Q = q_matrix(name, point)
    scale = float(np.max(np.abs(tensors(name, point)["riemann"]))) or 1.0
    if np.max(np.abs(Q)) < rel * scale:
        return "O"
    Qn = Q / np.max(np.abs(Q))
    small = lambda A: np.max(np.abs(A)) < 1e-7  # noqa: E731
    if small(Qn @ Qn):
        return "N"
    if small(Qn @ Qn @ Qn):
        return "III"
    ev = np.linalg.eigvals(Qn)
    gaps = [abs(ev[i] - ev[j]) for i in range(3) for j in range(i + 1, 3)]
    if min(gaps) > 1e-5:
        return "I"
    # one repeated eigenvalue lam (double) and -2 lam (simple)
    i, j = min(((i, j) for i in range(3) for j in range(i + 1, 3)), key=lambda ij: abs(ev[ij[0]] - ev[ij[1]]))
    lam = 0.5 * (ev[i] + ev[j])
    I = np.eye(3)
    return "D" if small((Qn - lam * I) @ (Qn + 2 * lam * I)) else "II"


# -- binary quartics -----------------------------------------------------------

QUARTIC_PARTITIONS = [(1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,)]


def sphere_distance(z, w) -> float:
    """Chordal distance with ``None`` standing for the point at infinity."""
    if z is None and w is None:
        return 0.0
    if z is None or w is None:
        v = w if z is None else z
        return 2.0 / np.sqrt(1.0 + abs(v) ** 2)
    return 2.0 * abs(z - w) / np.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


def random_factored_quartic(rng: np.random.Generator, radius: float, p_infinity: float = 0.15, p_cluster: float = 0.5):
    """Distinct roots (``None`` is infinity) with multiplicities and the expanded coefficients.

    Half the time a root is placed 10 to 20 cluster radii (chordally) from the
    previous one; every pair stays at least 10 radii apart. The coefficients
    get a random complex scale spanning six decades.
    """
    def point():
        if rng.random() < p_infinity:
            return None
        r = np.tan(rng.uniform(0, np.pi / 2 * 0.98))
        return complex(r * np.exp(1j * rng.uniform(0, 2 * np.pi)))

    part = QUARTIC_PARTITIONS[rng.integers(len(QUARTIC_PARTITIONS))]
    while True:
        roots = [point()]
        for _ in part[1:]:
            if rng.random() < p_cluster:
                base = roots[-1] if roots[-1] is not None else complex(1e3)
                d = rng.uniform(10, 20) * radius
                roots.append(complex(base + d * (1 + abs(base) ** 2) / 2 * np.exp(1j * rng.uniform(0, 2 * np.pi))))
            else:
                roots.append(point())
        if all(sphere_distance(roots[i], roots[j]) >= 10 * radius for i in range(len(roots)) for j in range(i)):
            break
    # expand prod (y x - x y)^m with [x : y] = [z : 1] or [1 : 0]
    c = np.array([1.0 + 0j])
    for z, m in zip(roots, part):
        factor = np.array([0.0, -1.0 + 0j]) if z is None else np.array([1.0, -z]) / np.sqrt(1 + abs(z) ** 2)
        for _ in range(m):
            c = np.convolve(c, factor)
    scale = complex(rng.normal(), rng.normal()) * 10 ** rng.uniform(-3, 3)
    return roots, list(part), c * scale


def exact_roots(coeffs, zero_rel: float = 1e-12) -> list:
    """Roots of the given double coefficients computed in 50-digit arithmetic (``None`` = infinity)."""
    import mpmath as mp

    coeffs = list(coeffs)
    top = max(abs(c) for c in coeffs)
    k = 0
    while abs(coeffs[k]) < zero_rel * top:
        k += 1
    with mp.workdps(50):
        finite = mp.polyroots([mp.mpc(c.real, c.imag) for c in coeffs[k:]], maxsteps=400, extraprec=400)
        return [complex(z) for z in finite] + [None] * k
