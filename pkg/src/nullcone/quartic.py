"""Roots of binary quartics on the Riemann sphere, with multiplicities.

A coefficient vector ``c = (c0, ..., c4)`` stands for the binary form
``sum_k c_k x^(4-k) y^k``; the root ``[x : y] = [1 : 0]`` is the point at
infinity of the affine parameter ``x / y``.

Numerically, an m-fold root splits into m roots spread by about
``eps**(1/m)``, so raw root distances alone cannot decide multiplicities. The
solver tries groupings of the computed roots from coarsest to finest. For each
one it refines the factored form (cluster roots raised to their
multiplicities) by Gauss-Newton with residuals in extended precision, and
accepts it when the fit is tight and no computed root strays far
from its cluster. Refined roots closer than the clustering radius are finally
merged, so the radius keeps its chordal meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nullframe import INFINITY, is_infinite


def chordal(z, w) -> float:
    """Chordal distance on the Riemann sphere (diameter 2)."""
    zi, wi = is_infinite(z), is_infinite(w)
    if zi and wi:
        return 0.0
    if zi:
        return 2.0 / np.sqrt(1.0 + abs(w) ** 2)
    if wi:
        return 2.0 / np.sqrt(1.0 + abs(z) ** 2)
    return 2.0 * abs(z - w) / np.sqrt((1.0 + abs(z) ** 2) * (1.0 + abs(w) ** 2))


@dataclass
class ProjectiveRoots:
    roots: list  # complex or INFINITY
    multiplicities: list[int]
    margin: float = float("inf")  # smallest chordal distance between distinct roots
    residual: float = 0.0  # relative backward error of the factored form
    warnings: list[str] = field(default_factory=list)

    def partition(self) -> tuple[int, ...]:
        return tuple(sorted(self.multiplicities, reverse=True))

    def __iter__(self):
        return iter(zip(self.roots, self.multiplicities))


def set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for n in range(len(part)):
            yield part[:n] + [[first] + part[n]] + part[n + 1:]


def _homogeneous(z) -> np.ndarray:
    if is_infinite(z):
        return np.array([1.0 + 0j, 0.0 + 0j])
    v = np.array([complex(z), 1.0 + 0j])
    return v / np.linalg.norm(v)


def _centroid(members: list):
    """Mean of a cluster, taken in whichever affine chart contains it best."""
    finite = [z for z in members if not is_infinite(z)]
    big = sum(1 for z in members if is_infinite(z) or abs(z) > 1.0)
    if big * 2 <= len(members):
        return complex(np.mean(finite))
    w = np.mean([_reciprocal(z) for z in members])
    return INFINITY if w == 0 else complex(1.0 / w)


def _reciprocal(z) -> complex:
    if is_infinite(z):
        return 0j
    if z == 0:
        return complex(1e300)
    return 1.0 / complex(z)


def form_coefficients(roots, multiplicities=None) -> np.ndarray:
    """Coefficients of ``prod (y_r x - x_r y)^m`` for roots ``[x_r : y_r]``."""
    multiplicities = multiplicities or [1] * len(roots)
    c = np.array([1.0 + 0j])
    for z, m in zip(roots, multiplicities):
        x, y = _homogeneous(z)
        for _ in range(m):
            c = np.convolve(c, np.array([y, -x]))
    return c


def _backward_error(coeffs: np.ndarray, roots, mults) -> float:
    rec = form_coefficients(roots, mults)
    k = np.vdot(rec, coeffs) / np.vdot(rec, rec)
    return float(np.linalg.norm(coeffs - k * rec) / np.linalg.norm(coeffs))


def _affine_roots(c: np.ndarray) -> list[complex]:
    """Eigenvalues of the companion matrix of a polynomial with nonzero leading coefficient."""
    n = len(c) - 1
    if n == 0:
        return []
    comp = np.zeros((n, n), dtype=complex)
    comp[0, :] = -c[1:] / c[0]
    comp[1:, :-1] = np.eye(n - 1)
    return [complex(z) for z in np.linalg.eigvals(comp)]


def _factor(z) -> tuple[np.ndarray, bool]:
    """Linear factor of a root in the chart that keeps it bounded."""
    if is_infinite(z):
        return np.array([0j, -1.0 + 0j]), True
    if abs(z) > 1.0:
        return np.array([1.0 / complex(z), -1.0 + 0j]), True
    return np.array([1.0 + 0j, -complex(z)]), False


def _power(f: np.ndarray, m: int) -> np.ndarray:
    out = np.array([1.0 + 0j])
    for _ in range(m):
        out = np.convolve(out, f)
    return out


def _refine(c: np.ndarray, roots, mults, iterations: int = 8):
    """Gauss-Newton on the factored form ``K prod f_j^m_j`` with multiplicities held fixed.

    Each root lives in its own affine chart (``z`` or ``w = 1/z``) so roots at
    or near infinity are as well conditioned as finite ones.
    """
    charts = [_factor(z) for z in roots]
    vals = np.array([f[0] if inv else -f[1] for f, inv in charts], dtype=complex)
    inverted = [inv for _, inv in charts]
    dirs = [np.array([1.0 + 0j, 0j]) if inv else np.array([0j, -1.0 + 0j]) for inv in inverted]

    def factors(v, dtype=complex):
        one = np.ones((), dtype=dtype)
        return [np.array([x * one, -one]) if inv else np.array([one, -x * one]) for x, inv in zip(v, inverted)]

    def product(fs, skip=None, extra=None):
        out = np.ones(1, dtype=fs[0].dtype)
        for j, (f, m) in enumerate(zip(fs, mults)):
            if j == skip:
                out = np.convolve(out, np.convolve(_power(f, m - 1), extra))
            else:
                out = np.convolve(out, _power(f, m))
        return out

    # residuals in extended precision, steps in double (iterative refinement)
    wide = np.clongdouble
    cw = c.astype(wide)
    cnorm = np.sqrt(np.sum(np.abs(cw) ** 2))

    def error(K, v):
        return float(np.sqrt(np.sum(np.abs(cw - K * product(factors(v, wide))) ** 2)) / cnorm)

    base = product(factors(vals))
    K = wide(np.vdot(base, c) / np.vdot(base, base))
    err = error(K, vals)
    best = vals
    for _ in range(iterations):
        fs = factors(vals)
        resid = (K * product(factors(vals, wide)) - cw).astype(complex)
        J = np.empty((5, len(vals) + 1), dtype=complex)
        J[:, 0] = product(fs)
        for j in range(len(vals)):
            J[:, j + 1] = complex(K) * mults[j] * product(fs, skip=j, extra=dirs[j])
        step = np.linalg.lstsq(J, -resid, rcond=None)[0]
        K, vals = K + wide(step[0]), vals + step[1:]
        # the first step from eigenvalue roots can raise the residual transiently
        new_err = error(K, vals)
        if new_err < err:
            best, err = vals, new_err
        if np.max(np.abs(step)) < 1e-15 * (1.0 + np.max(np.abs(vals))):
            break
    out = []
    for x, inv in zip(best, inverted):
        if not inv:
            out.append(complex(x))
        elif abs(x) < 1e-12:
            out.append(INFINITY)
        else:
            out.append(complex(1.0 / x))
    return out, float(err)


def solve_projective_quartic(
    coeffs,
    cluster_radius: float = 1e-4,
    zero_tol: float = 1e-12,
    multiplicity_tol: float | None = None,
    member_radius: float = 4.5,
) -> ProjectiveRoots:
    """Roots with multiplicities of ``c0 l^4 + c1 l^3 + ... + c4`` on the Riemann sphere.

    Leading coefficients below ``zero_tol`` (relative) are peeled off as roots
    at infinity and the rest are companion-matrix eigenvalues. A grouping of
    the computed roots is accepted as a multiplicity structure when the refined
    factored form reproduces the coefficients to ``multiplicity_tol``
    (default ``cluster_radius**2 / 100``) and every computed root lies within
    ``member_radius * cluster_radius`` of its refined cluster root. Distinct
    roots ``10 * cluster_radius`` apart always leave some member at least half
    that far from any single point, while a genuine m-fold root only spreads by
    about ``eps**(1/m)``. The coarsest accepted grouping wins.
    Refined roots closer than ``cluster_radius`` (chordal) are then merged.
    """
    c = np.asarray(coeffs, dtype=complex)
    if c.shape != (5,):
        raise ValueError("a binary quartic has 5 coefficients")
    scale = float(np.max(np.abs(c)))
    if scale == 0.0:
        raise ValueError("the zero form has no roots (conformally flat point)")
    if multiplicity_tol is None:
        multiplicity_tol = cluster_radius**2 / 100.0
    c = c * 2.0 ** -np.round(np.log2(scale))  # exact, unlike dividing by scale
    k = 0
    while abs(c[k]) < zero_tol * np.max(np.abs(c)):
        k += 1
    raw = [INFINITY] * k + _affine_roots(c[k:])

    best = None
    for part in sorted(set_partitions(list(range(4))), key=len):
        if best is not None and len(part) > best[0][0]:
            break
        cents = [_centroid([raw[i] for i in grp]) for grp in part]
        mults = [len(grp) for grp in part]
        if len(part) < 4 and _backward_error(c, cents, mults) > 1e-6:
            continue
        roots, err = _refine(c, cents, mults)
        if len(part) < 4:
            if err > multiplicity_tol:
                continue
            spread = max(chordal(raw[i], r) for grp, r in zip(part, roots) for i in grp)
            if spread > member_radius * cluster_radius:
                continue
        key = (len(part), err)
        if best is None or key < best[0]:
            best = (key, roots, mults)
    (_, err), roots, mults = best

    order = sorted(range(len(roots)), key=lambda i: -mults[i])
    merged_roots, merged_mults = [], []
    for i in order:
        for n, r in enumerate(merged_roots):
            if chordal(r, roots[i]) < cluster_radius:
                merged_mults[n] += mults[i]
                break
        else:
            merged_roots.append(roots[i])
            merged_mults.append(mults[i])

    margin = float("inf")
    warnings = []
    for a in range(len(merged_roots)):
        for b in range(a + 1, len(merged_roots)):
            d = chordal(merged_roots[a], merged_roots[b])
            margin = min(margin, d)
            if d < 2.0 * cluster_radius:
                warnings.append(
                    f"roots {merged_roots[a]!r} and {merged_roots[b]!r} are {d:.3e} apart, "
                    f"within twice the cluster radius {cluster_radius:g}"
                )
    return ProjectiveRoots(merged_roots, merged_mults, margin, err, warnings)
