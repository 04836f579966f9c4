"""Affinely parametrized geodesics, conformal comparison and principal congruences."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import jsonfmt
from .curvature import MetricSpec, christoffel, conformal_connection, metric_at, metric_jet
from .errors import DomainError, StepUnderflowError, TrackingError
from .expr import Expression, parse
from .jet import eval_jet2, eval_value
from .nullframe import orthonormal_frame
from .ode import StepControl, dormand_prince, hermite5
from .petrov import Tolerances, classify

CSV_COLUMNS = ("s", "x0", "x1", "x2", "x3", "xi0", "xi1", "xi2", "xi3", "nullnorm")


@dataclass(frozen=True)
class GeodesicState:
    x: np.ndarray
    xi: np.ndarray
    s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.array(self.x, dtype=float))
        object.__setattr__(self, "xi", np.array(self.xi, dtype=float))
        if self.x.shape != (4,) or self.xi.shape != (4,):
            raise ValueError("state needs a 4-point and a 4-vector")

    def aux_norm2(self) -> float:
        """Squared Euclidean norm of the chart components of the tangent."""
        return float(self.xi @ self.xi)


def null_norm(spec: MetricSpec, x, xi, params: Mapping[str, float] | None = None) -> float:
    xi = np.asarray(xi, dtype=float)
    return float(xi @ metric_at(spec, x, params) @ xi)


def is_null(spec: MetricSpec, state: GeodesicState, params=None, tol: float = 1e-10) -> bool:
    return abs(null_norm(spec, state.x, state.xi, params)) <= tol * state.aux_norm2()


def null_project(g: np.ndarray, xi, component: int = 0) -> np.ndarray:
    """Adjust one component of ``xi`` so that ``g(xi, xi) = 0``.

    Solves the quadratic in that component and keeps the root nearest the
    given value; falls back to the linear solution when the diagonal entry
    vanishes.
    """
    xi = np.array(xi, dtype=float)
    k = component
    rest = xi.copy()
    rest[k] = 0.0
    a = g[k, k]
    b = g[k] @ rest
    c = rest @ g @ rest
    scale = np.max(np.abs(g))
    if abs(a) <= 1e-14 * scale:
        if abs(b) <= 1e-14 * scale * max(1.0, np.linalg.norm(rest)):
            raise ValueError(f"component {k} cannot make this direction null")
        xi[k] = -c / (2 * b)
        return xi
    disc = b * b - a * c
    if disc < 0:
        raise ValueError(f"no real null direction by adjusting component {k}")
    roots = ((-b + np.sqrt(disc)) / a, (-b - np.sqrt(disc)) / a)
    xi[k] = min(roots, key=lambda r: abs(r - xi[k]))
    if not np.any(xi):
        raise ValueError("the projected direction is the zero vector")
    return xi


def geodesic_rhs(spec: MetricSpec, state: GeodesicState, params: Mapping[str, float] | None = None):
    """``(dx/ds, dxi/ds) = (xi, -Gamma(xi, xi))`` in the affine gauge."""
    jet = metric_jet(spec, state.x, params, order=1, check=False)
    gamma = christoffel(jet).gamma
    return state.xi.copy(), -np.einsum("ijk,j,k->i", gamma, state.xi, state.xi)


def _system(spec: MetricSpec, params):
    values = spec.resolve_params(params)

    def fun(s, y):
        jet = metric_jet(spec, y[:4], values, order=1, check=False)
        xi = y[4:]
        acc = -np.einsum("ijk,j,k->i", christoffel(jet).gamma, xi, xi)
        return np.concatenate([xi, acc])

    return fun


@dataclass
class Trajectory:
    metric: str
    params: dict
    s: np.ndarray
    x: np.ndarray  # (n, 4)
    xi: np.ndarray  # (n, 4)
    accel: np.ndarray  # (n, 4), dxi/ds at the samples
    null_norms: np.ndarray  # g(xi, xi) at the samples
    termination: str
    message: str = ""

    def __len__(self) -> int:
        return len(self.s)

    def states(self) -> list[GeodesicState]:
        return [GeodesicState(x, xi, s) for s, x, xi in zip(self.s, self.x, self.xi)]

    @property
    def final(self) -> GeodesicState:
        return GeodesicState(self.x[-1], self.xi[-1], self.s[-1])

    def null_drift(self) -> float:
        """Largest ``|g(xi, xi)| / |xi|^2`` along the run."""
        aux = np.einsum("ni,ni->n", self.xi, self.xi)
        return float(np.max(np.abs(self.null_norms) / aux))

    def position(self, s) -> np.ndarray:
        """Chart position at parameter ``s`` from the quintic Hermite interpolant."""
        s = float(s)
        lo, hi = sorted((self.s[0], self.s[-1]))
        if not lo <= s <= hi:
            raise ValueError(f"s = {s} is outside [{lo}, {hi}]")
        order = np.argsort(self.s)
        k = int(np.clip(np.searchsorted(self.s[order], s) - 1, 0, len(self.s) - 2))
        a, b = order[k], order[k + 1]
        return hermite5(*self._segment(a, b), s)

    def _segment(self, a: int, b: int):
        return (
            self.s[a], self.x[a], self.xi[a], self.accel[a],
            self.s[b], self.x[b], self.xi[b], self.accel[b],
        )

    def rows(self) -> np.ndarray:
        return np.column_stack([self.s, self.x, self.xi, self.null_norms])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([jsonfmt.format_float(v) for v in row])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "params": dict(self.params),
            "termination": self.termination,
            "message": self.message,
            "columns": list(CSV_COLUMNS),
            "rows": self.rows().tolist(),
            "accel": self.accel.tolist(),
        }

    def to_json(self) -> str:
        return jsonfmt.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        d = jsonfmt.loads(text)
        rows = np.array(d["rows"], dtype=float).reshape(-1, len(CSV_COLUMNS))
        return cls(
            d["metric"], d["params"], rows[:, 0], rows[:, 1:5], rows[:, 5:9],
            np.array(d["accel"], dtype=float).reshape(-1, 4), rows[:, 9], d["termination"], d["message"],
        )


def integrate(
    spec: MetricSpec,
    initial: GeodesicState,
    s_end: float,
    params: Mapping[str, float] | None = None,
    control: StepControl | None = None,
    event=None,
) -> Trajectory:
    """Integrate the geodesic equations from ``initial`` up to ``s_end``.

    Leaving the chart domain ends the run cleanly (termination
    ``"domain_exit"``). A collapsing step raises ``StepUnderflowError`` with the
    partial trajectory attached. ``event(y)`` on the stacked state ``(x, xi)``
    ends the run at its first sign change.
    """
    values = spec.resolve_params(params)
    metric_jet(spec, initial.x, values, order=0)  # validates the start point
    sol = dormand_prince(_system(spec, values), initial.s, np.concatenate([initial.x, initial.xi]), s_end, control, event)
    x, xi = sol.y[:, :4], sol.y[:, 4:]
    norms = np.array([v @ metric_at(spec, p, values) @ v for p, v in zip(x, xi)])
    traj = Trajectory(spec.name, values, sol.s, x, xi, sol.f[:, 4:], norms, sol.status, sol.message)
    if sol.status == "step_underflow":
        raise StepUnderflowError(sol.message, traj)
    return traj


# -- comparing curves as point sets ------------------------------------------------


def _nearest_on(traj: Trajectory, p: np.ndarray) -> float:
    d2 = np.einsum("ni,ni->n", traj.x - p, traj.x - p)
    k = int(np.argmin(d2))
    best = float(np.sqrt(d2[k]))
    for a in (k - 1, k):
        if a < 0 or a + 1 >= len(traj):
            continue
        seg = traj._segment(a, a + 1)
        lo, hi = sorted((seg[0], seg[4]))
        s = traj.s[k]
        # Gauss-Newton on |q(s) - p|^2, kept inside the segment
        for _ in range(8):
            q = hermite5(*seg, s)
            dq = hermite5(*seg, s, derivative=True)
            s_new = min(max(s - ((q - p) @ dq) / (dq @ dq), lo), hi)
            if abs(s_new - s) <= 1e-15 * max(1.0, abs(s)):
                s = s_new
                break
            s = s_new
        best = min(best, float(np.linalg.norm(hermite5(*seg, s) - p)))
    return best


def path_distance(a: Trajectory, b: Trajectory) -> float:
    """Symmetric point-set distance in chart coordinates.

    The larger of the two one-sided distances, each the maximum over one
    curve's samples of the distance to the other curve (quintic Hermite
    segments through positions, tangents and accelerations).
    """
    one = max(_nearest_on(b, p) for p in a.x)
    two = max(_nearest_on(a, p) for p in b.x)
    return max(one, two)


@dataclass
class ConformalReport:
    sigma: str
    constant_sigma: bool
    null_distance: float
    control_distance: float
    path_tol: float
    passed: bool
    control_ok: bool
    trajectories: dict = field(default_factory=dict, repr=False)


def _stop_plane(traj: Trajectory):
    p = traj.x[-1].copy()
    n = traj.xi[-1] / np.linalg.norm(traj.xi[-1])
    return lambda y: float((y[:4] - p) @ n)


def _reparametrized_end(spec, sigma: Expression, traj: Trajectory, values) -> float:
    sig = np.array([eval_value(sigma, x, values) for x in traj.x])
    if np.any(sig <= 0):
        raise DomainError("conformal factor is not positive along the path", str(sigma))
    return float(np.trapezoid(sig / sig[0], traj.s))


def _compare(spec, bar, sigma, initial, s_end, values, control):
    tg = integrate(spec, initial, s_end, values, control)
    bar_values = bar.resolve_params(values)
    estimate = abs(_reparametrized_end(spec, sigma, tg, bar_values))
    limit = initial.s + np.sign(s_end - initial.s) * (3.0 * estimate + abs(s_end - initial.s))
    tb = integrate(bar, initial, limit, bar_values, control, event=_stop_plane(tg))
    if tb.termination == "domain_exit":
        raise DomainError(f"the conformal metric's geodesic left its domain: {tb.message}", str(sigma))
    return tg, tb, path_distance(tg, tb)


def conformal_invariance_check(
    spec: MetricSpec,
    sigma: Expression | str,
    initial: GeodesicState,
    s_end: float,
    params: Mapping[str, float] | None = None,
    path_tol: float = 1e-6,
    null_tol: float = 1e-10,
    control: StepControl | None = None,
) -> ConformalReport:
    """Run the same null initial data under ``g`` and ``sigma * g`` and compare paths.

    The run under ``sigma * g`` stops on the hyperplane through the end point
    of the ``g`` run, orthogonal (in chart components) to its final tangent,
    so the two curves cover a common extent. A timelike control built from
    the same direction must separate for non-constant ``sigma`` and coincide
    for constant ``sigma``.
    """
    values = spec.resolve_params(params)
    if isinstance(sigma, str):
        sigma = parse(sigma, spec.chart, values)
    if not is_null(spec, initial, values, null_tol):
        raise ValueError("initial direction is not null under the metric")
    bar = spec.conformal(sigma)
    # tighter than the default so integration error sits well below path_tol
    control = control or StepControl(rtol=1e-12, atol=1e-14)
    tg, tb, d_null = _compare(spec, bar, sigma, initial, s_end, values, control)

    g0 = metric_at(spec, initial.x, values)
    u4 = orthonormal_frame(g0)[3]
    xi_c = initial.xi + (initial.xi @ g0 @ u4) * u4
    timelike = GeodesicState(initial.x, xi_c, initial.s)
    cg, cb, d_ctrl = _compare(spec, bar, sigma, timelike, s_end, values, control)

    constant = not sigma.depends_on_coordinates()
    control_ok = d_ctrl < path_tol if constant else d_ctrl > path_tol
    return ConformalReport(
        str(sigma), constant, d_null, d_ctrl, path_tol, d_null < path_tol and control_ok, control_ok,
        {"null": tg, "null_conformal": tb, "control": cg, "control_conformal": cb},
    )


def conformal_equation_residual(
    spec: MetricSpec,
    sigma: Expression | str,
    traj: Trajectory,
    params: Mapping[str, float] | None = None,
) -> float:
    """Residual of the pregeodesic equation of ``sigma * g`` along a geodesic of ``g``.

    With the reparametrization form ``d log sigma (xi)`` the conformal equation
    ``dxi/ds + Gbar(xi, xi) = (xi . d log sigma) xi`` holds exactly when
    ``g(xi, xi) = 0``; the return value is the largest relative violation.
    """
    values = spec.resolve_params(params)
    if isinstance(sigma, str):
        sigma = parse(sigma, spec.chart, values)
    sig_values = spec.conformal(sigma).resolve_params(values)
    worst = 0.0
    for x, xi, acc in zip(traj.x, traj.xi, traj.accel):
        jet = metric_jet(spec, x, values, order=1, check=False)
        gbar = conformal_connection(jet, sigma, x, sig_values).gamma
        sj = eval_jet2(sigma, x, sig_values)
        dlog_sigma = sj.grad / sj.value
        lhs = acc + np.einsum("ijk,j,k->i", gbar, xi, xi) - (xi @ dlog_sigma) * xi
        worst = max(worst, float(np.linalg.norm(lhs) / (xi @ xi)))
    return worst


# -- principal congruences ---------------------------------------------------------


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _projective_distance(a: np.ndarray, b: np.ndarray) -> float:
    c = abs(_unit(a) @ _unit(b))
    return float(np.sqrt(max(0.0, 1.0 - c * c)))


class PrincipalField:
    """Unit (chart-Euclidean) principal null direction tracked by continuity."""

    def __init__(self, spec, params, tolerances, start: np.ndarray, multiplicity: int):
        self.spec = spec
        self.params = params
        self.tolerances = tolerances
        self.last = _unit(np.asarray(start, dtype=float))
        self.multiplicity = multiplicity

    def candidates(self, x):
        rep = classify(self.spec, x, self.params, self.tolerances)
        if rep.warnings:
            raise TrackingError("principal roots entered the ambiguity band", tuple(x))
        return [(_unit(v), m) for v, m in rep.principal_directions]

    def __call__(self, x, reference: np.ndarray | None = None) -> np.ndarray:
        ref = self.last if reference is None else reference
        dirs = self.candidates(x)
        dists = sorted((_projective_distance(v, ref), n) for n, (v, _) in enumerate(dirs))
        if not dists:
            raise TrackingError("no principal directions", tuple(x))
        d, n = dists[0]
        v, m = dirs[n]
        if m != self.multiplicity:
            raise TrackingError(f"multiplicity changed from {self.multiplicity} to {m}", tuple(x))
        if len(dists) > 1 and dists[1][0] < 10 * d + 1e-12:
            raise TrackingError("two principal directions are equally close to the tracked one", tuple(x))
        v = v if v @ ref > 0 else -v
        if reference is None:
            self.last = v
        return v


@dataclass
class CongruenceCurve:
    multiplicity: int
    direction: np.ndarray  # seed direction
    s: np.ndarray
    x: np.ndarray
    residuals: np.ndarray
    termination: str
    failure: str = ""
    failure_point: tuple | None = None

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else float("nan")


@dataclass
class CongruenceReport:
    metric: str
    point: tuple
    type: str
    curves: list[CongruenceCurve]
    geo_tol: float
    message: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.curves) and all(
            not c.failure and c.max_residual < self.geo_tol for c in self.curves
        )


def pregeodesic_residual(spec, values, x, field_fn, h: float = 1e-4) -> float:
    """``|nabla_xi xi - kappa xi| / |xi|^2`` with ``kappa`` fitted by least squares.

    The derivative of the field along itself is a central difference over
    ``h`` (scaled by the point's size) along the field direction.
    """
    xi = field_fn(x)
    step = h * max(1.0, float(np.linalg.norm(x)))
    dxi = (field_fn(x + step * xi, xi) - field_fn(x - step * xi, xi)) / (2 * step)
    jet = metric_jet(spec, x, values, order=1, check=False)
    acc = dxi + np.einsum("ijk,j,k->i", christoffel(jet).gamma, xi, xi)
    kappa = (acc @ xi) / (xi @ xi)
    return float(np.linalg.norm(acc - kappa * xi) / (xi @ xi))


def principal_congruence_check(
    spec: MetricSpec,
    point: Sequence[float],
    params: Mapping[str, float] | None = None,
    s_end: float = 20.0,
    tolerances: Tolerances | None = None,
    geo_tol: float = 1e-5,
    control: StepControl | None = None,
    future: bool = True,
) -> CongruenceReport:
    """Integrate each principal direction field from ``point`` and test it is pregeodesic.

    The field is re-derived pointwise by classification and continued by the
    nearest principal direction (projectively), normalized to unit chart
    length, so ``s`` is chart arc length. Seeds are oriented future-pointing
    with respect to the built frame unless ``future`` is false.
    """
    values = spec.resolve_params(params)
    tolerances = tolerances or Tolerances()
    point = tuple(float(c) for c in point)
    rep = classify(spec, point, values, tolerances)
    if rep.type == "O":
        return CongruenceReport(spec.name, point, "O", [], geo_tol, "no principal directions (type O)")
    u4 = rep.tetrad.orthonormal()[3].real
    g0 = metric_at(spec, point, values)
    control = control or StepControl(rtol=1e-9, atol=1e-11, max_step=1.0)
    curves = []
    for v, m in rep.principal_directions:
        v = _unit(v)
        if (v @ g0 @ u4 > 0) != future:
            v = -v
        fld = PrincipalField(spec, values, tolerances, v, m)
        failure, where = "", None
        try:
            sol = dormand_prince(lambda s, y: fld(y), 0.0, np.array(point), s_end, control)
            xs, ss, term = sol.y, sol.s, sol.status
        except TrackingError as exc:
            xs, ss, term = np.array([point]), np.array([0.0]), "tracking_lost"
            failure, where = str(exc), exc.point
        res = []
        probe = PrincipalField(spec, values, tolerances, v, m)
        for x in xs:
            try:
                res.append(pregeodesic_residual(spec, values, x, probe))
            except TrackingError as exc:
                failure, where = str(exc), exc.point
                break
        curves.append(CongruenceCurve(m, v, ss, xs, np.array(res), term, failure, where))
    return CongruenceReport(spec.name, point, rep.type, curves, geo_tol)
