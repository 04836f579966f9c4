"""Plain-text spacetime catalog.

The file is line based::

    # comment
    [schwarzschild]
    chart = t, r, theta, phi
    params = M=1
    guard = (r - 2*M)*sin(theta)^2
    sample = 0, 4, 1.2, 0
    g(t,t) = 1 - 2*M/r
    g(r,r) = -1/(1 - 2*M/r)
    sigma.radial = 1 + 0.1/r
    surface.horizon = r - 2*M
    seeds.horizon = 0, 2, 1, 0.5; 3, 2, 2, 1

Components not listed are zero. Every problem in the file is collected with
its line number and the whole file is rejected if there is any.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .curvature import MetricSpec, metric_jet
from .errors import CatalogError, NullconeError
from .expr import Expression, constant_value, parse
from .jet import eval_value
from .lightlike import ON_SURFACE_TOL, HypersurfaceSpec

_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]$")
_COMPONENT = re.compile(r"^g\(\s*(\w+)\s*,\s*(\w+)\s*\)$")
_PREFIXED = re.compile(r"^(sigma|surface|seeds)\.([A-Za-z0-9_-]+)$")
_NAME_KEYS = ("chart", "params", "guard", "sample", "description")


@dataclass
class CatalogEntry:
    spec: MetricSpec
    sample: tuple[float, ...]
    sigmas: dict[str, Expression] = field(default_factory=dict)
    surfaces: dict[str, HypersurfaceSpec] = field(default_factory=dict)
    description: str = ""

    @property
    def name(self) -> str:
        return self.spec.name


@dataclass
class Catalog:
    entries: dict[str, CatalogEntry]
    path: str = "<catalog>"

    def __getitem__(self, name: str) -> CatalogEntry:
        try:
            return self.entries[name]
        except KeyError:
            known = ", ".join(sorted(self.entries))
            raise KeyError(f"unknown metric {name!r} (catalog has: {known})") from None

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def __iter__(self):
        return iter(self.entries.values())

    def names(self) -> list[str]:
        return list(self.entries)


def parse_point(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4 or not all(parts):
        raise ValueError(f"a point needs 4 comma-separated values, got {text!r}")
    return tuple(constant_value(p) for p in parts)


def parse_params(text: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        name, sep, value = item.partition("=")
        name = name.strip()
        if not sep or not re.fullmatch(r"[A-Za-z_]\w*", name):
            raise ValueError(f"expected name=value, got {item!r}")
        if name in out:
            raise ValueError(f"parameter {name!r} given twice")
        out[name] = constant_value(value.strip())
    return out


@dataclass
class _Raw:
    name: str
    line: int
    keys: dict = field(default_factory=dict)  # key -> (value, line)


def _split(text: str, problems: list) -> list[_Raw]:
    sections: list[_Raw] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION.match(line)
        if m:
            name = m.group(1)
            if name in seen:
                problems.append((lineno, f"metric [{name}] defined twice"))
            seen.add(name)
            sections.append(_Raw(name, lineno))
            continue
        if "=" not in line:
            problems.append((lineno, f"expected 'key = value' or '[name]', got {line!r}"))
            continue
        if not sections:
            problems.append((lineno, "entry before the first [metric] header"))
            continue
        key, _, value = line.partition("=")
        key = key.strip().replace(" ", "")
        if key in sections[-1].keys:
            problems.append((lineno, f"key {key!r} repeated in [{sections[-1].name}]"))
            continue
        sections[-1].keys[key] = (value.strip(), lineno)
    return sections


def _build(sec: _Raw, problems: list) -> CatalogEntry | None:
    def fail(lineno, msg):
        problems.append((lineno, f"[{sec.name}] {msg}"))

    keys = sec.keys
    if "chart" not in keys:
        fail(sec.line, "missing 'chart'")
        return None
    if "sample" not in keys:
        fail(sec.line, "missing 'sample'")
        return None
    chart_text, chart_line = keys["chart"]
    chart = tuple(c.strip() for c in chart_text.split(","))
    if len(chart) != 4 or len(set(chart)) != 4 or not all(re.fullmatch(r"[A-Za-z_]\w*", c) for c in chart):
        fail(chart_line, f"chart needs 4 distinct coordinate names, got {chart_text!r}")
        return None
    params: dict[str, float] = {}
    if "params" in keys:
        try:
            params = parse_params(keys["params"][0])
        except (ValueError, NullconeError) as exc:
            fail(keys["params"][1], f"params: {exc}")
            return None
    try:
        sample = parse_point(keys["sample"][0])
    except (ValueError, NullconeError) as exc:
        fail(keys["sample"][1], f"sample: {exc}")
        return None

    components: dict = {}
    sigmas: dict[str, Expression] = {}
    surfaces: dict[str, tuple[str, int]] = {}
    seeds: dict[str, tuple[str, int]] = {}
    ok = True
    for key, (value, lineno) in keys.items():
        if key in _NAME_KEYS:
            continue
        m = _COMPONENT.match(key)
        if m:
            i, j = m.groups()
            if i not in chart or j not in chart:
                fail(lineno, f"component {key} names a coordinate outside the chart")
                ok = False
                continue
            pair = tuple(sorted((chart.index(i), chart.index(j))))
            if pair in components:
                fail(lineno, f"component {key} duplicates an earlier entry")
                ok = False
                continue
            try:
                parse(value, chart, params)
            except NullconeError as exc:
                fail(lineno, f"{key}: {exc}")
                ok = False
                continue
            components[pair] = value
            continue
        m = _PREFIXED.match(key)
        if not m:
            fail(lineno, f"unknown key {key!r}")
            ok = False
            continue
        kind, name = m.groups()
        if kind == "sigma":
            try:
                sigmas[name] = parse(value, chart, params)
            except NullconeError as exc:
                fail(lineno, f"{key}: {exc}")
                ok = False
        elif kind == "surface":
            surfaces[name] = (value, lineno)
        else:
            seeds[name] = (value, lineno)
    if not components:
        fail(sec.line, "no metric components")
        return None

    guard = keys.get("guard", ("", 0))
    try:
        spec = MetricSpec.from_strings(sec.name, chart, components, params, guard[0] or None)
    except NullconeError as exc:
        fail(guard[1] or sec.line, f"guard: {exc}")
        return None
    try:
        metric_jet(spec, sample, order=0)
    except NullconeError as exc:
        fail(keys["sample"][1], f"signature self-test failed at the sample point: {exc}")
        ok = False
    for name, expr in sigmas.items():
        try:
            if not eval_value(expr, sample, params) > 0:
                fail(keys[f"sigma.{name}"][1], f"sigma.{name} is not positive at the sample point")
                ok = False
        except NullconeError as exc:
            fail(keys[f"sigma.{name}"][1], f"sigma.{name}: {exc}")
            ok = False

    hypers: dict[str, HypersurfaceSpec] = {}
    for name in sorted(set(seeds) - set(surfaces)):
        fail(seeds[name][1], f"seeds.{name} has no matching surface.{name}")
        ok = False
    for name, (source, lineno) in surfaces.items():
        points: list[tuple[float, ...]] = []
        if name in seeds:
            text, seed_line = seeds[name]
            for chunk in filter(None, (c.strip() for c in text.split(";"))):
                try:
                    points.append(parse_point(chunk))
                except (ValueError, NullconeError) as exc:
                    fail(seed_line, f"seeds.{name}: {exc}")
                    ok = False
        try:
            surf = HypersurfaceSpec.from_string(name, source, chart, params, points)
        except NullconeError as exc:
            fail(lineno, f"surface.{name}: {exc}")
            ok = False
            continue
        for p in points:
            try:
                value = eval_value(surf.F, p, params)
            except NullconeError as exc:
                fail(seeds[name][1], f"seeds.{name}: {exc}")
                ok = False
                continue
            if not abs(value) < ON_SURFACE_TOL:
                fail(seeds[name][1], f"seed {p} is off surface.{name} (F = {value:.3e})")
                ok = False
        hypers[name] = surf
    if not ok:
        return None
    return CatalogEntry(spec, sample, sigmas, hypers, keys.get("description", ("", 0))[0])


def parse_catalog(text: str, path: str = "<catalog>") -> Catalog:
    problems: list[tuple[int, str]] = []
    entries: dict[str, CatalogEntry] = {}
    for sec in _split(text, problems):
        entry = _build(sec, problems)
        if entry is not None:
            entries[sec.name] = entry
    if problems:
        raise CatalogError(sorted(problems), path)
    if not entries:
        raise CatalogError([(1, "catalog declares no metrics")], path)
    return Catalog(entries, path)


def load_catalog(path: str | Path | None = None) -> Catalog:
    """Read a catalog file, or the bundled one when ``path`` is None."""
    if path is None:
        text = resources.files("nullcone").joinpath("data/catalog.ini").read_text()
        return parse_catalog(text, "catalog.ini")
    path = Path(path)
    return parse_catalog(path.read_text(), str(path))


def random_points(entry: CatalogEntry, rng: np.random.Generator, n: int, spread: float = 0.2) -> list:
    """Points near the sample point that pass the metric's guards and signature test."""
    out = []
    base = np.array(entry.sample)
    while len(out) < n:
        p = base + spread * rng.uniform(-1, 1, 4) * np.maximum(1.0, np.abs(base))
        try:
            metric_jet(entry.spec, p, order=0)
        except NullconeError:
            continue
        out.append(tuple(p))
    return out
