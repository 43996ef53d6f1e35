"""Scenario files: parsing, validation, execution and CSV rows.

A scenario is an INI file with the sections ``[scenario]``, ``[domain]``,
``[map]``, ``[form]``, ``[battery]``, ``[grid]`` and optionally
``[mollify]``, ``[sweep]`` and ``[expect]``.  Every key is listed in
``SCHEMA``; anything else is a configuration error reported with its line
number.  See the README for the full key reference.
"""
from __future__ import annotations

import configparser
import csv
import io
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import maps
from .domain import Domain
from .exterior import basis
from .forms import FormField, angle_form, polynomial_form, radial_power_scalar
from .mollify import default_schedule, stability_diagnostic
from .polynomial import Polynomial
from .quadrature import QuadratureGrid
from .weakcalc import DEFAULT_LEVELS, DEFAULT_TOL, ResidualReport, default_battery, naturality_residual

COLUMNS = ("scenario", "check", "k", "resolution", "epsilon", "param", "residual",
           "error_estimate", "slope", "verdict")

SCHEMA = {
    "scenario": {"id", "description", "checks"},
    "domain": {"lower", "upper"},
    "map": {"family", "matrix", "offset", "value", "components", "s"},
    "form": {"kind", "degree", "terms", "scale", "t"},
    "battery": {"centers", "radius", "amplitude"},
    "grid": {"resolution", "levels", "epsilon0", "tolerance"},
    "mollify": {"schedule", "resolution", "degree"},
    "sweep": {"parameter", "values", "start", "stop", "steps", "p", "q"},
    "expect": None,  # keys are check names, validated separately
}
REQUIRED = ("scenario", "domain", "map", "form")
MAP_FAMILIES = ("linear", "identity", "constant", "polynomial", "radial_power", "winding")
FORM_KINDS = ("angle", "polynomial", "constant", "standard", "radial")
CHECKS = ("naturality", "sobolev", "minors", "stability")
SWEEP_PARAMETERS = ("s", "k", "p", "q")
VERDICTS = {"holds", "fails", "inconclusive", "finite", "divergent", "bounded", "blow-up"}


class ConfigError(ValueError):
    """Invalid scenario file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path or '<scenario>'}:{line}: " if line else f"{path or '<scenario>'}: "
        super().__init__(where + message)


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    """Line number of a section header, or of a key inside that section."""
    current = None
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section and line and line[0] not in "#;":
            name = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            if name == key:
                return i
    return None


@dataclass
class Scenario:
    """Validated scenario; ``raw`` keeps the section dictionaries as read."""

    id: str
    domain: Domain
    raw: dict
    text: str = ""
    path: str | None = None
    checks: tuple[str, ...] = ("naturality",)
    expect: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)

    def error(self, message: str, section: str, key: str | None = None) -> ConfigError:
        return ConfigError(message, _locate(self.text, section, key), self.path)

    def get(self, section: str, key: str, default=None):
        if section in self.overrides and key in self.overrides[section]:
            return self.overrides[section][key]
        return self.raw.get(section, {}).get(key, default)

    def with_overrides(self, section: str, **values) -> "Scenario":
        ov = {s: dict(v) for s, v in self.overrides.items()}
        ov.setdefault(section, {}).update({k: str(v) for k, v in values.items()})
        return replace(self, overrides=ov)

    # --- typed accessors ----------------------------------------------------

    def _float(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError:
            raise self.error(f"{section}.{key} must be a number, got {v!r}", section, key) from None

    def _int(self, section, key, default=None):
        v = self.get(section, key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError:
            raise self.error(f"{section}.{key} must be an integer, got {v!r}", section, key) from None

    def _vector(self, section, key):
        v = self.get(section, key)
        try:
            return [float(t) for t in v.replace(",", " ").split()]
        except ValueError:
            raise self.error(f"{section}.{key} must be a list of numbers", section, key) from None

    # --- fixtures -----------------------------------------------------------

    @property
    def source_dim(self) -> int:
        return self.domain.dim

    def build_map(self) -> maps.MapModel:
        fam = self.get("map", "family")
        m = self.source_dim
        if fam is None:
            raise self.error("map.family is required", "map")
        if fam not in MAP_FAMILIES:
            raise self.error(f"unknown map family {fam!r}; expected one of {', '.join(MAP_FAMILIES)}",
                             "map", "family")
        if fam == "identity":
            return maps.identity(m)
        if fam == "winding":
            return maps.winding(m)
        if fam == "radial_power":
            s = self._float("map", "s")
            if s is None:
                raise self.error("radial_power needs map.s", "map", "family")
            return maps.radial_power(s, m)
        if fam == "constant":
            if self.get("map", "value") is None:
                raise self.error("constant map needs map.value", "map", "family")
            return maps.constant(self._vector("map", "value"), m)
        if fam == "linear":
            text = self.get("map", "matrix")
            if text is None:
                raise self.error("linear map needs map.matrix", "map", "family")
            try:
                a = np.array([[float(t) for t in row.replace(",", " ").split()] for row in text.split(";")])
            except ValueError:
                raise self.error("map.matrix must be rows of numbers separated by ';'", "map", "matrix") from None
            if a.ndim != 2 or a.shape[1] != m:
                raise self.error(f"map.matrix must have {m} columns", "map", "matrix")
            b = self._vector("map", "offset") if self.get("map", "offset") is not None else None
            if b is not None and len(b) != a.shape[0]:
                raise self.error("map.offset length differs from the matrix row count", "map", "offset")
            return maps.linear(a, b)
        text = self.get("map", "components")
        if text is None:
            raise self.error("polynomial map needs map.components", "map", "family")
        try:
            comps = [Polynomial.parse(c, m, "x") for c in text.split(";")]
        except ValueError as exc:
            raise self.error(str(exc), "map", "components") from None
        return maps.polynomial(comps)

    @property
    def target_dim(self) -> int:
        fam = self.get("map", "family")
        if fam == "constant":
            return len(self._vector("map", "value"))
        if fam == "linear":
            return len(self.get("map", "matrix").split(";"))
        if fam == "polynomial":
            return len(self.get("map", "components").split(";"))
        return self.source_dim

    @property
    def degree(self) -> int:
        kind = self.get("form", "kind")
        if kind == "angle":
            return 1
        if kind == "radial":
            return 0
        k = self._int("form", "degree")
        if k is None:
            raise self.error(f"form kind {kind!r} needs form.degree", "form")
        return k

    def build_form(self) -> FormField:
        kind = self.get("form", "kind")
        n = self.target_dim
        if kind is None:
            raise self.error("form.kind is required", "form")
        if kind not in FORM_KINDS:
            raise self.error(f"unknown form kind {kind!r}; expected one of {', '.join(FORM_KINDS)}",
                             "form", "kind")
        if kind == "angle":
            if n != 2:
                raise self.error("the angle form lives on R^2", "form", "kind")
            return angle_form(self._float("form", "scale", 0.5))
        if kind == "radial":
            t = self._float("form", "t")
            if t is None:
                raise self.error("radial form needs form.t", "form", "kind")
            return radial_power_scalar(n, t)
        k = self.degree
        if kind == "standard":
            return standard_form(n, k)
        text = self.get("form", "terms")
        if text is None:
            raise self.error(f"form kind {kind!r} needs form.terms", "form", "kind")
        try:
            coeffs = parse_form_terms(text, n, k, constant_only=(kind == "constant"))
        except ValueError as exc:
            raise self.error(str(exc), "form", "terms") from None
        return polynomial_form(n, k, coeffs, name=kind)

    def base_grid(self) -> QuadratureGrid:
        res = self.get("grid", "resolution", "16")
        try:
            r = [int(t) for t in res.replace(",", " ").split()]
        except ValueError:
            raise self.error("grid.resolution must be integers", "grid", "resolution") from None
        if len(r) not in (1, self.source_dim) or min(r) < 1:
            raise self.error("grid.resolution must be one or m positive integers", "grid", "resolution")
        return QuadratureGrid(self.domain, r[0] if len(r) == 1 else tuple(r),
                              self._float("grid", "epsilon0"))

    @property
    def levels(self) -> int:
        return self._int("grid", "levels", DEFAULT_LEVELS)

    @property
    def tolerance(self) -> float:
        return self._float("grid", "tolerance", DEFAULT_TOL)

    def battery(self, degree: int, f: maps.MapModel):
        spec = self.get("battery", "centers", "auto").strip()
        radius = self._float("battery", "radius")
        amp = self._float("battery", "amplitude", 1.0)
        centers = None
        if spec != "auto":
            centers = []
            for chunk in filter(None, (c.strip() for c in spec.split(";"))):
                label, _, rest = chunk.partition(":")
                try:
                    vals = [float(t) for t in rest.split()]
                except ValueError:
                    raise self.error(f"bad battery entry {chunk!r}", "battery", "centers") from None
                if not rest or len(vals) != self.source_dim + 1:
                    raise self.error(f"battery entry {chunk!r} needs a label, {self.source_dim} "
                                     "coordinates and a radius", "battery", "centers")
                centers.append((label.strip(), vals[:-1], vals[-1]))
            if not centers:
                raise self.error("empty test-form battery", "battery", "centers")
        try:
            return default_battery(self.domain, degree, f.singular_points, radius, amp, centers)
        except ValueError as exc:
            raise self.error(str(exc), "battery", "centers") from None

    def mollify_schedule(self) -> list[float]:
        text = self.get("mollify", "schedule")
        if text is None:
            return default_schedule(self.domain)
        try:
            eps = [float(t) for t in text.replace(",", " ").split()]
        except ValueError:
            raise self.error("mollify.schedule must be numbers", "mollify", "schedule") from None
        if len(eps) < 3 or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
            raise self.error("mollify.schedule needs at least three decreasing positive values",
                             "mollify", "schedule")
        if 2 * eps[0] >= float(np.min(self.domain.widths)):
            raise self.error("largest mollifier radius leaves no shrunken domain", "mollify", "schedule")
        return eps

    def validate(self) -> None:
        """Build every fixture and check degrees before any integration."""
        f = self.build_map()
        alpha = self.build_form()
        m, n, k = self.source_dim, f.target_dim, alpha.degree
        if alpha.dim != n:
            raise self.error(f"form lives on R^{alpha.dim} but the map lands in R^{n}", "form")
        if k > min(m, n):
            raise self.error(f"form degree {k} exceeds min(m, n) = {min(m, n)}", "form")
        if "naturality" in self.checks:
            if m - k - 1 < 0:
                raise self.error(f"naturality needs test forms of degree m-k-1 = {m - k - 1}", "form")
            self.battery(m - k - 1, f)
        self.base_grid()
        if self.levels < 3:
            raise self.error("grid.levels must be at least 3", "grid", "levels")
        if "stability" in self.checks:
            self.mollify_schedule()


def standard_form(n: int, k: int) -> FormField:
    """A fixed non-closed polynomial k-form on R^n used by degree sweeps.

    The coefficient on ``dy_I`` is ``1 + sum_j c_{I,j} y_j^2`` with small
    distinct weights, so d alpha is nonzero for every 0 <= k < n.
    """
    if not 0 <= k <= n:
        raise ValueError(f"no {k}-forms on R^{n}")
    coeffs = {}
    for r, idx in enumerate(basis(n, k)):
        terms = {(0,) * n: 1.0}
        for j in range(n):
            e = [0] * n
            e[j] = 2
            terms[tuple(e)] = 0.25 * (1 + (r + 2 * j) % 3)
        coeffs[idx] = Polynomial(n, terms)
    return polynomial_form(n, k, coeffs, name=f"standard({k})")


_DY = re.compile(r"^dy(\d+)$")


def parse_form_terms(text: str, n: int, k: int, constant_only: bool = False) -> dict:
    """``"1.5 y1^2 y2 dy1^dy3; -2 dy2^dy3"`` -> ``{index: Polynomial}``.

    Each ';'-separated term is a polynomial in y followed by one basis
    element written as ``dy<i>`` factors joined by ``^``.
    """
    out: dict = {}
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        tokens = chunk.split()
        if not tokens:
            continue
        last = tokens[-1]
        idx: tuple[int, ...] = ()
        if last.startswith("dy"):
            parts = last.split("^")
            ms = [_DY.match(p) for p in parts]
            if not all(ms):
                raise ValueError(f"bad basis element {last!r}")
            idx = tuple(int(mm.group(1)) - 1 for mm in ms)
            tokens = tokens[:-1]
        if len(idx) != k:
            raise ValueError(f"term {chunk!r} has degree {len(idx)}, expected {k}")
        if any(not 0 <= i < n for i in idx) or len(set(idx)) != len(idx):
            raise ValueError(f"bad basis element in {chunk!r}")
        order = sorted(range(len(idx)), key=lambda i: idx[i])
        sign = _perm_sign(order)
        idx = tuple(sorted(idx))
        poly = Polynomial.parse(" ".join(tokens), n, "y") if tokens else Polynomial.constant(n, 1.0)
        if constant_only and poly.degree() > 0:
            raise ValueError(f"constant form term {chunk!r} depends on y")
        poly = poly * sign
        out[idx] = out[idx] + poly if idx in out else poly
    if not out:
        raise ValueError("no form terms")
    return out


def _perm_sign(order) -> float:
    sign, seen = 1.0, list(order)
    for i in range(len(seen)):
        for j in range(i + 1, len(seen)):
            if seen[i] > seen[j]:
                sign = -sign
    return sign


# --- loading ------------------------------------------------------------------

def loads(text: str, path: str | None = None) -> Scenario:
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",),
                                       interpolation=None, strict=True)
    parser.optionxform = str.lower
    try:
        parser.read_string(text, source=path or "<scenario>")
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, path) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, path) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("content before the first section header", exc.lineno, path) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("unparseable line", line, path) from None
    raw = {s.lower(): dict(parser[s]) for s in parser.sections()}
    for sec in raw:
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", _locate(text, sec), path)
        allowed = SCHEMA[sec]
        for key in raw[sec]:
            if allowed is not None and key not in allowed:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", _locate(text, sec, key), path)
    for sec in REQUIRED:
        if sec not in raw:
            raise ConfigError(f"missing section [{sec}]", None, path)
    sid = raw["scenario"].get("id")
    if not sid:
        raise ConfigError("scenario.id is required", _locate(text, "scenario"), path)
    try:
        lower = [float(t) for t in raw["domain"]["lower"].replace(",", " ").split()]
        upper = [float(t) for t in raw["domain"]["upper"].replace(",", " ").split()]
        domain = Domain(tuple(lower), tuple(upper))
    except KeyError as exc:
        raise ConfigError(f"domain.{exc.args[0]} is required", _locate(text, "domain"), path) from None
    except ValueError as exc:
        raise ConfigError(f"bad domain: {exc}", _locate(text, "domain"), path) from None
    checks = tuple(c.strip() for c in raw["scenario"].get("checks", "naturality").split(",") if c.strip())
    for c in checks:
        if c not in CHECKS:
            raise ConfigError(f"unknown check {c!r}; expected one of {', '.join(CHECKS)}",
                              _locate(text, "scenario", "checks"), path)
    if not checks:
        raise ConfigError("no checks requested", _locate(text, "scenario", "checks"), path)
    expect = {}
    for key, val in raw.get("expect", {}).items():
        check = key.split("@", 1)[0]
        allowed = {a.strip() for a in val.split("|")}
        if check not in CHECKS or not allowed or not allowed <= VERDICTS:
            raise ConfigError(f"bad expectation {key} = {val}", _locate(text, "expect", key), path)
        expect[key] = allowed
    sc = Scenario(sid, domain, raw, text, path, checks, expect)
    sc.validate()
    return sc


def load(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc.strerror}", None, str(path)) from None
    return loads(text, str(path))


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package."""
    from importlib.resources import files

    return Path(str(files("weakchain") / "scenarios" / name))


# --- execution ----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _res(r) -> str:
    return "x".join(str(i) for i in r)


@dataclass(frozen=True)
class Outcome:
    """One verdict-bearing result: the check key, verdict and its CSV rows."""

    check: str
    label: str
    verdict: str
    rows: tuple[tuple[str, ...], ...]


def _report_rows(sid, check, k, param, rep: ResidualReport):
    errs = rep.level_errors
    return tuple(
        (sid, check, str(k), _res(r), _fmt(e), param, _fmt(v), _fmt(err), _fmt(rep.slope), rep.verdict)
        for r, e, v, err in zip(rep.resolutions, rep.epsilons, rep.values, errs))


def run_checks(sc: Scenario, param: str = "", cache: dict | None = None) -> list[Outcome]:
    """Execute every requested check of ``sc``; rows in a fixed order."""
    f = sc.build_map()
    alpha = sc.build_form()
    m, k = sc.source_dim, alpha.degree
    out: list[Outcome] = []
    cache = {} if cache is None else cache
    if "naturality" in sc.checks:
        key = ("naturality", sc.get("map", "s"), k)
        if key not in cache:
            grid = sc.base_grid()
            reps = []
            for phi in sc.battery(m - k - 1, f):
                rep = naturality_residual(f, alpha, phi, grid, sc.levels, sc.tolerance)
                reps.append((phi.label, rep))
            cache[key] = reps
        for label, rep in cache[key]:
            check = f"naturality[{label}]"
            out.append(Outcome("naturality", label, rep.verdict, _report_rows(sc.id, check, k, param, rep)))
    if "sobolev" in sc.checks:
        p = float(sc.get("sweep", "p", k + 1))
        out.append(_membership(sc, f, p, 1, "sobolev", f"p={p!r}", param))
    if "minors" in sc.checks:
        q = float(sc.get("sweep", "q", k + 1))
        deg = max(k, 1)
        out.append(_membership(sc, f, q, deg, "minors", f"q={q!r}", param))
    if "stability" in sc.checks:
        deg = sc._int("mollify", "degree", max(k, 1))
        rep = stability_diagnostic(f, deg, sc.mollify_schedule(), sc.domain,
                                   sc._int("mollify", "resolution", 128))
        rows = []
        for e, per, env in zip(rep.epsilons, rep.per_eps, rep.envelope):
            rows.append((sc.id, "stability", str(deg), "", _fmt(e), param, _fmt(env), _fmt(per), "",
                         rep.verdict))
        out.append(Outcome("stability", "", rep.verdict, tuple(rows)))
    return out


def _membership(sc, f, p, degree, check, label, param) -> Outcome:
    grid = sc.base_grid()
    rep = maps.sobolev_report(f, p, sc.domain, grid.resolution, grid.epsilon, sc.levels, degree)
    vals = rep.values
    errs = (None,) + tuple(abs(vals[i] - vals[i - 1]) for i in range(1, len(vals)))
    tag = f"{param};{label}" if param else label
    rows = tuple((sc.id, check, str(degree), _res(r), _fmt(e), tag, _fmt(v), _fmt(err), "",
                  rep.classification)
                 for r, e, v, err in zip(rep.resolutions, rep.epsilons, vals, errs))
    return Outcome(check, "", rep.classification, rows)


def sweep_values(sc: Scenario) -> tuple[str, list]:
    name = sc.get("sweep", "parameter")
    if name is None:
        raise sc.error("sweep.parameter is required", "sweep")
    if name not in SWEEP_PARAMETERS:
        raise sc.error(f"unknown sweep parameter {name!r}; expected one of {', '.join(SWEEP_PARAMETERS)}",
                       "sweep", "parameter")
    if sc.get("sweep", "values") is not None:
        vals = sc._vector("sweep", "values")
    else:
        start, stop = sc._float("sweep", "start"), sc._float("sweep", "stop")
        steps = sc._int("sweep", "steps")
        if start is None or stop is None or steps is None:
            raise sc.error("sweep needs values or start/stop/steps", "sweep")
        vals = [float(v) for v in np.linspace(start, stop, steps)] if steps > 0 else []
    if not vals:
        raise sc.error("empty sweep range", "sweep")
    if name == "k":
        if any(v != int(v) for v in vals):
            raise sc.error("degree sweep values must be integers", "sweep", "values")
        if sc.get("form", "kind") not in ("standard", None):
            raise sc.error("a degree sweep needs form.kind = standard", "form", "kind")
        vals = [int(v) for v in vals]
    if name == "s" and sc.get("map", "family") != "radial_power":
        raise sc.error("sweeping s needs map.family = radial_power", "map", "family")
    return name, vals


def sweep_points(sc: Scenario) -> list[tuple[str, Scenario]]:
    """``(param label, scenario)`` per sweep value, each validated up front."""
    name, vals = sweep_values(sc)
    checks = tuple(dict.fromkeys(sc.checks + ("naturality", "sobolev") +
                                 (("minors",) if name == "q" or sc.get("sweep", "q") else ())))
    out = []
    for v in vals:
        section = {"s": "map", "k": "form", "p": "sweep", "q": "sweep"}[name]
        key = {"k": "degree"}.get(name, name)
        pt = replace(sc.with_overrides(section, **{key: v}), checks=checks)
        pt.validate()
        out.append((f"{name}={v!r}", pt))
    return out


def expectation_failures(sc: Scenario, outcomes: list[Outcome]) -> list[str]:
    """Messages for every expected verdict that was not met."""
    bad = []
    for key, allowed in sc.expect.items():
        check, _, prefix = key.partition("@")
        hits = [o for o in outcomes if o.check == check and o.label.startswith(prefix)]
        if not hits:
            bad.append(f"{key}: no matching results")
        for o in hits:
            if o.verdict not in allowed:
                name = f"{check}[{o.label}]" if o.label else check
                bad.append(f"{name}: got {o.verdict}, expected {'|'.join(sorted(allowed))}")
    return bad


def write_csv(rows, handle) -> None:
    w = csv.writer(handle, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows)


def csv_text(rows) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()


def summarize(outcomes: list[Outcome], param: str = "") -> list[str]:
    lines = []
    for o in outcomes:
        last = o.rows[-1]
        name = f"{o.check}[{o.label}]" if o.label else o.check
        head = f"{param:>10} " if param else ""
        lines.append(f"{head}{name:<34} k={last[2]} value={float(last[6]):+.6e} -> {o.verdict}")
    return lines
