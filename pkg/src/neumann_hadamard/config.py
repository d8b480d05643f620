"""Flat key-value study configuration.

Format::

    # comment
    [domain]
    a = 1.0, 0.0, 0.1
    [family]
    class = c1
    profile = dent

Every key belongs to a ``[section]``; lists are comma separated. Unknown
sections or keys are rejected with the offending line number.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ParseError, ValidationError
from .geometry import FAMILY_CLASSES, PROFILES, PerturbationFamily, Rectangle, make_star_domain

FORMS = ("boundary", "volume", "both")
SHAPES = ("star", "rectangle")


@dataclass(frozen=True)
class DomainSpec:
    shape: str = "star"
    a: tuple[float, ...] = (1.0,)
    b: tuple[float, ...] = ()
    center: tuple[float, float] = (0.0, 0.0)
    width: float = 1.0
    height: float = 1.0

    def build(self):
        if self.shape == "rectangle":
            return Rectangle(self.width, self.height)
        return make_star_domain(self.a, self.b, self.center)


@dataclass(frozen=True)
class FamilySpec:
    kind: str = "smooth"
    profile: str = "cos"
    alpha: float = 0.5
    n0: int = 2
    c: float = 1.0
    harmonics: int = 3

    def build(self) -> PerturbationFamily:
        return PerturbationFamily(self.kind, self.profile, self.alpha, self.n0, self.c, self.harmonics)


@dataclass(frozen=True)
class EpsilonSpec:
    start: float = 0.1
    factor: float = 0.5
    count: int = 4

    def values(self) -> list[float]:
        return [self.start * self.factor**i for i in range(self.count)]


@dataclass(frozen=True)
class ClusterSpec:
    target: float = 3.39
    rel_tol: float = 1e-3


@dataclass(frozen=True)
class MeshSpec:
    per_oscillation: int = 10
    min_angular: int = 256
    max_vertices: int = 200_000
    rect_cells: int = 32
    fit_extra: int = 4
    hausdorff_samples: int = 4096


@dataclass(frozen=True)
class SolverSpec:
    tol: float = 1e-8
    count: int = 8
    dense_threshold: int = 800
    max_iter: int = 300


@dataclass(frozen=True)
class RunSpec:
    workers: int = 1
    form: str = "boundary"
    n_t: int = 4


@dataclass(frozen=True)
class StudyConfig:
    domain: DomainSpec = field(default_factory=DomainSpec)
    family: FamilySpec = field(default_factory=FamilySpec)
    epsilon: EpsilonSpec = field(default_factory=EpsilonSpec)
    cluster: ClusterSpec = field(default_factory=ClusterSpec)
    mesh: MeshSpec = field(default_factory=MeshSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    run: RunSpec = field(default_factory=RunSpec)
    output_dir: str = "."

    def epsilons(self) -> list[float]:
        return self.epsilon.values()


# section -> (spec attribute, {config key: dataclass field})
_SECTIONS = {
    "domain": ("domain", {"shape": "shape", "a": "a", "b": "b", "center": "center",
                          "width": "width", "height": "height"}),
    "family": ("family", {"class": "kind", "profile": "profile", "alpha": "alpha", "n0": "n0",
                          "c": "c", "harmonics": "harmonics"}),
    "epsilon": ("epsilon", {"start": "start", "factor": "factor", "count": "count"}),
    "cluster": ("cluster", {"target": "target", "rel_tol": "rel_tol"}),
    "mesh": ("mesh", {k: k for k in ("per_oscillation", "min_angular", "max_vertices", "rect_cells",
                                      "fit_extra", "hausdorff_samples")}),
    "solver": ("solver", {k: k for k in ("tol", "count", "dense_threshold", "max_iter")}),
    "run": ("run", {"workers": "workers", "form": "form", "n_t": "n_t"}),
    "output": (None, {"dir": "output_dir"}),
}


def _convert(raw: str, template, key: str, line: int):
    try:
        if isinstance(template, tuple):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            return tuple(float(x) for x in items)
        if isinstance(template, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(template, int):
            return int(raw)
        if isinstance(template, float):
            return float(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r} for {key!r}", line) from None
    return raw


def parse_config(text: str) -> StudyConfig:
    """Parse and validate a study configuration document."""
    values: dict[str, dict[str, object]] = {}
    section = None
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError(f"malformed section header {stripped!r}", lineno)
            section = stripped[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in stripped:
            raise ParseError(f"expected 'key = value', got {stripped!r}", lineno)
        if section is None:
            raise ParseError("key outside of any [section]", lineno)
        key, raw = (s.strip() for s in stripped.split("=", 1))
        key = key.lower()
        attr, keymap = _SECTIONS[section]
        if key not in keymap:
            raise ParseError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, key) in seen:
            raise ParseError(f"duplicate key {key!r} in [{section}]", lineno)
        seen.add((section, key))
        target = keymap[key]
        spec = getattr(StudyConfig(), attr) if attr else StudyConfig()
        template = getattr(spec, target)
        values.setdefault(section, {})[target] = _convert(raw, template, key, lineno)

    cfg = StudyConfig()
    for section, kv in values.items():
        attr, _ = _SECTIONS[section]
        if attr is None:
            cfg = replace(cfg, **kv)
        else:
            cfg = replace(cfg, **{attr: replace(getattr(cfg, attr), **kv)})
    validate(cfg)
    return cfg


def load_config(path) -> StudyConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError("config", str(exc)) from None
    except UnicodeDecodeError:
        raise ParseError("config is not valid UTF-8") from None
    return parse_config(text)


def _positive(name, value):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValidationError(name, f"must be positive, got {value!r}")


def _writable(path: str) -> bool:
    p = Path(path).resolve()
    while not p.exists():
        p = p.parent
    return p.is_dir() and os.access(p, os.W_OK)


def validate(cfg: StudyConfig) -> None:
    """Raise :class:`ValidationError` naming the first offending field."""
    d = cfg.domain
    if d.shape not in SHAPES:
        raise ValidationError("shape", f"expected one of {SHAPES}")
    if len(d.center) != 2:
        raise ValidationError("center", "expected two coordinates")
    if d.shape == "star":
        if not d.a:
            raise ValidationError("a", "at least the mean radius a0 is required")
        try:
            make_star_domain(d.a, d.b, d.center)
        except ValueError as exc:
            raise ValidationError("a", str(exc)) from None
    else:
        _positive("width", d.width)
        _positive("height", d.height)

    f = cfg.family
    if f.kind not in FAMILY_CLASSES:
        raise ValidationError("class", f"expected one of {FAMILY_CLASSES}")
    if f.profile not in PROFILES:
        raise ValidationError("profile", f"expected one of {PROFILES}")
    if f.kind == "holder" and not 0.0 < f.alpha < 1.0:
        raise ValidationError("alpha", "must lie in (0, 1)")
    _positive("c", f.c)
    if f.n0 < 0:
        raise ValidationError("n0", "must be non-negative")
    if f.harmonics < 1:
        raise ValidationError("harmonics", "must be >= 1")

    e = cfg.epsilon
    _positive("start", e.start)
    if not 0.0 < e.factor < 1.0:
        raise ValidationError("factor", "must lie in (0, 1) so the sequence decreases")
    if e.count < 1:
        raise ValidationError("count", "need at least one epsilon")

    _positive("target", cfg.cluster.target)
    _positive("rel_tol", cfg.cluster.rel_tol)

    m = cfg.mesh
    if m.per_oscillation < 4:
        raise ValidationError("per_oscillation", "must be >= 4")
    if m.min_angular < 3:
        raise ValidationError("min_angular", "must be >= 3")
    _positive("max_vertices", m.max_vertices)
    _positive("rect_cells", m.rect_cells)
    if m.fit_extra < 0:
        raise ValidationError("fit_extra", "must be non-negative")
    _positive("hausdorff_samples", m.hausdorff_samples)

    s = cfg.solver
    _positive("tol", s.tol)
    if s.count < 2:
        raise ValidationError("count", "solver count must be >= 2")
    if s.dense_threshold < 0:
        raise ValidationError("dense_threshold", "must be non-negative")
    _positive("max_iter", s.max_iter)

    r = cfg.run
    _positive("workers", r.workers)
    _positive("n_t", r.n_t)
    if r.form not in FORMS:
        raise ValidationError("form", f"expected one of {FORMS}")
    if not _writable(cfg.output_dir):
        raise ValidationError("dir", f"output directory {cfg.output_dir!r} is not writable")


def format_config(cfg: StudyConfig) -> str:
    """Inverse of :func:`parse_config` (round-trips every field)."""
    lines = []
    for section, (attr, keymap) in _SECTIONS.items():
        spec = getattr(cfg, attr) if attr else cfg
        lines.append(f"[{section}]")
        for key, name in keymap.items():
            v = getattr(spec, name)
            if isinstance(v, tuple):
                v = ", ".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{key} = {v}")
        lines.append("")
    return "\n".join(lines)


__all__ = [
    "ClusterSpec", "DomainSpec", "EpsilonSpec", "FamilySpec", "MeshSpec", "RunSpec", "SolverSpec",
    "StudyConfig", "format_config", "load_config", "parse_config", "validate",
]
