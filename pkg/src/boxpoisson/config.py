"""Run configuration: flat INI-style sections, unknown keys rejected with line numbers.

    [geometry]      builtin (default | none), panels (auto | int), padding, box (x0, y0, width)
    [curve:NAME]    orientation, c0, cos (j:c, ...), sin (j:d, ...), center (x, y)
    [problem]       name (example1 | example2 | custom-harmonic)
    [solver]        extension, version, eps_v, qbx_order, tolerance, weighting, max_level, level
    [study]         levels, tolerances, samples, seed
    [output]        dir, prefix, sample_field, tree_dumps
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from .errors import ConfigError
from .examples import BUILTINS
from .extension import ExtensionMode
from .geometry import FourierCurve, Orientation
from .quadtree import Weighting
from .solver import CorrectionVersion


@dataclass
class GeometryConfig:
    builtin: str = "default"
    panels: str | int = "auto"
    padding: float = 0.1
    box: tuple | None = None
    curves: list = field(default_factory=list)


@dataclass
class SolverConfig:
    extension: ExtensionMode = ExtensionMode.CONTINUOUS
    version: CorrectionVersion = CorrectionVersion.V1
    eps_v: float = 1e-10
    qbx_order: int = 12
    tolerance: float = 1e-6
    weighting: Weighting = Weighting.HYBRID
    max_level: int = 8
    level: int | None = None  # uniform tree at this level when set


@dataclass
class StudyConfig:
    levels: list = field(default_factory=list)
    tolerances: list = field(default_factory=list)
    samples: int = 10_000
    seed: int = 0


@dataclass
class OutputConfig:
    dir: str = "out"
    prefix: str = "run"
    sample_field: bool = True
    tree_dumps: bool = True


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    problem: str = "example1"
    solver: SolverConfig = field(default_factory=SolverConfig)
    study: StudyConfig = field(default_factory=StudyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: str = "<defaults>"


_KEYS = {
    "geometry": {"builtin", "panels", "padding", "box"},
    "curve": {"orientation", "c0", "cos", "sin", "center"},
    "problem": {"name"},
    "solver": {"extension", "version", "eps_v", "qbx_order", "tolerance", "weighting", "max_level", "level"},
    "study": {"levels", "tolerances", "samples", "seed"},
    "output": {"dir", "prefix", "sample_field", "tree_dumps"},
}


def _line_index(text):
    """(section, key) -> line number, plus section -> line number."""
    where, sec = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", line)
        if m:
            sec = m.group(1).strip()
            where[(sec, None)] = no
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and sec is not None:
            where[(sec, m.group(1).strip().lower())] = no
    return where


def _floats(s, n=None):
    vals = [float(v) for v in s.replace(";", ",").split(",") if v.strip()]
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} numbers")
    return vals


def _coeffs(s):
    out = {}
    for item in s.split(","):
        if item.strip():
            j, c = item.split(":")
            out[int(j)] = float(c)
    return out


def _bool(s):
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def parse_config(text, source="<string>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source)
    except configparser.Error as e:
        raise ConfigError(f"{source}: {e}") from None
    where = _line_index(text)
    cfg = RunConfig(source=source)

    def fail(sec, key, msg):
        no = where.get((sec, key), where.get((sec, None), 0))
        raise ConfigError(f"{source}:{no}: [{sec}] {key + ': ' if key else ''}{msg}")

    def conv(sec, key, fn):
        try:
            return fn(cp[sec][key])
        except (ValueError, KeyError) as e:
            fail(sec, key, f"invalid value {cp[sec][key]!r} ({e})")

    for sec in cp.sections():
        base = "curve" if sec.startswith("curve:") else sec
        if base not in _KEYS:
            fail(sec, None, "unknown section")
        for key in cp[sec]:
            if key not in _KEYS[base]:
                fail(sec, key, "unknown key")

    if cp.has_section("geometry"):
        s = cp["geometry"]
        if "builtin" in s:
            cfg.geometry.builtin = s["builtin"].strip()
            if cfg.geometry.builtin not in ("default", "none"):
                fail("geometry", "builtin", "must be default or none")
        if "panels" in s:
            v = s["panels"].strip()
            cfg.geometry.panels = v if v == "auto" else conv("geometry", "panels", int)
            if v != "auto" and cfg.geometry.panels < 3:
                fail("geometry", "panels", "need at least 3 panels per curve")
        if "padding" in s:
            cfg.geometry.padding = conv("geometry", "padding", float)
            if cfg.geometry.padding < 0:
                fail("geometry", "padding", "must be non-negative")
        if "box" in s:
            x0, y0, w = conv("geometry", "box", lambda v: _floats(v, 3))
            if w <= 0:
                fail("geometry", "box", "width must be positive")
            cfg.geometry.box = ((x0, y0), w)
    for sec in cp.sections():
        if not sec.startswith("curve:"):
            continue
        s = cp[sec]
        try:
            curve = FourierCurve(
                float(s.get("c0", "nan")), _coeffs(s.get("cos", "")), _coeffs(s.get("sin", "")),
                tuple(_floats(s.get("center", "0,0"), 2)), Orientation(s.get("orientation", "outer").strip()),
            )
        except ValueError as e:
            fail(sec, None, str(e))
        if not curve.c0 > 0:
            fail(sec, "c0", "c0 must be a positive number")
        cfg.geometry.curves.append(curve)
    if cfg.geometry.builtin == "none" and not cfg.geometry.curves:
        fail("geometry", "builtin", "builtin = none needs [curve:NAME] sections")
    if cfg.geometry.builtin == "default" and cfg.geometry.curves:
        fail("geometry", "builtin", "set builtin = none to use [curve:NAME] sections")

    if cp.has_section("problem") and "name" in cp["problem"]:
        cfg.problem = cp["problem"]["name"].strip()
        if cfg.problem not in BUILTINS:
            fail("problem", "name", f"unknown problem (choose from {', '.join(BUILTINS)})")

    if cp.has_section("solver"):
        s, sv = cp["solver"], cfg.solver
        if "extension" in s:
            sv.extension = conv("solver", "extension", lambda v: ExtensionMode(v.strip()))
        if "version" in s:
            sv.version = conv("solver", "version", lambda v: CorrectionVersion(v.strip()))
        if "eps_v" in s:
            sv.eps_v = conv("solver", "eps_v", float)
            if not sv.eps_v > 0:
                fail("solver", "eps_v", "must be positive")
        if "qbx_order" in s:
            sv.qbx_order = conv("solver", "qbx_order", int)
            if sv.qbx_order < 1:
                fail("solver", "qbx_order", "must be positive")
        if "tolerance" in s:
            sv.tolerance = conv("solver", "tolerance", float)
            if sv.tolerance < 0:
                fail("solver", "tolerance", "must be non-negative")
        if "weighting" in s:
            sv.weighting = conv("solver", "weighting", lambda v: Weighting(v.strip()))
        if "max_level" in s:
            sv.max_level = conv("solver", "max_level", int)
            if not 0 <= sv.max_level <= 20:
                fail("solver", "max_level", "must lie in [0, 20]")
        if "level" in s:
            sv.level = conv("solver", "level", int)
            if not 0 <= sv.level <= 20:
                fail("solver", "level", "must lie in [0, 20]")

    if cp.has_section("study"):
        s, st = cp["study"], cfg.study
        if "levels" in s:
            st.levels = conv("study", "levels", lambda v: [int(x) for x in v.split(",") if x.strip()])
            if any(lv < 0 or lv > 20 for lv in st.levels):
                fail("study", "levels", "levels must lie in [0, 20]")
        if "tolerances" in s:
            st.tolerances = conv("study", "tolerances", _floats)
            if any(t <= 0 for t in st.tolerances):
                fail("study", "tolerances", "tolerances must be positive")
        if "samples" in s:
            st.samples = conv("study", "samples", int)
            if st.samples < 1:
                fail("study", "samples", "must be positive")
        if "seed" in s:
            st.seed = conv("study", "seed", int)
            if not 0 <= st.seed < 2**64:
                fail("study", "seed", "must be an unsigned 64-bit integer")

    if cp.has_section("output"):
        s, out = cp["output"], cfg.output
        if "dir" in s:
            out.dir = s["dir"].strip()
        if "prefix" in s:
            out.prefix = s["prefix"].strip()
        if "sample_field" in s:
            out.sample_field = conv("output", "sample_field", _bool)
        if "tree_dumps" in s:
            out.tree_dumps = conv("output", "tree_dumps", _bool)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    return parse_config(text, str(path))
