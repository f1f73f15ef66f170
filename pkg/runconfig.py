#!/usr/bin/env python3
"""
runconfig.py - reading and validating run configuration files.

A run is described by one INI-style file:

    # static congruence on a 16^3 grid
    [run]
    mode = congruence
    workers = 1

    [source]
    genfunc = static            # or kerr:1.0, shifted:0.5, or a polynomial text

    [grid]
    lo = -2
    hi = 2
    n = 16

    [output]
    dir = out

Keys are addressed as ``section.key``; ``--set grid.n=32`` on the command
line overrides the file. Validation failures name the offending key and,
where it came from the file, its line.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, FilePath, ValidationError, field_validator, model_validator

import solutions
from numerics import Grid4, Tolerances

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MODES = ("congruence", "caustics", "fields", "uwl", "render")


class ConfigError(ValueError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None) -> None:
        where = []
        if field:
            where.append(f"field {field}")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.field = field
        self.line = line


def _split_list(value):
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class RunSection(_Section):
    mode: Literal["congruence", "caustics", "fields", "uwl", "render"]
    workers: int = Field(1, ge=1, le=64)
    seed: int = Field(0, ge=0)


class SourceSpec(_Section):
    genfunc: Optional[str] = None        # bundled name (static, kerr:a, shifted:c) or polynomial text
    genfunc_file: Optional[FilePath] = None
    pair: Optional[str] = None           # bundled name or "text ; text"
    worldline: Optional[str] = None      # four polynomials in s separated by ";"
    observer: str = "s; 0; 0; 0"
    implicit: Optional[str] = None       # three polynomials in t, x, y, z separated by ";"

    def genfunc_text(self) -> Optional[str]:
        if self.genfunc_file is not None:
            return Path(self.genfunc_file).read_text(encoding="utf-8").strip()
        if self.genfunc is None:
            return None
        name, _, arg = self.genfunc.partition(":")
        name = name.strip()
        if name == "static" and not arg:
            return solutions.STATIC_TEXT
        try:
            if name == "kerr":
                return solutions.kerr_text(float(arg or 1.0))
            if name == "shifted":
                return solutions.shifted_text(float(arg or 0.0))
        except ValueError:
            raise ConfigError(f"bad parameter {arg!r} for {name}", "source.genfunc") from None
        return self.genfunc

    def pair_texts(self) -> Optional[Tuple[str, str]]:
        if self.pair is None:
            return None
        if self.pair in solutions.PAIRS:
            return solutions.PAIRS[self.pair]
        parts = [p.strip() for p in self.pair.split(";")]
        if len(parts) != 2:
            raise ConfigError("a generating pair needs two polynomials separated by ';'", "source.pair")
        return parts[0], parts[1]

    @staticmethod
    def _parts(text: str, n: int, name: str) -> List[str]:
        parts = [p.strip() for p in text.split(";")]
        if len(parts) != n:
            raise ConfigError(f"expected {n} polynomials separated by ';', got {len(parts)}", name)
        return parts

    def worldline_texts(self) -> List[str]:
        return self._parts(self.worldline, 4, "source.worldline")

    def observer_texts(self) -> List[str]:
        return self._parts(self.observer, 4, "source.observer")

    def implicit_texts(self) -> List[str]:
        return self._parts(self.implicit, 3, "source.implicit")


class GridSpec(_Section):
    lo: float = -2.0
    hi: float = 2.0
    n: int = Field(16, ge=2, le=256)
    t: float = 0.0
    times: List[float] = Field(default_factory=list)

    @field_validator("times", mode="before")
    @classmethod
    def _split_times(cls, v):
        return _split_list(v)

    @model_validator(mode="after")
    def _ordered(self) -> "GridSpec":
        if not self.hi > self.lo:
            raise ValueError("grid.hi must exceed grid.lo")
        return self

    def grid(self) -> Grid4:
        return Grid4.cube(self.lo, self.hi, self.n, self.t)

    def slice_times(self) -> List[float]:
        return self.times or [self.t]


class ToleranceSpec(_Section):
    lead_cutoff: float = Field(1e-12, gt=0)
    cluster_radius: float = Field(1e-6, gt=0)
    collision_eps: float = Field(1e-5, gt=0)
    real_eps: float = Field(1e-9, gt=0)
    locus_tol: float = Field(1e-8, gt=0)
    rank_cutoff: float = Field(1e-7, gt=0)
    max_iter: int = Field(500, ge=1)

    def tolerances(self, seed: int = 0) -> Tolerances:
        return Tolerances(**self.model_dump(), seed=seed)


class OutputSpec(_Section):
    dir: str = "out"
    prefix: str = ""

    def path(self, name: str) -> Path:
        return Path(self.dir) / f"{self.prefix}{name}"


class FieldsSpec(_Section):
    branch: int = Field(0, ge=0)
    radii: List[float] = Field(default_factory=list)
    center: List[float] = Field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    order: int = Field(32, ge=4, le=256)

    @field_validator("radii", "center", mode="before")
    @classmethod
    def _split_lists(cls, v):
        return _split_list(v)

    @field_validator("center")
    @classmethod
    def _four(cls, v: List[float]) -> List[float]:
        if len(v) != 4:
            raise ValueError("fields.center needs four coordinates")
        return v


class UwlSpec(_Section):
    tau_start: float = 0.0
    tau_stop: float = 10.0
    tau_count: int = Field(200, ge=2)
    cluster_radius: float = Field(0.5, gt=0)

    def taus(self) -> np.ndarray:
        return np.linspace(self.tau_start, self.tau_stop, self.tau_count)


class RenderSpec(_Section):
    field: Literal["screw", "static"] = "screw"
    radius: float = Field(1.0, gt=0)
    n_theta: int = Field(12, ge=2)
    n_phi: int = Field(24, ge=2)


class RunConfig(_Section):
    run: RunSection
    source: SourceSpec = Field(default_factory=SourceSpec)
    grid: GridSpec = Field(default_factory=GridSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    fields: FieldsSpec = Field(default_factory=FieldsSpec)
    uwl: UwlSpec = Field(default_factory=UwlSpec)
    render: RenderSpec = Field(default_factory=RenderSpec)

    @model_validator(mode="after")
    def _mode_requirements(self) -> "RunConfig":
        s = self.source
        mode = self.run.mode
        has_genfunc = s.genfunc is not None or s.genfunc_file is not None
        if mode in ("congruence", "fields") and not has_genfunc:
            raise ValueError(f"mode {mode} needs source.genfunc")
        if mode == "caustics" and not (has_genfunc or s.pair):
            raise ValueError("mode caustics needs source.genfunc or source.pair")
        if mode == "uwl" and not (s.worldline or s.implicit):
            raise ValueError("mode uwl needs source.worldline or source.implicit")
        return self

    @property
    def tol(self) -> Tolerances:
        return self.tolerances.tolerances(self.run.seed)

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


# --- Reading ------------------------------------------------------------------------


_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_LINE = re.compile(r"^\s*([^=:#;\s\[][^=:]*?)\s*[=:]")


def _key_lines(text: str) -> Dict[str, int]:
    """``section.key`` -> 1-based line number of its definition."""
    out: Dict[str, int] = {}
    section = None
    for n, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_LINE.match(line)
        if m:
            section = m.group(1).strip()
            continue
        m = _KEY_LINE.match(line)
        if m and section:
            out[f"{section}.{m.group(1).strip().lower()}"] = n
    return out


def parse_overrides(items: Sequence[str]) -> Dict[str, str]:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or "." not in key:
            raise ConfigError(f"override must look like section.key=value, got {item!r}", key or None)
        out[key.lower()] = value.strip()
    return out


def parse_config_text(text: str, overrides: Sequence[str] = (), source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", line=exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line", line=line) from exc
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message, line=exc.lineno) from exc

    flat = {f"{s}.{k}": v for s in parser.sections() for k, v in parser[s].items()}
    flat.update(parse_overrides(overrides))
    lines = _key_lines(text)
    nested: Dict[str, Dict[str, str]] = {}
    for key, value in flat.items():
        section, _, name = key.partition(".")
        nested.setdefault(section, {})[name] = value

    try:
        config = RunConfig.model_validate(nested)
    except ValidationError as exc:
        err = exc.errors()[0]
        field = ".".join(str(p) for p in err["loc"]) or None
        key = ".".join(str(p) for p in err["loc"][:2]) if len(err["loc"]) >= 2 else None
        raise ConfigError(err["msg"], field, lines.get(key) if key else None) from exc
    log.debug("config %s validated (sha256 %s)", source, config.sha256()[:12])
    return config


def read_config(path, overrides: Sequence[str] = ()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    return parse_config_text(text, overrides, str(path))
