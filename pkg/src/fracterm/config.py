"""Experiment configuration: a versioned JSON document parsed into dataclasses.

Example::

    {
      "schema": "fracterm.experiment/1",
      "problem": {
        "alpha": 1.5, "T": 2.0,
        "basis": {"kind": "dirichlet_1d", "L": 3.141592653589793, "J": 32},
        "f": {"preset": "power_law", "exponent": 0.8, "offset": 0.05}
      },
      "regularity": {"nu": 0.0, "theta": 0.8},
      "nonlinearity": {"kind": "lipschitz_scaled", "L1_fraction": 0.5},
      "grid": {"N": 256, "gamma_mesh": 2.0},
      "solver": {"mode": "picard", "tol": 1e-10, "max_iter": 200}
    }

Every error names the offending field with a dotted path.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

from .constants import RegularityParams
from .errors import ConfigError
from .nonlinearity import KINDS

SCHEMA = "fracterm.experiment/1"
BASIS_KINDS = ("dirichlet_1d", "dirichlet_2d", "file")
F_PRESETS = ("single_mode", "power_law", "file")
MODES = ("picard", "path", "contraction", "forward", "roundtrip")
SUITES = ("estimates", "blowup", "holder", "residual", "stability")
APPLICATIONS = ("ginzburg_landau", "burgers")


def _num(d: dict, key: str, path: str, default: Any = ..., positive: bool = False, integer: bool = False):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{path}.{key}", "required")
        return default
    v = d[key]
    if v is None and default is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if integer:
        if int(v) != v:
            raise ConfigError(f"{path}.{key}", "must be an integer")
        v = int(v)
    if positive and not v > 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {v}")
    return v


def _obj(d: dict, key: str, path: str, required: bool = True) -> dict:
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}".lstrip("."), "required")
        return {}
    v = d[key]
    if not isinstance(v, dict):
        raise ConfigError(f"{path}.{key}".lstrip("."), "expected an object")
    return v


def _unknown(d: dict, allowed: set[str], path: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}".lstrip("."), "unknown field")


@dataclass(frozen=True)
class BasisConfig:
    kind: str = "dirichlet_1d"
    L: float = math.pi
    Lx: float = math.pi
    Ly: float = math.pi
    J: int = 32
    M: int | None = None
    spectrum: str | None = None
    samples: str | None = None

    @classmethod
    def parse(cls, d: dict, path: str = "problem.basis") -> "BasisConfig":
        _unknown(d, {f.name for f in fields(cls)}, path)
        kind = d.get("kind", "dirichlet_1d")
        if kind not in BASIS_KINDS:
            raise ConfigError(f"{path}.kind", f"expected one of {BASIS_KINDS}, got {kind!r}")
        if kind == "file" and not isinstance(d.get("spectrum"), str):
            raise ConfigError(f"{path}.spectrum", "required for kind 'file'")
        return cls(
            kind=kind,
            L=float(_num(d, "L", path, math.pi, positive=True)),
            Lx=float(_num(d, "Lx", path, math.pi, positive=True)),
            Ly=float(_num(d, "Ly", path, math.pi, positive=True)),
            J=_num(d, "J", path, 32, positive=True, integer=True),
            M=_num(d, "M", path, None, positive=True, integer=True),
            spectrum=d.get("spectrum"),
            samples=d.get("samples"),
        )


@dataclass(frozen=True)
class DataConfig:
    preset: str = "single_mode"
    j: int = 1
    exponent: float = 0.0
    offset: float = 0.05
    amplitude: float = 1.0
    path: str | None = None

    @classmethod
    def parse(cls, d: dict, path: str = "problem.f") -> "DataConfig":
        _unknown(d, {f.name for f in fields(cls)}, path)
        preset = d.get("preset", "single_mode")
        if preset not in F_PRESETS:
            raise ConfigError(f"{path}.preset", f"expected one of {F_PRESETS}, got {preset!r}")
        if preset == "file" and not isinstance(d.get("path"), str):
            raise ConfigError(f"{path}.path", "required for preset 'file'")
        return cls(
            preset=preset,
            j=_num(d, "j", path, 1, positive=True, integer=True),
            exponent=float(_num(d, "exponent", path, 0.0)),
            offset=float(_num(d, "offset", path, 0.05)),
            amplitude=float(_num(d, "amplitude", path, 1.0)),
            path=d.get("path"),
        )


@dataclass(frozen=True)
class NonlinearityConfig:
    """``L1_fraction`` sets ||L1|| to that fraction of the admissible bound;
    ``K0_fraction`` sets C_rho so K0 T^(s alpha vartheta) is that fraction of the
    critical threshold (``K_G`` is then fitted)."""

    kind: str = "zero"
    L1: float | None = None
    L1_fraction: float | None = None
    s: float = 1.0
    c_rho: float = 0.0
    b: float = 0.0
    K0_fraction: float | None = None

    @classmethod
    def parse(cls, d: dict, path: str = "nonlinearity") -> "NonlinearityConfig":
        _unknown(d, {f.name for f in fields(cls)}, path)
        kind = d.get("kind", "zero")
        if kind not in KINDS or kind == "linear_inhomogeneous":
            raise ConfigError(f"{path}.kind", f"unsupported kind {kind!r}")
        out = cls(
            kind=kind,
            L1=_num(d, "L1", path, None),
            L1_fraction=_num(d, "L1_fraction", path, None, positive=True),
            s=float(_num(d, "s", path, 1.0, positive=True)),
            c_rho=float(_num(d, "c_rho", path, 0.0)),
            b=float(_num(d, "b", path, 0.0)),
            K0_fraction=_num(d, "K0_fraction", path, None, positive=True),
        )
        if kind == "lipschitz_scaled" and out.L1 is None and out.L1_fraction is None:
            raise ConfigError(f"{path}.L1", "lipschitz_scaled needs L1 or L1_fraction")
        if out.L1 is not None and out.L1 < 0:
            raise ConfigError(f"{path}.L1", "must be non-negative")
        return out


@dataclass(frozen=True)
class GridConfig:
    N: int = 256
    gamma_mesh: float = 2.0

    @classmethod
    def parse(cls, d: dict, path: str = "grid") -> "GridConfig":
        _unknown(d, {"N", "gamma_mesh"}, path)
        N = _num(d, "N", path, 256, integer=True)
        if N < 8:
            raise ConfigError(f"{path}.N", f"must be at least 8, got {N}")
        g = float(_num(d, "gamma_mesh", path, 2.0))
        if g < 1:
            raise ConfigError(f"{path}.gamma_mesh", "must be >= 1")
        return cls(N, g)


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "picard"
    tol: float = 1e-10
    max_iter: int = 200

    @classmethod
    def parse(cls, d: dict, path: str = "solver") -> "SolverConfig":
        _unknown(d, {"mode", "tol", "max_iter"}, path)
        mode = d.get("mode", "picard")
        if mode not in MODES:
            raise ConfigError(f"{path}.mode", f"expected one of {MODES}, got {mode!r}")
        return cls(
            mode,
            float(_num(d, "tol", path, 1e-10, positive=True)),
            _num(d, "max_iter", path, 200, positive=True, integer=True),
        )


@dataclass(frozen=True)
class AnalysisConfig:
    suites: tuple[str, ...] = ("residual",)
    norms: tuple[float, ...] = (0.0,)
    deltas: tuple[float, ...] = (1e-2, 1e-4, 1e-6)
    n_trials: int = 1

    @classmethod
    def parse(cls, d: dict, path: str = "analysis") -> "AnalysisConfig":
        _unknown(d, {"suites", "norms", "deltas", "n_trials"}, path)
        suites = d.get("suites", ["residual"])
        if not isinstance(suites, list) or any(s not in SUITES for s in suites):
            raise ConfigError(f"{path}.suites", f"expected a list drawn from {SUITES}")
        norms = d.get("norms", [0.0])
        if not isinstance(norms, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in norms):
            raise ConfigError(f"{path}.norms", "expected a list of numbers")
        deltas = d.get("deltas", [1e-2, 1e-4, 1e-6])
        if not isinstance(deltas, list) or not all(isinstance(x, (int, float)) and x >= 0 for x in deltas):
            raise ConfigError(f"{path}.deltas", "expected a list of non-negative numbers")
        return cls(
            tuple(suites),
            tuple(float(x) for x in norms),
            tuple(float(x) for x in deltas),
            _num(d, "n_trials", path, 1, positive=True, integer=True),
        )


@dataclass(frozen=True)
class ApplicationConfig:
    kind: str
    N: int
    nu: float
    mu: float
    vartheta: float
    vartheta_prime: float
    s: float = 1.0
    varrho: float | None = None
    b: float | None = None

    @classmethod
    def parse(cls, d: dict, path: str = "application") -> "ApplicationConfig":
        _unknown(d, {f.name for f in fields(cls)}, path)
        kind = d.get("kind")
        if kind not in APPLICATIONS:
            raise ConfigError(f"{path}.kind", f"expected one of {APPLICATIONS}")
        return cls(
            kind=kind,
            N=_num(d, "N", path, integer=True),
            nu=float(_num(d, "nu", path)),
            mu=float(_num(d, "mu", path)),
            vartheta=float(_num(d, "vartheta", path)),
            vartheta_prime=float(_num(d, "vartheta_prime", path)),
            s=float(_num(d, "s", path, 1.0)),
            varrho=_num(d, "varrho", path, None),
            b=_num(d, "b", path, None),
        )


_REG_FIELDS = {f.name for f in fields(RegularityParams)}


def _parse_regularity(d: dict, path: str = "regularity") -> RegularityParams:
    _unknown(d, _REG_FIELDS, path)
    kw = {k: _num(d, k, path, None) for k in _REG_FIELDS if k in d}
    if kw.get("nu") is None:
        kw["nu"] = 0.0
    return RegularityParams(**kw)


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float
    T: float
    basis: BasisConfig
    f: DataConfig
    regularity: RegularityParams = field(default_factory=RegularityParams)
    nonlinearity: NonlinearityConfig = field(default_factory=NonlinearityConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    application: ApplicationConfig | None = None
    eps_den: float = 1e-10
    output: str | None = None
    schema: str = SCHEMA

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "expected a JSON object")
        _unknown(d, {"schema", "problem", "regularity", "nonlinearity", "grid", "solver", "analysis", "application", "output"}, "")
        schema = d.get("schema")
        if schema != SCHEMA:
            raise ConfigError("schema", f"expected {SCHEMA!r}, got {schema!r}")
        p = _obj(d, "problem", "")
        _unknown(p, {"alpha", "T", "basis", "f", "eps_den"}, "problem")
        alpha = float(_num(p, "alpha", "problem"))
        if not 1 < alpha <= 2:
            raise ConfigError("problem.alpha", f"must lie in (1, 2], got {alpha}")
        out = d.get("output")
        if out is not None and not isinstance(out, str):
            raise ConfigError("output", "expected a string")
        return cls(
            alpha=alpha,
            T=float(_num(p, "T", "problem", positive=True)),
            basis=BasisConfig.parse(_obj(p, "basis", "problem")),
            f=DataConfig.parse(_obj(p, "f", "problem")),
            regularity=_parse_regularity(_obj(d, "regularity", "", required=False)),
            nonlinearity=NonlinearityConfig.parse(_obj(d, "nonlinearity", "", required=False)),
            grid=GridConfig.parse(_obj(d, "grid", "", required=False)),
            solver=SolverConfig.parse(_obj(d, "solver", "", required=False)),
            analysis=AnalysisConfig.parse(_obj(d, "analysis", "", required=False)),
            application=ApplicationConfig.parse(d["application"]) if d.get("application") is not None else None,
            eps_den=float(_num(p, "eps_den", "problem", 1e-10, positive=True)),
            output=out,
        )

    def to_dict(self) -> dict:
        def clean(x):
            return {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(x).items() if v is not None}

        d = {
            "schema": self.schema,
            "problem": {
                "alpha": self.alpha,
                "T": self.T,
                "basis": clean(self.basis),
                "f": clean(self.f),
                "eps_den": self.eps_den,
            },
            "regularity": self.regularity.to_dict(),
            "nonlinearity": clean(self.nonlinearity),
            "grid": clean(self.grid),
            "solver": clean(self.solver),
            "analysis": clean(self.analysis),
        }
        if self.application is not None:
            d["application"] = clean(self.application)
        if self.output is not None:
            d["output"] = self.output
        return d

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    return ExperimentConfig.from_dict(d)


def loads_config(text: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_dict(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc.msg}") from None
