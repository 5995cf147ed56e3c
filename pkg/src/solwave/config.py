"""YAML run configuration: parsing, validation and construction of model objects."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import model as md
from .minimizer import SolveConfig
from .spectral import ConfigurationError

DEFAULT_NUMERICS = {
    "modes": 2048,
    "domain_factor": 40.0,
    "grad_tol": None,
    "e_tol": 1e-12,
    "max_iters": 20000,
    "padding": 2,
    "precondition": True,
    "symmetrize": False,
    "B_search": [1e-4, 100.0, 41],
    "stall_window": 2000,
}

_SCHEMA = {
    "model": {
        "symbol": None,  # free-form, validated by build_symbol
        "nonlinearity": {
            "form": None, "c": None, "p": None, "cutoff": None,
            "remainder": None,
        },
        "override_assumptions": None,
    },
    "numerics": {k: None for k in DEFAULT_NUMERICS},
    "task": {
        "solve": {"mu": None},
        "sweep": {"mu": None, "mu_min": None, "mu_max": None, "count": None,
                  "warm_start": None, "pairs": None},
        "check": {"xi_max": None, "samples": None, "ratio_bound": None, "offsets": None},
        "evolve": {"t_end": None, "dt": None, "outputs": None, "source": None, "mu": None,
                   "widths": None},
    },
    "output": {"directory": None, "formats": None},
    "seed": None,
}

_SYMBOL_KEYS = {
    "whitham": {"name", "T"},
    "fkdv": {"name", "alpha"},
    "kdv": {"name"},
    "constant": {"name", "value"},
    "tabulated": {"name", "file", "xi", "m", "s", "s_prime"},
}

_REMAINDER_KEYS = {
    "monomial": {"kind", "coeff", "power"},
    "power": {"kind", "coeff", "r", "odd"},
}


def _check_keys(data, schema, path=""):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path or 'config'}: expected a mapping")
    for key, val in data.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in schema:
            raise ConfigurationError(f"unknown key '{where}'")
        sub = schema[key]
        if sub is not None and val is not None:
            _check_keys(val, sub, where)


@dataclass
class RunConfig:
    raw: dict
    symbol: md.SymbolSpec
    nonlinearity: md.NonlinearitySpec
    numerics: dict
    task: dict
    output_dir: Path
    formats: list[str]
    seed: int
    override: bool = False
    source: Path | None = field(default=None, repr=False)

    def solve_config(self, mu: float) -> SolveConfig:
        num = self.numerics
        return SolveConfig(
            mu=float(mu), m=self.symbol, n=self.nonlinearity, domain_factor=num["domain_factor"],
            modes=num["modes"], padding=num["padding"], grad_tol=num["grad_tol"],
            e_tol=num["e_tol"], max_iters=num["max_iters"], precondition=num["precondition"],
            symmetrize=num["symmetrize"], B_search=tuple(num["B_search"]),
            stall_window=num["stall_window"])

    def echo(self) -> dict:
        """The configuration with every default filled in."""
        out = copy.deepcopy(self.raw)
        out["numerics"] = dict(self.numerics)
        out["seed"] = self.seed
        out.setdefault("output", {})
        out["output"]["formats"] = list(self.formats)
        return out


def build_symbol(spec: dict, base: Path | None = None, override: bool = False) -> md.SymbolSpec:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigurationError("model.symbol: expected a mapping with a 'name'")
    name = spec["name"]
    if name not in _SYMBOL_KEYS:
        raise ConfigurationError(f"model.symbol.name: unknown symbol {name!r}")
    extra = set(spec) - _SYMBOL_KEYS[name]
    if extra:
        raise ConfigurationError(f"unknown key 'model.symbol.{sorted(extra)[0]}'")
    try:
        if name == "whitham":
            return md.whitham_symbol(float(spec["T"]), allow_weak_tension=override)
        if name == "fkdv":
            return md.fkdv_symbol(float(spec["alpha"]))
        if name == "kdv":
            return md.fkdv_symbol(2.0)
        if name == "constant":
            return md.constant_symbol(float(spec["value"]))
        if "file" in spec:
            path = Path(spec["file"])
            if base is not None and not path.is_absolute():
                path = base / path
            table = np.loadtxt(path, delimiter=",", comments="#")
            xi, vals = table[:, 0], table[:, 1]
        else:
            xi, vals = spec["xi"], spec["m"]
        return md.tabulated_symbol(xi, vals, float(spec["s"]), float(spec["s_prime"]))
    except KeyError as exc:
        raise ConfigurationError(f"model.symbol: missing key {exc.args[0]!r}") from None


def build_nonlinearity(spec: dict) -> md.NonlinearitySpec:
    if not isinstance(spec, dict):
        raise ConfigurationError("model.nonlinearity: expected a mapping")
    try:
        rem = None
        rspec = spec.get("remainder")
        if rspec is not None:
            kind = rspec.get("kind")
            if kind not in _REMAINDER_KEYS:
                raise ConfigurationError(
                    f"model.nonlinearity.remainder.kind: unknown remainder {kind!r}")
            extra = set(rspec) - _REMAINDER_KEYS[kind]
            if extra:
                raise ConfigurationError(
                    f"unknown key 'model.nonlinearity.remainder.{sorted(extra)[0]}'")
            if kind == "monomial":
                rem = md.monomial_remainder(float(rspec.get("coeff", 1.0)), int(rspec["power"]))
            else:
                rem = md.power_remainder(float(rspec.get("coeff", 1.0)), float(rspec["r"]),
                                         bool(rspec.get("odd", False)))
        n = md.make_nonlinearity(spec["form"], float(spec["c"]), float(spec["p"]), rem)
    except KeyError as exc:
        raise ConfigurationError(f"model.nonlinearity: missing key {exc.args[0]!r}") from None
    if spec.get("cutoff"):
        n = md.cutoff_nonlinearity(n)
    return n


def parse_config(text: str, source: Path | None = None) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"malformed config{where}: {getattr(exc, 'problem', exc)}") \
            from None
    if data is None:
        raise ConfigurationError("empty config")
    _check_keys(data, _SCHEMA)
    if "model" not in data:
        raise ConfigurationError("missing 'model' block")
    mblock = data["model"]
    override = bool(mblock.get("override_assumptions", False))
    base = source.parent if source is not None else None
    symbol = build_symbol(mblock.get("symbol"), base, override)
    nonlin = build_nonlinearity(mblock.get("nonlinearity"))
    numerics = dict(DEFAULT_NUMERICS)
    numerics.update(data.get("numerics") or {})
    for key in ("modes", "padding", "max_iters", "stall_window"):
        numerics[key] = int(numerics[key])
    for key in ("domain_factor", "e_tol"):
        numerics[key] = float(numerics[key])
    if numerics["grad_tol"] is not None:
        numerics["grad_tol"] = float(numerics["grad_tol"])
    bs = numerics["B_search"]
    if not isinstance(bs, (list, tuple)) or len(bs) != 3:
        raise ConfigurationError("numerics.B_search: expected [B_min, B_max, points]")
    numerics["B_search"] = [float(bs[0]), float(bs[1]), int(bs[2])]
    out = data.get("output") or {}
    formats = list(out.get("formats") or ["json", "csv"])
    for f in formats:
        if f not in ("json", "csv"):
            raise ConfigurationError(f"output.formats: unknown format {f!r}")
    return RunConfig(
        raw=data, symbol=symbol, nonlinearity=nonlin, numerics=numerics,
        task=data.get("task") or {}, output_dir=Path(out.get("directory", "out")),
        formats=formats, seed=int(data.get("seed", 0)), override=override, source=source)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path)
