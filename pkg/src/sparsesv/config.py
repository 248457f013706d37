"""TOML experiment configuration.

Layout::

    seed = 0
    trials = 1000
    alpha = 0.05
    threads = 1

    [ensemble]
    family_index = [[0, 0], ...]        # optional, defaults to all zeros

    [ensemble.shape]                     # N, n
    [ensemble.params]                    # r, mu, a1, a2, a3, a4
    [ensemble.profile]                   # kind = "constant" | "sparse" | "rows"
    [[ensemble.families]]                # kind = "gaussian" | "rademacher" | ...

    [experiment]                         # command plus its parameters
    [output]                             # dir, format
    [constants]                          # c_sbp, c_be, c_abs
    [limits]                             # runtime_cap (seconds), max_runs

Unknown keys are rejected with their dotted location.
"""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bounds import UniversalConstants
from .ensemble import EnsembleParams, EnsembleSpec, Gaussian, family_from_dict, make_sparse_profile
from .errors import ConfigError, SparseSVError

TOP_KEYS = {"seed", "trials", "alpha", "threads", "ensemble", "experiment", "output", "constants", "limits"}
ENSEMBLE_KEYS = {"shape", "params", "profile", "families", "family_index"}
SHAPE_KEYS = {"N", "n"}
PARAM_KEYS = {"r", "mu", "a1", "a2", "a3", "a4"}
PROFILE_KEYS = {
    "constant": {"kind", "value"},
    "sparse": {"kind", "a4", "a3", "seed"},
    "rows": {"kind", "rows"},
}
OUTPUT_KEYS = {"dir", "format"}
CONSTANT_KEYS = {"c_sbp", "c_be", "c_abs"}
LIMIT_KEYS = {"runtime_cap", "max_runs"}

EXPERIMENT_KEYS = {
    "check-conditions": set(),
    "sample": {"file_format"},
    "spectrum": set(),
    "constants": {"r", "mu", "a1", "a2", "a3", "a4", "N", "n"},
    "verify-bounds": {"r", "mu", "a1", "a2", "a3", "a4", "N", "n"},
    "tail-sweep": {"axis", "values", "c1", "n"},
    "small-ball": {"max_n", "lam_max"},
    "net": {"n", "eps", "domain", "probe_size"},
    "verify": {"enumeration_configs"},
}


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        loc = f"{where}." if where else ""
        raise ConfigError(f"unknown key {loc}{extra[0]}")


def _table(data: dict, key: str, where: str) -> dict:
    value = data.get(key, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{where}{key} must be a table")
    return value


def default_ensemble() -> EnsembleSpec:
    spec = EnsembleSpec.dense(200, 10, Gaussian(1.0))
    return spec.replace(profile_source={"kind": "constant", "value": 1.0})


@dataclass(frozen=True)
class ExperimentConfig:
    ensemble: EnsembleSpec = field(default_factory=default_ensemble)
    command: str | None = None
    experiment: dict = field(default_factory=dict)
    seed: int = 0
    trials: int = 1000
    alpha: float = 0.05
    threads: int = 1
    output_dir: str | None = None
    output_format: str | None = None
    constants: UniversalConstants = field(default_factory=UniversalConstants)
    runtime_cap: float = 60.0
    max_runs: int = 1000

    def with_overrides(self, **changes) -> "ExperimentConfig":
        """Replace the fields whose override is not None."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    # ---- dict form -------------------------------------------------------

    def to_dict(self) -> dict:
        spec = self.ensemble
        ens: dict = {"shape": {"N": spec.N, "n": spec.n}, "params": spec.params.to_dict()}
        src = spec.profile_source
        if src is None:
            ens["profile"] = {"kind": "rows", "rows": spec.profile.tolist()}
        else:
            ens["profile"] = dict(src)
        ens["families"] = [f.to_dict() for f in spec.families]
        if np.any(spec.family_index):
            ens["family_index"] = spec.family_index.tolist()
        out: dict = {"seed": self.seed, "trials": self.trials, "alpha": self.alpha, "threads": self.threads,
                     "ensemble": ens}
        if self.command is not None or self.experiment:
            exp = dict(self.experiment)
            if self.command is not None:
                exp["command"] = self.command
            out["experiment"] = exp
        output = {}
        if self.output_format is not None:
            output["format"] = self.output_format
        if self.output_dir is not None:
            output["dir"] = self.output_dir
        out["output"] = output
        out["constants"] = asdict(self.constants)
        out["limits"] = {"runtime_cap": self.runtime_cap, "max_runs": self.max_runs}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            return _parse(data)
        except ConfigError:
            raise
        except (SparseSVError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    # ---- text form -------------------------------------------------------

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_toml(text)


def _parse_profile(prof: dict, N: int, n: int) -> tuple[np.ndarray, dict]:
    kind = prof.get("kind", "constant")
    if kind not in PROFILE_KEYS:
        raise ConfigError(f"ensemble.profile.kind: unknown profile kind {kind!r}")
    _reject_unknown(prof, PROFILE_KEYS[kind], "ensemble.profile")
    if kind == "constant":
        value = float(prof.get("value", 1.0))
        return np.full((N, n), value), {"kind": "constant", "value": value}
    if kind == "sparse":
        if "a4" not in prof:
            raise ConfigError("ensemble.profile.a4 is required for a sparse profile")
        a4 = float(prof["a4"])
        a3 = float(prof.get("a3", 1.0))
        seed = int(prof.get("seed", 0))
        return make_sparse_profile(N, n, a4, a3, seed), {"kind": "sparse", "a4": a4, "a3": a3, "seed": seed}
    rows = np.array(prof.get("rows", []), dtype=np.float64)
    if rows.shape != (N, n):
        raise ConfigError(f"ensemble.profile.rows has shape {rows.shape}, expected {(N, n)}")
    return rows, None


def _parse(data: dict) -> ExperimentConfig:
    _reject_unknown(data, TOP_KEYS, "")
    ens = _table(data, "ensemble", "")
    _reject_unknown(ens, ENSEMBLE_KEYS, "ensemble")
    params = _table(ens, "params", "ensemble.")
    _reject_unknown(params, PARAM_KEYS, "ensemble.params")
    p = EnsembleParams(**{k: float(v) for k, v in params.items()})

    shape = _table(ens, "shape", "ensemble.")
    _reject_unknown(shape, SHAPE_KEYS, "ensemble.shape")
    if not shape:
        spec = default_ensemble().replace(params=p)
        if any(k in ens for k in ("profile", "families", "family_index")):
            raise ConfigError("ensemble.shape is required with a custom ensemble")
    else:
        if set(shape) != SHAPE_KEYS:
            raise ConfigError("ensemble.shape needs both N and n")
        N, n = int(shape["N"]), int(shape["n"])
        profile, source = _parse_profile(_table(ens, "profile", "ensemble."), N, n)
        fam_list = ens.get("families", [{"kind": "gaussian", "sd": 1.0}])
        if not isinstance(fam_list, list) or not fam_list:
            raise ConfigError("ensemble.families must be a nonempty array of tables")
        families = []
        for k, f in enumerate(fam_list):
            if not isinstance(f, dict):
                raise ConfigError(f"ensemble.families[{k}] must be a table")
            try:
                families.append(family_from_dict(f))
            except (KeyError, TypeError, SparseSVError) as exc:
                raise ConfigError(f"ensemble.families[{k}]: {exc}") from exc
        index = ens.get("family_index")
        spec = EnsembleSpec(profile, tuple(families), None if index is None else np.array(index), p, source)

    exp = dict(_table(data, "experiment", ""))
    command = exp.pop("command", None)
    if command is not None:
        if command not in EXPERIMENT_KEYS:
            raise ConfigError(f"experiment.command: unknown command {command!r}")
        _reject_unknown(exp, EXPERIMENT_KEYS[command], "experiment")
    elif exp:
        raise ConfigError("experiment parameters need experiment.command")

    output = _table(data, "output", "")
    _reject_unknown(output, OUTPUT_KEYS, "output")
    fmt = output.get("format")
    if fmt not in (None, "csv", "json"):
        raise ConfigError(f"output.format must be csv or json, got {fmt!r}")
    consts = _table(data, "constants", "")
    _reject_unknown(consts, CONSTANT_KEYS, "constants")
    limits = _table(data, "limits", "")
    _reject_unknown(limits, LIMIT_KEYS, "limits")

    cfg = ExperimentConfig(
        ensemble=spec, command=command, experiment=exp,
        seed=int(data.get("seed", 0)), trials=int(data.get("trials", 1000)),
        alpha=float(data.get("alpha", 0.05)), threads=int(data.get("threads", 1)),
        output_dir=output.get("dir"), output_format=fmt,
        constants=UniversalConstants(**{k: float(v) for k, v in consts.items()}),
        runtime_cap=float(limits.get("runtime_cap", 60.0)), max_runs=int(limits.get("max_runs", 1000)),
    )
    if cfg.trials < 1:
        raise ConfigError("trials must be at least 1")
    if not 0 < cfg.alpha < 1:
        raise ConfigError("alpha must lie in (0, 1)")
    if cfg.threads < 1:
        raise ConfigError("threads must be at least 1")
    return cfg
