"""Command-line front end.

Subcommands::

    kppem simulate --config run.cfg --out DIR
    kppem fit      --config run.cfg --data data.csv --out DIR
    kppem compare  --config run.cfg --data data.csv --out DIR
    kppem diagnose --config run.cfg --data data.csv --params params.json --out DIR

The configuration file holds one ``section.key = value`` per line; ``#``
starts a comment. ``--set section.key=value`` overrides single entries and
``--seed`` overrides both ``sim.seed`` and ``solver.seed``. Every command
builds and validates all of its inputs before it creates the output
directory or writes anything.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from . import data as data_mod
from .diagnostics import audit_trace, compare_runs, kkt_residual
from .errors import ConfigError, KPPError
from .model import Dataset, MixtureParams
from .penalty import PenaltySpec
from .solver import (Constant, FitResult, GeometricDecay, InitStrategy, SolverConfig,
                     effective_penalty, fit)

SOLVER_KEYS = {
    "schedule": str, "schedule.value": float, "schedule.beta0": float, "schedule.rho": float,
    "schedule.beta_min": float, "pi_update": str, "blocks": str, "max_sweeps": int,
    "tol_param": float, "tol_objective": float, "sigma2_floor": float, "inner_max_iter": int,
    "inner_tol": float, "seed": int, "snapshot_every": int,
}
KEYS = {
    "sim.design": str, "sim.n": int, "sim.P": int, "sim.pi": "vector", "sim.beta": "matrix",
    "sim.sigma2": float, "sim.seed": int,
    "data.path": str, "data.response": str, "data.standardize": bool,
    "model.K": int,
    "penalty.kind": str, "penalty.gamma": "vector", "penalty.a": float, "penalty.lam": "vector",
    "penalty.guard": bool, "penalty.guard_threshold": float,
    "init.pi": "vector", "init.n_starts": int, "init.perturb_scale": float,
}
for _sec in ("solver", "plain", "approximate"):
    KEYS.update({f"{_sec}.{k}": t for k, t in SOLVER_KEYS.items()})


# --- config parsing --------------------------------------------------------

def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def _convert(key, raw):
    kind = KEYS.get(key)
    if kind is None:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "vector":
            return tuple(float(v) for v in raw.split(","))
        if kind == "matrix":
            return np.array([[float(v) for v in row.split(",")] for row in raw.split(";")])
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


@dataclass
class RunConfig:
    """Typed view of the flat key-value configuration."""

    values: dict

    @classmethod
    def from_raw(cls, raw: Dict[str, str]) -> "RunConfig":
        return cls({k: _convert(k, v) for k, v in raw.items()})

    def get(self, key, default=None):
        return self.values.get(key, default)

    def has_section(self, section: str) -> bool:
        return any(k.startswith(section + ".") for k in self.values)

    # Builders raise ConfigError so that callers can validate everything up front.

    def solver(self, section: Optional[str] = None, **defaults) -> SolverConfig:
        merged = {k[len("solver."):]: v for k, v in self.values.items() if k.startswith("solver.")}
        merged = {**defaults, **merged}
        if section:
            merged.update({k[len(section) + 1:]: v for k, v in self.values.items()
                           if k.startswith(section + ".")})
        kind = merged.pop("schedule", "constant")
        sched_kw = {k[len("schedule."):]: merged.pop(k) for k in list(merged)
                    if k.startswith("schedule.")}
        try:
            if kind == "constant":
                schedule = Constant(**{k: v for k, v in sched_kw.items() if k == "value"})
            elif kind == "geometric":
                schedule = GeometricDecay(**{k: v for k, v in sched_kw.items() if k != "value"})
            else:
                raise ValueError(f"schedule must be 'constant' or 'geometric', got {kind!r}")
            return SolverConfig(schedule=schedule, **merged)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"solver section: {e}") from None

    def K(self) -> int:
        K = self.get("model.K", 2)
        if K < 1:
            raise ConfigError(f"model.K must be >= 1, got {K}")
        return K

    def penalty(self, K: int, n: int) -> PenaltySpec:
        kind = self.get("penalty.kind", "none")
        gamma = self.get("penalty.gamma", (1.0,))
        lam = self.get("penalty.lam", (1.0,))
        if len(gamma) == 1:
            gamma = gamma * K
        if len(lam) == 1:
            lam = lam * K
        try:
            spec = PenaltySpec(kind=kind, gamma=gamma, a=self.get("penalty.a", 10.0), lam=lam,
                               n_scale=n, guard_enabled=self.get("penalty.guard", False),
                               guard_threshold=self.get("penalty.guard_threshold", 1e6))
        except ValueError as e:
            raise ConfigError(f"penalty section: {e}") from None
        if spec.K != K:
            raise ConfigError(f"penalty has {spec.K} entries but model.K={K}")
        return spec

    def effective_penalty(self, K: int, data: Dataset) -> PenaltySpec:
        spec = effective_penalty(self.penalty(K, data.n), data)
        if spec.guard_enabled and not self.get("penalty.guard", False):
            print("covariates are rank deficient: coercivity guard enabled", file=sys.stderr)
        return spec

    def init(self, K: int) -> InitStrategy:
        pi = self.get("init.pi")
        if pi is not None:
            pi = np.asarray(pi)
            if pi.shape != (K,) or np.any(pi < 0) or abs(pi.sum() - 1) > 1e-12:
                raise ConfigError(f"init.pi must be a probability vector of length {K}")
            pi = tuple(pi)
        n_starts = self.get("init.n_starts", 1)
        if n_starts < 1:
            raise ConfigError("init.n_starts must be >= 1")
        return InitStrategy(pi_start=pi, n_starts=n_starts,
                            perturb_scale=self.get("init.perturb_scale", 0.5))

    def sim(self):
        """Return a zero-argument callable producing (data, truth, labels)."""
        design = self.get("sim.design", "gaussian")
        seed = self.get("sim.seed", 0)
        if design == "baseball":
            n, P = self.get("sim.n", 337), self.get("sim.P", 16)
            if n < 1 or P < 1:
                raise ConfigError("sim.n and sim.P must be positive")
            return lambda: data_mod.baseball_like(seed=seed, n=n, P=P)
        if design != "gaussian":
            raise ConfigError(f"sim.design must be 'gaussian' or 'baseball', got {design!r}")
        for key in ("sim.n", "sim.pi", "sim.beta", "sim.sigma2"):
            if key not in self.values:
                raise ConfigError(f"missing {key}")
        try:
            truth = MixtureParams(pi=self.get("sim.pi"), beta=self.get("sim.beta"),
                                  sigma2=self.get("sim.sigma2"))
            spec = data_mod.SimSpec(n=self.get("sim.n"), true_params=truth, seed=seed)
        except ValueError as e:
            raise ConfigError(f"sim section: {e}") from None

        def run():
            d, labels = data_mod.simulate(spec)
            return d, truth, labels
        return run

    def dataset(self) -> Dataset:
        path = self.get("data.path")
        if path is None:
            raise ConfigError("no data: pass --data or set data.path")
        if not os.path.exists(path):
            raise ConfigError(f"data file not found: {path}")
        return data_mod.load_csv(path, self.get("data.response", "y"),
                                 self.get("data.standardize", True))


def load_run_config(args) -> RunConfig:
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw.update(parse_config_text(fh.read(), args.config))
        except OSError as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    if args.seed is not None:
        raw["sim.seed"] = raw["solver.seed"] = str(args.seed)
    if getattr(args, "data", None):
        raw["data.path"] = args.data
    return RunConfig.from_raw(raw)


# --- outputs ---------------------------------------------------------------

def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_fit(out, result: FitResult, penalty, data: Dataset, suffix=""):
    with open(os.path.join(out, f"params{suffix}.json"), "w", encoding="utf-8") as fh:
        fh.write(result.params.to_json() + "\n")
    result.trace.to_csv(os.path.join(out, f"trace{suffix}.csv"), result.params)
    kkt = kkt_residual(result.params, penalty, data)
    _write_json(os.path.join(out, f"kkt{suffix}.json"), kkt.to_dict())
    ledger = audit_trace(result.trace).to_dict()
    ledger.update(converged=result.converged, sweeps=result.sweeps, objective=result.objective)
    _write_json(os.path.join(out, f"ledger{suffix}.json"), ledger)
    if data.transform is not None:
        coef, offset = data.transform.to_original_scale(result.params.beta)
        _write_json(os.path.join(out, f"original_scale{suffix}.json"),
                    {"coef": coef.tolist(), "offset": np.atleast_1d(offset).tolist(),
                     "columns": list(data.columns or ())})
    return kkt


def _report_transform(data: Dataset):
    if data.transform is not None:
        print("standardized covariates: mean=%s scale=%s"
              % (np.array2string(data.transform.mean, precision=4),
                 np.array2string(data.transform.scale, precision=4)), file=sys.stderr)


# --- commands --------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: str):
    run = cfg.sim()
    if "model.K" in cfg.values:
        cfg.K()
    data, truth, labels = run()
    os.makedirs(out, exist_ok=True)
    data_mod.write_csv(os.path.join(out, "data.csv"), data)
    with open(os.path.join(out, "labels.csv"), "w", encoding="utf-8") as fh:
        fh.write("label\n" + "".join(f"{int(v)}\n" for v in labels))
    with open(os.path.join(out, "truth.json"), "w", encoding="utf-8") as fh:
        fh.write(truth.to_json() + "\n")


def cmd_fit(cfg: RunConfig, out: str):
    solver = cfg.solver()
    K = cfg.K()
    init = cfg.init(K)
    data = cfg.dataset()
    penalty = cfg.effective_penalty(K, data)
    _report_transform(data)
    result = fit(data, K, init, penalty, solver)
    os.makedirs(out, exist_ok=True)
    kkt = _write_fit(out, result, penalty, data)
    print(f"converged={result.converged} sweeps={result.sweeps} "
          f"objective={result.objective:.10g} kkt={kkt.max_residual:.3g}")


def cmd_compare(cfg: RunConfig, out: str):
    missing = [s for s in ("plain", "approximate") if not cfg.has_section(s)]
    if missing:
        raise ConfigError("compare needs both 'plain.*' and 'approximate.*' solver sections; "
                          f"missing: {', '.join(missing)}")
    plain_cfg = cfg.solver("plain", pi_update="exact")
    approx_cfg = cfg.solver("approximate", pi_update="approximate")
    K = cfg.K()
    init = cfg.init(K)
    data = cfg.dataset()
    penalty = cfg.effective_penalty(K, data)
    _report_transform(data)
    plain = fit(data, K, init, penalty, plain_cfg)
    approx = fit(data, K, init, penalty, approx_cfg)
    os.makedirs(out, exist_ok=True)
    _write_fit(out, plain, penalty, data, "_plain")
    _write_fit(out, approx, penalty, data, "_approximate")
    suffix = {"a": "plain", "b": "approximate"}
    report = {}
    for key, value in compare_runs(plain, approx, penalty, data).to_dict().items():
        stem, _, tag = key.rpartition("_")
        report[f"{stem}_{suffix[tag]}" if tag in suffix else key] = value
    report.update(converged_plain=plain.converged, converged_approximate=approx.converged)
    _write_json(os.path.join(out, "compare.json"), report)
    print(json.dumps(report, indent=2, sort_keys=True))


def cmd_diagnose(cfg: RunConfig, out: str, params_path: str):
    try:
        with open(params_path, encoding="utf-8") as fh:
            params = MixtureParams.from_json(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read params {params_path}: {e}") from None
    except (ValueError, KeyError) as e:
        raise ConfigError(f"{params_path}: invalid parameters ({e})") from None
    data = cfg.dataset()
    if params.P != data.P:
        raise ConfigError(f"params have P={params.P} but data has {data.P} covariates")
    penalty = cfg.effective_penalty(params.K, data)
    report = kkt_residual(params, penalty, data)
    os.makedirs(out, exist_ok=True)
    _write_json(os.path.join(out, "kkt.json"), report.to_dict())
    print(f"max_residual={report.max_residual:.6g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kppem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "fit", "compare", "diagnose"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override sim.seed and solver.seed")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one key")
        if name != "simulate":
            p.add_argument("--data", help="CSV data file (overrides data.path)")
        if name == "diagnose":
            p.add_argument("--params", required=True, help="params.json to check")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_run_config(args)
        if args.command == "simulate":
            cmd_simulate(cfg, args.out)
        elif args.command == "fit":
            cmd_fit(cfg, args.out)
        elif args.command == "compare":
            cmd_compare(cfg, args.out)
        else:
            cmd_diagnose(cfg, args.out, args.params)
    except (KPPError, OSError) as e:
        print(f"kppem {args.command}: error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
