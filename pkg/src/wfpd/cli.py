"""Command-line front end: ``wfpd <subcommand> [--config run.json] [flags]``.

Each subcommand reads one JSON config, overlays command-line flags, validates
everything, then runs. Outputs are a table (``--format csv|jsonl|json``) and
``summary.json`` in ``--out``. Exit codes: 0 success, 2 config or validation
error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .analysis import ranked_top_compare, stationary_compare_chain
from .chain import ChainConfig, run_replicates, uniform_counts
from .core import NonTermination, NumericalError, WFPDError, rank, validate_params
from .diffusion import DiffusionConfig, run_diffusion, stationary_sample
from .export import FORMATS, write_summary, write_table
from .generators import fit_gap_rate, power_sum
from .kernel import KernelConfig
from .oracle import sample_pd_many
from .rng import MAX_SEED, make_rng

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

_MODEL = {"theta": 1.0, "alpha": 0.3, "regime": "general"}
_COMMON = {"seed": 0, "out": "out", "format": "csv", "jobs": 1}

DEFAULTS = {
    "simulate-chain": {**_MODEL, "K": 10, "N": 1000, "steps": 100_000, "burn_in": None, "thin": None,
                       "replicates": 1, "m_list": [2, 3, 4], **_COMMON},
    "simulate-diffusion": {**_MODEL, "K": 10, "dt": None, "t_end": 1.0, "record_every": 10,
                           "replicates": 1, "ranked": False, **_COMMON},
    "generator-gap": {**_MODEL, "m": 2.5, "K_values": [8, 16, 32, 64, 128, 256], "n": 10_000, **_COMMON},
    "stationary-compare": {**_MODEL, "K": 20, "N": 2000, "steps": 100_000, "burn_in": None, "thin": None,
                           "m_list": [2, 3, 4], "allowance": 0.02,
                           "diffusion_K": 10, "dt": None, "n_paths": 100, "n_per_path": 10,
                           "spacing": 0.5, "diffusion_burn_in": None,
                           "n_pd": 1000, "top_j": 5, "threshold": 0.02, **_COMMON},
    "pd-sample": {**_MODEL, "J": 10, "n": 1000, **_COMMON},
}


class ConfigError(Exception):
    pass


def resolve_config(command: str, path=None, overrides=None) -> dict:
    """Defaults, then the JSON file, then flag overrides; unknown keys rejected."""
    cfg = copy.deepcopy(DEFAULTS[command])
    layers = []
    if path is not None:
        try:
            layers.append(json.loads(Path(path).read_text()))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(layers[-1], dict):
            raise ConfigError("config must be a JSON object")
    layers.append({k: v for k, v in (overrides or {}).items() if v is not None})
    for layer in layers:
        unknown = set(layer) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(layer)
    if cfg["format"] not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    if not (isinstance(cfg["seed"], int) and 0 <= cfg["seed"] <= MAX_SEED):
        raise ConfigError("seed must be an integer in [0, 2^64 - 1]")
    if int(cfg["jobs"]) < 1:
        raise ConfigError("jobs must be >= 1")
    for key in ("replicates", "n", "J", "n_pd", "n_paths", "n_per_path", "record_every"):
        if key in cfg and int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be >= 1")
    return cfg


def _params(cfg):
    return validate_params(cfg["theta"], cfg["alpha"], cfg["regime"])


def _chain_config(cfg, K, N):
    kcfg = KernelConfig(_params(cfg), int(K), int(N))
    return ChainConfig(kcfg, seed=cfg["seed"], steps=int(cfg["steps"]), burn_in=cfg["burn_in"], thin=cfg["thin"])


def _out(cfg, name):
    return Path(cfg["out"]) / name


def _header(cfg):
    # the output location is not part of the run, so reruns elsewhere match byte for byte
    return {k: v for k, v in cfg.items() if k != "out"}


# ------------------------------------------------------------------ commands


def cmd_simulate_chain(cfg):
    ccfg = _chain_config(cfg, cfg["K"], cfg["N"])
    K = ccfg.kernel.K
    # the resolved burn_in and thin go into the headers
    cfg = {**cfg, "burn_in": ccfg.burn_in, "thin": ccfg.thin}
    paths = run_replicates(uniform_counts(K, ccfg.kernel.N), ccfg, int(cfg["replicates"]), int(cfg["jobs"]))
    rows = [[r, int(s), *c] for r, p in enumerate(paths) for s, c in zip(p.steps, p.counts)]
    write_table(_out(cfg, "chain_path"), ["replicate", "step", *[f"c{i + 1}" for i in range(K)]],
                rows, _header(cfg), cfg["format"])
    reps = []
    for r, p in enumerate(paths):
        z = p.freqs
        reps.append({"replicate": r, "final_counts": p.counts[-1].tolist() if len(p) else [],
                     "phi_means": {str(m): float(np.mean(power_sum(z, m))) if len(p) else None
                                   for m in cfg["m_list"]}})
    write_summary(_out(cfg, "summary.json"), {"command": "simulate-chain", "replicates": reps}, _header(cfg))


def _diffusion_one(args):
    cfg, dcfg, r = args
    init = np.full(dcfg.K, 1.0 / dcfg.K)
    return run_diffusion(init, dcfg, replicate=r, record_every=int(cfg["record_every"]))


def cmd_simulate_diffusion(cfg):
    dcfg = DiffusionConfig(_params(cfg), int(cfg["K"]), cfg["dt"], float(cfg["t_end"]), cfg["seed"])
    cfg = {**cfg, "dt": dcfg.dt}
    tasks = [(cfg, dcfg, r) for r in range(int(cfg["replicates"]))]
    if int(cfg["jobs"]) > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=int(cfg["jobs"])) as ex:
            results = list(ex.map(_diffusion_one, tasks))
    else:
        results = [_diffusion_one(t) for t in tasks]
    K = dcfg.K
    rows = []
    for r, (t, z) in enumerate(results):
        if cfg["ranked"]:
            z = rank(z)
        rows += [[r, float(ti), *zi] for ti, zi in zip(t, z)]
    write_table(_out(cfg, "diffusion_path"), ["replicate", "t", *[f"z{i + 1}" for i in range(K)]],
                rows, _header(cfg), cfg["format"])
    reps = [{"replicate": r, "final_state": z[-1].tolist(), "phi2_final": float(power_sum(z[-1], 2))}
            for r, (_, z) in enumerate(results)]
    write_summary(_out(cfg, "summary.json"), {"command": "simulate-diffusion", "replicates": reps}, _header(cfg))


def cmd_generator_gap(cfg):
    params = _params(cfg)
    rep = fit_gap_rate(float(cfg["m"]), cfg["K_values"], params, n=int(cfg["n"]), rng=make_rng(cfg["seed"]))
    write_table(_out(cfg, "gap"), ["K", "m", "gap", "bound"], rep.rows(), _header(cfg), cfg["format"])
    write_summary(_out(cfg, "summary.json"), {
        "command": "generator-gap", "m": rep.m, "K_values": rep.K_values, "sup_gaps": rep.sup_gaps,
        "fit_slope": rep.fit_slope, "fit_intercept": rep.fit_intercept, "r2": rep.r2,
        "non_vanishing": rep.non_vanishing, "within_bound": all(g <= b for g, b in zip(rep.sup_gaps, rep.bounds)),
        "sample_size": rep.sample_size}, _header(cfg))


def cmd_stationary_compare(cfg):
    params = _params(cfg)
    ccfg = _chain_config(cfg, cfg["K"], cfg["N"])
    dcfg = DiffusionConfig(params, int(cfg["diffusion_K"]), cfg["dt"], 0.0, cfg["seed"])
    cfg = {**cfg, "burn_in": ccfg.burn_in, "thin": ccfg.thin, "dt": dcfg.dt}
    moments = stationary_compare_chain(ccfg, cfg["m_list"], allowance=float(cfg["allowance"]))
    diff = stationary_sample(dcfg, int(cfg["n_paths"]), int(cfg["n_per_path"]), float(cfg["spacing"]),
                             burn_in=cfg["diffusion_burn_in"])
    top_j = int(cfg["top_j"])
    pd_top, _ = sample_pd_many(params, top_j, int(cfg["n_pd"]), make_rng(cfg["seed"], 1))
    comp = ranked_top_compare(diff, pd_top, top_j, float(cfg["threshold"]))
    write_table(_out(cfg, "moments"), ["m", "estimate", "stderr", "analytic", "z_score", "passed"],
                [[r.m, r.estimate, r.stderr, r.analytic, r.z_score, int(r.passed)] for r in moments],
                _header(cfg), cfg["format"])
    criteria = {f"chain_phi{r.m}": r.passed for r in moments}
    criteria["ranked_top_compare"] = comp.passed
    write_summary(_out(cfg, "summary.json"), {
        "command": "stationary-compare", "moments": [r.to_dict() for r in moments],
        "compare": comp.to_dict(), "criteria": criteria, "all_passed": all(criteria.values())}, _header(cfg))
    for name, ok in criteria.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")


def cmd_pd_sample(cfg):
    params = _params(cfg)
    J = int(cfg["J"])
    top, tail = sample_pd_many(params, J, int(cfg["n"]), make_rng(cfg["seed"]))
    rows = [[i, *t, float(m)] for i, (t, m) in enumerate(zip(top, tail))]
    write_table(_out(cfg, "pd_sample"), ["draw", *[f"z{i + 1}" for i in range(J)], "tail_mass"],
                rows, _header(cfg), cfg["format"])
    write_summary(_out(cfg, "summary.json"), {
        "command": "pd-sample", "mean_top": top.mean(axis=0).tolist(), "mean_tail": float(tail.mean())}, _header(cfg))


COMMANDS = {
    "simulate-chain": cmd_simulate_chain,
    "simulate-diffusion": cmd_simulate_diffusion,
    "generator-gap": cmd_generator_gap,
    "stationary-compare": cmd_stationary_compare,
    "pd-sample": cmd_pd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wfpd", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run {name}")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=FORMATS)
        p.add_argument("--jobs", type=int)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config field (VALUE parsed as JSON)")
        p.add_argument("--print-config", action="store_true", help="print the effective config and exit")
        if name == "simulate-diffusion":
            p.add_argument("--ranked", action="store_true", default=None, help="emit the ranked path")
    return ap


def _overrides(ns) -> dict:
    out = {k: getattr(ns, k) for k in ("seed", "out", "format", "jobs", "ranked") if getattr(ns, k, None) is not None}
    for item in ns.set:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns.command, ns.config, _overrides(ns))
        if ns.print_config:
            print(json.dumps(cfg, sort_keys=True, indent=2))
            return EXIT_OK
        COMMANDS[ns.command](cfg)
    except (NumericalError, NonTermination) as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, WFPDError, TypeError, ValueError, KeyError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
