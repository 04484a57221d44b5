"""Batch front door: ingest scenario configs, run verification suites, price
contracts, compute hedges, emit CSV/JSON reports.

A scenario is one JSON document:

    {
      "model": {"market": {"kind": "bernoulli_walk", "n_steps": 3, "p": "1/2"},
                 "tau": {"kind": "independent", "probs": {"1": "1/4", "inf": "3/4"}}}
              | {"space": {...}, "tau": [...], "S": [[...]]},
      "contracts": [{"kind": "pure_endowment", "T": 2, "g": "1"}, ...],
      "hedging": {"enabled": true, "h": "1", "T": 2,
                   "instruments": ["pure_endowment"], "competitor_count": 20},
      "verify": "all" | ["ng_martingale", ...],
      "output": {"format": "csv", "precision": 12}
    }

Numeric inputs are exact rationals ("p/q" strings, ints) or decimals; the
precision flag only affects float rendering, never arithmetic.  Exit status
is 0 iff every requested verification passes.
"""
from __future__ import annotations

import argparse
import csv
import json
import random
import sys
from pathlib import Path

import numpy as np

from . import _numeric as nm
from .contracts import contract_from_dict, payment_process, price, price_table_rows
from .enlargement import bundle_report_rows, enlarge
from .errors import ConfigError, LifegridError
from .hedging import (
    market_model,
    quadratic_energy,
    risk_minimize,
    risk_process,
    securitized_hedge,
)
from .models import ModelSpec, build_model
from .space import (
    ADAPTED,
    PREDICTABLE,
    ProcessPath,
    RandomTime,
    process,
    random_time,
    space_from_dict,
    stop,
)
from .verify import CHECK_NAMES, verify_all


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}", "config")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "config")


def _build_scenario_model(cfg: dict, seed: int, exact: bool, tol: float):
    model = cfg.get("model")
    if model is None:
        raise ConfigError("missing 'model' section", "model")
    if "space" in model:
        try:
            doc = dict(model["space"])
            doc.setdefault("mode", "exact" if exact else "float")
            doc.setdefault("tol", tol)
            space = space_from_dict(doc)
            tau = random_time(space, model["tau"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad explicit space: {exc}", "model.space")
        S = None
        if "S" in model:
            S = process(space, model["S"], klass=ADAPTED)
        return space, S, tau
    try:
        spec = ModelSpec(
            market=model.get("market", {"kind": "bernoulli_walk", "n_steps": 3}),
            tau=model.get("tau", {"kind": "independent"}),
            seed=model.get("seed", seed),
            path_budget=int(model.get("path_budget", 4096)),
            exact=exact,
            tol=tol,
        )
        return build_model(spec)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad model spec: {exc}", "model")


def _render(x, precision: int):
    if hasattr(x, "denominator"):
        return nm.number_to_str(x)
    return repr(round(float(x), precision))


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _write_json(path: Path, doc: dict) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=str) + "\n")


def _hedge_rows(space, bundle, strategies: dict, precision: int) -> list[dict]:
    rows = []
    for asset in sorted(strategies):
        xi = strategies[asset]
        for t in range(1, space.horizon + 1):
            for k, atom in enumerate(bundle.g_partitions[t - 1]):
                rows.append(
                    {
                        "time": t,
                        "atom": f"{t - 1}:{k}",
                        "asset": asset,
                        "xi": _render(xi.values[atom[0], t], precision),
                    }
                )
    return rows


def run_scenario(cfg: dict, seed: int, count: int, exact: bool, tol: float, outdir: Path, precision: int) -> dict:
    """Execute build -> enlarge -> verify -> price -> hedge, writing reports."""
    outdir.mkdir(parents=True, exist_ok=True)
    space, S, tau = _build_scenario_model(cfg, seed, exact, tol)
    bundle = enlarge(space, tau)
    _write_csv(outdir / "bundle.csv", bundle_report_rows(bundle))
    summary: dict = {
        "n_paths": space.n_paths,
        "horizon": space.horizon,
        "seed": seed,
        "mode": "exact" if exact else "float",
        "stages": [],
    }
    all_pass = True

    verify_cfg = cfg.get("verify")
    if verify_cfg:
        checks = None if verify_cfg == "all" else tuple(verify_cfg)
        report = verify_all(space, tau, seed=seed, count=count, checks=checks)
        _write_json(outdir / "verify.json", report)
        summary["stages"].append({"stage": "verify", "pass": report["all_pass"]})
        all_pass = all_pass and report["all_pass"]

    price_summaries = []
    decomps = []
    for idx, doc in enumerate(cfg.get("contracts", [])):
        try:
            spec = contract_from_dict(bundle, doc)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad contract: {exc}", f"contracts[{idx}]")
        decomp = price(bundle, spec)
        decomps.append(decomp)
        _write_csv(outdir / f"price_{idx}_{spec.kind}.csv", price_table_rows(decomp))
        ok = decomp.max_residual() <= space.tol
        price_summaries.append(
            {
                "contract": spec.kind,
                "T": spec.T,
                "price0": _render(decomp.price.values[0, 0], precision),
                "max_residual": nm.number_to_str(decomp.max_residual()),
                "pass": bool(ok),
            }
        )
        all_pass = all_pass and ok
    if price_summaries:
        _write_json(outdir / "prices.json", {"contracts": price_summaries})
        summary["stages"].append({"stage": "price", "pass": all(p["pass"] for p in price_summaries)})

    hedging_cfg = cfg.get("hedging")
    if hedging_cfg and hedging_cfg.get("enabled", True):
        if S is None:
            raise ConfigError("hedging requires a market with a stock", "hedging")
        try:
            summary_entry = _hedge_stage(
                cfg, hedging_cfg, space, bundle, S, tau, seed, outdir, precision
            )
        except LifegridError as exc:
            summary_entry = {
                "stage": "hedge",
                "pass": False,
                "error": f"{type(exc).__name__}: {exc}",
            }
            _write_json(outdir / "hedge_summary.json", {"pass": False, "error": summary_entry["error"]})
        summary["stages"].append(summary_entry)
        all_pass = all_pass and summary_entry["pass"]

    summary["all_pass"] = bool(all_pass)
    _write_json(outdir / "run_summary.json", summary)
    return summary


def _hedge_stage(cfg, hedging_cfg, space, bundle, S, tau, seed, outdir, precision) -> dict:
    if True:
        market = market_model(bundle, S)
        h_doc = hedging_cfg.get("h", "0")
        if isinstance(h_doc, (list, tuple)):
            h = process(space, h_doc, klass=ADAPTED)
        else:
            vals = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
            vals[:, :] = space.num(h_doc)
            h = ProcessPath(values=vals, klass=ADAPTED)
        h_surv = None
        if "h_surv" in hedging_cfg:
            hs = hedging_cfg["h_surv"]
            h_surv = space.vector(hs if isinstance(hs, (list, tuple)) else [hs] * space.n_paths)
        T = hedging_cfg.get("T")
        instruments = tuple(hedging_cfg.get("instruments", ()))
        competitors = int(hedging_cfg.get("competitor_count", 0))
        if instruments:
            sec = securitized_hedge(market, h, T=T, h_surv=h_surv, instruments=instruments)
            strategies = sec.strategies
            base = sec.base
            hedge_summary = {
                "instruments": list(sec.instruments),
                "R0": _render(sec.R0, precision),
                "remaining_energy": {
                    ",".join(k) if k else "none": _render(v, precision) for k, v in sec.energies.items()
                },
                "orthogonality": {k: nm.number_to_str(v) for k, v in sec.diagnostics["orthogonality"].items()},
            }
        else:
            base = risk_minimize(market, h, T=T, h_surv=h_surv)
            strategies = {"stock": base.xi}
            hedge_summary = {
                "instruments": [],
                "R0": _render(base.risk.values[0, 0], precision),
                "remaining_energy": {"none": _render(quadratic_energy(space, base.remaining), precision)},
            }
        hedge_summary["eq35_gap"] = nm.number_to_str(base.extras["eq35_gap"])
        hedge_summary["direct_gkw_gap"] = nm.number_to_str(base.extras["direct_gkw_gap"])
        ok = base.extras["eq35_gap"] <= space.tol and base.extras["direct_gkw_gap"] <= space.tol
        if competitors:
            rng = random.Random(seed + 17)
            S_tau = stop(space, S, tau)
            violations = 0
            for _ in range(competitors):
                eps = nm.zeros((space.n_paths, space.horizon + 1), space.exact)
                for t in range(1, space.horizon + 1):
                    for atom in bundle.g_partitions[t - 1]:
                        v = space.num(rng.randint(-2, 2))
                        for i in atom:
                            eps[i, t] = v
                xi2 = ProcessPath(values=base.xi.values + eps, klass=PREDICTABLE)
                eta2 = ProcessPath(values=base.value.values - xi2.values * S_tau.values, klass="raw")
                _, R2 = risk_process(market, xi2, eta2, base.payment)
                diff = R2.values - base.risk.values
                for i in range(space.n_paths):
                    for t in range(space.horizon + 1):
                        if diff[i, t] < -space.tol:
                            violations += 1
            hedge_summary["competitor_violations"] = violations
            ok = ok and violations == 0
        hedge_summary["pass"] = bool(ok)
        _write_csv(outdir / "hedge.csv", _hedge_rows(space, bundle, strategies, precision))
        _write_json(outdir / "hedge_summary.json", hedge_summary)
        return {"stage": "hedge", "pass": bool(ok)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lifegrid",
        description="exact engine for progressive filtration enlargement, mortality pricing and hedging",
    )
    parser.add_argument("--config", help="scenario JSON document")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--count", type=int, default=20, help="randomized instances per battery")
    parser.add_argument("--tol", type=float, default=1e-10, help="float-mode tolerance")
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=True)
    mode.add_argument("--float", dest="exact", action="store_false")
    parser.add_argument("--out", default="lifegrid_out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", help="execute every stage of the scenario")
    sub.add_parser("verify", help="run the verification batteries only")
    sub.add_parser("price", help="price the scenario's contracts only")
    sub.add_parser("hedge", help="compute the scenario's hedges only")
    rep = sub.add_parser("report", help="summarize a previous run directory")
    rep.add_argument("path", nargs="?", default=None)
    args = parser.parse_args(argv)

    outdir = Path(args.out)
    try:
        if args.command == "report":
            target = Path(args.path) if args.path else outdir / "run_summary.json"
            if target.is_dir():
                target = target / "run_summary.json"
            doc = json.loads(target.read_text())
            for stage in doc.get("stages", []):
                print(f"{stage['stage']:>8}: {'PASS' if stage['pass'] else 'FAIL'}")
            print(f"{'overall':>8}: {'PASS' if doc.get('all_pass') else 'FAIL'}")
            return 0 if doc.get("all_pass") else 1

        if not args.config:
            raise ConfigError("--config is required", "cli")
        cfg = _load_config(args.config)
        if args.command == "verify":
            cfg = {"model": cfg.get("model"), "verify": cfg.get("verify", "all")}
        elif args.command == "price":
            cfg = {"model": cfg.get("model"), "contracts": cfg.get("contracts", [])}
        elif args.command == "hedge":
            cfg = {"model": cfg.get("model"), "hedging": cfg.get("hedging", {"enabled": True})}
        numerics = cfg.get("numerics", {}) if isinstance(cfg.get("numerics"), dict) else {}
        exact = {"exact": True, "float": False}.get(numerics.get("mode"), args.exact)
        tol = float(numerics.get("tol", args.tol))
        precision = int(cfg.get("output", {}).get("precision", 12)) if isinstance(cfg.get("output"), dict) else 12
        if isinstance(cfg.get("output"), dict) and cfg["output"].get("path"):
            outdir = Path(cfg["output"]["path"])
        summary = run_scenario(cfg, args.seed, args.count, exact, tol, outdir, precision)
        for stage in summary["stages"]:
            print(f"{stage['stage']:>8}: {'PASS' if stage['pass'] else 'FAIL'}")
        print(f"{'overall':>8}: {'PASS' if summary['all_pass'] else 'FAIL'}")
        return 0 if summary["all_pass"] else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LifegridError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
