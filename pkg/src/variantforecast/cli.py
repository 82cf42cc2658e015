"""Command-line surface: fit, predict, ktons, simulate, crossval, powerlaw.

All outputs are CSV or JSON and embed the seed and the parsed
configuration, so a rerun with the same flags reproduces them exactly.
Exit codes: 0 success, 1 invalid input, 2 best-effort numerical result.

The --sweep flag takes items of the form ``M1:M2:step`` which expand to
the follow-up path (step, 0), (2*step, 0), ..., (M1, 0), (M1, step),
..., (M1, M2): population 1 grows first, then population 2.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict

import numpy as np

from . import data as datamod
from .baselines import (Bp3Params, I3bpParams, d3bp_total_mean,
                        i3bp_kton_mean, i3bp_total_mean, d3bp_kton_mean)
from .errors import DataFormatError, InsufficientDataError, QuadratureNonConvergence
from .fitting import FitConfig, fit_d3bp, fit_i3bp, fit_proposed
from .model import (CountPair, Hyperparams, kton_predictive_mean,
                    total_predictive_mean)
from .numerics import QuadratureConfig
from .simulation import (SimConfig, sample_bernoulli_process,
                         sample_proposed_atoms, simulate_growth_mc)

__all__ = ["main"]


def _n_workers():
    cap = os.environ.get("VF_THREADS")
    if cap is not None:
        return max(1, int(cap))
    return os.cpu_count() or 1


def _config_line(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return "# config: " + json.dumps(cfg, default=str)


def parse_sweep(items):
    """Expand --sweep items into an ordered list of (M1, M2) points."""
    points = []
    for item in items:
        parts = item.split(":")
        if len(parts) == 2:
            parts.append("1")
        if len(parts) != 3:
            raise ValueError(f"sweep item {item!r} is not M1:M2:step")
        m1, m2, step = (int(p) for p in parts)
        if m1 < 0 or m2 < 0 or step < 1:
            raise ValueError(f"sweep item {item!r} has negative sizes or step < 1")
        if m1 == 0 and m2 == 0:
            points.append((0, 0))
            continue
        for j in range(step, m1 + 1, step):
            points.append((j, 0))
        if not points or points[-1] != (m1, 0):
            points.append((m1, 0))
        for j in range(step, m2 + 1, step):
            points.append((m1, j))
        if points[-1] != (m1, m2):
            points.append((m1, m2))
    return points


def _load_params(path):
    with open(path) as fh:
        blob = json.load(fh)
    model = blob["model"]
    p = blob["params"]
    if model == "proposed":
        return model, Hyperparams(**p)
    if model == "d3bp":
        return model, Bp3Params(**p)
    if model == "i3bp":
        return model, I3bpParams(Bp3Params(**p["pop1"]), Bp3Params(**p["pop2"]))
    raise ValueError(f"unknown model {model!r} in {path}")


def _total_mean(model, params, N, M, qcfg):
    if model == "proposed":
        r = total_predictive_mean(N, M, params, qcfg)
        return r.lam, r.quad_error
    if model == "d3bp":
        return d3bp_total_mean(N, M, params), 0.0
    return i3bp_total_mean(N, M, params), 0.0


def _kton_mean(model, params, N, M, k, qcfg):
    if model == "proposed":
        r = kton_predictive_mean(N, M, k, params, qcfg)
        return r.lam, r.quad_error
    if model == "d3bp":
        return d3bp_kton_mean(N, M, k, params), 0.0
    return i3bp_kton_mean(N, M, k, params), 0.0


def cmd_fit(args):
    ds = datamod.load_tsv(args.input)
    cfg = FitConfig(v=args.v, seed=args.seed)
    qcfg = QuadratureConfig(rel_tol=args.rel_tol)
    if args.model == "proposed":
        result = fit_proposed(ds, cfg, qcfg)
    elif args.model == "d3bp":
        result = fit_d3bp(ds, cfg)
    else:
        result = fit_i3bp(ds, cfg)
    blob = json.loads(result.to_json())
    blob["config"] = json.loads(_config_line(args)[len("# config: "):])
    with open(args.output, "w") as fh:
        json.dump(blob, fh, indent=2)
        fh.write("\n")
    return 0 if result.converged else 2


def cmd_predict(args):
    model, params = _load_params(args.params)
    pilot = datamod.load_tsv(args.input)
    N = pilot.n_samples()
    qcfg = QuadratureConfig(rel_tol=args.rel_tol)
    if not args.sweep:
        raise ValueError("--sweep is required for predict")
    points = parse_sweep(args.sweep)
    best_effort = False

    def one(point):
        nonlocal best_effort
        m1, m2 = point
        try:
            lam, err = _total_mean(model, params, N, CountPair(m1, m2), qcfg)
        except QuadratureNonConvergence as exc:
            best_effort = True
            lam, err = float(np.sum(exc.estimate)), float(np.sum(exc.error_estimate))
        return m1, m2, lam, err

    with ThreadPoolExecutor(max_workers=_n_workers()) as pool:
        rows = list(pool.map(one, points))
    with open(args.output, "w", newline="") as fh:
        fh.write(_config_line(args) + "\n")
        w = csv.writer(fh)
        w.writerow(["M1", "M2", "lam_total", "quad_error"])
        for row in rows:
            w.writerow([row[0], row[1], repr(row[2]), repr(row[3])])
    return 2 if best_effort else 0


def cmd_ktons(args):
    model, params = _load_params(args.params)
    pilot = datamod.load_tsv(args.input)
    N = pilot.n_samples()
    qcfg = QuadratureConfig(rel_tol=args.rel_tol)
    if not args.sweep:
        raise ValueError("--sweep is required for ktons")
    points = parse_sweep(args.sweep)
    m1, m2 = points[-1]
    M = CountPair(m1, m2)
    v = args.v
    with open(args.output, "w", newline="") as fh:
        fh.write(_config_line(args) + "\n")
        w = csv.writer(fh)
        w.writerow(["k1", "k2", "lam", "quad_error"])
        for k1 in range(min(v, M.p1) + 1):
            for k2 in range(min(v, M.p2) + 1):
                if k1 + k2 < 1:
                    continue
                lam, err = _kton_mean(model, params, N, M, CountPair(k1, k2), qcfg)
                w.writerow([k1, k2, repr(float(lam)), repr(float(err))])
    return 0


def cmd_simulate(args):
    _model, params = _load_params(args.params)
    if _model != "proposed":
        raise ValueError("simulate supports the proposed model only")
    cfg = SimConfig(seed=args.seed)
    atoms = sample_proposed_atoms(params, cfg)
    ds = sample_bernoulli_process(atoms, CountPair(args.n1, args.n2),
                                  np.random.SeedSequence((args.seed, 1)))
    datamod.save_tsv(ds, args.output)
    with open(args.output + ".json", "w") as fh:
        json.dump({
            "params": asdict(params),
            "seed": args.seed,
            "truncation_floor": cfg.truncation_floor,
            "n1": args.n1,
            "n2": args.n2,
            "n_atoms": len(atoms),
        }, fh, indent=2)
        fh.write("\n")
    return 0


def _crossval_fold(ds, plan, fold, args, qcfg):
    pilot = ds.subset(plan.pilot_ids(fold))
    followup = ds.subset(plan.followup_ids(fold))
    N = pilot.n_samples()
    Mfull = followup.n_samples()
    cfg = FitConfig(v=args.v, seed=args.seed + fold)
    if args.model == "proposed":
        params = fit_proposed(pilot, cfg, qcfg).params
    elif args.model == "d3bp":
        params = fit_d3bp(pilot, cfg).params
    else:
        params = fit_i3bp(pilot, cfg).params
    if args.sweep:
        points = parse_sweep(args.sweep)
    else:
        step = max(1, (Mfull.p1 + Mfull.p2) // 40)
        points = parse_sweep([f"{Mfull.p1}:{Mfull.p2}:{step}"])
    # follow-up order: population 1 first, then population 2 (the sweep shape)
    order1 = followup.samples[1]
    order2 = followup.samples[2]
    total_rows = []
    for m1, m2 in points:
        sub = followup.subset({1: order1[:m1], 2: order2[:m2]})
        obs = datamod.count_new_total(pilot, sub)
        pred, _err = _total_mean(args.model, params, N, CountPair(m1, m2), qcfg)
        rel = (pred - obs) / obs if obs > 0 else float("nan")
        total_rows.append((fold, m1, m2, pred, obs, rel))
    kton_obs = datamod.count_new_ktons(pilot, followup, args.v)
    kton_rows = []
    for k1 in range(min(args.v, Mfull.p1) + 1):
        for k2 in range(min(args.v, Mfull.p2) + 1):
            if k1 + k2 < 1:
                continue
            pred, _err = _kton_mean(args.model, params, N, Mfull,
                                    CountPair(k1, k2), qcfg)
            obs = kton_obs.cells[k1, k2]
            kton_rows.append((fold, k1, k2, pred, obs))
    return total_rows, kton_rows


def cmd_crossval(args):
    ds = datamod.load_tsv(args.input)
    plan = datamod.make_folds(ds, args.folds, args.seed)
    qcfg = QuadratureConfig(rel_tol=args.rel_tol)
    with ThreadPoolExecutor(max_workers=_n_workers()) as pool:
        results = list(pool.map(
            lambda f: _crossval_fold(ds, plan, f, args, qcfg),
            range(args.folds)))
    all_total = [row for tr, _ in results for row in tr]
    all_kton = [row for _, kr in results for row in kr]
    # suppress k-cells observed < 2 in at least one fold
    min_obs = {}
    for _fold, k1, k2, _pred, obs in all_kton:
        key = (k1, k2)
        min_obs[key] = min(min_obs.get(key, float("inf")), obs)
    with open(args.output, "w", newline="") as fh:
        fh.write(_config_line(args) + "\n")
        w = csv.writer(fh)
        w.writerow(["kind", "fold", "a", "b", "predicted", "observed",
                    "rel_residual", "suppressed"])
        for fold, m1, m2, pred, obs, rel in all_total:
            w.writerow(["total", fold, m1, m2, repr(float(pred)), obs,
                        repr(float(rel)), ""])
        by_point = {}
        for _fold, m1, m2, _pred, _obs, rel in all_total:
            by_point.setdefault((m1, m2), []).append(rel)
        for (m1, m2), rels in sorted(by_point.items()):
            arr = np.array(rels, dtype=float)
            ok = arr[np.isfinite(arr)]
            mean = float(np.mean(ok)) if ok.size else float("nan")
            sd = float(np.std(ok, ddof=1)) if ok.size > 1 else float("nan")
            w.writerow(["total_summary", "", m1, m2, repr(mean), "",
                        repr(sd), ""])
        for fold, k1, k2, pred, obs, in all_kton:
            suppressed = min_obs[(k1, k2)] < 2
            rel = (pred - obs) / obs if obs > 0 else float("nan")
            w.writerow(["kton", fold, k1, k2, repr(float(pred)), int(obs),
                        repr(float(rel)), "yes" if suppressed else ""])
    return 0


def cmd_powerlaw(args):
    _model, params = _load_params(args.params)
    if _model != "proposed":
        raise ValueError("powerlaw supports the proposed model only")
    if args.scheme == "projection-1":
        pops = [1]
    elif args.scheme == "projection-2":
        pops = [2]
    elif args.scheme == "projection":
        pops = [1, 2]
    else:
        raise ValueError(f"unknown scheme {args.scheme!r}")
    with open(args.output, "w", newline="") as fh:
        fh.write(_config_line(args) + "\n")
        w = csv.writer(fh)
        w.writerow(["pop", "index", "mean_count", "slope"])
        for pop in pops:
            curve = simulate_growth_mc(params, pop, args.n_max,
                                       args.replicates, seed=args.seed)
            slope = datamod.fit_power_law_slope(curve)
            for i, c in enumerate(curve, start=1):
                w.writerow([pop, i, repr(float(c)), repr(slope)])
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="vf",
        description="Predict new genetic variants in a two-population "
                    "follow-up study from pilot data.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, model=False, params=False, sweep=False):
        p.add_argument("--input", help="input dataset TSV")
        p.add_argument("--output", required=True, help="output file path")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--v", type=int, default=10,
                       help="k-ton grid bound")
        p.add_argument("--rel-tol", type=float, default=1e-10,
                       dest="rel_tol", help="quadrature relative tolerance")
        if model:
            p.add_argument("--model", choices=["proposed", "d3bp", "i3bp"],
                           default="proposed")
        if params:
            p.add_argument("--params", required=True,
                           help="fitted-parameters JSON (fit output)")
        if sweep:
            p.add_argument("--sweep", nargs="+", default=None,
                           help="follow-up sizes, items M1:M2:step")

    p = sub.add_parser("fit", help="fit a model to pilot data")
    common(p, model=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predicted new-variant totals over a sweep")
    common(p, params=True, sweep=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("ktons", help="predicted k-ton grid at a follow-up size")
    common(p, params=True, sweep=True)
    p.set_defaults(func=cmd_ktons)

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    common(p, params=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("crossval", help="fold-based predict/observe evaluation")
    common(p, model=True, sweep=True)
    p.add_argument("--folds", type=int, default=20)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("powerlaw", help="mean growth curve and fitted slope")
    common(p, params=True)
    p.add_argument("--scheme", default="projection",
                   help="projection, projection-1 or projection-2")
    p.add_argument("--replicates", type=int, default=100)
    p.add_argument("--n-max", type=int, default=1000, dest="n_max")
    p.set_defaults(func=cmd_powerlaw)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, json.JSONDecodeError, DataFormatError,
            InsufficientDataError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
