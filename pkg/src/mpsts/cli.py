"""
Command-line entry point: ``mpsts <command> [flags]``.

Commands
--------
pnd         photon-number table, optionally damped
sweep       non-Gaussianity measures on an (a, mu) grid
simulate    synthetic homodyne dataset
estimate    ML reconstruction report for a dataset
experiment  synthetic replication of the loss-trajectory experiment
wigner      Wigner function grid

Every command writes its fully resolved configuration next to its output
(``<out>.config.json``, or ``config.json`` inside an output directory).
Passing that file back through ``--config`` reproduces the outputs exactly.
Flags given on the command line override values from ``--config``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from .errors import EstimationError, InsufficientDataError, ParameterError, UnphysicalDataError
from .estimation import (
    chi2_goodness_of_fit,
    delta_k_from_samples,
    estimate_loss_level,
    mle_fit,
)
from .measures import MEASURE_NAMES, all_measures, fidelity_diagonal, measure_error_propagation, sweep_measures
from .pnd import DEFAULT_TAIL_EPS, LossChannel, PndParams, damped_pmf, pnd_pmf, pnd_truncate
from .quadrature import DetectorModel, quadrature_pdf, sample_moments
from .sampling import apply_loss_to_dataset, read_dataset, write_dataset
from .wigner import default_axis, wigner_mpsts

EXIT_OK = 0
EXIT_PARAMETER = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4

DEFAULT_GAMMA_LEVELS = [round(x, 4) for x in np.linspace(0.0, 2.35, 5)]


def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in str(text).split(",") if x.strip()]


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_json(path: Path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}


def _config_path(out: Path) -> Path:
    return out / "config.json" if out.suffix == "" else out.with_name(out.name + ".config.json")


# ---------------------------------------------------------------- commands

def cmd_pnd(args) -> dict:
    params = PndParams(args.mu, args.a)
    channel = None
    if args.gamma_t is not None or args.mu_r is not None:
        channel = LossChannel(args.gamma_t or 0.0, args.mu_r or 0.0)
    if args.nmax is not None:
        n_max = int(args.nmax)
        if n_max < 0:
            raise ParameterError("--nmax must be nonnegative")
    else:
        n_max = pnd_truncate(params, args.tail_eps).n_max
        if channel is not None and channel.mu_t > 0:
            n_max += pnd_truncate(PndParams(channel.mu_t, 1.0), args.tail_eps).n_max
    n = np.arange(n_max + 1)
    cols = [n, pnd_pmf(params, n)]
    header = ["n", "p"]
    if channel is not None:
        cols.append(damped_pmf(params, channel, n))
        header.append("p_damped")
    out = Path(args.out)
    _write_csv(out, header, zip(*[c.tolist() for c in cols]))
    return {"rows": int(n.size), "sum_p": float(cols[1].sum()),
            **({"sum_p_damped": float(cols[2].sum())} if channel is not None else {})}


def cmd_sweep(args) -> dict:
    a_grid = np.linspace(args.a_min, args.a_max, args.a_steps)
    mu_grid = np.linspace(args.mu_min, args.mu_max, args.mu_steps)
    rows = sweep_measures(a_grid, mu_grid, args.tail_eps)
    header = ["a", "mu", *MEASURE_NAMES, "error"]
    _write_csv(Path(args.out), header, ([r[k] for k in header] for r in rows))
    return {"cells": len(rows), "failed": sum(1 for r in rows if r["error"])}


def cmd_simulate(args) -> dict:
    params = PndParams(args.mu, args.a)
    det = DetectorModel(args.eta)
    ds = apply_loss_to_dataset(params, LossChannel(args.gamma_t, 0.0), det, args.n, args.seed)
    write_dataset(Path(args.out), ds)
    m = sample_moments(ds.samples)
    expected_m2 = args.eta * params.mu * math.exp(-args.gamma_t) + 0.5
    return {"samples": int(ds.samples.size), "m2": m.m2, "m4": m.m4, "beta2": m.beta2,
            "expected_m2": expected_m2}


def estimate_report(samples, det: DetectorModel, bootstrap: int, seed: int, tail_eps: float,
                    truth: PndParams | None = None, mu_initial: float | None = None,
                    unconditional=None) -> dict:
    est = mle_fit(samples, det, tail_eps)
    raw = PndParams(est.mu_hat * det.eta, est.a_hat)
    fit = chi2_goodness_of_fit(samples, raw, tail_eps)
    measures = all_measures(est.params, tail_eps).as_dict()
    errors = measure_error_propagation(est.params, est.covariance, tail_eps)
    dk, dk_err = delta_k_from_samples(samples, det, bootstrap, seed)
    report = {
        **est.to_dict(),
        "chi2": fit.to_dict(),
        "measures": {**measures, **{f"{k}_err": v for k, v in errors.items()}},
        "delta_k_samples": {"value": dk, "err": dk_err, "bootstrap": bootstrap},
        "gamma_t_est": None,
    }
    if mu_initial is not None:
        loss = estimate_loss_level(samples if unconditional is None else unconditional, mu_initial, det)
        report["gamma_t_est"] = loss.gamma_t
        report["gamma_t_err"] = loss.std_error
    if truth is not None:
        report["true_params"] = {"mu": truth.mu, "a": truth.a}
        report["fidelity"] = fidelity_diagonal(pnd_truncate(truth, tail_eps), pnd_truncate(est.params, tail_eps))
    return report


def cmd_estimate(args) -> dict:
    ds = read_dataset(Path(args.data))
    eta = ds.meta.eta if args.eta is None else args.eta
    args.eta = eta
    truth = PndParams(ds.meta.true_params.mu * math.exp(-ds.meta.gamma_t), ds.meta.true_params.a)
    unconditional = read_dataset(Path(args.unconditional)).samples if args.unconditional else None
    report = estimate_report(ds.samples, DetectorModel(eta), args.bootstrap, args.seed, args.tail_eps,
                             truth, args.mu_initial, unconditional)
    _write_json(Path(args.out), report)
    return {"mu_hat": report["mu_hat"], "a_hat": report["a_hat"],
            "p_value": report["chi2"]["p_value"], "fidelity": report["fidelity"]}


def _cell_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _theory_rows(m, a, mu0, gammas, tail_eps):
    for g in gammas:
        rep = all_measures(PndParams(mu0 * math.exp(-g), a), tail_eps)
        yield [m, a, g, mu0 * math.exp(-g), rep.delta_hs, rep.delta_re, rep.delta_f, rep.delta_k]


EXPERIMENT_COLUMNS = ["M", "a_true", "gamma_t", "mu_true", "mu_hat", "mu_err", "a_hat", "a_err",
                      "delta_hs", "delta_hs_err", "delta_re", "delta_re_err", "delta_f", "delta_f_err",
                      "delta_k", "delta_k_err", "delta_k_samples", "delta_k_samples_err",
                      "chi2_p", "fidelity", "error"]


def cmd_experiment(args) -> dict:
    out = Path(args.out)
    det = DetectorModel(args.eta)
    rows = []
    fitted_a = {}
    for m in args.m_values:
        params = PndParams(args.mu0 * (m + 1), m + 1.0)
        for j, g in enumerate(args.gamma_t_levels):
            truth = PndParams(params.mu * math.exp(-g), params.a)
            seed = _cell_seed(args.seed, m, j)
            row = {"M": m, "a_true": params.a, "gamma_t": g, "mu_true": truth.mu}
            try:
                ds = apply_loss_to_dataset(params, LossChannel(g, 0.0), det, args.n, seed)
                rep = estimate_report(ds.samples, det, args.bootstrap, seed, args.tail_eps, truth)
                meas = rep["measures"]
                row.update({
                    "mu_hat": rep["mu_hat"], "mu_err": rep["mu_err"],
                    "a_hat": rep["a_hat"], "a_err": rep["a_err"],
                    **{k: meas[k] for k in meas},
                    "delta_k_samples": rep["delta_k_samples"]["value"],
                    "delta_k_samples_err": rep["delta_k_samples"]["err"],
                    "chi2_p": rep["chi2"]["p_value"], "fidelity": rep["fidelity"], "error": "",
                })
                if j == 0:
                    fitted_a[m] = (rep["a_hat"], rep["mu_hat"])
            except (EstimationError, InsufficientDataError, UnphysicalDataError, ParameterError) as exc:
                row["error"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
    _write_csv(out / "experiment.csv", EXPERIMENT_COLUMNS,
               ([r.get(k, math.nan) for k in EXPERIMENT_COLUMNS] for r in rows))

    curve = np.linspace(0.0, max(args.gamma_t_levels), 48)
    theory = []
    for m, (a_hat, mu_hat0) in fitted_a.items():
        theory.extend(_theory_rows(m, a_hat, mu_hat0, curve, args.tail_eps))
    _write_csv(out / "theory.csv", ["M", "a", "gamma_t", "mu", *MEASURE_NAMES], theory)
    return {"cells": len(rows), "failed": sum(1 for r in rows if r["error"]),
            "min_fidelity": min((r["fidelity"] for r in rows if not r["error"]), default=None)}


def cmd_wigner(args) -> dict:
    params = PndParams(args.mu, args.a)
    if args.points < 2:
        raise ParameterError("--points must be >= 2")
    if args.half_width is None:
        axis = default_axis(params, args.points)
        args.half_width = float(axis[-1])
    else:
        if not args.half_width > 0:
            raise ParameterError("--half-width must be positive")
        axis = np.linspace(-args.half_width, args.half_width, args.points)
    grid = wigner_mpsts(params, axis, axis, args.tail_eps)
    qq, pp = np.meshgrid(grid.q_axis, grid.p_axis, indexing="ij")
    _write_csv(Path(args.out), ["q", "p", "w"],
               zip(qq.ravel().tolist(), pp.ravel().tolist(), grid.values.ravel().tolist()))
    r = np.hypot(qq, pp).ravel()[int(np.argmax(grid.values))]
    summary = {"total": grid.total(), "min_w": float(grid.values.min()), "argmax_radius": float(r)}
    if args.marginal_check:
        dev = np.abs(grid.marginal_q() - quadrature_pdf(params, grid.q_axis, args.tail_eps))
        summary["marginal_max_dev"] = float(dev.max())
    return summary


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpsts", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    def common(p, out):
        p.add_argument("--config", help="JSON file of flag values (overridden by explicit flags)")
        p.add_argument("--tail-eps", type=float, default=DEFAULT_TAIL_EPS)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=out)

    p = sub.add_parser("pnd", help="photon-number distribution table")
    common(p, "pnd.csv")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--nmax", type=int, default=None, help="cutoff (default: certified by --tail-eps)")
    p.add_argument("--gamma-t", type=float, default=None)
    p.add_argument("--mu-r", type=float, default=None)
    p.set_defaults(func=cmd_pnd)

    p = sub.add_parser("sweep", help="non-Gaussianity measures on an (a, mu) grid")
    common(p, "sweep.csv")
    p.add_argument("--a-min", type=float, default=1.0)
    p.add_argument("--a-max", type=float, default=6.0)
    p.add_argument("--a-steps", type=int, default=20)
    p.add_argument("--mu-min", type=float, default=0.1)
    p.add_argument("--mu-max", type=float, default=10.0)
    p.add_argument("--mu-steps", type=int, default=20)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="synthetic homodyne dataset")
    common(p, "dataset.csv")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--gamma-t", type=float, default=0.0)
    p.add_argument("--n", type=int, default=100_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="maximum-likelihood report for a dataset")
    common(p, "estimate.json")
    p.add_argument("--data", required=True)
    p.add_argument("--eta", type=float, default=None, help="default: value stored in the dataset")
    p.add_argument("--mu-initial", type=float, default=None)
    p.add_argument("--unconditional", default=None, help="dataset for loss-level inference")
    p.add_argument("--bootstrap", type=int, default=1000)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="synthetic loss-trajectory experiment")
    common(p, "experiment")
    p.add_argument("--m-values", type=_ints, default=[1, 2, 3, 4, 5])
    p.add_argument("--mu0", type=float, default=8.86)
    p.add_argument("--gamma-t-levels", type=_floats, default=DEFAULT_GAMMA_LEVELS)
    p.add_argument("--eta", type=float, default=0.78)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--bootstrap", type=int, default=200)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("wigner", help="Wigner function grid (long-form CSV)")
    common(p, "wigner.csv")
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--half-width", type=float, default=None, help="default: 6 sqrt(mu + 1/2)")
    p.add_argument("--marginal-check", action="store_true")
    p.set_defaults(func=cmd_wigner)
    return parser


def parse_args(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    # read --config first so that it can satisfy required flags
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config and known.command in parser.commands:
        cfg = json.loads(Path(known.config).read_text())
        cfg.pop("command", None)
        sub = parser.commands[known.command]
        dests = {a.dest for a in sub._actions}
        unknown = set(cfg) - dests
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        for action in sub._actions:
            if action.dest in cfg:
                action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except ValueError as exc:  # includes ParameterError and malformed JSON
        print(f"mpsts: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except OSError as exc:
        print(f"mpsts: {exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_PARAMETER
    try:
        summary = args.func(args)
        _write_json(_config_path(Path(args.out)), _resolved(args))
    except ParameterError as exc:
        print(f"mpsts: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except (EstimationError, InsufficientDataError, UnphysicalDataError) as exc:
        print(f"mpsts: estimation failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"mpsts: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(json.dumps(summary, default=_json_default))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
