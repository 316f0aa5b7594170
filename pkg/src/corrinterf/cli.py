"""Command-line front end: simulate, analyze, fit-losses, reproduce."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from corrinterf import __version__
from corrinterf import reproduce as rp
from corrinterf.analysis import (
    band_floor,
    clsd,
    covariance_peak_snr,
    floor_scaling_fit,
    normalized_covariance,
    psd,
    twb_covariance_estimate,
    variance_of_difference,
)
from corrinterf.config import ExperimentConfig, config_hash, default_config, from_dict, load_config
from corrinterf.errors import FitError, ParameterError, StateError
from corrinterf.generator import generate, split_runs
from corrinterf.interferometer import NOMINAL
from corrinterf.io import provenance_sidecar, read_pair, write_json, write_pair, write_table
from corrinterf.loss_estimation import FringeDataset, fit_losses, synthesize_fringe

log = logging.getLogger("corrinterf")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else from_dict(default_config())
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out_dir(args, cfg: ExperimentConfig | None = None) -> Path:
    if args.out_dir:
        return Path(args.out_dir)
    return cfg.out_dir if cfg is not None else Path("out")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    fmt = args.format or cfg.data_format
    acqs = [cfg.acquisition] if cfg.n_runs == 1 else split_runs(cfg.acquisition, cfg.n_runs)
    written = []
    for i, acq in enumerate(acqs):
        pair = generate(cfg.state, cfg.signals, acq, calibration=cfg.calibration, jobs=args.jobs)
        name = "data" if cfg.n_runs == 1 else f"run_{i:03d}"
        path = write_pair(pair, out / f"{name}.{fmt}")
        provenance_sidecar(path, config_hash=cfg.config_hash, seed=acq.seed,
                           extra={"config": cfg.raw, "run_index": i, "injection": cfg.state.config.value,
                                  "data_fingerprint": pair.provenance["fingerprint"]})
        written.append(path)
        log.info("wrote %s (%d samples, seed %d)", path, len(pair), acq.seed)
    write_json(out / "config.json", cfg.raw)
    return 0


def _check_data(cfg: ExperimentConfig, pair, path) -> None:
    if pair.sample_rate != cfg.acquisition.sample_rate:
        raise ParameterError(f"{path}: sample rate {pair.sample_rate} differs from config "
                             f"{cfg.acquisition.sample_rate}")
    if len(pair) != cfg.acquisition.n_samples:
        raise ParameterError(f"{path}: {len(pair)} samples, config expects {cfg.acquisition.n_samples}")


def cmd_analyze(args) -> int:
    cfg = _config(args)
    out = _out_dir(args, cfg)
    a = cfg.analysis
    pairs = []
    for p in args.data:
        pair = read_pair(p)
        _check_data(cfg, pair, p)
        pairs.append(pair)
    if not pairs:
        raise ParameterError("analyze needs at least one data file")
    pair = pairs[0]
    summary = {"inputs": [str(p) for p in args.data], "config_hash": cfg.config_hash}
    max_lag_samples = int(round(a.max_lag * pair.sample_rate))

    if "rho" in a.requests:
        tr = normalized_covariance(pair, a.max_lag, *a.snl_var)
        write_table(out / "rho.csv", {"lag_s": tr.lags, "rho": tr.rho})
        summary["rho"] = {"peak": tr.peak(), "floor": tr.floor(a.floor_exclude), "n_samples": tr.n_samples}

    if "clsd" in a.requests:
        ests = [clsd(pair, m) for m in a.n_spectra]
        for e in ests:
            write_table(out / f"clsd_n{e.n_spectra}.csv", {"frequency_hz": e.frequencies, "clsd": e.values})
        floors = {str(e.n_spectra): band_floor(e, a.band, a.floor_method)[0] for e in ests}
        summary["clsd_floors"] = floors
        if len(set(a.n_spectra)) >= 4:
            fs = floor_scaling_fit(ests, a.band, a.floor_method)
            write_json(out / "floor_scaling_fit.json", {**fs.fit.to_dict(), "n_spectra": fs.n_spectra,
                                                         "floors": fs.floors, "floor_errs": fs.floor_errs})
            summary["floor_scaling_exponent"] = fs.fit.exponent

    m = max(a.n_spectra)
    if "psd" in a.requests:
        for label, x in (("x1", pair.x1), ("x2", pair.x2)):
            e = psd(x, m, pair.sample_rate)
            write_table(out / f"psd_{label}.csv", {"frequency_hz": e.frequencies, "psd": e.values,
                                                  "lower": e.lower, "upper": e.upper})

    if "psd_subtraction" in a.requests:
        e = psd(pair.difference(), m, pair.sample_rate)
        write_table(out / "psd_subtraction.csv", {"frequency_hz": e.frequencies, "psd": e.values})
        level = band_floor(e, a.band)[0] / 2
        summary["subtraction"] = {"floor_per_channel_snl": level,
                                  "reduction_db": float(-10 * np.log10(level))}

    if "variance_of_difference" in a.requests:
        lags = np.arange(-a.lags, a.lags + 1)
        tr = variance_of_difference(pair, lags)
        write_table(out / "variance_of_difference.csv",
                    {"lag_s": tr.lags, "var_diff": tr.var_diff, "var1": tr.var1, "var2": tr.var2, "cov": tr.cov})
        summary["variance_of_difference"] = {
            "dip_db_below_snl": float(-10 * np.log10(tr.at(0) / 2)),
            "off_dip_db_below_snl": float(-10 * np.log10(tr.off_dip(a.floor_exclude) / 2)),
            "identity_error": tr.identity_error,
        }

    if "snr" in a.requests:
        curve = covariance_peak_snr(pairs, a.subset_sizes, floor_lags=max_lag_samples,
                                    exclude=a.floor_exclude, snl_var1=a.snl_var[0], snl_var2=a.snl_var[1])
        write_table(out / "snr.csv", {"n_samples": curve.n_samples, "snr": curve.snr, "snr_err": curve.snr_err})
        write_json(out / "snr_fit.json", {"power_law": curve.fit.to_dict(), "sqrt": curve.sqrt_fit.to_dict()})
        summary["snr_exponent"] = curve.fit.exponent

    if "twb_covariance" in a.requests:
        if not args.reference:
            raise ParameterError("twb_covariance needs --reference (the uncorrelated-signal record)")
        ref = read_pair(args.reference)
        _check_data(cfg, ref, args.reference)
        size = a.subset_sizes[0] if a.subset_sizes else None
        est = twb_covariance_estimate(pair, ref, size)
        summary["twb_covariance"] = {"estimate": est.estimate, "mean": est.mean, "std": est.std, "snr": est.snr,
                                     "snr_err": est.snr_err, "n_subsets": est.n_subsets,
                                     "subset_size": est.subset_size}

    path = write_json(out / "analysis.json", summary)
    provenance_sidecar(path, config_hash=cfg.config_hash, seed=cfg.acquisition.seed,
                       extra={"config": cfg.raw, "inputs": [str(p) for p in args.data],
                              "reference": args.reference,
                              "input_fingerprints": [p.provenance.get("fingerprint") for p in pairs]})
    log.info("analysis written to %s", out)
    return 0


def cmd_fit_losses(args) -> int:
    out = Path(args.out_dir or "out")
    fixed = NOMINAL
    if args.config:
        fixed = load_config(args.config).interferometers[0]
    if args.synthesize:
        phases = np.linspace(-np.pi / 2, np.pi / 2, args.synthesize)
        data = synthesize_fringe(phases, fixed, rel_noise=args.noise, seed=args.seed or 0)
        out.mkdir(parents=True, exist_ok=True)
        data.to_csv(out / "fringe.csv")
    elif args.data:
        data = FringeDataset.from_csv(args.data)
    else:
        raise ParameterError("fit-losses needs --data FILE or --synthesize N")
    fit = fit_losses(data, fixed)
    path = write_json(out / "loss_fit.json", {**fit.to_dict(), "n_points": len(data)})
    provenance_sidecar(path, config_hash=config_hash({"data": str(args.data), "synthesize": args.synthesize,
                                                      "noise": args.noise, "config": args.config}),
                       seed=args.seed or 0, extra={"data": args.data, "synthesize": args.synthesize,
                                                   "noise": args.noise, "config": args.config})
    print(f"R_prm = {fit.prm_reflectivity:.4f} +- {fit.prm_reflectivity_err:.4f}")
    print(f"L_d   = {fit.internal_loss:.4f} +- {fit.internal_loss_err:.4f}")
    print(f"chi2/dof = {fit.reduced_chi2:.3f}, efficiency = {fit.efficiency:.3f}")
    return 0


def _run_one(figure, seed, profile, out):
    res = rp.run_figure(figure, seed, profile)
    res.write(out)
    return res.summary()


def cmd_reproduce(args) -> int:
    out = Path(args.out_dir or "reproduce")
    figures = rp.FIGURES if "all" in args.figures else tuple(args.figures)
    if args.jobs > 1 and len(figures) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_one, f, args.seed, args.tolerance_profile, out) for f in figures]
            summaries = [f.result() for f in futures]
    else:
        summaries = [_run_one(f, args.seed, args.tolerance_profile, out) for f in figures]
    ok = True
    for s in summaries:
        for c in s["checks"]:
            flag = "PASS" if c["passed"] else "FAIL"
            print(f"[{flag}] fig {s['figure']}: {c['name']} = {c['achieved']:.6g} "
                  f"(allowed {c['lower']:.6g} .. {c['upper']:.6g})")
        ok &= s["passed"]
    write_json(out / "reproduce_summary.json", {"profile": args.tolerance_profile, "seed": args.seed,
                                                "passed": ok, "figures": summaries})
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corrinterf", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="experiment config (JSON)")
        p.add_argument("--out-dir", help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="worker count")
        if seed:
            p.add_argument("--seed", type=int, help="override the acquisition seed")

    p = sub.add_parser("simulate", help="generate two-channel read-out data")
    common(p)
    p.add_argument("--format", choices=["csv", "npz"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="run the configured estimators on data files")
    common(p)
    p.add_argument("data", nargs="+", help="channel-pair files written by simulate")
    p.add_argument("--reference", help="uncorrelated-signal record for twb_covariance")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("fit-losses", help="fit R_prm and L_d to a fringe scan")
    common(p)
    p.add_argument("--data", help="CSV with phase_rad,gain,gain_sigma,p_as_w,p_as_sigma")
    p.add_argument("--synthesize", type=int, metavar="N", help="fit N synthetic points instead of a file")
    p.add_argument("--noise", type=float, default=0.01, help="relative noise for --synthesize")
    p.set_defaults(func=cmd_fit_losses)

    p = sub.add_parser("reproduce", help="regenerate figure data and check it against reported values")
    common(p)
    p.add_argument("figures", nargs="+", choices=[*rp.FIGURES, "all"])
    p.add_argument("--tolerance-profile", choices=list(rp.PROFILES), default="strict")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParameterError, StateError, FitError, OSError) as exc:
        print(f"corrinterf {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
