"""Command-line entry point: ``cwswap <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import analysis as an
from . import budget as bd
from . import config as cf
from . import oracle as orc
from . import simulate as sm
from .errors import ConfigError, CwswapError, MemoryBudgetError, ResolutionError
from .interference import OverlapModel

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN, EXIT_GUARD = 0, 1, 2, 3, 4
MODES = {"full": "full_stream", "conditioned": "conditioned"}


def _exit_code(err: CwswapError) -> int:
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, (ResolutionError, MemoryBudgetError)):
        return EXIT_GUARD
    return EXIT_DOMAIN


def _load(args) -> cf.ScenarioConfig:
    cfg = cf.load(args.config) if args.config else cf.reference_config()
    kw = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        kw["master_seed"] = args.seed
    if getattr(args, "mode", None):
        kw["mode"] = MODES[args.mode]
    return cfg.with_run(**kw) if kw else cfg


def _header(cfg: cf.ScenarioConfig, command: str, extra: dict | None = None) -> list[str]:
    lines = [
        f"cwswap {__version__} {command}",
        f"master_seed={cfg.run.master_seed}",
        f"mode={cfg.run.mode}",
    ]
    for k, v in cf.assumptions(cfg).items():
        lines.append(f"assumption {k}={v}")
    for k, v in (extra or {}).items():
        lines.append(f"{k}={v}")
    return lines


def _out_dir(args) -> Path:
    p = Path(args.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _clean(x):
    """JSON-safe copy: numpy scalars to python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n")


def _meta(cfg, command, extra=None) -> dict:
    return {
        "command": command,
        "version": __version__,
        "master_seed": cfg.run.master_seed,
        "mode": cfg.run.mode,
        "assumptions": cf.assumptions(cfg),
        **(extra or {}),
    }


# --- subcommands ---------------------------------------------------------------


def cmd_hom_scan(args) -> int:
    cfg = _load(args)
    res = sm.hom_scan(cfg)
    out = _out_dir(args)
    fit = None if res.fit is None else vars(res.fit)
    summary = {
        "fit": fit,
        "fit_error": res.fit_error,
        "expected_visibility": res.expected_visibility,
        "expected_fwhm_ps": res.expected_fwhm,
        "fourfold_events": res.n_events,
        "exposure_s": res.exposure_s,
    }
    meta = _meta(cfg, "hom-scan", {"exposure_s": res.exposure_s})
    if args.format == "csv":
        res.histogram.write_csv(out / "hom_histogram.csv", _header(cfg, "hom-scan", {"exposure_s": res.exposure_s}))
        _write_json(out / "hom_summary.json", {**meta, **summary})
    else:
        hist = {"tau_bin_ps": res.histogram.centers, "count": res.histogram.counts}
        _write_json(out / "hom_scan.json", {**meta, **summary, "histogram": hist})
    if res.fit is not None:
        print(f"dip visibility {res.fit.visibility:.4f} +/- {res.fit.sigma_visibility:.4f}, "
              f"FWHM {res.fit.fwhm:.1f} +/- {res.fit.sigma_fwhm:.1f} ps ({res.n_events} four-folds)")
    else:
        print(f"dip fit failed: {res.fit_error}")
    return EXIT_OK


def cmd_swap_scan(args) -> int:
    cfg = _load(args)
    res = sm.swap_scan(cfg, visibility=args.visibility)
    out = _out_dir(args)
    summary = {
        "fit": vars(res.fit),
        "configured_visibility": res.configured_visibility,
        "werner": {"verdict": res.werner.verdict, "visibility": res.werner.visibility, "bound": res.werner.bound,
                   "caveat": res.werner.caveat},
        "threefold": {"rates_per_s": res.threefold_rates, "variances": res.threefold_variances,
                      "chi2": res.flatness_chi2, "p_value": res.flatness_p},
        "fourfold_rate_per_h": res.fourfold_rate_per_s * 3600.0,
        "exposure_s": [s.exposure_s for s in res.settings],
    }
    meta = _meta(cfg, "swap-scan")
    if args.format == "csv":
        an.write_fringe_csv(out / "fringe.csv", res.samples, _header(cfg, "swap-scan"))
        _write_json(out / "swap_summary.json", {**meta, **summary})
    else:
        rows = [
            {"alpha": s.alpha, "beta": s.beta, "Rpp": s.R_pp, "Rpm": s.R_pm, "Rmp": s.R_mp, "Rmm": s.R_mm,
             "E": s.E, "sigma_E": s.sigma_E}
            for s in res.samples
        ]
        _write_json(out / "swap_scan.json", {**meta, **summary, "fringe": rows})
    print(f"fringe visibility {res.fit.visibility:.4f} +/- {res.fit.sigma_visibility:.4f} "
          f"(configured {res.configured_visibility:.4f}); {res.werner.verdict}; "
          f"three-fold flatness p = {res.flatness_p:.3f}")
    return EXIT_OK


def cmd_rate_budget(args) -> int:
    cfg = _load(args)
    b = bd.rate_budget(cfg)
    lines = bd.format_budget(b)
    print("\n".join(lines))
    if args.out:
        out = _out_dir(args)
        rows = [{"stage": s.label, "factor": s.factor, "running_rate_per_s": s.running_rate,
                 "published": s.published, "note": s.note} for s in b.stages]
        doc = {**_meta(cfg, "rate-budget"), "initial": {"stage": b.initial_label, "rate_per_s": b.initial_rate},
               "stages": rows, "twofold_rate_per_s": b.twofold_rate, "fourfold_rate_per_h": b.fourfold_per_hour,
               "flagged": b.flagged, "gap_items": [{"item": i, "note": n} for i, n in b.gap_items]}
        if args.format == "csv":
            with (out / "rate_budget.csv").open("w") as fh:
                for h in _header(cfg, "rate-budget"):
                    fh.write(f"# {h}\n")
                fh.write("stage,factor,running_rate_per_s,published\n")
                fh.write(f"{b.initial_label},,{b.initial_rate!r},true\n")
                for s in b.stages:
                    fh.write(f"{s.label},{s.factor!r},{s.running_rate!r},{str(s.published).lower()}\n")
        _write_json(out / "rate_budget.json", doc)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    cfg = _load(args)
    overlap = OverlapModel(args.mu, cfg.overlap.sigma_c)
    grid = orc.GridSpec.for_overlap(overlap)
    if args.bin_width is not None:
        grid = orc.GridSpec(args.bin_width, grid.span)
    rep = orc.oracle_check(grid, overlap, cfg.bsm_jitter_sigmas, n_delays=args.points)
    print(f"oracle check {'PASS' if rep.passed else 'FAIL'}: max deviation {rep.max_deviation:.3e} "
          f"(bare {rep.max_dev_cross:.3e}, jittered {rep.max_dev_measured:.3e}; tolerance {rep.tolerance:g})")
    if args.out:
        out = _out_dir(args)
        if args.format == "csv":
            orc.write_oracle_csv(out / "oracle_bare.csv", rep.delays, rep.oracle_cross)
            orc.write_oracle_csv(out / "oracle_jittered.csv", rep.delays, rep.oracle_measured)
        doc = {**_meta(cfg, "oracle-check"), "mu": args.mu, "passed": rep.passed,
               "max_deviation": rep.max_deviation, "grid": {"bin_width_ps": grid.bin_width, "span_ps": grid.span},
               "delta_ps": rep.delays, "oracle_cross": rep.oracle_cross, "closed_cross": rep.closed_cross,
               "oracle_measured": rep.oracle_measured, "closed_measured": rep.closed_measured}
        _write_json(out / "oracle_check.json", doc)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    if cfg.run.mode == "full_stream":
        res = sm.simulate_stream(cfg, cfg.analyzer_a.phase, cfg.analyzer_b.phase, cfg.run.duration, labels=("simulate",))
        table, extra = res.table, {"duration_ps": cfg.run.duration.value, "pairs_A": res.n_pairs["A"],
                                   "pairs_B": res.n_pairs["B"]}
    else:
        ev, t_eq, _, _, table = sm.conditioned_swap_setting(
            cfg, cfg.analyzer_a.phase, cfg.analyzer_b.phase, cfg.swap_visibility(), labels=("simulate",)
        )
        extra = {"exposure_s": t_eq, "weight_per_event": 1.0 / t_eq}
    if args.format == "csv":
        table.write_csv(out / "timestamps.csv", _header(cfg, "simulate", extra))
    else:
        _write_json(out / "timestamps.json", {**_meta(cfg, "simulate", extra), "detector_id": table.detector_id,
                                              "time_ps": table.time_ps,
                                              "origin": [("photon", "dark")[o] for o in table.origin.tolist()]})
    print(f"{len(table)} timestamps written to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cwswap", description="CW entanglement-swapping simulator")
    p.add_argument("--version", action="version", version=f"cwswap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", help="scenario JSON (default: built-in reference setup)")
        sp.add_argument("--seed", type=int, help="master seed, overrides the config")
        sp.add_argument("--mode", choices=sorted(MODES), help="simulation mode, overrides the config")
        sp.add_argument("--out", required=out_required, default=None, help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    common(sub.add_parser("hom-scan", help="BSM delay histogram and dip fit"))
    sp = sub.add_parser("swap-scan", help="fringe scan, Werner verdict and three-fold flatness")
    common(sp)
    sp.add_argument("--visibility", type=float, default=None, help="override the swapped-state visibility")
    common(sub.add_parser("rate-budget", help="closed-form rate budget"), out_required=False)
    sp = sub.add_parser("oracle-check", help="brute-force amplitude oracle against the closed-form dip")
    common(sp, out_required=False)
    sp.add_argument("--mu", type=float, default=1.0, help="mode overlap for the check")
    sp.add_argument("--bin-width", type=float, default=None, help="oracle grid bin in ps")
    sp.add_argument("--points", type=int, default=41, help="delays in the sweep")
    common(sub.add_parser("simulate", help="export a raw timestamp table"))
    return p


COMMANDS = {
    "hom-scan": cmd_hom_scan,
    "swap-scan": cmd_swap_scan,
    "rate-budget": cmd_rate_budget,
    "oracle-check": cmd_oracle_check,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except CwswapError as e:
        print(f"error: {e}", file=sys.stderr)
        return _exit_code(e)


if __name__ == "__main__":
    sys.exit(main())
