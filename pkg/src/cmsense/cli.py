"""Command-line front end.

Subcommands: run (execute a config or preset and write CSV/JSON
results), validate (schema + physics lints, no execution), presets
(list or dump the built-in experiment presets).

All tables are plain CSV, UTF-8, '.' decimal separator, one header
row; a provenance.json sidecar echoes the config, library versions
and derived scalars.  Identical config + seed reproduce the CSV bytes
exactly, independent of --threads.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .cascade import (
    Imperfections,
    cascade_generators,
    fisher_from_trajectories,
    mismatch_sweep,
)
from .config import (
    ExperimentConfig,
    PRESET_NAMES,
    build_sensor,
    load_config,
    preset_config,
    preset_summaries,
    validate,
)
from .decoder import build_decoder, two_level_decoder
from .errors import ConfigInvalid
from .estimate import interrogation_study, study_table
from .propagate import TimeGrid
from .qfi import env_qfi, global_qfi

__all__ = ["ResultBundle", "run", "main"]


@dataclass(eq=False)
class ResultBundle:
    """Config echo, named CSV tables, and provenance for one run."""

    config: dict
    tables: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def add_table(self, name, header, rows):
        self.tables[name] = (list(header), [list(r) for r in rows])

    def csv_bytes(self, name):
        header, rows = self.tables[name]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v
                        for v in row])
        return buf.getvalue().encode("utf-8")

    def write(self, outdir):
        os.makedirs(outdir, exist_ok=True)
        paths = []
        for name in sorted(self.tables):
            path = os.path.join(outdir, f"{name}.csv")
            with open(path, "wb") as fh:
                fh.write(self.csv_bytes(name))
            paths.append(path)
        side = os.path.join(outdir, "provenance.json")
        with open(side, "w", encoding="utf-8") as fh:
            json.dump({"config": self.config, **self.provenance}, fh, indent=2,
                      sort_keys=True)
            fh.write("\n")
        return paths + [side]


def _matched_two_level(cfg, theta):
    m = cfg.model
    return two_level_decoder(m["omega"], -theta, m["gamma"])


def _fisher(gen, theta, grid, n_traj, cfg):
    est = cfg.estimation
    return fisher_from_trajectories(
        gen, theta, grid, n_traj, theta_step=est["theta_step"],
        seed=cfg.seed, threads=cfg.threads,
    )


def _qfi_kwargs(cfg):
    fd = cfg.estimation.get("fd_step")
    return {} if fd is None else {"delta": fd}


def _scan_pipeline(cfg):
    """(T, I_E, I_G[, F_decoder, err, F_direct, err]) for each T."""
    theta = float(cfg.model["theta"])
    dt = float(cfg.grid["dt"])
    n_traj = int(cfg.estimation["n_traj"])
    three = cfg.model["kind"] == "three_level"
    rows = []
    for t_end in cfg.grid["t_list"]:
        sensor = build_sensor(cfg, t_plateau=float(t_end))
        horizon = float(t_end) + (6.0 / cfg.model["gamma"] if three else 0.0)
        grid = TimeGrid(0.0, horizon, dt)
        ie = env_qfi(sensor, theta, horizon, dt=dt, **_qfi_kwargs(cfg)).value
        ig = global_qfi(sensor, theta, horizon, dt=dt, **_qfi_kwargs(cfg)).value
        row = [float(t_end), ie, ig]
        if n_traj > 0:
            if three:
                dec = build_decoder(sensor, theta, grid)
            else:
                dec = _matched_two_level(cfg, theta)
            fd = _fisher(cascade_generators(sensor, dec), theta, grid, n_traj, cfg)
            fx = _fisher(cascade_generators(sensor), theta, grid, n_traj, cfg)
            row += [fd.value, fd.std_error, fx.value, fx.std_error]
        rows.append(row)
    header = ["T", "I_E", "I_G"]
    if n_traj > 0:
        header += ["F_decoder", "F_decoder_err", "F_direct", "F_direct_err"]
    return header, rows


def _mle_pipeline(cfg):
    theta = float(cfg.model["theta"])
    sensor = build_sensor(cfg)
    dec = _matched_two_level(cfg, theta)
    gen = cascade_generators(sensor, dec)
    est = cfg.estimation
    rows = interrogation_study(
        gen, theta, [float(t) for t in cfg.grid["t_list"]],
        int(est["n_records"]), float(cfg.grid["dt"]),
        theta_step=est["theta_step"], seed=cfg.seed, threads=cfg.threads,
        n_grid=int(est["n_grid"]), grid_width=est["grid_width"],
        fisher_n_traj=int(est["n_traj"]) or None,
    )
    table = study_table(rows)
    header = list(table[0].keys())
    return header, [[d[k] for k in header] for d in table]


def _mismatch_pipeline(cfg):
    theta = float(cfg.model["theta"])
    sensor = build_sensor(cfg)
    grid = TimeGrid(0.0, float(cfg.grid["t_list"][0]), float(cfg.grid["dt"]))
    res = mismatch_sweep(
        sensor, theta, [float(v) for v in cfg.mismatch["values"]], grid,
        int(cfg.estimation["n_traj"]), theta_step=cfg.estimation["theta_step"],
        seed=cfg.seed, threads=cfg.threads,
    )
    rows = [[dm, f.value, f.std_error]
            for dm, f in zip(res.mismatches, res.fisher)]
    return ["delta_mis", "fisher", "fisher_err"], rows, float(res.fwhm)


def _imperfections_pipeline(cfg):
    theta = float(cfg.model["theta"])
    sensor = build_sensor(cfg)
    dec = _matched_two_level(cfg, theta)
    grid = TimeGrid(0.0, float(cfg.grid["t_list"][0]), float(cfg.grid["dt"]))
    n_traj = int(cfg.estimation["n_traj"])
    ideal = _fisher(cascade_generators(sensor, dec), theta, grid, n_traj, cfg)
    etas = cfg.imperfections["eta_list"] or [cfg.imperfections["eta"]]
    gammas = cfg.imperfections["gamma_list"] or [cfg.imperfections["gamma"]]
    rows = []
    for eta in etas:
        for gam in gammas:
            imp = Imperfections(gamma=float(gam),
                                gamma_dep=cfg.imperfections["gamma_dep"],
                                eta=float(eta))
            fi = _fisher(cascade_generators(sensor, dec, imperfections=imp),
                         theta, grid, n_traj, cfg)
            ratio = fi.value / ideal.value if ideal.value > 0 else float("nan")
            rows.append([float(eta), float(gam), fi.value, fi.std_error, ratio])
    header = ["eta", "gamma", "fisher", "fisher_err", "ratio_to_ideal"]
    return header, rows, ideal.value


def run(cfg: ExperimentConfig) -> ResultBundle:
    """Execute the configured experiment; returns tables in memory."""
    diags = validate(cfg)
    errors = [d for d in diags if d.startswith("error")]
    if errors:
        raise ConfigInvalid("; ".join(errors))
    bundle = ResultBundle(config=cfg.to_dict())
    extras = {}
    if cfg.preset in ("fig2_qfi_scan", "custom"):
        header, rows = _scan_pipeline(cfg)
        bundle.add_table("qfi_scan", header, rows)
    elif cfg.preset == "fig3_heisenberg":
        header, rows = _scan_pipeline(cfg)
        bundle.add_table("heisenberg", header, rows)
    elif cfg.preset == "fig2_mle":
        header, rows = _mle_pipeline(cfg)
        bundle.add_table("mle", header, rows)
    elif cfg.preset == "fig2_mismatch":
        header, rows, fwhm = _mismatch_pipeline(cfg)
        bundle.add_table("mismatch", header, rows)
        extras["fwhm"] = fwhm
    elif cfg.preset == "fig4_imperfections":
        header, rows, ideal = _imperfections_pipeline(cfg)
        bundle.add_table("imperfections", header, rows)
        extras["ideal_fisher"] = ideal
    else:
        raise ConfigInvalid(f"preset: no pipeline for {cfg.preset!r}")
    bundle.provenance = {
        "version": __version__,
        "numpy": np.__version__,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "diagnostics": diags,
        "generated_utc": datetime.now(timezone.utc).isoformat(),
        **extras,
    }
    # the bundle must re-validate cleanly from its own echo
    echo = ExperimentConfig.from_dict(bundle.config)
    errs = [d for d in validate(echo) if d.startswith("error")]
    if errs:
        raise ConfigInvalid("result bundle failed re-validation: " + "; ".join(errs))
    return bundle


def _load_for(args):
    if args.config:
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        cfg = preset_config(args.preset)
    else:
        raise ConfigInvalid("run: provide --config PATH or --preset NAME")
    if args.seed is not None:
        cfg.seed = int(args.seed)
    if args.threads is not None:
        cfg.threads = int(args.threads)
    if getattr(args, "out", None):
        cfg.out = args.out
    return cfg


def main(argv=None) -> int:
    p = argparse.ArgumentParser(
        prog="cmsense",
        description="Emission-field sensing laboratory: QFI, decoders, "
                    "counting records, estimation.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="execute a config or preset, write CSV + JSON")
    pr.add_argument("--config", help="path to a JSON config")
    pr.add_argument("--preset", choices=[n for n in PRESET_NAMES if n != "custom"],
                    help="run a built-in preset unchanged")
    pr.add_argument("--seed", type=int, default=None, help="override config seed")
    pr.add_argument("--threads", type=int, default=None, help="worker threads")
    pr.add_argument("--out", help="output directory (default from config)")

    pv = sub.add_parser("validate", help="check a config, print diagnostics")
    pv.add_argument("--config", required=True)
    pv.add_argument("--seed", type=int, default=None)
    pv.add_argument("--threads", type=int, default=None)

    pp = sub.add_parser("presets", help="list presets or dump one as JSON")
    pp.add_argument("--show", metavar="NAME", help="print the named preset config")

    args = p.parse_args(argv)

    if args.command == "presets":
        if args.show:
            try:
                cfg = preset_config(args.show)
            except ConfigInvalid as exc:
                print(f"error: {exc}", file=sys.stderr)
                return 2
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        else:
            for name in PRESET_NAMES:
                print(f"{name:20s} {preset_summaries()[name]}")
        return 0

    if args.command == "validate":
        try:
            cfg = _load_for(args)
        except ConfigInvalid as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        diags = validate(cfg)
        for d in diags:
            print(d)
        if not diags:
            print("ok: config is runnable")
        return 2 if any(d.startswith("error") for d in diags) else 0

    try:
        cfg = _load_for(args)
        bundle = run(cfg)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    paths = bundle.write(cfg.out)
    for path in paths:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
