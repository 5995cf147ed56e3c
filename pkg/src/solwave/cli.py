"""Batch driver: ``solwave {check,solve,sweep,evolve} --config run.yaml``.

Exit status: 0 when every check passes, 1 on numerical failure, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import analysis as an
from . import evolution as ev
from . import model as md
from . import spectral as sp
from .config import RunConfig, load_config, parse_config
from .minimizer import continuation_sweep, solve
from .spectral import ConfigurationError, Field

log = logging.getLogger("solwave")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class Writer:
    """Single sink for every output file of a run."""

    def __init__(self, directory: Path, formats):
        self.dir = Path(directory)
        self.formats = set(formats)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def json(self, name: str, data: dict):
        path = self.dir / name
        path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")
        self.written.append(name)
        return path

    def csv(self, name: str, header, rows):
        if "csv" not in self.formats:
            return None
        path = self.dir / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                            for v in row])
        self.written.append(name)
        return path

    def profile(self, name: str, u: Field):
        return self.csv(name, ["x", "u"], zip(u.grid.x, u.values))

    def meta(self, command: str, seed: int):
        # timestamps live here only, so reports stay byte-identical across runs
        from importlib.metadata import PackageNotFoundError, version
        try:
            ver = version("artifact")
        except PackageNotFoundError:
            ver = "unknown"
        (self.dir / "meta.json").write_text(json.dumps(
            {"command": command, "seed": seed, "timestamp": time.time(), "version": ver,
             "files": sorted(self.written)}, indent=2, sort_keys=True) + "\n")


def model_summary(cfg: RunConfig) -> dict:
    m, n = cfg.symbol, cfg.nonlinearity
    return {"symbol": {"id": m.id, "s": m.s, "s_prime": m.s_prime, "m0": m.m0, **m.params},
            "nonlinearity": n.describe(), "beta": md.beta_exponent(m.s_prime, n.p)}


# --- commands ------------------------------------------------------------

def cmd_check(cfg: RunConfig, out: Writer, args) -> int:
    opts = cfg.task.get("check") or {}
    m, n = cfg.symbol, cfg.nonlinearity
    growth = md.check_assumption_B(m, float(opts.get("xi_max", 100.0)),
                                   int(opts.get("samples", 512)), n,
                                   float(opts.get("ratio_bound", 1e3)))
    offsets = opts.get("offsets", [1.0, 0.5, 0.1, 0.05, 0.01])
    modulus = md.modulus_estimate(m, offsets)
    rem = {}
    if n.remainder is not None:
        rem = {"r": n.remainder.r, "witness_C": n.remainder.witness()}
    lip = md.lipschitz_estimate(n)
    beta = md.beta_exponent(m.s_prime, n.p)
    passed = growth.passed and modulus.uniformly_continuous and \
        (not rem or math.isfinite(rem["witness_C"]))
    report = {"model": model_summary(cfg), "assumption_B": growth.to_dict(),
              "modulus": modulus.to_dict(), "remainder": rem, "lipschitz_unit_ball": lip,
              "beta": beta, "passed": passed, "config": cfg.echo()}
    out.json("check.json", report)
    print(f"assumption (B): {'pass' if growth.passed else 'FAIL'}")
    for msg in growth.messages:
        print(f"  {msg}")
    print(f"continuity modulus: {'pass' if modulus.uniformly_continuous else 'FAIL'}"
          + (f" ({modulus.message})" if modulus.message else ""))
    print(f"beta = s'p/(2s'-p) = {beta:.6g}")
    return EXIT_OK if passed else EXIT_NUMERICAL


def _write_solve(out: Writer, res, cfg: RunConfig, stem: str = "solve"):
    data = res.to_dict()
    data["model"] = model_summary(cfg)
    data["profile_csv"] = f"{stem}_profile.csv"
    data["regularity"] = an.regularity_report(res)
    data["seed"] = cfg.seed
    data["run_config"] = cfg.echo()
    out.json(f"{stem}.json", data)
    out.profile(f"{stem}_profile.csv", res.u)


def cmd_solve(cfg: RunConfig, out: Writer, args) -> int:
    opts = cfg.task.get("solve") or {}
    if "mu" not in opts:
        raise ConfigurationError("task.solve.mu is required for 'solve'")
    res = solve(cfg.solve_config(float(opts["mu"])))
    _write_solve(out, res, cfg)
    print(f"mu={res.mu:g} nu={res.nu:.12g} E={res.breakdown.e:.12g} residual={res.residual:.3g} "
          f"iterations={res.iterations} converged={res.converged}")
    if not res.converged and not args.allow_unconverged:
        return EXIT_NUMERICAL
    return EXIT_OK


def _sweep_mus(opts) -> list[float]:
    if "mu" in opts and opts["mu"] is not None:
        mus = [float(v) for v in opts["mu"]]
    else:
        try:
            mus = np.logspace(math.log10(float(opts["mu_min"])), math.log10(float(opts["mu_max"])),
                              int(opts.get("count", 8))).tolist()
        except KeyError as exc:
            raise ConfigurationError(f"task.sweep: missing key {exc.args[0]!r}") from None
    if not mus:
        raise ConfigurationError("task.sweep: empty mu list")
    return sorted(mus)


def _solve_one(job):
    # model callables are closures, so workers rebuild them from the YAML text
    text, source, mu = job
    res = solve(parse_config(text, source).solve_config(mu))
    res.m = res.n = None
    return res


def run_sweep(cfg: RunConfig, mus, workers: int = 1, warm_start: bool = True):
    template = cfg.solve_config(mus[-1])
    if workers <= 1:
        return continuation_sweep(mus, template, warm_start=warm_start)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        text = yaml.safe_dump(cfg.echo())
        results = list(pool.map(_solve_one, [(text, cfg.source, mu) for mu in mus]))
    for res in results:
        res.m, res.n = cfg.symbol, cfg.nonlinearity
    return an.SweepReport.from_results(results, cfg.symbol, cfg.nonlinearity)


def verification_report(rep: an.SweepReport, seed: int, n_pairs: int = 20) -> dict:
    checks = {}
    try:
        checks["scaling"] = an.fit_scaling(rep)
    except an.InsufficientDataError as exc:
        checks["scaling"] = {"skipped": True, "note": str(exc)}
    checks["near_minimizer"] = an.near_minimizer_ratios(rep)
    checks["remainder"] = an.remainder_smallness(rep) if len(rep.usable()) >= 3 else \
        {"skipped": True, "note": "too few entries"}
    try:
        checks["subadditivity"] = an.subadditivity_check(rep, n_pairs=n_pairs, seed=seed)
    except an.InsufficientDataError as exc:
        checks["subadditivity"] = {"skipped": True, "note": str(exc)}
    checks["regularity"] = an.regularity_sweep(rep)
    cong = []
    for r in rep.results:
        best, _, err = an.congestion_profile(r.u, rep.p)
        cong.append({"mu": r.mu, "max": best, "ratio": best / r.mu ** (rep.beta / rep.p),
                     "partition_error": err})
    checks["congestion"] = cong
    # masses whose solve converged, kept its tail small, stayed in |u| <= 1
    # and passed the fixed-point identity
    reg = checks["regularity"]
    good = [mu for mu, fp, amp in zip(reg["mu"], reg["fixed_point"], reg["l_inf"])
            if fp and amp <= 1.0]
    checks["valid_mu_range"] = [min(good), max(good)] if good else None
    return checks


def cmd_sweep(cfg: RunConfig, out: Writer, args) -> int:
    opts = cfg.task.get("sweep") or {}
    mus = _sweep_mus(opts)
    rep = run_sweep(cfg, mus, args.workers, bool(opts.get("warm_start", True)))
    checks = verification_report(rep, cfg.seed, int(opts.get("pairs", 20)))
    data = rep.to_dict()
    data["model"] = model_summary(cfg)
    data["run_config"] = cfg.echo()
    data["seed"] = cfg.seed
    out.json("sweep.json", data)
    out.json("verification.json", {"checks": checks, "seed": cfg.seed})
    cols, rows = rep.table()
    out.csv("sweep.csv", cols, rows)
    use = rep.usable()
    out.csv("loglog_energy.csv", ["log_mu", "log_minus_I"],
            [(math.log(e.mu), math.log(-e.I)) for e in use if e.I < 0])
    out.csv("loglog_speed.csv", ["log_mu", "log_m0_minus_nu"],
            [(math.log(e.mu), math.log(e.speed_deficit)) for e in use if e.speed_deficit > 0])
    for i, r in enumerate(rep.results):
        out.profile(f"profile_{i:02d}.csv", r.u)
    fit = checks["scaling"]
    if "beta_energy" in fit:
        print(f"beta_energy={fit['beta_energy']:.4f} (expect {1 + rep.beta:.4f}), "
              f"beta_speed={fit['beta_speed']:.4f} (expect {rep.beta:.4f})")
    unconverged = [e.mu for e in rep.entries if not e.converged]
    if rep.failures or (unconverged and not args.allow_unconverged):
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, out: Writer, args) -> int:
    opts = cfg.task.get("evolve") or {}
    if opts.get("source"):
        src = Path(opts["source"])
        if cfg.source is not None and not src.is_absolute():
            src = cfg.source.parent / src
        try:
            meta = json.loads(src.read_text())
            prof = np.loadtxt(src.parent / meta["profile_csv"], delimiter=",", skiprows=1)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigurationError(f"task.evolve.source: cannot load solve artifact: {exc}") \
                from None
        grid = sp.make_grid(meta["domain"]["half_length"], prof.shape[0])
        u0 = Field(grid, prof[:, 1])
        nu = float(meta["nu"])
    elif opts.get("mu") is not None:
        res = solve(cfg.solve_config(float(opts["mu"])))
        _write_solve(out, res, cfg)
        if not res.converged and not args.allow_unconverged:
            return EXIT_NUMERICAL
        u0, nu = res.u, res.nu
    else:
        raise ConfigurationError("task.evolve needs 'source' (a solve JSON) or 'mu'")
    width = ev.profile_width(u0)
    if opts.get("t_end") is not None:
        t_end = float(opts["t_end"])
    else:
        t_end = float(opts.get("widths", 20)) * width / max(abs(nu), 1e-12)
    dt = float(opts["dt"]) if opts.get("dt") is not None else \
        ev.default_dt(u0, cfg.symbol, cfg.nonlinearity)
    outputs = int(opts.get("outputs", 20))
    times = np.linspace(0.0, t_end, outputs + 1)[1:]
    try:
        traj = ev.integrate(u0, cfg.symbol, cfg.nonlinearity, t_end, dt, times,
                            cfg.numerics["padding"])
    except ev.BlowUpError as exc:
        out.json("evolve.json", {"blowup_time": exc.time, "error": str(exc)})
        print(str(exc))
        return EXIT_NUMERICAL
    chk = ev.traveling_wave_error(traj, nu, cfg.nonlinearity.polarity)
    speed_err = abs(chk.measured_speed - nu) / max(abs(nu), 1e-300)
    passed = chk.shape_error < 1e-3 and speed_err < 0.01 and traj.max_q_drift < 1e-8
    out.json("evolve.json", {"trajectory": traj.to_dict(), "traveling_wave": chk.to_dict(),
                             "nu": nu, "relative_speed_error": speed_err, "passed": passed,
                             "t_end": t_end, "seed": cfg.seed, "run_config": cfg.echo()})
    rows = [[x] + [s.values[i] for s in traj.snapshots] for i, x in enumerate(u0.grid.x)]
    out.csv("trajectory.csv", ["x"] + [f"t={t:.6g}" for t in traj.times], rows)
    print(f"speed={chk.measured_speed:.10g} nu={nu:.10g} shape_error={chk.shape_error:.3g} "
          f"q_drift={traj.max_q_drift:.3g}")
    return EXIT_OK if passed else EXIT_NUMERICAL


COMMANDS = {"check": cmd_check, "solve": cmd_solve, "sweep": cmd_sweep, "evolve": cmd_evolve}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="solwave", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, type=Path, help="YAML run configuration")
    ap.add_argument("--out", type=Path, default=None, help="output directory (overrides config)")
    ap.add_argument("--seed", type=int, default=None, help="random seed (overrides config)")
    ap.add_argument("--workers", type=int, default=1, help="parallel solves for sweeps")
    ap.add_argument("--allow-unconverged", action="store_true",
                    help="exit 0 even if a solve does not reach tolerance")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        np.random.seed(cfg.seed)
        out = Writer(args.out if args.out is not None else cfg.output_dir, cfg.formats)
        code = COMMANDS[args.command](cfg, out, args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, ev.BlowUpError, an.InsufficientDataError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out.meta(args.command, cfg.seed)
    return code


if __name__ == "__main__":
    sys.exit(main())
