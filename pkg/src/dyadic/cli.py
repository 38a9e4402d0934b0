"""Command line entry points: simulate, certify, selfsimilar, sweep, classify.

Exit codes: 0 success / ReachedTEnd, 1 MaxSteps, 2 blow-up proxy,
3 configuration or parameter error, 4 numerical failure, 5 empty admissible
set. The worker count of a sweep can be overridden with ``DYADIC_WORKERS``.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import output
from .certificate import admissible_w, beta_max, check_initial_data, make_certificate
from .config import ConfigError, RunConfig, SweepConfig, parse_config
from .integrator import BLOWUP_PROXIES, NoBlowupTrend, Termination, estimate_blowup_time, integrate
from .model import PAIRS, GenericModelCoefficients, ModelParams, ShellState, classify_conservative_model
from .selfsimilar import decay_ratio, kp_residual, profile_sequence, shoot_c0

EXIT_OK = 0
EXIT_MAX_STEPS = 1
EXIT_BLOWUP = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4
EXIT_EMPTY = 5

WORKERS_ENV = "DYADIC_WORKERS"


def _exit_code(term: Termination) -> int:
    if term is Termination.REACHED_T_END:
        return EXIT_OK
    if term in BLOWUP_PROXIES:
        return EXIT_BLOWUP
    if term is Termination.MAX_STEPS:
        return EXIT_MAX_STEPS
    return EXIT_NUMERICAL


def _fit(t, L):
    try:
        est = estimate_blowup_time(t, L)
    except (NoBlowupTrend, ValueError):
        return None, None
    return est.T_est, est.fit_residual


def run_simulate(cfg: RunConfig) -> int:
    params = cfg.model
    a0 = cfg.initial.build(params.J)
    cert = None
    if cfg.mode == "simulate+certify":
        gamma = params.gamma if params.nu else None
        try:
            cert = make_certificate(cfg.cert_s, gamma, params.beta, params.lam)
        except ValueError as exc:
            print(f"certificate: {exc}", file=sys.stderr)
    traj = integrate(params, ShellState(0.0, a0), cfg.forcing, cfg.ctrl, cfg.stop, cfg.diagnostics.sample_every)
    w = cfg.diagnostics.w
    rows = list(output.trajectory_rows(traj, cfg.diagnostics.s_list, w))
    output.write_csv(cfg.output.csv_path, output.trajectory_columns(cfg.diagnostics.s_list), rows)

    blowup = traj.termination in BLOWUP_PROXIES
    T_est = fit_res = T_norm = None
    if blowup:
        T_est, fit_res = _fit(traj.t, [r[-4] for r in rows])
        T_norm = _fit(traj.t, traj.norm)[0]
    summary = {
        "termination": str(traj.termination),
        "T_est": T_est,
        "fit_residual": fit_res,
        "T_est_norm": T_norm,
        "norm_s": traj.norm_s,
        "steps_accepted": traj.steps_accepted,
        "steps_rejected": traj.steps_rejected,
        "w": w,
        "final_state": None
        if traj.final_state is None
        else {"t": traj.final_state.t, "a": list(traj.final_state.a)},
    }
    if cert is not None:
        check = check_initial_data(a0, cert)
        summary["certificate"] = dict(cert.as_dict(), data_passes=check.passes, data_margin=check.margin)
    elif cfg.mode == "simulate+certify":
        summary["certificate"] = {"admissible": False}
    output.write_json(cfg.output.json_path, summary)
    return _exit_code(traj.termination)


def certify(s, gamma=None, beta=0.0, lam=2.0) -> tuple[int, dict]:
    """Exit code and JSON payload for a certificate request."""
    try:
        iv = admissible_w(s, gamma, beta, lam)
    except ValueError as exc:
        return EXIT_CONFIG, {"error": str(exc)}
    bm = beta_max(s, gamma, lam)
    info = {"beta_max": bm.value, "beta_max_attained": bm.attained}
    if iv.empty:
        return EXIT_EMPTY, dict(info, admissible=False)
    cert = make_certificate(s, gamma, beta, lam)
    return EXIT_OK, dict(
        info,
        admissible=True,
        w_interval=[iv.lo, iv.hi],
        w_lo_closed=iv.lo_closed,
        certificate=cert.as_dict(),
    )


def run_certify(s, gamma=None, beta=0.0, lam=2.0, json_path=None, stream=None) -> int:
    code, payload = certify(s, gamma, beta, lam)
    text = output.dumps(payload)
    (stream or sys.stdout).write(text)
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(text)
    return code


def run_selfsimilar(n, tol, csv_path=None, json_path=None, stream=None) -> int:
    res = shoot_c0(n, tol)
    full = profile_sequence(res.c0_star, n)
    prof = full.truncated()
    try:
        ratio = decay_ratio(prof)
    except ValueError:
        ratio = None
    payload = {
        "c0_star": res.c0_star,
        "bracket_width": res.bracket_width,
        "converged": res.converged,
        "refinements": res.refinements,
        "n": n,
        "classification": str(full.classification),
        "trusted_shells": prof.n,
        "ratio": None if ratio is None else ratio.ratio,
        "expected_ratio": 2.0 ** (-1 / 3),
        "ratio_deviates": None if ratio is None else ratio.deviates,
        "max_kp_residual": float(np.max(kp_residual(prof, 1.0), initial=0.0)),
        "dichotomy": res.dichotomy,
    }
    text = output.dumps(payload)
    (stream or sys.stdout).write(text)
    if json_path:
        with open(json_path, "w") as fh:
            fh.write(text)
    if csv_path:
        output.write_csv(csv_path, ["j", "c_j"], ((j, c) for j, c in enumerate(full.c)))
    return EXIT_OK


def read_coefficients(text: str) -> GenericModelCoefficients:
    """Six numbers in the order C(-1,-1) C(-1,0) C(-1,1) C(0,0) C(0,1) C(1,1)."""
    tokens = []
    for line in text.splitlines():
        body = line.split("#", 1)[0]
        tokens += [t for t in body.replace(",", " ").split() if t]
    if len(tokens) != len(PAIRS):
        raise ValueError(f"expected {len(PAIRS)} coefficients, got {len(tokens)}")
    return GenericModelCoefficients(tuple(Fraction(t) for t in tokens))


def classify_payload(coeffs: GenericModelCoefficients, lam=2.0) -> dict:
    res = classify_conservative_model(coeffs, lam)
    if res.conservative:
        return {"conservative": True, "alpha": res.alpha, "beta": res.beta}
    return {
        "conservative": False,
        "witness": list(res.witness),
        "energy_rate": str(res.energy_rate),
        "energy_rate_float": float(res.energy_rate),
    }


def run_classify(path, lam=2.0, stream=None) -> int:
    try:
        with open(path) as fh:
            coeffs = read_coefficients(fh.read())
        payload = classify_payload(coeffs, lam)
    except (OSError, ValueError) as exc:
        print(f"classify: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    (stream or sys.stdout).write(output.dumps(payload))
    return EXIT_OK


# -- sweep --------------------------------------------------------------------

SWEEP_COLUMNS = ["s", "gamma", "beta", "admissible", "beta_max", "threshold", "T_est", "error"]


def _sweep_point(job):
    """One grid point; never raises."""
    s, gamma, beta, lam, simulate, J, ctrl, stop, sample_every = job
    row = [s, "none" if gamma is None else gamma, beta, None, None, None, None, ""]
    try:
        bm = beta_max(s, gamma, lam)
        row[4] = bm.value
        iv = admissible_w(s, gamma, beta, lam)
        row[3] = not iv.empty
        if iv.empty:
            return row
        cert = make_certificate(s, gamma, beta, lam)
        row[5] = cert.threshold
        if simulate:
            params = ModelParams(lam=lam, alpha=1.0, beta=beta, nu=0.0 if gamma is None else 1.0, gamma=gamma or 0.25, J=J)
            a0 = np.zeros(J)
            a0[:2] = max(1.0, 2.0 * cert.threshold)
            traj = integrate(params, ShellState(0.0, a0), None, ctrl, stop, sample_every)
            if traj.termination in BLOWUP_PROXIES:
                lam_j = lam ** np.arange(J)
                L = (traj.a * lam_j * cert.w ** -np.arange(J)).sum(axis=1)
                row[6] = _fit(traj.t, L)[0]
    except Exception as exc:  # recorded in-row, the sweep goes on
        row[7] = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
    return row


def sweep_rows(cfg: SweepConfig, workers: int | None = None):
    simulate = cfg.mode == "simulate+certify"
    jobs = [(s, g, b, cfg.lam, simulate, cfg.J, cfg.ctrl, cfg.stop, cfg.sample_every) for s, g, b in cfg.grid()]
    workers = workers or cfg.workers
    if workers <= 1:
        return [_sweep_point(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if workers is None and env:
        workers = int(env)
    rows = sweep_rows(cfg, workers)
    output.write_csv(cfg.output, SWEEP_COLUMNS, rows)
    return EXIT_OK


# -- argparse -----------------------------------------------------------------


def _load(path, overrides):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def _optional_gamma(text):
    return None if text.lower() in ("none", "inviscid") else float(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dyadic", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="integrate a run config")
    sp.add_argument("config")
    sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")

    sp = sub.add_parser("certify", help="blow-up certificate for (s, gamma, beta)")
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--gamma", type=_optional_gamma, default=None, help="omit or 'none' for the inviscid model")
    sp.add_argument("--beta", type=float, default=0.0)
    sp.add_argument("--lambda", dest="lam", type=float, default=2.0)
    sp.add_argument("--json", dest="json_path")

    sp = sub.add_parser("selfsimilar", help="shoot for the self-similar profile")
    sp.add_argument("--n", type=int, default=60)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--csv", dest="csv_path")
    sp.add_argument("--json", dest="json_path")

    sp = sub.add_parser("sweep", help="certify (and optionally simulate) over a parameter grid")
    sp.add_argument("config")
    sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    sp.add_argument("--workers", type=int)

    sp = sub.add_parser("classify", help="test a coefficient file for energy conservation")
    sp.add_argument("coefficients")
    sp.add_argument("--lambda", dest="lam", type=float, default=2.0)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "simulate":
            cfg = _load(args.config, args.set)
            if not isinstance(cfg, RunConfig):
                raise ConfigError(["simulate needs a run config, got a sweep config"])
            return run_simulate(cfg)
        if args.command == "sweep":
            cfg = _load(args.config, args.set)
            if not isinstance(cfg, SweepConfig):
                raise ConfigError(["sweep needs a [sweep] section"])
            return run_sweep(cfg, args.workers)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "certify":
        return run_certify(args.s, args.gamma, args.beta, args.lam, args.json_path)
    if args.command == "selfsimilar":
        if args.n < 20 or not args.tol > 0:
            print("selfsimilar: need n >= 20 and tol > 0", file=sys.stderr)
            return EXIT_CONFIG
        return run_selfsimilar(args.n, args.tol, args.csv_path, args.json_path)
    return run_classify(args.coefficients, args.lam)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
