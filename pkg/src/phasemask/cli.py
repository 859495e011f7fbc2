"""Command line entry point: ``phasemask {curves,table,waveform,simulate,verify}``.

Exit codes: 0 ok, 1 verification or agreement failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import attack_sim, error_analysis as ea, io, symplectic as sp, waveform as wf
from .config import ConfigError, RunConfig, load_config
from .keystream import SecretKey, derive_running_key, phase_mask_from_key
from .verify import run_checks

log = logging.getLogger("phasemask")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
Z_ALARM = 4.0


class UsageError(Exception):
    pass


def _config_dict(cfg: RunConfig) -> dict:
    return cfg.model_dump(mode="json")


def _emit(text: str, args, cfg: RunConfig) -> None:
    path = args.out or cfg.output.path
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(args, cfg: RunConfig) -> str:
    return args.format or cfg.output.format


# -- curves ------------------------------------------------------------------------

def cmd_curves(cfg: RunConfig, args) -> int:
    r = cfg.rates
    if cfg.grid.T is not None:
        Ts = np.array([cfg.grid.T])
    else:
        points = args.points or cfg.grid.points
        lo, hi = cfg.grid.T_range
        Ts = np.linspace(lo, hi, points)
    if r.C_E >= r.R:
        log.warning("C_E >= R: exponent column left empty")
    curve = ea.error_curve(r.R, r.C_E, Ts, r.D)
    meta = io.metadata(_config_dict(cfg), not args.no_timestamp, command="curves",
                       R=r.R, C_E=r.C_E, D=r.D, tolerance=ea.QUAD_TOL,
                       N_is_real_valued=True)
    if _fmt(args, cfg) == "json":
        pts = [dict(zip(ea.CURVE_COLUMNS, p.row()), random_guess=p.random_guess, f_used=p.f_used)
               for p in curve.points]
        _emit(io.dumps_json({"metadata": meta, "points": pts}), args, cfg)
    else:
        _emit(io.dumps_csv(ea.CURVE_COLUMNS, [p.row() for p in curve.points], meta), args, cfg)
    return EXIT_OK


# -- table -------------------------------------------------------------------------

def cmd_table(cfg: RunConfig, args) -> int:
    rows = ea.table_durations(cfg.rates.R, cfg.ppm.N_range)
    meta = io.metadata(_config_dict(cfg), not args.no_timestamp, command="table", R=cfg.rates.R)
    if _fmt(args, cfg) == "json":
        body = [{"N": n, "T_seconds": t, "T_us": t * 1e6, "T_us_2sf": float(f"{t * 1e6:.2g}")} for n, t in rows]
        _emit(io.dumps_json({"metadata": meta, "rows": body}), args, cfg)
    else:
        _emit(io.dumps_csv(["N", "T_seconds", "T_us"], [(n, t, t * 1e6) for n, t in rows], meta), args, cfg)
    return EXIT_OK


# -- waveform ------------------------------------------------------------------------

def _waveform_grid(cfg: RunConfig) -> wf.ModeGrid:
    g = cfg.grid
    if g.T is not None:
        return wf.ModeGrid.from_bandwidth(g.f_c, 1.0 / g.T, g.bandwidth)
    return wf.ModeGrid.from_bandwidth(g.f_c, g.resolution, g.bandwidth)


def _mask_for(cfg: RunConfig, M: int, N: int):
    nprime = cfg.mask.resolve_nprime(N)
    if nprime % N:
        raise UsageError(f"mask.Nprime={nprime} is not a multiple of N={N}")
    if cfg.mask.identity:
        return sp.ComplexUnitary(np.eye(M, dtype=complex)), None
    try:
        key = SecretKey.from_hex(cfg.mask.key_hex)
    except ValueError as exc:
        raise UsageError(f"mask.key_hex: {exc}") from None
    rk = derive_running_key(key, M, nprime, cfg.mask.counter)
    return phase_mask_from_key(rk, N), rk


def cmd_waveform(cfg: RunConfig, args) -> int:
    grid = _waveform_grid(cfg)
    ppm = wf.PpmConfig(cfg.ppm.N, cfg.ppm.S, 1)
    try:
        plain = wf.build_ppm_signal(ppm, grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    U, rk = _mask_for(cfg, grid.M, ppm.N)
    enc = sp.apply_encryption(U, plain)
    samples = cfg.grid.samples or max(8 * grid.M, 1024)
    t, e_plain = wf.synthesize_envelope(plain, samples)
    _, e_enc = wf.synthesize_envelope(enc, samples)
    dt = grid.T / samples
    energy_plain = float(np.sum(np.abs(e_plain) ** 2) * dt)
    energy_enc = float(np.sum(np.abs(e_enc) ** 2) * dt)
    meta = io.metadata(
        _config_dict(cfg), not args.no_timestamp, command="waveform",
        T=grid.T, j_c=grid.j_c, M=grid.M, N=ppm.N, Nprime=cfg.mask.resolve_nprime(ppm.N),
        R_ebits_per_s=math.log(ppm.N) / grid.T, R_Mebits_per_s_3sf=float(f"{math.log(ppm.N) / grid.T / 1e6:.3g}"),
        envelope_energy_plain=energy_plain, envelope_energy_encrypted=energy_enc,
        running_key=rk.to_json() if rk else None,
    )
    if _fmt(args, cfg) == "json":
        body = {"metadata": meta, "plain": plain.to_json(), "encrypted": enc.to_json(),
                "envelope": {"t": t, "plain_re": e_plain.real, "plain_im": e_plain.imag,
                             "enc_re": e_enc.real, "enc_im": e_enc.imag}}
        _emit(io.dumps_json(body), args, cfg)
    else:
        header = ["t", "re", "im", "abs", "enc_re", "enc_im", "enc_abs"]
        rows = zip(t, e_plain.real, e_plain.imag, np.abs(e_plain), e_enc.real, e_enc.imag, np.abs(e_enc))
        _emit(io.dumps_csv(header, rows, meta), args, cfg)
    return EXIT_OK


# -- simulate --------------------------------------------------------------------------

def simulate_report(cfg: RunConfig, workers: int = 1) -> dict:
    s = cfg.sim
    N = s.resolve_N(cfg.ppm.N)
    S, D = cfg.ppm.S, cfg.rates.D
    if s.ell is not None and s.ell > N:
        raise UsageError(f"sim.ell={s.ell} exceeds N={N}")
    echo = {"mode": s.mode, "N": N, "S": S, "D": D, "trials": s.trials, "seed": s.seed}

    if s.mode == "photon-count":
        res = attack_sim.simulate_bob_photon_count(N, S, s.trials, s.seed, workers)
        ref = ea.bob_photon_count_error(N, S)
        sigma = math.sqrt(ref * (1 - ref) / s.trials)
    elif s.mode == "full-pipeline":
        nprime = cfg.mask.resolve_nprime(N)
        if nprime % N:
            raise UsageError(f"mask.Nprime={nprime} is not a multiple of N={N}")
        j_c = s.j_c or 1000 * N
        grid = wf.ModeGrid.symmetric(1.0 / cfg.grid.resolution, j_c, s.lobes * N - 1)
        try:
            key = SecretKey.from_hex(cfg.mask.key_hex)
        except ValueError as exc:
            raise UsageError(f"mask.key_hex: {exc}") from None
        tc = attack_sim.TrialConfig(s.trials, s.seed, N, S=S, D=D, mode=s.mode, ell=s.ell)
        res = attack_sim.simulate_full_pipeline(tc, grid, wf.PpmConfig(N, S), key, nprime,
                                                cfg.mask.counter, workers=workers)
        A = math.sqrt(2 * S / res.extra["D"])
        ref = ea.eve_error_quadrature(N, A)
        sigma = math.sqrt(ref * (1 - ref) / s.trials)
        echo.update(A=A, M=grid.M, j_c=j_c, lobes=s.lobes, Nprime=nprime)
    else:
        tc = attack_sim.TrialConfig(s.trials, s.seed, N, S=S, D=D, A=s.A, mode=s.mode, ell=s.ell)
        if s.mode == "reduced":
            res = attack_sim.simulate_eve_reduced(tc, workers)
        else:
            res = attack_sim.simulate_eve_conditional(tc, workers)
        ref = ea.eve_error_quadrature(N, tc.amplitude)
        sigma = math.sqrt(ref * (1 - ref) / s.trials)
        if s.mode == "conditional" and s.trials > 1:
            sigma = res.stderr
        echo.update(A=tc.amplitude)
    diff = res.p_hat - ref
    z = diff / sigma if sigma > 0 else (0.0 if diff == 0 else math.copysign(math.inf, diff))
    return {
        "p_hat": res.p_hat, "stderr": res.stderr, "trials": res.trials, "seed": s.seed,
        "reference": ref, "z_score": z, "agreement": abs(z) <= Z_ALARM,
        "result": res.to_json(), "sim": echo,
    }


def cmd_simulate(cfg: RunConfig, args) -> int:
    if args.seed is not None:
        cfg.sim.seed = args.seed
    if args.trials is not None:
        cfg.sim.trials = args.trials
    if args.mode is not None:
        cfg.sim.mode = args.mode
    report = simulate_report(cfg, args.workers)
    report["metadata"] = io.metadata(_config_dict(cfg), not args.no_timestamp, command="simulate")
    _emit(io.dumps_json(report), args, cfg)
    if not report["agreement"]:
        log.error("simulation disagrees with the analytic reference: z = %.2f", report["z_score"])
        return EXIT_FAIL
    return EXIT_OK


# -- verify ------------------------------------------------------------------------

def cmd_verify(cfg: RunConfig, args) -> int:
    results = run_checks()
    failed = [r.name for r in results if not r.passed]
    if args.json:
        _emit(io.dumps_json({"passed": not failed, "failed": failed,
                             "checks": [r.__dict__ for r in results]}), args, cfg)
    else:
        width = max(len(r.name) for r in results)
        lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}" for r in results]
        lines.append(f"{len(results) - len(failed)}/{len(results)} invariants hold")
        if failed:
            lines.append("failed: " + ", ".join(failed))
        _emit("\n".join(lines) + "\n", args, cfg)
    return EXIT_FAIL if failed else EXIT_OK


COMMANDS = {"curves": cmd_curves, "table": cmd_table, "waveform": cmd_waveform,
            "simulate": cmd_simulate, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, help="simulation seed (unsigned 64-bit)")
    common.add_argument("--format", choices=["csv", "json"])
    common.add_argument("--no-timestamp", action="store_true", help="omit generated_at for byte-stable output")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="phasemask", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("curves", parents=[common], help="error probabilities versus duration T")
    p.add_argument("--points", type=int, help="number of T samples")
    sub.add_parser("table", parents=[common], help="pulse positions versus duration at rate R")
    sub.add_parser("waveform", parents=[common], help="plain and phase-masked envelopes")
    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check against the analytic value")
    p.add_argument("--trials", type=int)
    p.add_argument("--mode", choices=["reduced", "conditional", "full-pipeline", "photon-count"])
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    p = sub.add_parser("verify", parents=[common], help="run the embedded invariant suite")
    p.add_argument("--json", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if getattr(args, "points", None) is not None and args.points < 1:
            raise UsageError("--points must be positive")
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise UsageError("--trials must be positive")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError) as exc:
        print(f"phasemask: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
