"""Command-line entry point: ``artifact <subcommand> [options]``.

Exit codes:

====  ==============================================
0     success, or every verification passed
2     bad arguments or configuration
3     input/output failure
4     insufficient data (e.g. zero trials)
5     verification failed (score mismatch, margin, unmatched analyser row)
====  ==============================================

Numeric output is fixed-decimal: 9 decimals in JSON and CSV, 7 on the console
for scores, 1 for nanosecond margins. Stochastic subcommands are pure
functions of their arguments and ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import hom, noise, spacetime, tomography, trials
from .config import ConfigError, load_noise_config, read_fixture
from .game import (
    CLASSICAL_BOUND,
    QUANTUM_BOUND,
    REAL_BOUND,
    derive_sign_table,
    probability_matrix,
    score,
)
from .jones import CONVENTIONS, frame_aligned_residual, verify_setting
from .quantum import QuantumState, bell_state, fidelity
from .seesaw import CeilingViolation, OptimizerConfig, optimize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NO_DATA = 4
EXIT_VERIFY = 5

DECIMALS = 9


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _fixed(obj):
    """Round floats recursively so JSON output is byte-stable."""
    if isinstance(obj, float):
        return round(obj, DECIMALS) if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _fixed(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_fixed(v) for v in obj]
    if isinstance(obj, np.generic):
        return _fixed(obj.item())
    return obj


def _dumps(obj) -> str:
    return json.dumps(_fixed(obj), indent=2, sort_keys=False) + "\n"


def _read(path: str | None, fixture: str) -> str:
    if path is None:
        return read_fixture(fixture)
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot read {path}: {exc.strerror}", EXIT_IO) from exc


def _write(out: str | None, name: str, text: str) -> None:
    if out is None:
        return
    try:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CLIError(f"cannot write {name} to {out}: {exc.strerror}", EXIT_IO) from exc


def _dims(text: str) -> tuple[int, int, int, int]:
    try:
        dims = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be four comma-separated integers, got {text!r}") from None
    if len(dims) != 4 or min(dims) < 1:
        raise argparse.ArgumentTypeError(f"dims must be four positive integers, got {text!r}")
    return dims


# --- subcommands ------------------------------------------------------------


def cmd_ideal_score(args) -> int:
    dim = 4
    if args.mixed:
        rho = QuantumState.maximally_mixed(dim)
        rho1 = rho2 = rho
    else:
        rho1 = rho2 = bell_state("Phi+")
    pm = probability_matrix(rho1, rho2)
    result = score(pm, derive_sign_table())
    print(f"bounds (classical | real | complex): {CLASSICAL_BOUND:g} | {REAL_BOUND:g} | {QUANTUM_BOUND:.2f}")
    for b, v in result.per_b.items():
        print(f"F[{b}] = {v:.7f}")
    print(f"total {result.total:.7f}")
    _write(args.out, "ideal_score.json", _dumps(result.to_dict()))
    _write(args.out, "probability_matrix.csv", pm.to_csv())
    return EXIT_OK if abs(result.total - QUANTUM_BOUND) < 1e-9 else EXIT_VERIFY


def cmd_simulate(args) -> int:
    try:
        cfg = load_noise_config(_read(args.config, "paper-noise.cfg"))
    except ConfigError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from exc
    if args.n <= 0:
        raise CLIError("n must be positive: no trials, nothing to estimate", EXIT_NO_DATA)
    pm = noise.noisy_probability_matrix(cfg.noise)
    signs = derive_sign_table()
    experiment = cfg.sampling == "experiment"
    log = trials.sample_trials(
        pm,
        args.n,
        trials.experiment_settings() if experiment else None,
        seed=args.seed,
        discard_unscored=experiment,
        threads=args.threads,
    )
    try:
        est = trials.estimate_f(trials.tabulate(log), signs)
    except trials.InsufficientData as exc:
        raise CLIError(str(exc), EXIT_NO_DATA) from exc
    report = est.to_dict()
    report.update(
        {
            "n_trials": len(log),
            "seed": args.seed,
            "predicted_total": noise.predicted_score(cfg.noise, signs).total,
            "bound": REAL_BOUND,
            "violation_sigma": trials.violation_sigma(est, REAL_BOUND),
        }
    )
    value, sigma = est.total
    print(f"total {value:.7f} +- {sigma:.7f} ({report['violation_sigma']:.2f} sigma above {REAL_BOUND:g})")
    _write(args.out, "trials.csv", log.to_csv())
    _write(args.out, "estimate.json", _dumps(report))
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg = OptimizerConfig(restarts=args.restarts, max_iters=args.max_iters, seed=args.seed)
    try:
        res = optimize(cfg, args.field, args.dims)
    except CeilingViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"{args.field} {','.join(map(str, args.dims))}: best {res.best:.7f} over {args.restarts} restarts")
    _write(args.out, "optimize.json", _dumps(res.to_dict()))
    return EXIT_OK


def cmd_spacetime(args) -> int:
    try:
        cfg = spacetime.load_config(_read(args.config, "paper-spacetime.cfg"))
        k = cfg.k if args.k is None else args.k
        reports = spacetime.verify_all(cfg.graph, cfg.events, cfg.conditions, k)
    except ConfigError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from exc
    print(spacetime.format_table(reports))
    ok = spacetime.all_pass(reports)
    print(f"{sum(r.passed for r in reports)}/{len(reports)} conditions pass")
    _write(args.out, "spacetime.json", _dumps(json.loads(spacetime.reports_json(reports))))
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_tomography(args) -> int:
    if args.counts:
        try:
            counts = tomography.CountsByBasis.from_csv(_read(args.counts, ""))
        except (KeyError, ValueError) as exc:
            raise CLIError(f"bad counts file: {exc}", EXIT_CONFIG) from exc
    else:
        if args.n <= 0:
            raise CLIError("n must be positive", EXIT_NO_DATA)
        rho = noise.werner(noise.p_from_fidelity(args.fidelity))
        counts = tomography.simulate_counts(rho, args.n, args.seed)
    target = bell_state("Phi+")
    try:
        lin = tomography.linear_inversion(counts)
        mle = tomography.mle_reconstruct(counts)
        fid = tomography.fidelity_with_error(counts, target, boots=args.boots, seed=args.seed)
    except tomography.TomographyError as exc:
        raise CLIError(str(exc), EXIT_NO_DATA) from exc
    report = {
        "fidelity": fid.fidelity,
        "sigma": fid.sigma,
        "fidelity_mle_point": fidelity(mle.state, target),
        "linear_nonphysical": lin.nonphysical,
        "mle_converged": mle.converged,
        "resamples_used": fid.used,
        "resamples_excluded": fid.excluded,
    }
    print(f"fidelity to Phi+ {fid.fidelity:.5f} +- {fid.sigma:.5f}")
    _write(args.out, "counts.csv", counts.to_csv())
    _write(args.out, "state.json", mle.to_json() + "\n")
    _write(args.out, "tomography.json", _dumps(report))
    return EXIT_OK


def cmd_hom(args) -> int:
    delays = np.arange(-args.span, args.span + args.step / 2, args.step)
    try:
        curve = hom.hom_curve(delays, args.tau_c, args.v, args.c0)
    except ValueError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from exc
    data = hom.poisson_sample(curve, np.random.default_rng(args.seed)) if args.poisson else curve
    try:
        fit = hom.fit_visibility(data, poisson_weights=args.poisson)
    except hom.HOMFitError as exc:
        raise CLIError(str(exc), EXIT_NO_DATA) from exc
    minimum = float(data.coincidences[np.argmin(np.abs(data.delays))])
    print(f"dip minimum {minimum:.6f} at 0 ps (baseline {args.c0:g})")
    print(f"fitted v = {fit.v:.6f} +- {fit.sigma_v:.6f}, tau_c = {fit.tau_c:.3f} ps")
    _write(args.out, "hom.csv", data.to_csv())
    _write(args.out, "hom_fit.json", _dumps(fit.__dict__ | {"dip_minimum": minimum}))
    return EXIT_OK


def cmd_waveplates(args) -> int:
    try:
        cfg = load_noise_config(_read(args.config, "paper-noise.cfg"))
    except ConfigError as exc:
        raise CLIError(str(exc), EXIT_CONFIG) from exc
    if not cfg.chains:
        raise CLIError("configuration has no [chain ...] sections", EXIT_NO_DATA)
    rows, unmatched = [], []
    for e in cfg.chains:
        r = verify_setting(e.chain, e.target, CONVENTIONS)
        rows.append(
            {
                "party": e.party,
                "index": e.index,
                "target": e.target_text,
                "matched": r.matched,
                "residual": r.residual,
                "convention": str(r.convention) if r.matched else None,
                "outcome_sign": r.sign if r.matched else None,
            }
        )
        status = f"match ({r.convention}, sign {r.sign:+d})" if r.matched else "NO MATCH"
        print(f"{e.party:<7}{e.index:>2}  {e.target_text:<5} residual {r.residual:.2e}  {status}")
        if not r.matched:
            unmatched.append(e)
    diagnostics = {}
    for party in sorted({e.party for e in unmatched}):
        entries = [e for e in cfg.chains if e.party == party]
        res, _ = frame_aligned_residual([e.chain for e in entries], [e.target for e in entries])
        diagnostics[party] = res
        print(f"{party}: residual after best common frame rotation {res:.2e}")
    _write(args.out, "waveplates.json", _dumps({"rows": rows, "frame_aligned_residual": diagnostics}))
    return EXIT_OK if not unmatched else EXIT_VERIFY


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True):
        sp.add_argument("--out", help="directory for report files (created if missing)")
        if seed:
            sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; never changes results")

    sp = sub.add_parser("ideal-score", help="score of two exact EPR pairs and the reference bounds")
    sp.add_argument("--mixed", action="store_true", help="use maximally mixed sources instead")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_ideal_score)

    sp = sub.add_parser("simulate", help="seeded Monte Carlo experiment with the calibrated noise model")
    sp.add_argument("--config", help="noise configuration (default: shipped paper-noise.cfg)")
    sp.add_argument("--n", type=int, default=77326, help="number of trials")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("optimize", help="see-saw search for the best strategy")
    sp.add_argument("--field", choices=("complex", "real"), default="complex")
    sp.add_argument("--dims", type=_dims, default=(2, 2, 2, 2), help="d_A,d_B1,d_B2,d_C (default 2,2,2,2)")
    sp.add_argument("--restarts", type=int, default=20)
    sp.add_argument("--max-iters", type=int, default=500)
    common(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("spacetime", help="space-like separation margins")
    sp.add_argument("--config", help="space-time configuration (default: shipped paper-spacetime.cfg)")
    sp.add_argument("--k", type=float, help="pass threshold in sigmas (default from config, else 3)")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_spacetime)

    sp = sub.add_parser("tomography", help="simulate and reconstruct a two-qubit state")
    sp.add_argument("--counts", help="CSV of counts per basis (otherwise simulated)")
    sp.add_argument("--fidelity", type=float, default=0.9852, help="Werner fidelity of the simulated source")
    sp.add_argument("--n", type=int, default=100000, help="counts per basis")
    sp.add_argument("--boots", type=int, default=100)
    common(sp)
    sp.set_defaults(func=cmd_tomography)

    sp = sub.add_parser("hom", help="Hong-Ou-Mandel dip series and visibility fit")
    sp.add_argument("--v", type=float, default=0.943)
    sp.add_argument("--tau-c", type=float, default=133.0, help="coherence time (ps)")
    sp.add_argument("--c0", type=float, default=1.0, help="baseline coincidences")
    sp.add_argument("--span", type=float, default=600.0, help="delay range +-span (ps)")
    sp.add_argument("--step", type=float, default=20.0, help="delay step (ps)")
    sp.add_argument("--poisson", action="store_true", help="add Poisson counting noise")
    common(sp)
    sp.set_defaults(func=cmd_hom)

    sp = sub.add_parser("waveplates", help="check analyser chains against their target bases")
    sp.add_argument("--config", help="configuration with [chain ...] sections (default: paper-noise.cfg)")
    common(sp, seed=False)
    sp.set_defaults(func=cmd_waveplates)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
