"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget."""

import time

import numpy as np
import pytest

from artifact.config import load_noise_config, read_fixture
from artifact.game import classical_max, derive_sign_table, probability_matrix, score
from artifact.hom import fit_visibility, hom_curve, poisson_sample
from artifact.jones import CONVENTIONS, verify_setting
from artifact.noise import NoiseParams, closed_form_score, p_from_fidelity, predicted_score, werner
from artifact.quantum import bell_state, fidelity
from artifact.seesaw import REAL_CEILING, OptimizerConfig, optimize
from artifact.spacetime import load_config, verify_all
from artifact.tomography import fidelity_with_error, mle_reconstruct, simulate_counts
from artifact.trials import estimate_f, sample_trials, tabulate, violation_sigma
from artifact.noise import noisy_probability_matrix

PHI = bell_state("Phi+")
SIX_ROOT2 = 6 * np.sqrt(2)


def test_criterion_01_ideal_score(acceptance):
    t0 = time.perf_counter()
    total = score(probability_matrix(PHI, PHI), derive_sign_table()).total
    dt = time.perf_counter() - t0
    ok = abs(total - 8.485281374) < 1e-9 and abs(total - SIX_ROOT2) < 1e-9 and dt < 1
    acceptance(1, ok, f"F = {total:.10f}, {dt:.3f} s")
    assert ok


def test_criterion_02_classical_bound(acceptance):
    t0 = time.perf_counter()
    value = classical_max(derive_sign_table())
    dt = time.perf_counter() - t0
    ok = value == 6 and dt < 1
    acceptance(2, ok, f"classical max = {value}, {dt:.3f} s")
    assert ok


def test_criterion_03_seesaw(acceptance):
    t0 = time.perf_counter()
    cplx = optimize(OptimizerConfig(restarts=20, seed=0), "complex", (2, 2, 2, 2)).best
    real = {}
    for dims in ((2, 2, 2, 2), (3, 3, 3, 3), (4, 4, 4, 4)):
        real[dims] = optimize(OptimizerConfig(restarts=50, seed=0), "real", dims).best
    dt = time.perf_counter() - t0
    best_real = max(real.values())
    ok = cplx >= 8.4852 and 6.0 <= best_real <= REAL_CEILING and dt < 300
    detail = ", ".join(f"{''.join(map(str, d))}: {v:.6f}" for d, v in real.items())
    acceptance(3, ok, f"complex {cplx:.7f}; real best {best_real:.6f} ({detail}); {dt:.0f} s")
    assert ok


def test_criterion_04_noise_prediction(acceptance):
    t0 = time.perf_counter()
    p1, p2 = p_from_fidelity(0.9852), p_from_fidelity(0.9892)
    pipeline = predicted_score(NoiseParams(p1, p2, 0.943)).total
    closed = closed_form_score(p1, p2, 0.943)
    dt = time.perf_counter() - t0
    ok = abs(pipeline - closed) < 1e-6 and 7.7 <= pipeline <= 8.0 and 7.7 <= 7.83 <= 8.0 and dt < 10
    acceptance(4, ok, f"pipeline {pipeline:.9f}, closed form {closed:.9f}, {dt:.2f} s")
    assert ok


def test_criterion_05_statistics(acceptance):
    t0 = time.perf_counter()
    pm = noisy_probability_matrix(NoiseParams.calibrated())
    signs = derive_sign_table()
    totals, per_b = [], []
    for seed in range(100):
        est = estimate_f(tabulate(sample_trials(pm, 77326, seed=seed)), signs)
        totals.append(est.total[1])
        per_b.extend(s for _, s in est.per_b.values())
    vs = violation_sigma((7.8275, 0.0316), 7.66)
    dt = time.perf_counter() - t0
    ok = (
        0.02 <= min(totals) and max(totals) <= 0.06
        and 0.04 <= min(per_b) and max(per_b) <= 0.12
        and abs(vs - 5.30) <= 0.02
        and dt < 300
    )
    acceptance(
        5,
        ok,
        f"sigma_total [{min(totals):.4f}, {max(totals):.4f}], per-b [{min(per_b):.4f}, {max(per_b):.4f}], "
        f"violation {vs:.3f}, {dt:.1f} s",
    )
    assert ok


def test_criterion_06_spacetime(acceptance):
    t0 = time.perf_counter()
    cfg = load_config(read_fixture("paper-spacetime.cfg"))
    reports = verify_all(cfg.graph, cfg.events, cfg.conditions, cfg.k)
    dt = time.perf_counter() - t0
    bad_margin = [f"{r.label} ({r.margin:.2f} vs {r.expected.value:g})" for r in reports if abs(r.deviation) > 1]
    bad_sigma = [r.label for r in reports if abs(r.sigma - r.expected.sigma) > 1]
    ok = len(reports) == 17 and not bad_margin and not bad_sigma and all(r.margin > 0 for r in reports) and dt < 1
    acceptance(
        6,
        ok,
        f"{len(reports)} of 17 rows available; margins off by >1 ns: {', '.join(bad_margin) or 'none'}; "
        f"sigmas off: {', '.join(bad_sigma) or 'none'}; {dt:.3f} s",
    )
    assert ok


def test_criterion_07_probability_matrix(acceptance):
    t0 = time.perf_counter()
    m = probability_matrix(PHI, PHI).matrix
    dt = time.perf_counter() - t0
    hi, lo = (1 + 1 / np.sqrt(2)) / 16, (1 - 1 / np.sqrt(2)) / 16
    allowed = np.array([hi, lo, 0.0])
    nearest = np.min(np.abs(m[..., None] - allowed), axis=-1)
    rounded = {round(hi, 7), round(lo, 7)} == {0.1066942, 0.0183058}
    ok = nearest.max() < 1e-9 and np.allclose(m.sum(axis=1), 1, atol=1e-9) and rounded and dt < 1
    acceptance(7, ok, f"max distance to {{0.1066942, 0.0183058, 0}} (exact forms) {nearest.max():.1e}, {dt:.3f} s")
    assert ok


def test_criterion_08_tomography(acceptance):
    t0 = time.perf_counter()
    rho = werner(0.980267)
    fids = [fidelity(mle_reconstruct(simulate_counts(rho, 100_000, seed=s)).state, PHI) for s in range(50)]
    sigmas = [fidelity_with_error(simulate_counts(rho, n, seed=7), PHI, boots=50, seed=7).sigma for n in (1_000, 10_000, 100_000)]
    ratios = [sigmas[0] / sigmas[1], sigmas[1] / sigmas[2]]
    dt = time.perf_counter() - t0
    lo, hi = np.sqrt(10) / 1.5, np.sqrt(10) * 1.5
    ok = all(abs(f - 0.9852) <= 0.005 for f in fids) and all(lo <= r <= hi for r in ratios) and dt < 300
    acceptance(
        8,
        ok,
        f"fidelity range [{min(fids):.5f}, {max(fids):.5f}], sigma ratios {ratios[0]:.2f}, {ratios[1]:.2f} "
        f"(allowed [{lo:.2f}, {hi:.2f}]), {dt:.0f} s",
    )
    assert ok


def test_criterion_09_hom(acceptance):
    t0 = time.perf_counter()
    delays = np.arange(-600, 601, 20.0)
    curve = hom_curve(delays, 133, 0.943, c0=600)
    clean = fit_visibility(curve, poisson_weights=False).v
    hits = sum(
        abs(fit_visibility(poisson_sample(curve, np.random.default_rng(seed))).v - 0.943) <= 0.02 for seed in range(200)
    )
    dt = time.perf_counter() - t0
    ok = abs(clean - 0.943) < 1e-6 and hits / 200 >= 0.95 and dt < 60
    acceptance(9, ok, f"noiseless error {abs(clean - 0.943):.1e}, noisy within 0.02: {hits}/200, {dt:.1f} s")
    assert ok


def test_criterion_10_waveplates(acceptance):
    t0 = time.perf_counter()
    cfg = load_noise_config(read_fixture("paper-noise.cfg"))
    reports = [(e, verify_setting(e.chain, e.target, CONVENTIONS)) for e in cfg.chains]
    dt = time.perf_counter() - t0
    unmatched = [f"{e.party} {e.index} ({e.target_text}, residual {r.residual:.2f})" for e, r in reports if not r.matched]
    ok = len(reports) == 9 and not unmatched and dt < 1
    acceptance(10, ok, f"{len(reports) - len(unmatched)}/9 rows matched; unmatched: {', '.join(unmatched) or 'none'}; {dt:.3f} s")
    assert ok
