"""Embedded invariant suite behind ``phasemask verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import attack_sim, error_analysis as ea, keystream, symplectic as sp, waveform as wf


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _random_unitary(M: int, rng: np.random.Generator) -> sp.ComplexUnitary:
    Z = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
    Q, R = np.linalg.qr(Z)
    return sp.ComplexUnitary(Q * (np.diag(R) / np.abs(np.diag(R))))


def check_spectrum_symmetry():
    worst = 0.0
    for N in (2, 3, 7, 97):
        j = np.arange(1, 5 * N)
        for ell in (1, N):
            d_pos = wf.window_coefficients(N, ell, j)
            d_neg = wf.window_coefficients(N, ell, -j)
            worst = max(worst, float(np.max(np.abs(np.abs(d_pos) - np.abs(d_neg)))))
    return worst <= 1e-14, f"max | |d_j| - |d_-j| | = {worst:.2e}"


def check_spectrum_dc():
    errs = [abs(complex(wf.window_coefficients(N, ell, [0])[0]) - 1 / N) for N in (1, 2, 5, 97) for ell in (1, N)]
    return max(errs) <= 1e-15, f"max |d_0 - 1/N| = {max(errs):.2e}"


def check_shift_covariance():
    N = 5
    grid = wf.ModeGrid.main_lobe(1e-7, 400 * N, N)
    a = wf.build_ppm_signal(wf.PpmConfig(N, 2.0, 1), grid)
    ok = all(wf.time_shift_check(a, wf.build_ppm_signal(wf.PpmConfig(N, 2.0, ell), grid), 1, ell, N)
             for ell in range(1, N + 1))
    return ok, "alpha^ell = alpha^1 exp(i 2 pi j (ell-1)/N) on N | j_c grid"


def check_D_symmetric():
    worst = 0.0
    for N in (2, 8, 97):
        grid = wf.ModeGrid.main_lobe(1e-7, 1000 * N, N)
        worst = max(worst, abs(wf.compute_D(wf.build_ppm_signal(wf.PpmConfig(N, 1.0), grid)) - 1))
    return worst <= 1e-12, f"max |D - 1| = {worst:.2e}"


def check_D_asymmetric():
    N, jc = 4, 50
    grid = wf.ModeGrid.from_offsets(1.0, jc, [0, 1])
    D = wf.compute_D(wf.build_ppm_signal(wf.PpmConfig(N, 1.0), grid))
    d0, d1 = (abs(x) ** 2 for x in wf.window_coefficients(N, 1, [0, 1]))
    expect = (d0 * jc + d1 * (jc + 1)) / ((d0 + d1) * jc)
    return D > 1 and abs(D - expect) <= 1e-14, f"D = {D!r}"


def check_symplectic_suite():
    rng = np.random.default_rng(20240601)
    w = 1.0 + np.arange(6, dtype=float)
    A = sp.coherent_covariance(w)
    Om = sp.omega_matrix(w)
    Om_inv = np.linalg.inv(Om)
    worst = 0.0
    for _ in range(20):
        U1, U2 = _random_unitary(6, rng), _random_unitary(6, rng)
        L1 = sp.unitary_to_symplectic(U1, w).entries
        L2 = sp.unitary_to_symplectic(U2, w).entries
        L12 = sp.unitary_to_symplectic(U1 @ U2, w).entries
        O = Om_inv @ L1 @ Om
        if not sp.is_symplectic(L1, 1e-10):
            return False, "is_symplectic failed"
        worst = max(worst, np.max(np.abs(L1 @ A @ L1.T - A)), np.max(np.abs(O @ O.T - np.eye(12))),
                    np.max(np.abs(L12 - L1 @ L2)))
    return worst <= 1e-10, f"worst deviation {worst:.2e}"


def check_commuting_square():
    rng = np.random.default_rng(7)
    grid = wf.ModeGrid.main_lobe(2 * math.pi, 20, 4)
    a = wf.build_ppm_signal(wf.PpmConfig(4, 3.0, 2), grid)
    U = _random_unitary(grid.M, rng)
    path1 = sp.amplitudes_to_mean(sp.apply_encryption(U, a).amps, grid)
    path2 = sp.transform_gaussian(sp.unitary_to_symplectic(U, grid), sp.GaussianParams.coherent(a)).mean
    err = float(np.max(np.abs(path1 - path2)))
    return err <= 1e-10, f"max mean mismatch {err:.2e}"


def check_keystream_vector():
    got = keystream.derive_running_key(b"\x00", 4, 9700, 0).ks
    return got == (1314, 6693, 9378, 946), f"ks = {got}"


def check_pbc_reference_value():
    v = ea.bob_photon_count_error_rates(45e6, 15e6, 0.36e-6)
    return abs(v / 4.52e-3 - 1) <= 5e-3, f"P_B^c(0.36 us) = {v:.4e}"


def check_pbc_peak():
    T = ea.photon_count_peak_duration(45e6, 15e6)
    Ts = np.linspace(0.001e-6, 0.2e-6, 2000)
    vals = [ea.bob_photon_count_error_rates(45e6, 15e6, t) for t in Ts]
    T_grid = float(Ts[int(np.argmax(vals))])
    ok = round(T * 1e6, 3) == 0.031 and abs(T_grid - T) <= Ts[1] - Ts[0]
    return ok, f"peak at {T * 1e6:.4f} us (grid {T_grid * 1e6:.4f} us)"


def check_bob_optimal():
    v = ea.bob_optimal_error(2, math.log(2))
    expect = 0.25 * (math.sqrt(1.5) - math.sqrt(0.5)) ** 2
    return abs(v - expect) <= 1e-12 and abs(ea.bob_optimal_error(2, 0) - 0.5) <= 1e-15, f"P_B^o(2, ln 2) = {v!r}"


def check_eve_closed_form():
    from scipy.special import ndtr
    err = max(abs(ea.eve_error_quadrature(2, A) - ndtr(-A / math.sqrt(2))) for A in (0, 0.5, 1, 2, 4))
    err0 = max(abs(ea.eve_error_quadrature(N, 0) - (1 - 1 / N)) for N in (2, 3, 8, 64, 10**6))
    return err <= 1e-8 and err0 <= 1e-9, f"N=2 err {err:.1e}, A=0 err {err0:.1e}"


def check_bound_ordering():
    R, C = 45e6, 15e6
    for T in (0.05e-6, 0.1e-6, 0.2e-6, 0.3e-6, 0.5e-6):
        r = ea.SystemRates(R, C, T)
        n, A = r.N_real, r.A
        q = ea.eve_error_quadrature(n, A)
        for f in (0.7, 1.0, 1.5, 1.9):
            lb = ea.eve_error_lower_bound(n, A, f)
            if not 0 <= lb <= q + 1e-9 <= 1 - 1 / n + 2e-9:
                return False, f"ordering violated at T={T}, f={f}"
    return True, "0 <= bound <= P_E <= 1 - 1/N"


def check_exponent():
    v = ea.exponent_bound(45e6, 15e6)
    return abs(v - 8.038475772933681e6) <= 1e-3, f"E_s >= {v:.6e} 1/s"


def check_scale_invariance():
    base = ea.SystemRates(45e6, 15e6, 0.2e-6)
    t0 = ea.error_triple(base)
    worst = max(abs(x - y) for g in (0.5, 2, 10) for x, y in zip(t0, ea.error_triple(base.scaled(g))))
    return worst <= 1e-12, f"max difference {worst:.1e}"


def check_waveform_rate():
    grid = wf.ModeGrid.from_bandwidth(200e12, 10e6, 1e9)
    R = math.log(97) / grid.T
    return grid.M == 100 and round(R / 1e6, 1) == 45.7, f"M = {grid.M}, R = {R / 1e6:.2f} Mebit/s"


def check_mc_smoke():
    cfg = attack_sim.TrialConfig(20000, 11, 8, A=2.0)
    r = attack_sim.simulate_eve_reduced(cfg)
    q = ea.eve_error_quadrature(8, 2.0)
    z = (r.p_hat - q) / math.sqrt(q * (1 - q) / cfg.trials)
    return abs(z) <= 4, f"z = {z:+.2f}"


CHECKS = {
    "spectrum_symmetry": check_spectrum_symmetry,
    "spectrum_dc": check_spectrum_dc,
    "shift_covariance": check_shift_covariance,
    "D_symmetric_band": check_D_symmetric,
    "D_asymmetric_band": check_D_asymmetric,
    "symplectic_isomorphism": check_symplectic_suite,
    "commuting_square": check_commuting_square,
    "keystream_vector": check_keystream_vector,
    "bob_count_reference_value": check_pbc_reference_value,
    "bob_count_peak": check_pbc_peak,
    "bob_optimal_value": check_bob_optimal,
    "eve_closed_forms": check_eve_closed_form,
    "bound_ordering": check_bound_ordering,
    "exponent_value": check_exponent,
    "scale_invariance": check_scale_invariance,
    "waveform_rate": check_waveform_rate,
    "monte_carlo_smoke": check_mc_smoke,
}


def run_checks(names=None) -> list[CheckResult]:
    results = []
    for name, fn in CHECKS.items():
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash counts as a failure of that invariant
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return results
