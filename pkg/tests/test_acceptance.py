"""Acceptance criteria 1-10, one PASS/FAIL line each (see the summary section)."""

import numpy as np
import pytest

from subradiance.dmstates import coupling_strengths, dm_basis, dm_state
from subradiance.dynamics import (RUBIDIUM_GAMMA, beat_frequencies, dominant_beats, evolve_dm,
                                  oracle_integrate, weightings)
from subradiance.kernel import build_coupling_matrix, kernel_F
from subradiance.lattice import REFERENCE_LABELING, FieldConfig, build_lattice
from subradiance.spectrum import decompose, propagate_bare

SHAPES = {1: (1, 1, 1), 2: (1, 1, 2), 8: (2, 2, 2), 16: (2, 2, 4), 27: (3, 3, 3), 90: (3, 3, 10)}
SPACINGS = (0.25, 0.6, 2.0)


def test_criterion_01_oracle_equivalence(preset, rng, verdict):
    times = np.linspace(0.0, 50.0, 501)
    worst = 0.0
    for n in (1, 2, 8, 16):
        for spacing in SPACINGS:
            s = preset(*SHAPES[n], spacing)
            random = rng.normal(size=(n, 4)) + 1j * rng.normal(size=(n, 4))
            starts = np.concatenate([dm_basis(s.geom, s.field), random / np.linalg.norm(random, axis=0)], axis=1)
            oracle = oracle_integrate(s.coupling, starts, times)
            for k in range(starts.shape[1]):
                spectral = propagate_bare(s.dec, starts[:, k], times)
                worst = max(worst, np.abs(spectral - oracle[:, :, k]).max())
    verdict("1 oracle equivalence", worst <= 1e-8, f"max |spectral - RK4| = {worst:.2e} (tol 1e-8)")


def test_criterion_02_dm_orthonormality(verdict):
    worst = 0.0
    for n in (1, 8, 16, 27, 90):
        for labeling in ("xyz", REFERENCE_LABELING):
            geom = build_lattice(*SHAPES[n], 0.25, labeling)
            basis = dm_basis(geom)
            eye = np.eye(n)
            worst = max(worst, np.abs(basis.conj().T @ basis - eye).max(),
                        np.abs(basis @ basis.conj().T - eye).max())
            states = np.array([dm_state(m, geom).coefficients for m in range(1, n + 1)])
            worst = max(worst, np.abs(states.conj() @ states.T - eye).max())
    verdict("2 DM unitarity", worst <= 1e-12, f"max deviation from identity = {worst:.2e} (tol 1e-12)")


def test_criterion_03_kernel_analytics(rng, verdict):
    c = np.concatenate([[-1.0, 0.0, 1.0], rng.uniform(-1, 1, 200)])
    f_err = np.abs(kernel_F(np.zeros_like(c), c) - 1.0).max()
    trace_err = strength_err = 0.0
    for n in (1, 2, 8, 16, 27, 90):
        for spacing in (0.1, 0.25, 0.6, 2.0):
            geom = build_lattice(*SHAPES[n], spacing, REFERENCE_LABELING)
            coupling = build_coupling_matrix(geom)
            values = decompose(coupling).eigenvalues
            trace_err = max(trace_err, abs(values.sum() + n / 2) / (n / 2))
            strength_err = max(strength_err, abs(coupling_strengths(coupling, geom).sum() - n) / n)
    ok = f_err == 0.0 and trace_err <= 1e-10 and strength_err <= 1e-10
    verdict("3 kernel analytics", ok,
            f"|F(0,c)-1| = {f_err:.1e}, trace rel {trace_err:.1e}, sum Gamma_mm rel {strength_err:.1e}")


def test_criterion_04_initial_slope(preset, verdict):
    h = 1e-3
    worst = 0.0
    for spacing in (0.25, 0.6):
        s = preset(2, 2, 4, spacing)
        strengths = coupling_strengths(s.coupling, s.geom, s.field)
        for m in range(1, 17):
            f = evolve_dm(m, s.dec, s.geom, s.field, h * np.arange(5)).fluorescence
            slope = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
            worst = max(worst, abs(-slope - strengths[m - 1]) / strengths[m - 1])
    verdict("4 t=0 slope identity", worst <= 1e-6, f"max relative error = {worst:.2e} (tol 1e-6)")


def test_criterion_05_subspace_weightings(preset, verdict):
    s = preset(2, 2, 4, 0.25)
    cases = {(3, 5): (1, 2, 95.8), (2, 6): (4, 9, 99.9), (11, 13): (8, 11, 95.9)}
    results = []
    ok = True
    for (m1, m2), (n1, n2, target) in cases.items():
        totals = [weightings(m, s.dec, s.geom, s.field).normalized_weights[[n1 - 1, n2 - 1]].sum() * 100
                  for m in (m1, m2)]
        total = float(np.mean(totals))
        ok &= all(abs(t - target) <= 1.0 for t in totals)
        results.append(f"m=({m1},{m2}) on n=({n1},{n2}) {total:.2f}% vs {target}%")
    verdict("5 subspace weightings", ok, "; ".join(results))


def test_criterion_06a_lowest_rate_rectangular_small(preset, verdict):
    s = preset(2, 2, 4, 0.25)
    rates = [evolve_dm(m, s.dec, s.geom, s.field) for m in (3, 5)]
    ok = all(r.effective_decay_rate is not None and 3.5e-3 <= r.effective_decay_rate <= 6.5e-3
             for r in rates)
    detail = ", ".join(f"m={r.m}: {r.effective_decay_rate:.4e} (fit {r.fit_decay_rate:.4e})" for r in rates)
    verdict("6a lowest rate 2x2x4 0.25", ok, detail + " Gamma, target [3.5e-3, 6.5e-3]")


def test_criterion_06b_lowest_rate_rectangular_wide(preset, verdict):
    s = preset(2, 2, 4, 0.6)
    r = evolve_dm(4, s.dec, s.geom, s.field)
    ok = r.effective_decay_rate is not None and 5e-2 <= r.effective_decay_rate <= 9e-2
    verdict("6b lowest rate 2x2x4 0.6", ok,
            f"m=4: {r.effective_decay_rate:.4e} (fit {r.fit_decay_rate:.4e}) Gamma, target [5e-2, 9e-2]")


def _beats(s, m):
    return dominant_beats(beat_frequencies(weightings(m, s.dec, s.geom, s.field), s.dec))


def test_criterion_07_beats(preset, verdict):
    rect = _beats(preset(2, 2, 4, 0.25), 3)
    cube8 = _beats(preset(2, 2, 2, 0.25), 1)
    cube27 = _beats(preset(3, 3, 3, 0.25), 4)
    ok_rect = len(rect) == 1 and abs(rect[0].frequency - 0.2) <= 0.02
    ok_cube8 = len(cube8) >= 1 and abs(cube8[0].frequency - 0.26) <= 0.026
    ok_cube27 = 2 <= len(cube27) <= 3
    detail = (f"2x2x4 m=3 {[round(b.frequency, 4) for b in rect]}; "
              f"2x2x2 m=1 {[round(b.frequency, 4) for b in cube8]}; "
              f"3x3x3 m=4 {len(cube27)} beats {[round(b.frequency, 4) for b in cube27]}")
    verdict("7 beat frequencies", ok_rect and ok_cube8 and ok_cube27, detail)


def test_criterion_08a_lifetime_cube(preset, verdict):
    s = preset(3, 3, 3, 0.25)
    lifetime = evolve_dm(4, s.dec, s.geom, s.field).lifetime(RUBIDIUM_GAMMA)
    ok = 13e-6 <= lifetime <= 52e-6
    verdict("8a lifetime 3x3x3 m=4", ok, f"{lifetime * 1e6:.2f} us, target [13, 52] us")


def test_criterion_08b_lifetime_long_array(preset, verdict):
    s = preset(3, 3, 10, 0.25)
    lifetime = evolve_dm(22, s.dec, s.geom, s.field).lifetime(RUBIDIUM_GAMMA)
    ok = 1e-3 <= lifetime <= 4e-3
    verdict("8b lifetime 3x3x10 m=22", ok, f"{lifetime * 1e3:.3f} ms, target [1, 4] ms")


def test_criterion_09_sweep_structure(verdict):
    field = FieldConfig()

    def strengths(spacing):
        geom = build_lattice(2, 2, 4, spacing, REFERENCE_LABELING)
        return coupling_strengths(build_coupling_matrix(geom, field), geom, field)

    grid = np.round(np.arange(0.45, 0.7501, 0.05), 10)
    m4 = np.array([strengths(d)[3] for d in grid])
    inner = range(1, len(grid) - 1)
    minima = [float(grid[i]) for i in inner if 0.5 <= grid[i] <= 0.7 and m4[i] <= m4[i - 1] and m4[i] <= m4[i + 1]]
    far = strengths(5.0)
    ok = bool(minima) and np.all((far >= 0.5) & (far <= 1.5))
    verdict("9 sweep structure", ok,
            f"m=4 local minimum at {minima} lambda (Gamma_44 = {np.round(m4, 3).tolist()}); "
            f"Gamma_mm at 5 lambda in [{far.min():.3f}, {far.max():.3f}]")


def test_criterion_10_degeneracy_and_monotonicity(preset, verdict):
    s = preset(2, 2, 4, 0.25)
    times = np.concatenate([np.linspace(0, 50, 501), np.geomspace(50.1, 3000, 500)])
    a = evolve_dm(3, s.dec, s.geom, s.field, times).fluorescence
    b = evolve_dm(5, s.dec, s.geom, s.field, times).fluorescence
    degeneracy = np.abs(a - b).max()

    worst_rise = 0.0
    min_rate = np.inf
    for n in (1, 2, 8, 16, 27):
        for spacing in SPACINGS:
            s = preset(*SHAPES[n], spacing)
            min_rate = min(min_rate, s.dec.decay_constants.min())
            for m in range(1, n + 1):
                result = evolve_dm(m, s.dec, s.geom, s.field)
                c = propagate_bare(s.dec, dm_state(m, s.geom, s.field).coefficients, result.times)
                population = np.sum(np.abs(c) ** 2, axis=1)
                worst_rise = max(worst_rise, np.diff(population).max(initial=0.0))
    ok = degeneracy <= 1e-10 and worst_rise <= 1e-12 and min_rate >= -1e-10
    verdict("10 degeneracy/monotonicity", ok,
            f"max |f3 - f5| = {degeneracy:.1e}, max population rise = {worst_rise:.1e}, "
            f"min -Re 2lambda = {min_rate:.3e}")
