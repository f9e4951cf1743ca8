"""Time evolution of DM states and the observables extracted from it.

A DM state ``m`` evolves as ``d_m(t) = sum_n v_n(m) exp(lambda_n t) w_n(m)``
where ``v_n(m)`` projects eigenmode ``n`` onto the DM state and ``w_n(m)``
expands the DM state in eigenmodes.  The fluorescence signal is
``|d_m(t)|**2``.

Times are in units of 1/Gamma and rates in units of Gamma throughout.
Eigenmodes sharing one eigenvalue are merged before dominance, decay and
beat analysis, because the split of weight inside a degenerate eigenspace
is a basis choice while the summed amplitude is not.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .dmstates import dm_state
from .errors import AmbiguousDominanceError, NumericFailureError
from .kernel import CouplingMatrix
from .lattice import FieldConfig, LatticeGeometry
from .spectrum import SpectralDecomposition

logger = logging.getLogger(__name__)

DOMINANCE_THRESHOLD = 0.05
RUBIDIUM_LIFETIME_S = 26e-9
RUBIDIUM_GAMMA = 1.0 / RUBIDIUM_LIFETIME_S
MAX_GRID_POINTS = 10_000
FIT_AGREEMENT = 0.10


@dataclass(frozen=True)
class WeightingTable:
    m: int
    v: np.ndarray
    w: np.ndarray
    eigenvalues: np.ndarray = field(repr=False)
    clusters: tuple = field(repr=False, default=())

    @property
    def amplitudes(self) -> np.ndarray:
        """``v_n w_n``: the coefficient of ``exp(lambda_n t)`` in ``d_m(t)``."""
        return self.v * self.w

    @property
    def normalized_weights(self) -> np.ndarray:
        raw = np.abs(self.amplitudes) ** 2
        return raw / raw.sum()

    def modes(self) -> list["Mode"]:
        """Distinct eigenvalues with their merged amplitude and weight."""
        groups = self.clusters or tuple((i,) for i in range(self.v.size))
        amps = self.amplitudes
        merged = [amps[list(g)].sum() for g in groups]
        total = sum(abs(a) ** 2 for a in merged)
        return [Mode(tuple(g), complex(self.eigenvalues[g[0]]), complex(a), abs(a) ** 2 / total)
                for g, a in zip(groups, merged)]

    def dominant_modes(self, threshold: float = DOMINANCE_THRESHOLD) -> list["Mode"]:
        return [mode for mode in self.modes() if mode.weight >= threshold]

    def to_csv(self, path) -> None:
        weights = self.normalized_weights
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "decay_constant", "shift", "weight"])
            for n, (lam, wt) in enumerate(zip(self.eigenvalues, weights), start=1):
                writer.writerow([n, format(-2 * lam.real, ".17g"), format(2 * lam.imag, ".17g"),
                                 format(wt, ".17g")])


@dataclass(frozen=True)
class Mode:
    """One distinct eigenvalue (possibly several degenerate modes)."""

    indices: tuple
    eigenvalue: complex
    amplitude: complex
    weight: float

    @property
    def label(self) -> tuple:
        """1-based mode numbers as plotted against the sorted spectrum."""
        return tuple(i + 1 for i in self.indices)

    @property
    def decay_constant(self) -> float:
        return -2.0 * self.eigenvalue.real


@dataclass(frozen=True)
class Beat:
    frequency: float
    modes: tuple
    weight_product: float
    strength: float


@dataclass(frozen=True)
class DecayEstimate:
    rate: float
    mode: tuple
    fit_rate: float | None

    @property
    def discrepancy(self) -> float | None:
        if self.fit_rate is None:
            return None
        return abs(self.fit_rate - self.rate) / self.rate

    @property
    def consistent(self) -> bool:
        return self.fit_rate is not None and self.discrepancy <= FIT_AGREEMENT


@dataclass
class EvolutionResult:
    m: int
    times: np.ndarray
    amplitudes: np.ndarray
    effective_decay_rate: float | None = None
    fit_decay_rate: float | None = None
    beat_frequencies: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def fluorescence(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def lifetime(self, gamma_physical: float = RUBIDIUM_GAMMA) -> float | None:
        """Lifetime in seconds for a single-atom decay rate ``gamma_physical`` (1/s)."""
        if not self.effective_decay_rate:
            return None
        return 1.0 / (self.effective_decay_rate * gamma_physical)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t", "re", "im", "population", "natural_decay"])
            for t, d, p in zip(self.times, self.amplitudes, self.fluorescence):
                writer.writerow([format(t, ".17g"), format(d.real, ".17g"), format(d.imag, ".17g"),
                                 format(p, ".17g"), format(np.exp(-t), ".17g")])


def _check_dims(dec: SpectralDecomposition, geom: LatticeGeometry):
    if dec.n != geom.n:
        raise ValueError(f"decomposition has {dec.n} modes but geometry has {geom.n} atoms")


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("time grid must be a non-empty 1-D array")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be non-negative and strictly increasing")
    return times


def weightings(m: int, dec: SpectralDecomposition, geom: LatticeGeometry,
               field: FieldConfig | None = None) -> WeightingTable:
    _check_dims(dec, geom)
    a = dm_state(m, geom, field).coefficients
    v = a.conj() @ dec.right_vectors
    w = dec.inverse_vectors @ a
    clusters = tuple(tuple(g) for g in dec.clusters())
    return WeightingTable(int(m), v, w, dec.eigenvalues, clusters)


def weighting_matrix(dec: SpectralDecomposition, geom: LatticeGeometry,
                     field: FieldConfig | None = None) -> np.ndarray:
    """Row ``m - 1`` holds the normalized weights of DM state ``m`` on every mode."""
    return np.array([weightings(m, dec, geom, field).normalized_weights for m in range(1, geom.n + 1)])


def dm_amplitude(weights: WeightingTable, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    return np.exp(np.multiply.outer(times, weights.eigenvalues)) @ weights.amplitudes


def default_time_grid(slowest_rate: float, beat: float | None = None, n: int = 5001,
                      t_min: float = 1e-2) -> np.ndarray:
    """``0`` followed by log-spaced points up to ten lifetimes of the slowest mode.

    When ``beat`` (the slowest beat note) is given the window is stretched to
    cover twenty beat periods, so a late-time fit averages over the beating.
    The window never exceeds 600 lifetimes, keeping ``|d|^2`` above underflow.
    """
    n = min(int(n), MAX_GRID_POINTS)
    t_max = 10.0 / slowest_rate
    if beat:
        t_max = min(max(t_max, 40.0 * np.pi / beat), 600.0 / slowest_rate)
    if t_max <= t_min:
        return np.linspace(0.0, t_max, n)
    return np.concatenate([[0.0], np.geomspace(t_min, t_max, n - 1)])


def late_time_fit(times, fluorescence, start: float | None = None) -> float:
    """Decay rate from a least-squares fit of ``log |d|^2`` over the late window.

    The window is ``[start, t_end]`` with ``start`` defaulting to ``t_end / 2``.
    """
    times = np.asarray(times, dtype=float)
    fluorescence = np.asarray(fluorescence, dtype=float)
    start = times[-1] / 2 if start is None else start
    keep = (times >= start) & (fluorescence > 0)
    if keep.sum() < 3:
        raise ValueError("fewer than three usable points in the fit window")
    slope = np.polyfit(times[keep], np.log(fluorescence[keep]), 1)[0]
    return float(-slope)


def effective_decay_rate(result: EvolutionResult, weights: WeightingTable,
                         threshold: float = DOMINANCE_THRESHOLD) -> DecayEstimate:
    """Decay constant of the slowest eigenmode carrying at least ``threshold`` weight.

    A late-time log-slope fit of ``result`` is reported alongside when the
    window covers at least three e-foldings of that mode.
    """
    dominant = weights.dominant_modes(threshold)
    if not dominant:
        raise AmbiguousDominanceError(f"no eigenmode of DM state {weights.m} reaches weight {threshold}")
    slowest = min(dominant, key=lambda mode: mode.decay_constant)
    rate = slowest.decay_constant
    fit = None
    if rate > 0 and result.times[-1] * rate >= 3.0:
        fit = late_time_fit(result.times, result.fluorescence)
    return DecayEstimate(rate, slowest.label, fit)


def beat_frequencies(weights: WeightingTable, dec: SpectralDecomposition | None = None,
                     threshold: float = DOMINANCE_THRESHOLD) -> list[Beat]:
    """Fluorescence beat notes between every pair of dominant modes.

    Each beat has angular frequency ``|Im lambda_i - Im lambda_j|`` (units of
    Gamma).  ``strength`` is the time-integrated envelope of the beat term
    ``4 |A_i A_j| / (gamma_i + gamma_j)``, i.e. its line weight in the
    fluorescence spectrum.  Sorted by descending weight product.
    """
    eigen = weights.eigenvalues if dec is None else dec.eigenvalues
    if eigen.size != weights.v.size:
        raise ValueError("weighting table and decomposition sizes differ")
    dominant = weights.dominant_modes(threshold)
    beats = []
    for a, b in combinations(dominant, 2):
        rate_sum = a.decay_constant + b.decay_constant
        strength = 4.0 * abs(a.amplitude * b.amplitude) / rate_sum if rate_sum > 0 else np.inf
        beats.append(Beat(abs(a.eigenvalue.imag - b.eigenvalue.imag), (a.label, b.label),
                          a.weight * b.weight, strength))
    beats.sort(key=lambda beat: (-beat.weight_product, beat.frequency))
    return beats


def dominant_beats(beats: list[Beat], threshold: float = DOMINANCE_THRESHOLD) -> list[Beat]:
    """Beats whose spectral line weight is at least ``threshold`` of the strongest."""
    if not beats:
        return []
    top = max(beat.strength for beat in beats)
    return [beat for beat in beats if beat.strength >= threshold * top]


def spectral_peaks(times, fluorescence, count: int = 3) -> np.ndarray:
    """Angular frequencies of the strongest peaks of the mean-subtracted fluorescence.

    Requires a uniform time grid.  A Hann window suppresses leakage from the
    decaying envelope; bins adjacent to zero frequency are skipped.
    """
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if times.size < 8 or np.ptp(steps) > 1e-9 * steps.mean():
        raise ValueError("spectral_peaks needs a uniform grid of at least 8 points")
    signal = np.asarray(fluorescence, dtype=float)
    signal = (signal - signal.mean()) * np.hanning(signal.size)
    power = np.abs(np.fft.rfft(signal)) ** 2
    omega = 2 * np.pi * np.fft.rfftfreq(signal.size, steps.mean())
    interior = np.arange(2, power.size - 1)
    is_peak = (power[interior] > power[interior - 1]) & (power[interior] >= power[interior + 1])
    peaks = interior[is_peak]
    peaks = peaks[np.argsort(-power[peaks])][:count]
    return omega[peaks]


def evolve_dm(m: int, dec: SpectralDecomposition, geom: LatticeGeometry,
              field: FieldConfig | None = None, times=None,
              threshold: float = DOMINANCE_THRESHOLD) -> EvolutionResult:
    """Evolve DM state ``m`` and extract its decay constant and beat notes.

    Without ``times`` a log grid reaching ten lifetimes of the slowest
    dominant mode is used.  An ambiguous dominance is recorded in
    ``warnings`` instead of raised.
    """
    weights = weightings(m, dec, geom, field)
    beats = beat_frequencies(weights, dec, threshold)
    if times is None:
        dominant = weights.dominant_modes(threshold) or weights.modes()
        slowest = max(min(mode.decay_constant for mode in dominant), 1e-12)
        notes = [beat.frequency for beat in beats if beat.frequency > 1e-9]
        times = default_time_grid(slowest, min(notes) if notes else None)
    times = _check_times(times)
    result = EvolutionResult(int(m), times, dm_amplitude(weights, times))
    try:
        estimate = effective_decay_rate(result, weights, threshold)
    except AmbiguousDominanceError as exc:
        result.warnings.append(str(exc))
    else:
        result.effective_decay_rate = estimate.rate
        result.fit_decay_rate = estimate.fit_rate
        if estimate.fit_rate is not None and not estimate.consistent:
            msg = (f"late-time fit {estimate.fit_rate:.4g} differs from spectral rate "
                   f"{estimate.rate:.4g} by more than {FIT_AGREEMENT:.0%}")
            logger.warning("m=%d: %s", m, msg)
            result.warnings.append(msg)
    result.beat_frequencies = [beat.frequency for beat in beats]
    return result


def oracle_integrate(coupling: CouplingMatrix, c0, times, max_step: float = 1e-3) -> np.ndarray:
    """Classical fixed-step RK4 integration of ``dc/dt = M c``.

    ``c0`` may be a single state ``(N,)`` or a batch ``(N, k)``; the result
    has shape ``(len(times), *c0.shape)``.  Step size is at most
    ``max_step`` (1/Gamma) and adapts only to land on the requested times.
    """
    times = _check_times(times)
    matrix = np.asarray(coupling.entries, dtype=complex)
    state = np.array(c0, dtype=complex)
    if state.shape[0] != matrix.shape[0]:
        raise ValueError(f"expected {matrix.shape[0]} amplitudes, got {state.shape[0]}")
    start_norm = np.linalg.norm(state, axis=0)
    out = np.empty((times.size,) + state.shape, dtype=complex)
    t = 0.0
    for i, target in enumerate(times):
        span = target - t
        steps = int(np.ceil(span / max_step - 1e-9)) if span > 0 else 0
        if steps:
            h = span / steps
            for _ in range(steps):
                k1 = matrix @ state
                k2 = matrix @ (state + 0.5 * h * k1)
                k3 = matrix @ (state + 0.5 * h * k2)
                k4 = matrix @ (state + h * k3)
                state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            norm = np.linalg.norm(state, axis=0)
            if np.any(~np.isfinite(norm)) or np.any(norm > start_norm * (1 + 1e-9) + 1e-300):
                raise NumericFailureError(f"RK4 norm grew to {np.max(norm):.6g} at t={target:g}",
                                          residual=float(np.max(norm - start_norm)))
        t = target
        out[i] = state
    return out
