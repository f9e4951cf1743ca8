"""Eigendecomposition of the non-Hermitian coupling matrix.

Modes are ordered by ascending decay constant ``-Re(2 lambda) / Gamma``.
Columns of ``U`` have unit norm with their largest component real and
positive.  Exactly degenerate eigenvalues (which lattice symmetries
produce, e.g. in cubic arrays) leave the basis inside the eigenspace
arbitrary; it is fixed by diagonalizing the site-index operator restricted
to that eigenspace, so results do not depend on LAPACK internals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import IllConditionedError, NumericFailureError
from .kernel import CouplingMatrix

MAX_CONDITION = 1e12
RESIDUAL_TOL = 1e-10
DEGENERACY_TOL = 1e-11


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    inverse_vectors: np.ndarray
    ordering: np.ndarray
    gamma: float = 1.0

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def decay_constants(self) -> np.ndarray:
        """``-Re(2 lambda_n) / Gamma``, the population decay rate of each mode."""
        return -2.0 * self.eigenvalues.real / self.gamma

    @property
    def shifts(self) -> np.ndarray:
        """``Im(2 lambda_n) / Gamma``."""
        return 2.0 * self.eigenvalues.imag / self.gamma

    def clusters(self, tol: float = DEGENERACY_TOL) -> list[list[int]]:
        """Groups of (0-based) mode indices sharing one eigenvalue."""
        return degenerate_clusters(self.eigenvalues, tol * max(1.0, np.abs(self.eigenvalues).max()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "decay_constant", "shift"])
            for n, (rate, shift) in enumerate(zip(self.decay_constants, self.shifts), start=1):
                writer.writerow([n, format(rate, ".17g"), format(shift, ".17g")])


def degenerate_clusters(values: np.ndarray, tol: float) -> list[list[int]]:
    clusters: list[list[int]] = []
    for i, value in enumerate(values):
        for group in clusters:
            if abs(values[group[0]] - value) <= tol:
                group.append(i)
                break
        else:
            clusters.append([i])
    return clusters


def _fix_gauge(vectors: np.ndarray) -> np.ndarray:
    out = vectors / np.linalg.norm(vectors, axis=0)
    for j in range(out.shape[1]):
        pivot = _pivot(out[:, j])
        magnitude = abs(out[pivot, j])
        out[:, j] *= np.conj(out[pivot, j]) / magnitude
        out[pivot, j] = magnitude
    return out


def _pivot(vector: np.ndarray) -> int:
    # first component within rounding of the maximum, so mirror-symmetric
    # eigenvectors pick the same pivot on every platform
    mags = np.abs(vector)
    return int(np.argmax(mags >= (1.0 - 1e-8) * mags.max()))


def _canonicalize_degenerate(values: np.ndarray, vectors: np.ndarray, tol: float) -> np.ndarray:
    vectors = vectors.copy()
    n = vectors.shape[0]
    site_weights = np.sqrt(np.arange(1, n + 1, dtype=float))
    for group in degenerate_clusters(values, tol):
        if len(group) < 2:
            continue
        basis = vectors[:, group]
        compressed = np.linalg.lstsq(basis, site_weights[:, None] * basis, rcond=None)[0]
        mix_values, mix = np.linalg.eig(compressed)
        mix = mix[:, np.lexsort((mix_values.imag, mix_values.real))]
        vectors[:, group] = basis @ mix
    return vectors


def decompose(coupling: CouplingMatrix) -> SpectralDecomposition:
    """Diagonalize ``M = U diag(lambda) U^-1``.

    Raises :class:`NumericFailureError` if the eigen-residual is too large and
    :class:`IllConditionedError` if ``U`` is numerically singular.
    """
    matrix = np.asarray(coupling.entries, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or matrix.shape[0] < 1:
        raise ValueError("coupling matrix must be square and non-empty")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("coupling matrix has non-finite entries")
    try:
        values, vectors = scipy.linalg.eig(matrix)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError(f"eigensolver failed: {exc}") from exc

    condition = np.linalg.cond(vectors / np.linalg.norm(vectors, axis=0))
    if not np.isfinite(condition) or condition > MAX_CONDITION:
        raise IllConditionedError(f"eigenvector matrix condition number {condition:.3g}", condition)

    scale = max(1.0, np.linalg.norm(matrix, 2))
    tol = DEGENERACY_TOL * scale
    # snap clustered eigenvalues to their mean so ordering ties are exact
    for group in degenerate_clusters(values, tol):
        values[group] = values[group].mean()
    vectors = _fix_gauge(_canonicalize_degenerate(values, vectors, tol))

    rate = np.round(-2.0 * values.real / coupling.gamma, 10)
    shift = np.round(values.imag / coupling.gamma, 10)
    pivots = np.array([_pivot(vectors[:, j]) for j in range(vectors.shape[1])])
    order = np.lexsort((pivots, shift, rate))
    values, vectors = values[order], vectors[:, order]

    inverse = np.linalg.inv(vectors)
    # one step of iterative refinement: X <- X + X (I - U X)
    inverse = inverse + inverse @ (np.eye(vectors.shape[0]) - vectors @ inverse)

    residual = np.linalg.norm(matrix @ vectors - vectors * values, axis=0).max()
    if residual > RESIDUAL_TOL * scale:
        raise NumericFailureError(f"eigen-residual {residual:.3g} too large", residual)

    for arr in (values, vectors, inverse, order):
        arr.setflags(write=False)
    return SpectralDecomposition(values, vectors, inverse, order, coupling.gamma)


def propagate_bare(dec: SpectralDecomposition, c0, t):
    """Bare-basis amplitudes ``c(t) = U exp(lambda t) U^-1 c0``.

    ``t`` may be a scalar (returns shape ``(N,)``) or a 1-D array of times
    (returns shape ``(len(t), N)``).
    """
    c0 = np.asarray(c0, dtype=complex)
    if c0.shape != (dec.n,):
        raise ValueError(f"expected {dec.n} amplitudes, got shape {c0.shape}")
    if np.linalg.norm(c0) > 1.0 + 1e-12:
        raise ValueError("initial state norm exceeds 1")
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ValueError("times must be non-negative")
    modal = dec.inverse_vectors @ c0
    phases = np.exp(np.multiply.outer(np.atleast_1d(times), dec.eigenvalues))
    out = (phases * modal) @ dec.right_vectors.T
    return out[0] if times.ndim == 0 else out
