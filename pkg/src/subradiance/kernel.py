"""Resonant dipole-dipole kernels and the single-excitation coupling matrix.

``F`` is the cooperative decay kernel and ``G`` the cooperative (Lamb)
shift kernel between two identical dipoles with orientation ``d`` separated
by ``r``.  Both depend on ``xi = |k| r`` and ``c = d . r_hat``.  The
amplitude equations ``dc/dt = M c`` use

    M_{mu nu} = (Gamma / 2) * (-F_{mu nu} + 2i G_{mu nu} [mu != nu]).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lattice import FieldConfig, LatticeGeometry, separations

SMALL_XI = 1e-3


def kernel_F(xi, cos_angle):
    """Cooperative decay kernel; equals 1 at ``xi = 0`` for any orientation.

    Below ``SMALL_XI`` a Taylor series replaces the closed form, whose
    ``1/xi**2`` and ``1/xi**3`` terms cancel catastrophically.
    """
    xi = np.asarray(xi, dtype=float)
    c2 = np.asarray(cos_angle, dtype=float) ** 2
    if np.any(xi < 0):
        raise ValueError("xi must be non-negative")
    transverse = 1.0 - c2
    longitudinal = 1.0 - 3.0 * c2
    small = xi < SMALL_XI
    safe = np.where(small, 1.0, xi)
    sin, cos = np.sin(safe), np.cos(safe)
    closed = 1.5 * (transverse * sin / safe + longitudinal * (safe * cos - sin) / safe**3)
    xi2 = xi * xi
    series = 1.0 - xi2 * (2.0 - c2) / 10.0 + 1.5 * xi2 * xi2 * (transverse / 120.0 - longitudinal / 840.0)
    out = np.where(small, series, closed)
    return out[()] if out.ndim == 0 else out


def kernel_G(xi, cos_angle):
    """Cooperative shift kernel.  Diverges as ``xi**-3``; ``xi <= 0`` is rejected."""
    xi = np.asarray(xi, dtype=float)
    c2 = np.asarray(cos_angle, dtype=float) ** 2
    if np.any(xi <= 0):
        raise ValueError("kernel_G is undefined for xi <= 0 (self-interaction is excluded)")
    sin, cos = np.sin(xi), np.cos(xi)
    out = 0.75 * (-(1.0 - c2) * cos / xi + (1.0 - 3.0 * c2) * (sin / xi**2 + cos / xi**3))
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class CouplingMatrix:
    """Complex-symmetric effective matrix ``M``; entries in units of ``gamma``."""

    entries: np.ndarray
    gamma: float = 1.0

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mu", "nu", "re", "im"])
            for mu in range(self.n):
                for nu in range(self.n):
                    z = self.entries[mu, nu]
                    writer.writerow([mu + 1, nu + 1, format(z.real, ".17g"), format(z.imag, ".17g")])

    def to_bytes(self) -> bytes:
        """Row-major little-endian float64 (re, im) pairs."""
        return np.ascontiguousarray(self.entries, dtype="<c16").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes, gamma: float = 1.0) -> "CouplingMatrix":
        flat = np.frombuffer(data, dtype="<c16")
        n = int(round(np.sqrt(flat.size)))
        if n * n != flat.size:
            raise ValueError(f"snapshot holds {flat.size} entries, not a square matrix")
        return cls(flat.reshape(n, n).astype(complex), gamma)


def build_coupling_matrix(geom: LatticeGeometry, field: FieldConfig | None = None,
                          gamma: float = 1.0) -> CouplingMatrix:
    field = field or FieldConfig()
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    diff, dist = separations(geom)
    n = geom.n
    off = ~np.eye(n, dtype=bool)
    if np.any(dist[off] <= 0):
        raise ValueError("two atoms share a site; one atom per site is required")
    xi = field.wavenumber * dist[off]
    cos_angle = (diff[off] @ field.dipole) / dist[off]
    entries = np.full((n, n), -0.5 * gamma, dtype=complex)
    entries[off] = 0.5 * gamma * (-kernel_F(xi, cos_angle) + 2j * kernel_G(xi, cos_angle))
    entries.setflags(write=False)
    return CouplingMatrix(entries, float(gamma))
