"""De Moivre (DM) singly-excited states.

State ``m`` (1 <= m <= N) has bare-basis coefficients

    a_mu = exp(i k.r_mu) * exp(2 pi i m (mu - 1) / N) / sqrt(N).

``m = N`` is the timed Dicke state.  The roots-of-unity phase is computed
from the integer ``m (mu - 1) mod N`` so it carries no accumulated
rounding for large arrays.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .kernel import CouplingMatrix
from .lattice import FieldConfig, LatticeGeometry


@dataclass(frozen=True)
class DMState:
    m: int
    coefficients: np.ndarray

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mu", "re", "im"])
            for mu, z in enumerate(self.coefficients, start=1):
                writer.writerow([mu, format(z.real, ".17g"), format(z.imag, ".17g")])


def _check_index(m: int, n: int) -> int:
    if int(m) != m or not 1 <= m <= n:
        raise ValueError(f"DM index m={m!r} outside [1, {n}]")
    return int(m)


def propagation_phases(geom: LatticeGeometry, field: FieldConfig) -> np.ndarray:
    """``exp(i k.r_mu)`` for every atom."""
    return np.exp(1j * (geom.positions @ field.k_vector))


def _root_phases(m: int, n: int) -> np.ndarray:
    residues = (m * np.arange(n, dtype=np.int64)) % n
    return np.exp(2j * np.pi * residues / n)


def dm_state(m: int, geom: LatticeGeometry, field: FieldConfig | None = None) -> DMState:
    field = field or FieldConfig()
    n = geom.n
    m = _check_index(m, n)
    coeffs = propagation_phases(geom, field) * _root_phases(m, n) / np.sqrt(n)
    coeffs.setflags(write=False)
    return DMState(m, coeffs)


def dm_basis(geom: LatticeGeometry, field: FieldConfig | None = None) -> np.ndarray:
    """Unitary ``N x N`` matrix whose column ``m - 1`` holds DM state ``m``."""
    field = field or FieldConfig()
    n = geom.n
    mu = np.arange(n, dtype=np.int64)
    residues = np.outer(mu, np.arange(1, n + 1, dtype=np.int64)) % n
    return propagation_phases(geom, field)[:, None] * np.exp(2j * np.pi * residues / n) / np.sqrt(n)


def bare_to_dm(c, geom: LatticeGeometry, field: FieldConfig | None = None) -> np.ndarray:
    """DM amplitudes ``d_m`` of a bare-basis state (or of each row of a trajectory)."""
    c = np.asarray(c, dtype=complex)
    if c.shape[-1] != geom.n:
        raise ValueError(f"expected {geom.n} amplitudes, got trailing dimension {c.shape[-1]}")
    return c @ dm_basis(geom, field).conj()


def dm_to_bare(d, geom: LatticeGeometry, field: FieldConfig | None = None) -> np.ndarray:
    d = np.asarray(d, dtype=complex)
    if d.shape[-1] != geom.n:
        raise ValueError(f"expected {geom.n} amplitudes, got trailing dimension {d.shape[-1]}")
    return d @ dm_basis(geom, field).T


def coupling_strength(m: int, coupling: CouplingMatrix, geom: LatticeGeometry,
                      field: FieldConfig | None = None) -> float:
    """DM-diagonal coupling strength ``-2 Re <phi_m| M |phi_m>`` in units of Gamma."""
    if coupling.n != geom.n:
        raise ValueError(f"matrix is {coupling.n}x{coupling.n} but geometry has {geom.n} atoms")
    a = dm_state(m, geom, field).coefficients
    return float(-2.0 * np.real(np.vdot(a, coupling.entries @ a)) / coupling.gamma)


def coupling_strengths(coupling: CouplingMatrix, geom: LatticeGeometry,
                       field: FieldConfig | None = None) -> np.ndarray:
    """``coupling_strength`` for every m = 1..N at once."""
    if coupling.n != geom.n:
        raise ValueError(f"matrix is {coupling.n}x{coupling.n} but geometry has {geom.n} atoms")
    basis = dm_basis(geom, field)
    diag = np.einsum("im,ij,jm->m", basis.conj(), coupling.entries, basis)
    return -2.0 * diag.real / coupling.gamma
