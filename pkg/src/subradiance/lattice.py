"""Rectangular atomic arrays and the photon/dipole field configuration.

Lengths are in units of the transition wavelength, so the wavenumber is
fixed at ``2*pi`` and ``xi = |k| r`` follows directly from positions.

The linear index ``mu`` (1-based) is assigned by walking the array with one
axis varying fastest.  ``labeling="xyz"`` walks x fastest, then y, then z:
``mu - 1 = ix + iy*nx + iz*nx*ny``.  The De Moivre phases depend on this
order, so it is part of the geometry rather than a presentation detail.
``labeling="zyx"`` (z fastest) is the order that reproduces the reference
2x2x4, 3x3x3 and 3x3x10 results; see ``REFERENCE_LABELING``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

WAVENUMBER = 2.0 * np.pi
DEFAULT_LABELING = "xyz"
REFERENCE_LABELING = "zyx"

_AXES = {"x": 0, "y": 1, "z": 2}


def _check_labeling(labeling: str) -> tuple[int, int, int]:
    if sorted(labeling) != ["x", "y", "z"]:
        raise ValueError(f"labeling must be a permutation of 'xyz', got {labeling!r}")
    return tuple(_AXES[a] for a in labeling)


@dataclass(frozen=True)
class LatticeGeometry:
    nx: int
    ny: int
    nz: int
    spacing: float
    positions: np.ndarray = field(repr=False, compare=False)
    labeling: str = DEFAULT_LABELING

    @property
    def n(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    def site_of(self, mu: int) -> tuple[int, int, int]:
        """Integer coordinates ``(ix, iy, iz)`` of the atom with 1-based index ``mu``."""
        if not 1 <= mu <= self.n:
            raise ValueError(f"index {mu} outside [1, {self.n}]")
        order = _check_labeling(self.labeling)
        rest = mu - 1
        site = [0, 0, 0]
        for axis in order:
            size = self.shape[axis]
            site[axis] = rest % size
            rest //= size
        return tuple(site)

    def index_of(self, ix: int, iy: int, iz: int) -> int:
        """Inverse of :meth:`site_of`."""
        site = (ix, iy, iz)
        for i, size in zip(site, self.shape):
            if not 0 <= i < size:
                raise ValueError(f"site {site} outside array {self.shape}")
        mu, stride = 0, 1
        for axis in _check_labeling(self.labeling):
            mu += site[axis] * stride
            stride *= self.shape[axis]
        return mu + 1

    def to_csv(self, path) -> None:
        """Write ``index, x, y, z`` rows (lengths in wavelengths)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["index", "x", "y", "z"])
            for mu, (x, y, z) in enumerate(self.positions, start=1):
                writer.writerow([mu, format(x, ".17g"), format(y, ".17g"), format(z, ".17g")])


@dataclass(frozen=True)
class FieldConfig:
    """Photon propagation direction and atomic dipole orientation.

    The reference configurations use a dipole along x and light along +z.
    """

    k_direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    dipole_direction: tuple[float, float, float] = (1.0, 0.0, 0.0)
    wavenumber: float = WAVENUMBER

    def __post_init__(self):
        for name in ("k_direction", "dipole_direction"):
            vec = np.asarray(getattr(self, name), dtype=float)
            if vec.shape != (3,) or not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} must be a finite 3-vector")
            if abs(np.linalg.norm(vec) - 1.0) > 1e-12:
                raise ValueError(f"{name} must have unit norm, got |v| = {np.linalg.norm(vec)!r}")
            object.__setattr__(self, name, tuple(float(v) for v in vec))

    @property
    def k_vector(self) -> np.ndarray:
        return self.wavenumber * np.asarray(self.k_direction)

    @property
    def dipole(self) -> np.ndarray:
        return np.asarray(self.dipole_direction)


def build_lattice(nx: int, ny: int, nz: int, spacing: float, labeling: str = DEFAULT_LABELING) -> LatticeGeometry:
    """Build an ``nx*ny*nz`` simple-cubic array with atom 1 at the origin.

    >>> geom = build_lattice(2, 2, 4, 0.25)
    >>> geom.positions[1].tolist()
    [0.25, 0.0, 0.0]
    """
    for name, count in (("nx", nx), ("ny", ny), ("nz", nz)):
        if int(count) != count or count < 1:
            raise ValueError(f"{name} must be a positive integer, got {count!r}")
    if not np.isfinite(spacing) or spacing <= 0:
        raise ValueError(f"spacing must be positive, got {spacing!r}")
    order = _check_labeling(labeling)
    shape = (int(nx), int(ny), int(nz))
    # C-order ravel over (slowest, ..., fastest) axes gives the linear index.
    slow_to_fast = order[::-1]
    grids = np.indices([shape[a] for a in slow_to_fast]).reshape(3, -1)
    sites = np.empty_like(grids)
    for row, axis in enumerate(slow_to_fast):
        sites[axis] = grids[row]
    positions = sites.T.astype(float) * float(spacing)
    positions.setflags(write=False)
    return LatticeGeometry(*shape, spacing=float(spacing), positions=positions, labeling=labeling)


def separations(geom: LatticeGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Displacement vectors ``r_mu - r_nu`` and their lengths."""
    diff = geom.positions[:, None, :] - geom.positions[None, :, :]
    return diff, np.linalg.norm(diff, axis=-1)


def pairwise_xi(geom: LatticeGeometry, wavenumber: float = WAVENUMBER) -> np.ndarray:
    """Dimensionless separations ``|k| |r_mu - r_nu|``; zero on the diagonal."""
    _, dist = separations(geom)
    return wavenumber * dist
