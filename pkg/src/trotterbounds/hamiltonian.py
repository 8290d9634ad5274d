"""Plane-wave dual basis coefficient matrices.

The Hamiltonian is

    H = sum_pq T_pq a_p^dag a_q + sum_p U_p n_p + sum_{p != q} V_pq n_p n_q

on ``N`` spin-orbitals laid out on a periodic ``d``-dimensional grid.  All
quantities are in Hartree atomic units.

Spin-orbital ordering is blocked: spin-up spatial orbitals ``0 .. M-1``
followed by spin-down ``M .. 2M-1``.  Within a spin block, spatial orbitals
are numbered row-major over the lattice coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ORDERING_TAG = "spin-blocked/row-major"


class UnsupportedDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    """Simulation cell, electron count and (optional) nuclei.

    ``kinetic_denominator`` selects how the ``N`` dividing the kinetic sum is
    read: ``"spin_orbitals"`` (default) or ``"spatial_orbitals"``.
    """

    dimension: int
    sides: tuple[int, ...]
    eta: int
    wigner_seitz: float
    nuclei: tuple[tuple[tuple[float, ...], float], ...] = ()
    spinful: bool = True
    kinetic_denominator: str = "spin_orbitals"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sides", tuple(int(s) for s in self.sides))
        object.__setattr__(
            self,
            "nuclei",
            tuple((tuple(float(x) for x in pos), float(z)) for pos, z in self.nuclei),
        )
        if self.dimension not in (2, 3):
            raise UnsupportedDimensionError(
                f"dimension must be 2 or 3, got {self.dimension}"
            )
        if len(self.sides) != self.dimension:
            raise ValueError(
                f"expected {self.dimension} sides, got {len(self.sides)}"
            )
        if any(s < 1 for s in self.sides):
            raise ValueError(f"sides must be positive, got {self.sides}")
        if not self.wigner_seitz > 0:
            raise ValueError("wigner_seitz must be positive")
        if not 1 <= self.eta <= self.n_orbitals:
            raise ValueError(
                f"eta={self.eta} outside [1, N={self.n_orbitals}]"
            )
        if self.kinetic_denominator not in ("spin_orbitals", "spatial_orbitals"):
            raise ValueError(
                f"unknown kinetic_denominator {self.kinetic_denominator!r}"
            )
        for pos, _ in self.nuclei:
            if len(pos) != self.dimension:
                raise ValueError("nucleus position has wrong dimension")

    @property
    def n_spatial(self) -> int:
        return math.prod(self.sides)

    @property
    def n_orbitals(self) -> int:
        return self.n_spatial * (2 if self.spinful else 1)

    @property
    def volume(self) -> float:
        return cell_volume(self)

    @classmethod
    def jellium(
        cls, sides: Sequence[int], eta: int, wigner_seitz: float, **kwargs
    ) -> "SystemSpec":
        return cls(len(sides), tuple(sides), eta, wigner_seitz, **kwargs)

    def with_eta(self, eta: int) -> "SystemSpec":
        return SystemSpec(
            self.dimension,
            self.sides,
            eta,
            self.wigner_seitz,
            self.nuclei,
            self.spinful,
            self.kinetic_denominator,
        )

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "sides": list(self.sides),
            "eta": self.eta,
            "wigner_seitz": self.wigner_seitz,
            "nuclei": [[list(p), z] for p, z in self.nuclei],
            "spinful": self.spinful,
            "kinetic_denominator": self.kinetic_denominator,
        }


@dataclass
class CoefficientMatrices:
    T: np.ndarray
    U: np.ndarray
    V: np.ndarray
    N: int = field(init=False)

    def __post_init__(self) -> None:
        self.N = self.T.shape[0]


def cell_volume(spec: SystemSpec) -> float:
    """Cell volume from the density ``eta / Omega`` fixed by ``r_s``."""
    rs = spec.wigner_seitz
    if spec.dimension == 2:
        return spec.eta * math.pi * rs**2
    if spec.dimension == 3:
        return spec.eta * (4.0 * math.pi / 3.0) * rs**3
    raise UnsupportedDimensionError(f"dimension {spec.dimension} not supported")


def grid_range(side: int) -> np.ndarray:
    """Integers in ``[-floor(L/2), floor(L/2))``, closed at the top for odd L."""
    half = side // 2
    return np.arange(-half, side - half)


def _grid_points(sides: Sequence[int]) -> np.ndarray:
    axes = [grid_range(s) for s in sides]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def momentum_indices(spec: SystemSpec) -> np.ndarray:
    """Integer momentum vectors ``nu``, shape ``(prod(sides), d)``."""
    return _grid_points(spec.sides)


def momentum_vectors(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(nu, k)`` with ``k = 2 pi nu / Omega^(1/d)``."""
    nu = momentum_indices(spec)
    scale = cell_volume(spec) ** (1.0 / spec.dimension)
    return nu, 2.0 * np.pi * nu / scale


def lattice_spacing(spec: SystemSpec) -> np.ndarray:
    """Grid spacing per axis; the cell is a cube of side ``Omega^(1/d)``."""
    scale = cell_volume(spec) ** (1.0 / spec.dimension)
    return scale / np.asarray(spec.sides, dtype=float)


def lattice_coordinates(spec: SystemSpec) -> np.ndarray:
    """Integer lattice coordinates of the spatial orbitals (row-major)."""
    return _grid_points(spec.sides)


def orbital_positions(spec: SystemSpec) -> np.ndarray:
    """Orbital centroids, one row per spin-orbital (spin copies coincide)."""
    spatial = lattice_coordinates(spec) * lattice_spacing(spec)
    if spec.spinful:
        return np.concatenate([spatial, spatial])
    return spatial


def spin_labels(spec: SystemSpec) -> np.ndarray:
    m = spec.n_spatial
    if spec.spinful:
        return np.repeat([0, 1], m)
    return np.zeros(m, dtype=int)


def _displacement_table(spec: SystemSpec, weights: np.ndarray, k: np.ndarray):
    """Evaluate ``sum_nu w_nu cos(k_nu . r)`` on every lattice displacement.

    Returns a function mapping integer coordinate arrays ``(p, q)`` to values
    at ``r_p - r_q``.  Because the displacement is formed before the cosine,
    values at ``D`` and ``-D`` are bitwise equal.
    """
    sides = np.asarray(spec.sides)
    spacing = lattice_spacing(spec)
    disp_axes = [np.arange(-(s - 1), s) for s in spec.sides]
    disp = np.stack(
        [m.ravel() for m in np.meshgrid(*disp_axes, indexing="ij")], axis=1
    )
    phases = np.zeros((len(disp), len(k)))
    for i in range(spec.dimension):
        phases += (disp[:, i] * spacing[i])[:, None] * k[None, :, i]
    # elementwise reductions keep f(D) and f(-D) bitwise equal
    values = (np.cos(phases) * weights).sum(axis=1)
    shape = tuple(2 * sides - 1)
    table = values.reshape(shape)

    def lookup(coords: np.ndarray) -> np.ndarray:
        diff = coords[:, None, :] - coords[None, :, :] + (sides - 1)
        return table[tuple(diff[..., i] for i in range(spec.dimension))]

    return lookup


def _spatial_kinetic(spec: SystemSpec) -> np.ndarray:
    _, k = momentum_vectors(spec)
    k2 = np.einsum("ij,ij->i", k, k)
    denom = spec.n_orbitals
    if spec.kinetic_denominator == "spatial_orbitals":
        denom = spec.n_spatial
    lookup = _displacement_table(spec, k2 / denom, k)
    return lookup(lattice_coordinates(spec))


def _coulomb_weights(spec: SystemSpec) -> tuple[np.ndarray, np.ndarray]:
    nu, k = momentum_vectors(spec)
    nonzero = np.any(nu != 0, axis=1)
    k = k[nonzero]
    k2 = np.einsum("ij,ij->i", k, k)
    return 2.0 * np.pi / (cell_volume(spec) * k2), k


def _spatial_coulomb(spec: SystemSpec) -> np.ndarray:
    w, k = _coulomb_weights(spec)
    lookup = _displacement_table(spec, w, k)
    return lookup(lattice_coordinates(spec))


def _spin_expand(spec: SystemSpec, spatial: np.ndarray, same_spin_only: bool):
    if not spec.spinful:
        return spatial.copy()
    if same_spin_only:
        return np.kron(np.eye(2), spatial)
    return np.kron(np.ones((2, 2)), spatial)


def build_kinetic(spec: SystemSpec) -> np.ndarray:
    return _spin_expand(spec, _spatial_kinetic(spec), same_spin_only=True)


def build_external(spec: SystemSpec) -> np.ndarray:
    """Electron-nuclei diagonal ``U_p``; identically zero for jellium."""
    positions = orbital_positions(spec)
    U = np.zeros(len(positions))
    if not spec.nuclei:
        return U
    nu, k = momentum_vectors(spec)
    nonzero = np.any(nu != 0, axis=1)
    k = k[nonzero]
    k2 = np.einsum("ij,ij->i", k, k)
    omega = cell_volume(spec)
    for pos, charge in spec.nuclei:
        phases = (np.asarray(pos)[None, :] - positions) @ k.T
        U -= (4.0 * np.pi * charge / omega) * (np.cos(phases) @ (1.0 / k2))
    return U


def build_coulomb(spec: SystemSpec) -> np.ndarray:
    """Two-body matrix ``V_pq``; spin independent with a zero diagonal."""
    V = _spin_expand(spec, _spatial_coulomb(spec), same_spin_only=False)
    np.fill_diagonal(V, 0.0)
    return V


def coulomb_diagonal_constant(spec: SystemSpec) -> float:
    """``sum_{nu != 0} 2 pi / (Omega k_nu^2)``, the value V would take at p = q."""
    w, _ = _coulomb_weights(spec)
    return float(np.sum(w))


def build_matrices(spec: SystemSpec) -> CoefficientMatrices:
    return CoefficientMatrices(
        build_kinetic(spec), build_external(spec), build_coulomb(spec)
    )


def dump_matrix(path: str | Path, matrix: np.ndarray, spec: SystemSpec, name: str):
    """Write a dense matrix as text with a one-line JSON header."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = {
        "name": name,
        "N": spec.n_orbitals,
        "d": spec.dimension,
        "sides": list(spec.sides),
        "r_s": spec.wigner_seitz,
        "eta": spec.eta,
        "ordering": ORDERING_TAG,
        "shape": list(matrix.shape),
    }
    np.savetxt(path, matrix, fmt="%.17g", header=json.dumps(header))


def load_matrix(path: str | Path) -> tuple[dict, np.ndarray]:
    with open(path) as fh:
        first = fh.readline()
    header = json.loads(first.lstrip("#").strip())
    data = np.loadtxt(path, ndmin=2).reshape(header["shape"])
    return header, data
