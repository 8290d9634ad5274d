"""Reduced fermionic seminorm of free-fermionic coefficient matrices.

For a number-preserving free-fermionic operator ``H(A) = sum_ij A_ij a_i^dag a_j``
the largest transition amplitude between ``eta``-electron states equals the
largest ``|sum|`` over ``eta``-element subsets of the eigenvalues of ``A``.  For
hermitian ``A`` that is the larger of the top-``eta`` and bottom-``eta`` sums.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

HERMITIAN = "hermitian"
ANTI_HERMITIAN = "anti-hermitian"
GENERAL = "general"

SYMMETRY_RTOL = 1e-10
BRUTE_FORCE_MAX_N = 20


class UnsupportedSymmetryError(ValueError):
    """Raised for coefficient matrices that are neither hermitian nor anti-hermitian."""


class EigenResidualError(ArithmeticError):
    pass


def classify(A: np.ndarray, rtol: float = SYMMETRY_RTOL) -> str:
    """Symmetry class of ``A`` up to ``rtol * max|A_ij|``."""
    A = np.asarray(A)
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale == 0.0:
        return HERMITIAN
    tol = rtol * scale
    AH = A.conj().T
    if np.max(np.abs(A - AH)) <= tol:
        return HERMITIAN
    if np.max(np.abs(A + AH)) <= tol:
        return ANTI_HERMITIAN
    return GENERAL


@dataclass
class CoefficientMatrix:
    """A coefficient matrix with its symmetry tag.

    ``diagonal`` marks matrices whose off-diagonal part is exactly zero; they
    skip the eigensolver.
    """

    entries: np.ndarray
    symmetry: str = HERMITIAN
    diagonal: bool = False

    def __post_init__(self) -> None:
        self.entries = np.asarray(self.entries)
        if self.entries.ndim == 1:
            self.entries = np.diag(self.entries)
            self.diagonal = True
        found = classify(self.entries)
        if found != self.symmetry and not (
            found == HERMITIAN and not np.any(self.entries)
        ):
            raise UnsupportedSymmetryError(
                f"entries classify as {found}, tagged {self.symmetry}"
            )
        if self.diagonal:
            off = self.entries - np.diag(np.diag(self.entries))
            if np.any(off):
                raise ValueError("diagonal-flagged matrix has off-diagonal entries")

    @classmethod
    def from_array(cls, A: np.ndarray) -> "CoefficientMatrix":
        A = np.asarray(A)
        diagonal = A.ndim == 1 or not np.any(A - np.diag(np.diag(A)))
        return cls(A, classify(A) if A.ndim == 2 else HERMITIAN, diagonal)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def seminorm_from_eigenvalues(evals: np.ndarray, eta: int) -> float:
    """Seminorm from the real spectrum of a hermitian matrix (any order)."""
    if eta == 0 or len(evals) == 0:
        return 0.0
    ordered = np.sort(evals)
    low = abs(ordered[:eta].sum())
    high = abs(ordered[-eta:].sum())
    return float(max(low, high))


def seminorm_profile(evals: np.ndarray, etas: Sequence[int]) -> np.ndarray:
    """Seminorm for several electron counts from one spectrum."""
    ordered = np.sort(np.asarray(evals, dtype=float))
    low = np.concatenate([[0.0], np.cumsum(ordered)])
    high = np.concatenate([[0.0], np.cumsum(ordered[::-1])])
    etas = np.asarray(etas, dtype=int)
    return np.maximum(np.abs(low[etas]), np.abs(high[etas]))


def hermitian_spectrum(A: np.ndarray, check_residual: bool = False) -> np.ndarray:
    evals = scipy.linalg.eigh(A, eigvals_only=True, check_finite=False)
    if check_residual and len(evals):
        w, v = np.linalg.eigh(A)
        j = len(w) // 2
        resid = np.linalg.norm(A @ v[:, j] - w[j] * v[:, j])
        if resid > 1e-8 * max(np.linalg.norm(A, 2), 1e-300):
            raise EigenResidualError(f"eigenpair residual {resid:.3e}")
    return evals


def spectrum(A, symmetry: str | None = None, diagonal: bool | None = None,
             check_residual: bool = False) -> np.ndarray:
    """Real spectrum of the hermitian representative of ``A``.

    Anti-hermitian input is mapped to ``-iA``; the seminorm is absolutely
    homogeneous so this does not change its value.
    """
    if isinstance(A, CoefficientMatrix):
        symmetry, diagonal, A = A.symmetry, A.diagonal, A.entries
    A = np.asarray(A)
    if A.ndim == 1:
        return A.real.astype(float) if symmetry != ANTI_HERMITIAN else A.imag.astype(float)
    if symmetry is None:
        symmetry = classify(A)
    if symmetry == GENERAL:
        raise UnsupportedSymmetryError(
            "seminorm of a matrix that is neither hermitian nor anti-hermitian "
            "is not supported"
        )
    if symmetry == ANTI_HERMITIAN:
        A = -1j * A
    if diagonal:
        return np.real(np.diag(A)).astype(float)
    if np.iscomplexobj(A) and not np.any(A.imag):
        A = A.real
    # eigh reads one triangle, so rounding-level asymmetry is discarded
    return hermitian_spectrum(A, check_residual)


def reduced_seminorm(A, eta: int, symmetry: str | None = None,
                     diagonal: bool | None = None) -> float:
    """Reduced fermionic seminorm ``S_eta(A)``.

    Args:
        A: ``N x N`` hermitian or anti-hermitian matrix, a length-``N`` vector
            (read as a diagonal matrix), or a :class:`CoefficientMatrix`.
        eta: Electron number, ``0 <= eta <= N``.
        symmetry: Skip classification when the caller already knows it.
        diagonal: Treat ``A`` as diagonal.

    Raises:
        UnsupportedSymmetryError: ``A`` is neither hermitian nor anti-hermitian.
        ValueError: ``eta`` outside ``[0, N]``.
    """
    n = A.n if isinstance(A, CoefficientMatrix) else np.shape(A)[0]
    if not 0 <= eta <= n:
        raise ValueError(f"eta={eta} outside [0, {n}]")
    if eta == 0:
        return 0.0
    return seminorm_from_eigenvalues(spectrum(A, symmetry, diagonal), eta)


def brute_force_seminorm(A, eta: int) -> float:
    """Exhaustive maximum of ``|sum|`` over ``eta``-subsets of the eigenvalues.

    Uses the general (non-symmetric) eigensolver so it shares no code path with
    :func:`reduced_seminorm`.
    """
    if isinstance(A, CoefficientMatrix):
        A = A.entries
    A = np.asarray(A)
    if A.ndim == 1:
        A = np.diag(A)
    n = A.shape[0]
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force limited to N <= {BRUTE_FORCE_MAX_N}, got {n}")
    if not 0 <= eta <= n:
        raise ValueError(f"eta={eta} outside [0, {n}]")
    evals = np.linalg.eigvals(A)
    best = 0.0
    for subset in itertools.combinations(range(n), eta):
        best = max(best, abs(evals[list(subset)].sum()))
    return float(best)


def fock_seminorm(op, eta: int) -> float:
    """Largest singular value of a number-preserving operator on the ``eta`` sector."""
    from .oracle import FOCK_SEMINORM_MAX_MODES, fock_matrix

    if op.n_modes > FOCK_SEMINORM_MAX_MODES:
        raise ValueError(
            f"fock_seminorm limited to N <= {FOCK_SEMINORM_MAX_MODES} modes"
        )
    M = fock_matrix(op, eta)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))
