"""Factorized forms of the two-body potential.

Every decomposition writes the potential term as

    H_v = H(U) + sum_l w_l H(X_l) H(Y_l)

with free-fermionic factors ``H(X) = sum_ij X_ij a_i^dag a_j``.  Diagonal
factors are stored by their diagonals only (shape ``(L, N)``), which keeps
memory at ``O(N^2)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .hamiltonian import (
    SystemSpec,
    build_external,
    cell_volume,
    coulomb_diagonal_constant,
    momentum_vectors,
    orbital_positions,
)

SPECTRAL = "spectral"
CHOLESKY = "cholesky"
COSINE = "cosine"
GENERIC = "generic"


class FactorizationError(ArithmeticError):
    pass


class TensorSymmetryError(ValueError):
    pass


@dataclass
class FactorizedPotential:
    """Weighted list of free-fermionic factor pairs plus a one-body part.

    Attributes:
        one_body: Diagonal of ``U`` (length ``N``) or a dense ``N x N`` matrix.
        weights: ``w_l``, shape ``(L,)``.
        X, Y: Factor matrices; ``(L, N)`` diagonals when ``diagonal_factors``
            is set, ``(L, N, N)`` dense otherwise.
        method: One of ``spectral``, ``cholesky``, ``cosine``, ``generic``.
        shift: Chemical potential ``C`` added to the diagonal of ``V``.
        dropped_constant: Coefficient ``c`` of the ``-c * sum_p n_p`` term left
            out of the factor sum (cosine only); it is a global phase at fixed
            electron number.
    """

    one_body: np.ndarray
    weights: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    method: str
    shift: float = 0.0
    diagonal_factors: bool = True
    dropped_constant: float = 0.0
    same_xy: bool = field(default=False)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.X) != len(self.weights) or len(self.Y) != len(self.weights):
            raise ValueError("weights, X and Y must have the same length")
        self.same_xy = self.X is self.Y or (
            self.X.shape == self.Y.shape and np.array_equal(self.X, self.Y)
        )
        for arr in (self.X, self.Y):
            arr.setflags(write=False)

    @property
    def n_factors(self) -> int:
        return len(self.weights)

    @property
    def n_orbitals(self) -> int:
        return self.one_body.shape[0]

    def __iter__(self) -> Iterator[tuple[float, np.ndarray, np.ndarray]]:
        return iter(zip(self.weights, self.X, self.Y))

    def dense_factor(self, l: int) -> tuple[float, np.ndarray, np.ndarray]:
        x, y = self.X[l], self.Y[l]
        if self.diagonal_factors:
            x, y = np.diag(x), np.diag(y)
        return float(self.weights[l]), x, y

    def one_body_matrix(self) -> np.ndarray:
        if self.one_body.ndim == 1:
            return np.diag(self.one_body)
        return self.one_body

    def two_body_matrix(self) -> np.ndarray:
        """``sum_l w_l X_l[p,p] Y_l[q,q]`` for diagonal factors."""
        if not self.diagonal_factors:
            raise ValueError("two_body_matrix needs diagonal factors")
        return np.einsum("l,lp,lq->pq", self.weights, self.X, self.Y)

    def to_json(self) -> str:
        return json.dumps(
            {
                "method": self.method,
                "N": int(self.n_orbitals),
                "n_factors": int(self.n_factors),
                "shift": self.shift,
                "diagonal_factors": self.diagonal_factors,
                "dropped_constant": self.dropped_constant,
                "one_body": self.one_body.tolist(),
                "weights": self.weights.tolist(),
                "X": self.X.tolist(),
                "Y": self.Y.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FactorizedPotential":
        d = json.loads(text)
        return cls(
            np.asarray(d["one_body"]),
            np.asarray(d["weights"]),
            np.asarray(d["X"]),
            np.asarray(d["Y"]),
            d["method"],
            d["shift"],
            d["diagonal_factors"],
            d["dropped_constant"],
        )

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def shift_chemical_potential(V: np.ndarray, C: float) -> np.ndarray:
    return np.asarray(V, dtype=float) + C * np.eye(len(V))


def pd_epsilon(V: np.ndarray) -> float:
    return max(1e-12, 1e-8 * float(np.max(np.abs(V))) if np.size(V) else 0.0)


def min_pd_shift(V: np.ndarray) -> float:
    """Smallest diagonal shift (plus a pivot guard) making ``V`` positive definite."""
    lam_min = scipy.linalg.eigh(V, eigvals_only=True, subset_by_index=[0, 0])[0]
    return max(0.0, -float(lam_min)) + pd_epsilon(V)


def _canonical_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip columns so the first non-negligible component is positive."""
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if len(nz) and col[nz[0]] < 0:
            vecs[:, j] = -col
    return vecs


def spectral_decompose(V: np.ndarray, C: float = 0.0,
                       U: np.ndarray | None = None) -> FactorizedPotential:
    """Eigendecompose ``V + C I``: weight = eigenvalue, factors = eigenvectors."""
    V = np.asarray(V, dtype=float)
    n = len(V)
    evals, evecs = np.linalg.eigh(shift_chemical_potential(V, C))
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], _canonical_signs(evecs[:, order])
    factors = np.ascontiguousarray(evecs.T)
    one_body = np.zeros(n) if U is None else np.asarray(U, dtype=float)
    return FactorizedPotential(one_body, evals, factors, factors, SPECTRAL, C)


def cholesky_decompose(V: np.ndarray, C: float | None = None,
                       U: np.ndarray | None = None) -> FactorizedPotential:
    """Cholesky factors of ``V + C I`` as unit-weight diagonal factors.

    ``C`` defaults to :func:`min_pd_shift`.

    Raises:
        FactorizationError: ``V + C I`` is not positive definite.
    """
    V = np.asarray(V, dtype=float)
    n = len(V)
    if C is None:
        C = min_pd_shift(V)
    L, info = lapack.dpotrf(shift_chemical_potential(V, C), lower=1, clean=1)
    if info > 0:
        raise FactorizationError(
            f"V + {C:g} I is not positive definite: pivot {info - 1} failed"
        )
    if info < 0:
        raise FactorizationError(f"dpotrf argument {-info} invalid")
    factors = np.ascontiguousarray(L.T)
    one_body = np.zeros(n) if U is None else np.asarray(U, dtype=float)
    return FactorizedPotential(one_body, np.ones(n), factors, factors, CHOLESKY, C)


def cosine_decompose(spec: SystemSpec) -> FactorizedPotential:
    """Double-angle split of the plane-wave Coulomb sum.

    For each nonzero momentum the factors are ``sqrt(2 pi / Omega) / |k|``
    times ``cos(k . r_p)`` and ``sin(k . r_p)``; both spin copies of a spatial
    orbital share the same entry.
    """
    nu, k = momentum_vectors(spec)
    nonzero = np.any(nu != 0, axis=1)
    k = k[nonzero]
    kabs = np.sqrt(np.einsum("ij,ij->i", k, k))
    r = orbital_positions(spec)
    phases = np.zeros((len(k), len(r)))
    for i in range(spec.dimension):
        phases += k[:, i][:, None] * r[None, :, i]
    amp = np.sqrt(2.0 * np.pi / cell_volume(spec)) / kabs
    factors = np.empty((2 * len(k), len(r)))
    factors[0::2] = amp[:, None] * np.cos(phases)
    factors[1::2] = amp[:, None] * np.sin(phases)
    return FactorizedPotential(
        build_external(spec),
        np.ones(len(factors)),
        factors,
        factors,
        COSINE,
        0.0,
        dropped_constant=coulomb_diagonal_constant(spec),
    )


def reconstruction_residual(fac: FactorizedPotential, V: np.ndarray,
                            offdiagonal_only: bool | None = None) -> float:
    """``max |sum_l w_l X_l Y_l - (V + C I)|`` (off-diagonal only for cosine)."""
    if offdiagonal_only is None:
        offdiagonal_only = fac.method == COSINE
    diff = fac.two_body_matrix() - shift_chemical_potential(V, fac.shift)
    if offdiagonal_only:
        np.fill_diagonal(diff, 0.0)
    return float(np.max(np.abs(diff))) if diff.size else 0.0


EIGHT_FOLD = (
    (3, 2, 1, 0),  # V_srqp
    (0, 1, 3, 2),  # V_pqsr
    (1, 0, 2, 3),  # V_qprs
    (1, 0, 3, 2),  # V_qpsr
    (2, 3, 1, 0),  # V_rsqp
    (2, 3, 0, 1),  # V_rspq
    (3, 2, 0, 1),  # V_srpq
)


def chemist_from_physicist(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rewrite ``sum h_pqrs a_p^ a_q^ a_r a_s`` as ``sum V_pqrs a_p^ a_q a_r^ a_s - H(h0)``.

    Returns ``(V, h0)`` with ``V_pqrs = h_prsq`` and ``h0_pr = sum_q h_pqrq``.
    """
    h = np.asarray(h)
    V = np.einsum("prsq->pqrs", h)
    h0 = np.einsum("pqrq->pr", h)
    return V, h0


def general_spectral_from_tensor(
    tensor: np.ndarray, notation: str = "chemist", rtol: float = 1e-10
) -> tuple[np.ndarray, FactorizedPotential]:
    """Factorize a four-index interaction by diagonalizing ``V_(pq),(sr)``.

    Args:
        tensor: Real ``(N, N, N, N)`` array.  In ``chemist`` notation it holds
            ``V_pqrs`` of ``sum V_pqrs a_p^ a_q a_r^ a_s``; in ``physicist``
            notation it holds ``h_pqrs`` of ``sum h_pqrs a_p^ a_q^ a_r a_s``.
        notation: ``"chemist"`` or ``"physicist"``.
        rtol: Relative tolerance for the symmetry check and for dropping
            zero eigenvalues.

    Returns:
        ``(one_body, fac)`` such that the operator equals
        ``H(one_body) + sum_l w_l H(X_l) H(X_l)`` with hermitian dense ``X_l``.

    Raises:
        TensorSymmetryError: the chemist tensor is complex or lacks the
            eight-fold permutational symmetry.
    """
    tensor = np.asarray(tensor)
    if np.iscomplexobj(tensor) and np.any(tensor.imag):
        raise TensorSymmetryError("tensor must be real")
    tensor = np.real(tensor).astype(float)
    n = tensor.shape[0]
    if tensor.shape != (n, n, n, n):
        raise ValueError(f"expected a 4-index square tensor, got {tensor.shape}")
    if notation == "physicist":
        V, h0 = chemist_from_physicist(tensor)
        one_body = -h0
    elif notation == "chemist":
        V, one_body = tensor, np.zeros((n, n))
    else:
        raise ValueError(f"unknown notation {notation!r}")

    scale = float(np.max(np.abs(V))) if V.size else 0.0
    for perm in EIGHT_FOLD:
        if np.max(np.abs(V - V.transpose(perm))) > rtol * max(scale, 1e-300):
            raise TensorSymmetryError(f"tensor violates permutation {perm}")

    # rows (p, q), columns (s, r)
    M = V.transpose(0, 1, 3, 2).reshape(n * n, n * n)
    evals, evecs = np.linalg.eigh(0.5 * (M + M.T))
    keep = np.abs(evals) > rtol * max(scale, 1e-300) * n
    evals, evecs = evals[keep], evecs[:, keep]
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], _canonical_signs(evecs[:, order])
    X = evecs.T.reshape(-1, n, n)
    X = 0.5 * (X + X.transpose(0, 2, 1))
    fac = FactorizedPotential(
        one_body, evals, X, X, GENERIC, 0.0, diagonal_factors=False
    )
    return one_body, fac
