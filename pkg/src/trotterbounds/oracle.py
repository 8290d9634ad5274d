"""Exact small-system fermionic algebra used as ground truth.

Operators are stored in canonical normal order: creation indices ascending,
then annihilation indices ascending, with the permutation sign absorbed into
the coefficient.  Occupation-number basis states are integers whose bit ``p``
is the occupation of mode ``p``; the Jordan-Wigner string of mode ``p`` runs
over modes ``0 .. p-1``.
"""

from __future__ import annotations

import itertools
import json
import math
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np
import scipy.linalg

MAX_SYMBOLIC_MODES = 16
MAX_JW_MODES = 14
FOCK_SEMINORM_MAX_MODES = 14
MAX_SECTOR_DIM = 4096
MAX_TERMS = 2_000_000
ZERO_RTOL = 1e-14

VTV = "vtv"
TVT = "tvt"

Key = tuple[tuple[int, ...], tuple[int, ...]]


class OracleLimitError(ValueError):
    """Problem size exceeds a hard guard of the exact oracle."""


class NumberNonConservingError(ValueError):
    pass


def _guard_modes(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise OracleLimitError(
            f"{what} is limited to N <= {limit} modes (got {n}); use the "
            "seminorm bound engine for larger systems"
        )


# --- normal ordering --------------------------------------------------------

# a word is a tuple of (mode, is_creation) ladder operators, left to right


def _sort_sign(indices: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Sign of the permutation sorting ``indices``; 0 if any index repeats."""
    if len(set(indices)) != len(indices):
        return 0, ()
    arr = list(indices)
    sign = 1
    for i in range(len(arr)):
        for j in range(len(arr) - 1 - i):
            if arr[j] > arr[j + 1]:
                arr[j], arr[j + 1] = arr[j + 1], arr[j]
                sign = -sign
    return sign, tuple(arr)


@lru_cache(maxsize=200_000)
def _normal_order_word(word: tuple[tuple[int, bool], ...]) -> tuple[tuple[Key, int], ...]:
    """Canonical expansion of a ladder word as ``((key, integer coefficient), ...)``."""
    for i in range(len(word) - 1):
        (p, p_cre), (q, q_cre) = word[i], word[i + 1]
        if not p_cre and q_cre:
            # a_p a_q^dag = delta_pq - a_q^dag a_p
            swapped = word[:i] + (word[i + 1], word[i]) + word[i + 2:]
            out: dict[Key, int] = {}
            for key, c in _normal_order_word(swapped):
                out[key] = out.get(key, 0) - c
            if p == q:
                for key, c in _normal_order_word(word[:i] + word[i + 2:]):
                    out[key] = out.get(key, 0) + c
            return tuple((k, c) for k, c in out.items() if c != 0)
    cre = tuple(m for m, d in word if d)
    ann = tuple(m for m, d in word if not d)
    s1, cre = _sort_sign(cre)
    s2, ann = _sort_sign(ann)
    if s1 * s2 == 0:
        return ()
    return (((cre, ann), s1 * s2),)


def _word(key: Key) -> tuple[tuple[int, bool], ...]:
    cre, ann = key
    return tuple((m, True) for m in cre) + tuple((m, False) for m in ann)


class NormalOrderedOperator:
    """Fermionic operator as a sum of canonically normal-ordered terms."""

    def __init__(self, terms: Mapping[Key, complex] | None = None, n_modes: int = 0):
        self.n_modes = int(n_modes)
        self.terms: dict[Key, complex] = {}
        for key, c in (terms or {}).items():
            cre, ann = tuple(key[0]), tuple(key[1])
            for (k, s) in _normal_order_word(_word((cre, ann))):
                self.terms[k] = self.terms.get(k, 0) + s * complex(c)
        self._prune()

    def _prune(self) -> None:
        if not self.terms:
            return
        scale = max(abs(c) for c in self.terms.values())
        tol = ZERO_RTOL * scale
        self.terms = {k: c for k, c in self.terms.items() if abs(c) > tol}

    # construction ----------------------------------------------------------

    @classmethod
    def from_quadratic(cls, A) -> "NormalOrderedOperator":
        """``H(A) = sum_pq A_pq a_p^dag a_q``."""
        A = np.asarray(A)
        n = A.shape[0]
        _guard_modes(n, MAX_SYMBOLIC_MODES, "from_quadratic")
        terms = {((p,), (q,)): A[p, q] for p in range(n) for q in range(n) if A[p, q] != 0}
        return cls(terms, n)

    @classmethod
    def from_density_density(cls, V, U=None) -> "NormalOrderedOperator":
        """``sum_p U_p n_p + sum_{p != q} V_pq n_p n_q``."""
        V = np.asarray(V)
        n = V.shape[0]
        _guard_modes(n, MAX_SYMBOLIC_MODES, "from_density_density")
        terms: dict[Key, complex] = {}
        if U is not None:
            for p, u in enumerate(np.asarray(U).ravel()):
                if u != 0:
                    terms[((p,), (p,))] = u
        for p in range(n):
            for q in range(p + 1, n):
                c = V[p, q] + V[q, p]
                if c != 0:
                    # n_p n_q = a_p^dag a_q^dag a_q a_p = -a_p^dag a_q^dag a_p a_q
                    terms[((p, q), (p, q))] = -c
        return cls(terms, n)

    @classmethod
    def identity(cls, n_modes: int) -> "NormalOrderedOperator":
        return cls({((), ()): 1.0}, n_modes)

    # algebra ---------------------------------------------------------------

    def __add__(self, other: "NormalOrderedOperator") -> "NormalOrderedOperator":
        out = NormalOrderedOperator(n_modes=max(self.n_modes, other.n_modes))
        out.terms = dict(self.terms)
        for k, c in other.terms.items():
            out.terms[k] = out.terms.get(k, 0) + c
        out._prune()
        return out

    def __neg__(self) -> "NormalOrderedOperator":
        return self * -1.0

    def __sub__(self, other: "NormalOrderedOperator") -> "NormalOrderedOperator":
        return self + (-other)

    def __mul__(self, other):
        if np.isscalar(other):
            out = NormalOrderedOperator(n_modes=self.n_modes)
            out.terms = {k: c * other for k, c in self.terms.items()}
            out._prune()
            return out
        if len(self.terms) * len(other.terms) > MAX_TERMS:
            raise OracleLimitError(
                f"product of {len(self.terms)} x {len(other.terms)} terms exceeds "
                f"the {MAX_TERMS} term guard"
            )
        out: dict[Key, complex] = {}
        for k1, c1 in self.terms.items():
            w1 = _word(k1)
            for k2, c2 in other.terms.items():
                for k, s in _normal_order_word(w1 + _word(k2)):
                    out[k] = out.get(k, 0) + s * c1 * c2
        res = NormalOrderedOperator(n_modes=max(self.n_modes, other.n_modes))
        res.terms = out
        res._prune()
        return res

    __rmul__ = __mul__

    def adjoint(self) -> "NormalOrderedOperator":
        terms = {}
        for (cre, ann), c in self.terms.items():
            # (a^dag_C a_A)^dag = a^dag_{rev A} a_{rev C}
            terms[(tuple(reversed(ann)), tuple(reversed(cre)))] = np.conj(c)
        return NormalOrderedOperator(terms, self.n_modes)

    def is_number_preserving(self) -> bool:
        return all(len(c) == len(a) for c, a in self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"NormalOrderedOperator({len(self.terms)} terms, n_modes={self.n_modes})"

    def isclose(self, other: "NormalOrderedOperator", atol: float = 1e-10) -> bool:
        diff = self - other
        return all(abs(c) <= atol for c in diff.terms.values())

    # serialization ---------------------------------------------------------

    def to_json(self) -> str:
        rows = [
            [list(cre), list(ann), float(np.real(c)), float(np.imag(c))]
            for (cre, ann), c in sorted(self.terms.items())
        ]
        return json.dumps({"n_modes": self.n_modes, "terms": rows})

    @classmethod
    def from_json(cls, text: str) -> "NormalOrderedOperator":
        data = json.loads(text)
        terms = {(tuple(c), tuple(a)): complex(re, im) for c, a, re, im in data["terms"]}
        return cls(terms, data["n_modes"])


def commutator(A: NormalOrderedOperator, B: NormalOrderedOperator) -> NormalOrderedOperator:
    return A * B - B * A


def one_norm(op: NormalOrderedOperator, include_identity: bool = True) -> float:
    """Sum of absolute term coefficients."""
    return float(sum(abs(c) for k, c in op.terms.items()
                     if include_identity or k != ((), ())))


# --- Pauli operators --------------------------------------------------------

_PAULI_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

_PAULI_MATRIX = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}


def _pauli_mul(a: str, b: str) -> tuple[complex, str]:
    phase = 1
    out = []
    for x, y in zip(a, b):
        ph, r = _PAULI_PRODUCT[(x, y)]
        phase *= ph
        out.append(r)
    return phase, "".join(out)


class PauliOperator:
    """Sum of Pauli strings; letter ``i`` of a string acts on qubit ``i``."""

    def __init__(self, terms: Mapping[str, complex] | None = None, n_qubits: int = 0):
        self.n_qubits = n_qubits
        self.terms = {k: complex(v) for k, v in (terms or {}).items()}
        self._prune()

    def _prune(self) -> None:
        if self.terms:
            tol = ZERO_RTOL * max(abs(c) for c in self.terms.values())
            self.terms = {k: c for k, c in self.terms.items() if abs(c) > tol}

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        out: dict[str, complex] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                ph, s = _pauli_mul(a, b)
                out[s] = out.get(s, 0) + ph * ca * cb
        return PauliOperator(out, self.n_qubits)

    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return PauliOperator(out, max(self.n_qubits, other.n_qubits))

    def one_norm(self, include_identity: bool = True) -> float:
        ident = "I" * self.n_qubits
        return float(sum(abs(c) for k, c in self.terms.items()
                         if include_identity or k != ident))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= atol for c in self.terms.values())

    def to_matrix(self) -> np.ndarray:
        """Dense matrix with qubit ``i`` as bit ``i`` of the basis index."""
        dim = 2**self.n_qubits
        M = np.zeros((dim, dim), dtype=complex)
        for s, c in self.terms.items():
            mat = np.array([[1.0]])
            for letter in s:  # kron puts later factors on lower bits
                mat = np.kron(_PAULI_MATRIX[letter], mat)
            M += c * mat
        return M


@lru_cache(maxsize=4096)
def _ladder_pauli(mode: int, creation: bool, n: int) -> tuple[tuple[str, complex], ...]:
    prefix = "Z" * mode
    suffix = "I" * (n - mode - 1)
    # a^dag = (X - iY)/2 on |0> -> |1>; a = (X + iY)/2
    y = -0.5j if creation else 0.5j
    return ((prefix + "X" + suffix, 0.5), (prefix + "Y" + suffix, y))


def jordan_wigner(op: NormalOrderedOperator, n_modes: int | None = None) -> PauliOperator:
    n = op.n_modes if n_modes is None else n_modes
    _guard_modes(n, MAX_JW_MODES, "jordan_wigner")
    total: dict[str, complex] = {}
    for key, c in op.terms.items():
        acc = PauliOperator({"I" * n: c}, n)
        for mode, cre in _word(key):
            acc = acc * PauliOperator(dict(_ladder_pauli(mode, cre, n)), n)
        for s, v in acc.terms.items():
            total[s] = total.get(s, 0) + v
    return PauliOperator(total, n)


# --- fixed-particle-number sectors ------------------------------------------


def sector_basis(n_modes: int, eta: int) -> np.ndarray:
    """Occupation bitstrings of Hamming weight ``eta`` in ascending order."""
    dim = math.comb(n_modes, eta)
    if dim > MAX_SECTOR_DIM:
        raise OracleLimitError(
            f"sector dimension C({n_modes},{eta}) = {dim} exceeds {MAX_SECTOR_DIM}"
        )
    states = [sum(1 << p for p in occ) for occ in itertools.combinations(range(n_modes), eta)]
    return np.array(sorted(states), dtype=np.int64)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64)
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x = x >> 1
    return count


def _apply_ladder(states: np.ndarray, amps: np.ndarray, mode: int, creation: bool):
    bit = np.int64(1) << mode
    occupied = (states & bit) != 0
    keep = ~occupied if creation else occupied
    states, amps = states[keep], amps[keep]
    sign = 1 - 2 * (_popcount(states & (bit - 1)) & 1)
    return states ^ bit, amps * sign


def fock_matrix(op: NormalOrderedOperator, eta: int, n_modes: int | None = None) -> np.ndarray:
    """Matrix of a number-preserving operator on the ``eta``-particle sector."""
    n = op.n_modes if n_modes is None else n_modes
    if not op.is_number_preserving():
        raise NumberNonConservingError("operator changes particle number")
    basis = sector_basis(n, eta)
    index = {int(s): i for i, s in enumerate(basis)}
    dim = len(basis)
    M = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for key, c in op.terms.items():
        states, amps = basis.copy(), np.ones(dim)
        src = cols
        for mode, cre in reversed(_word(key)):
            bit = np.int64(1) << mode
            occ = (states & bit) != 0
            keep = ~occ if cre else occ
            src = src[keep]
            states, amps = _apply_ladder(states, amps, mode, cre)
        if len(states):
            rows = np.fromiter((index[int(s)] for s in states), dtype=int, count=len(states))
            np.add.at(M, (rows, src), c * amps)
    return M


def quadratic_sector(A, eta: int) -> np.ndarray:
    """``H(A)`` on the ``eta`` sector, vectorized over basis states."""
    A = np.asarray(A)
    n = A.shape[0]
    basis = sector_basis(n, eta)
    pos = np.searchsorted(basis, basis)
    dim = len(basis)
    M = np.zeros((dim, dim), dtype=np.result_type(A.dtype, float))
    occ = ((basis[:, None] >> np.arange(n)) & 1).astype(float)
    M[np.arange(dim), np.arange(dim)] = occ @ np.diag(A)
    for p in range(n):
        for q in range(n):
            if p == q or A[p, q] == 0:
                continue
            # a_p^dag a_q: q occupied, p empty
            sel = (occ[:, q] == 1) & (occ[:, p] == 0)
            src = basis[sel]
            lo, hi = min(p, q), max(p, q)
            between = ((np.int64(1) << hi) - 1) ^ ((np.int64(1) << (lo + 1)) - 1)
            sign = 1 - 2 * (_popcount(src & between) & 1)
            dst = src ^ (np.int64(1) << q) ^ (np.int64(1) << p)
            M[np.searchsorted(basis, dst), pos[sel]] += A[p, q] * sign
    return M


def density_sector(V, U=None, eta: int = 1) -> np.ndarray:
    """Diagonal of ``sum_p U_p n_p + sum_{p != q} V_pq n_p n_q`` on the sector."""
    V = np.asarray(V, dtype=float)
    n = V.shape[0]
    basis = sector_basis(n, eta)
    occ = ((basis[:, None] >> np.arange(n)) & 1).astype(float)
    Voff = V - np.diag(np.diag(V))
    d = np.einsum("sp,pq,sq->s", occ, Voff, occ)
    if U is not None:
        d = d + occ @ np.asarray(U, dtype=float)
    return d


def _expi(H: np.ndarray, t: float) -> np.ndarray:
    w, v = scipy.linalg.eigh(H)
    return (v * np.exp(1j * t * w)) @ v.conj().T


def _expi_diag(d: np.ndarray, t: float) -> np.ndarray:
    return np.exp(1j * t * d)


def sector_hamiltonian(T, U, V, eta: int) -> tuple[np.ndarray, np.ndarray]:
    """``(H_t, diag(H_v))`` on the ``eta`` sector."""
    return quadratic_sector(T, eta).real, density_sector(V, U, eta)


def exact_trotter_error(T, U, V, t: float, ordering: str = VTV, eta: int = 1) -> float:
    """``|| e^{itH} - U_2(t) ||`` restricted to the ``eta``-particle sector."""
    Ht, hv = sector_hamiltonian(T, U, V, eta)
    exact = _expi(Ht + np.diag(hv), t)
    if ordering == VTV:
        half = _expi_diag(hv, t / 2)
        step = half[:, None] * _expi(Ht, t) * half[None, :]
    elif ordering == TVT:
        half = _expi(Ht, t / 2)
        step = (half * _expi_diag(hv, t)[None, :]) @ half
    else:
        raise ValueError(f"ordering must be {VTV!r} or {TVT!r}")
    return float(np.linalg.norm(exact - step, 2))


def exact_commutator_norms(T, U, V, eta: int) -> dict[str, float]:
    """Exact sector norms of ``[H_t,H_v]``, ``[[H_t,H_v],H_t]`` and ``[[H_t,H_v],H_v]``."""
    Ht, hv = sector_hamiltonian(T, U, V, eta)
    c1 = Ht * (hv[None, :] - hv[:, None])  # [Ht, Hv] with Hv diagonal
    tvt = c1 @ Ht - Ht @ c1
    tvv = c1 * (hv[None, :] - hv[:, None])
    return {
        "first": float(np.linalg.norm(c1, 2)),
        "tvt": float(np.linalg.norm(tvt, 2)),
        "tvv": float(np.linalg.norm(tvv, 2)),
    }


def trotter_hamiltonian_parts(T, U, V) -> tuple[NormalOrderedOperator, NormalOrderedOperator]:
    return (NormalOrderedOperator.from_quadratic(T),
            NormalOrderedOperator.from_density_density(V, U))


def _nested(Ht, Hv):
    c = commutator(Ht, Hv)
    return c, commutator(c, Ht), commutator(c, Hv)


def fermionic_commutator_bound(T, U, V) -> dict[str, float]:
    """Term-wise 1-norm bounds on the nested commutators and the resulting ``W_2``."""
    Ht, Hv = trotter_hamiltonian_parts(T, U, V)
    c, tvt, tvv = _nested(Ht, Hv)
    return _assemble(one_norm(c), one_norm(tvt), one_norm(tvv))


def pauli_commutator_bound(T, U, V) -> dict[str, float]:
    """As :func:`fermionic_commutator_bound` with Pauli 1-norms after Jordan-Wigner."""
    Ht, Hv = trotter_hamiltonian_parts(T, U, V)
    n = Ht.n_modes
    _guard_modes(n, MAX_JW_MODES, "pauli_commutator_bound")
    c, tvt, tvv = _nested(Ht, Hv)
    return _assemble(jordan_wigner(c, n).one_norm(), jordan_wigner(tvt, n).one_norm(),
                     jordan_wigner(tvv, n).one_norm())


def _assemble(first: float, tvt: float, tvv: float) -> dict[str, float]:
    w2_vtv = (tvt + tvv / 2) / 12
    w2_tvt = (tvv + tvt / 2) / 12
    return {"first": first, "tvt": tvt, "tvv": tvv, "W2_vtv": w2_vtv,
            "W2_tvt": w2_tvt, "W2_best": min(w2_vtv, w2_tvt)}


# --- soundness harness ------------------------------------------------------

# 2D spinful lattices realising each spin-orbital count
SOUNDNESS_LATTICES = {4: (2, 1), 6: (3, 1), 8: (2, 2), 10: (5, 1), 12: (3, 2)}
SOUNDNESS_RS = (1.0, 5.0, 10.0)
SOUNDNESS_TIMES = (0.01, 0.1)
SOUNDNESS_RTOL = 1e-9


def check_soundness(spec, times=SOUNDNESS_TIMES, methods=None) -> list[dict]:
    """Compare every bound with the exact sector quantity for ``spec``.

    Returns one row per (method, quantity) with the bound, the exact value
    and an ``ok`` flag.  Quantities are the three nested commutators and the
    Trotter error of both orderings at each time in ``times``.
    """
    from . import bounds as bd
    from .hamiltonian import build_matrices

    methods = tuple(methods or (bd.fz.SPECTRAL, bd.fz.CHOLESKY, bd.fz.COSINE, bd.SHC))
    m = build_matrices(spec)
    exact = exact_commutator_norms(m.T, m.U, m.V, spec.eta)
    errors = {
        (order, t): exact_trotter_error(m.T, m.U, m.V, t, order, spec.eta)
        for order in (VTV, TVT) for t in times
    }
    rows = []
    for rep in bd.bound_suite(spec, methods):
        base = {"method": rep.method, "N": spec.n_orbitals, "eta": spec.eta,
                "r_s": spec.wigner_seitz}
        if rep.error:
            rows.append({**base, "quantity": "error", "bound": float("nan"),
                         "exact": float("nan"), "ok": False, "message": rep.error})
            continue
        pairs = [("first", rep.first_order_seminorm, exact["first"]),
                 ("tvt", rep.tvt, exact["tvt"]),
                 ("tvv", rep.tvv, exact["tvv"])]
        for (order, t), err in errors.items():
            w = rep.W2_vtv if order == VTV else rep.W2_tvt
            pairs.append((f"trotter_{order}_t={t:g}", w * t**3, err))
        for name, bound, value in pairs:
            ok = bound >= value * (1 - SOUNDNESS_RTOL) - 1e-14
            rows.append({**base, "quantity": name, "bound": float(bound),
                         "exact": float(value), "ok": bool(ok), "message": ""})
    return rows


def soundness_specs(n_values=tuple(SOUNDNESS_LATTICES), rs_values=SOUNDNESS_RS):
    """Jellium specs covering ``eta = 1 .. N/2`` for each lattice and ``r_s``."""
    from .hamiltonian import SystemSpec

    for n in n_values:
        sides = SOUNDNESS_LATTICES[n]
        for rs in rs_values:
            for eta in range(1, n // 2 + 1):
                yield SystemSpec.jellium(sides, eta, rs)
