"""First- and second-order Trotter commutator bounds in the fermionic seminorm.

The Hamiltonian is split as ``H = H_t + H_v`` with ``H_t = H(T)`` and
``H_v = H(U) + sum_l w_l H(X_l) H(Y_l)``.  Expanding the nested commutators
with ``[H(A), H(B)] = H([A, B])`` and applying the triangle and Holder
inequalities leaves a sum of products of reduced seminorms of ``N x N``
matrices.  For diagonal factors every commutator ``[T, A]`` and
``[[T, A], B]`` is formed entrywise, so the pair loop costs one ``N x N``
eigensolve per factor pair and keeps memory at ``O(N^2)``.

All bound functions accept either a single electron number or a sequence;
with a sequence every spectrum is computed once and reused.
"""

from __future__ import annotations

import math
import time
import tracemalloc
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from . import factorization as fz
from .factorization import FactorizedPotential
from .hamiltonian import SystemSpec, build_matrices
from .seminorm import GENERAL, classify, seminorm_profile, spectrum

SHC = "shc"
ALL_METHODS = (fz.SPECTRAL, fz.CHOLESKY, fz.COSINE, SHC)


class HermiticityError(ArithmeticError):
    pass


@dataclass
class BoundReport:
    method: str
    eta: int
    first_order_seminorm: float
    W1: float
    tvt: float
    tvv: float
    W2_vtv: float
    W2_tvt: float
    W2_best: float
    shift: float = 0.0
    N: int = 0
    r_s: float = float("nan")
    sides: tuple = ()
    tvv_unmerged: float = float("nan")
    wall_time_s: float = 0.0
    peak_mem_bytes: int = 0
    error: str = ""

    @classmethod
    def assemble(cls, method: str, eta: int, first: float, tvt: float,
                 tvv: float, **extra) -> "BoundReport":
        first, tvt, tvv = float(first), float(tvt), float(tvv)
        w2_vtv = (tvt + tvv / 2.0) / 12.0
        w2_tvt = (tvv + tvt / 2.0) / 12.0
        return cls(method, int(eta), float(first), float(first) / 2.0,
                   float(tvt), float(tvv), w2_vtv, w2_tvt, min(w2_vtv, w2_tvt),
                   **extra)

    @classmethod
    def failed(cls, method: str, eta: int, message: str, **extra) -> "BoundReport":
        nan = float("nan")
        return cls(method, int(eta), nan, nan, nan, nan, nan, nan, nan,
                   error=message, **extra)

    @property
    def best_ordering(self) -> str:
        return "vtv" if self.W2_vtv <= self.W2_tvt else "tvt"

    def row(self) -> dict:
        d = asdict(self)
        d["sides"] = "x".join(str(s) for s in self.sides)
        return d


# --- seminorm helpers -------------------------------------------------------


def _etas(eta) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(eta) == 0
    return np.atleast_1d(np.asarray(eta, dtype=int)), scalar


def _out(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


class _Seminorm:
    """Seminorm evaluator for a fixed set of electron numbers."""

    def __init__(self, etas: np.ndarray, n: int, check: bool = False):
        if np.any(etas < 0) or np.any(etas > n):
            raise ValueError(f"eta values {etas} outside [0, {n}]")
        self.etas = etas
        self.check = check
        self.zero = np.zeros(len(etas))
        self.calls = 0

    def diag(self, d: np.ndarray) -> np.ndarray:
        return seminorm_profile(d, self.etas)

    def sym(self, A: np.ndarray) -> np.ndarray:
        """Real symmetric (hermitian) matrix."""
        self.calls += 1
        if self.check and not np.allclose(A, A.T, rtol=0, atol=1e-10 * np.abs(A).max()):
            raise HermiticityError("expected a hermitian coefficient matrix")
        w = scipy.linalg.eigh(A, eigvals_only=True, check_finite=False)
        return seminorm_profile(w, self.etas)

    def antisym(self, K: np.ndarray) -> np.ndarray:
        """Real antisymmetric (anti-hermitian) matrix."""
        self.calls += 1
        if self.check and not np.allclose(K, -K.T, rtol=0, atol=1e-10 * np.abs(K).max()):
            raise HermiticityError("expected an anti-hermitian coefficient matrix")
        if not np.any(K):
            return self.zero
        w = scipy.linalg.eigh(-1j * K, eigvals_only=True, check_finite=False)
        return seminorm_profile(w, self.etas)

    def general(self, A: np.ndarray) -> np.ndarray:
        """Dense matrix, hermitian or anti-hermitian up to rounding."""
        self.calls += 1
        if not np.any(A):
            return self.zero
        sym = classify(A)
        if sym == GENERAL:
            raise HermiticityError("commutator is neither hermitian nor anti-hermitian")
        return seminorm_profile(spectrum(A, sym), self.etas)


def _dmat(a: np.ndarray) -> np.ndarray:
    """``D_pq = a_q - a_p`` so that ``[T, diag(a)] = T * D``."""
    return a[None, :] - a[:, None]


def _nested_t(K: np.ndarray, T: np.ndarray) -> np.ndarray:
    """``[K, T]`` for antisymmetric ``K`` and symmetric ``T``; exactly symmetric."""
    M = K @ T
    return M + M.T


def _comm(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


# --- diagonal fast path -----------------------------------------------------


@dataclass
class _FactorStats:
    """Per-factor seminorms shared by all bound pieces (diagonal factors)."""

    sx: np.ndarray
    sy: np.ndarray
    s_tx: np.ndarray
    s_ty: np.ndarray
    s_txt: np.ndarray
    s_tyt: np.ndarray
    s_txu: np.ndarray
    s_tyu: np.ndarray


def _single_stats(T, u, a, S: _Seminorm):
    K = T * _dmat(a)
    s_ua = S.sym(K * _dmat(u)) if np.any(u) else S.zero
    return S.diag(a), S.antisym(K), S.sym(_nested_t(K, T)), s_ua


def _diag_stats(T, u, w, x, y, same, S: _Seminorm) -> _FactorStats:
    """Stats for the factor pair ``(w x, y)``."""
    if same:
        # X = w y: every X-side seminorm is |w| times the Y-side one
        sy, s_ty, s_tyt, s_tyu = _single_stats(T, u, y, S)
        a = abs(w)
        return _FactorStats(a * sy, sy, a * s_ty, s_ty, a * s_tyt, s_tyt,
                            a * s_tyu, s_tyu)
    sx, s_tx, s_txt, s_txu = _single_stats(T, u, w * x, S)
    sy, s_ty, s_tyt, s_tyu = _single_stats(T, u, y, S)
    return _FactorStats(sx, sy, s_tx, s_ty, s_txt, s_tyt, s_txu, s_tyu)


def _evaluate_diagonal(T, fac: FactorizedPotential, S: _Seminorm, orders):
    u = np.asarray(fac.one_body, dtype=float)
    if u.ndim == 2:
        u = np.diag(u)
    n_f = fac.n_factors
    w = fac.weights
    X = fac.X
    Y = fac.Y
    same = fac.same_xy
    Du = _dmat(u)
    has_u = bool(np.any(u))
    Ktu = T * Du

    first = S.antisym(Ktu) if has_u else S.zero.copy()
    tvt = S.sym(_nested_t(Ktu, T)) if has_u else S.zero.copy()
    tvv_base = S.sym(Ktu * Du) if has_u else S.zero.copy()

    stats = []
    for l in range(n_f):
        st = _diag_stats(T, u, w[l], X[l], Y[l], same, S)
        stats.append(st)
        first = first + st.s_tx * st.sy + st.s_ty * st.sx
        tvt = tvt + 2 * st.s_tx * st.s_ty + st.s_txt * st.sy + st.sx * st.s_tyt
        # [Y, U] = [X, U] = 0 for diagonal matrices; [[T,U],X] = [[T,X],U]
        tvv_base = tvv_base + 2 * (st.s_txu * st.sy + st.sx * st.s_tyu)

    if 2 not in orders:
        return first, tvt, tvv_base, tvv_base

    pair = S.zero.copy()
    if same:
        # all four surviving pair terms equal |w_l w_m| S([[T,v_l],v_m]) S(v_l) S(v_m)
        absw = np.abs(w)
        for l in range(n_f):
            TD = T * _dmat(Y[l])
            row = S.zero.copy()
            for m in range(l, n_f):
                c = S.sym(TD * _dmat(Y[m]))
                term = absw[l] * absw[m] * c * stats[l].sy * stats[m].sy
                row = row + (term if m == l else 2 * term)
            pair = pair + 4 * row
    else:
        for l in range(n_f):
            xl = w[l] * X[l]
            TDx, TDy = T * _dmat(xl), T * _dmat(Y[l])
            row = S.zero.copy()
            for m in range(n_f):
                xm = w[m] * X[m]
                Dxm, Dym = _dmat(xm), _dmat(Y[m])
                sl, sm = stats[l], stats[m]
                row = row + (
                    S.sym(TDx * Dxm) * sl.sy * sm.sy
                    + sm.sx * S.sym(TDx * Dym) * sl.sy
                    + sl.sx * S.sym(TDy * Dxm) * sm.sy
                    + sm.sx * sl.sx * S.sym(TDy * Dym)
                )
            pair = pair + row
    tvv = tvv_base + pair
    # the merged and unmerged variants coincide for diagonal factors
    return first, tvt, tvv, tvv


# --- dense (generic) path ---------------------------------------------------


def _evaluate_dense(T, fac: FactorizedPotential, S: _Seminorm, orders):
    U = fac.one_body_matrix().astype(float)
    n_f = fac.n_factors
    Xs, Ys = [], []
    for l in range(n_f):
        wl, x, y = fac.dense_factor(l)
        Xs.append(wl * x)
        Ys.append(y)
    g = S.general
    TU = _comm(T, U)
    first = g(TU)
    tvt = g(_comm(TU, T))
    base = g(_comm(TU, U))

    sx = [g(x) for x in Xs]
    sy = [g(y) for y in Ys]
    TX = [_comm(T, x) for x in Xs]
    TY = [_comm(T, y) for y in Ys]
    s_tx = [g(a) for a in TX]
    s_ty = [g(a) for a in TY]
    for l in range(n_f):
        first = first + s_tx[l] * sy[l] + s_ty[l] * sx[l]
        tvt = tvt + (2 * s_tx[l] * g(_comm(Ys[l], T)) + g(_comm(TX[l], T)) * sy[l]
                     + sx[l] * g(_comm(TY[l], T)))
        base = base + (
            s_tx[l] * g(_comm(Ys[l], U))
            + g(_comm(TX[l], U)) * sy[l]
            + sx[l] * g(_comm(TY[l], U))
            + g(_comm(Xs[l], U)) * s_ty[l]
            + g(_comm(TU, Xs[l])) * sy[l]
            + g(_comm(TU, Ys[l])) * sx[l]
        )
    if 2 not in orders:
        return first, tvt, base, base

    common = S.zero.copy()
    split = S.zero.copy()
    merged = S.zero.copy()
    for l in range(n_f):
        for m in range(n_f):
            common = common + (
                s_tx[l] * g(_comm(Ys[l], Xs[m])) * sy[m]
                + g(_comm(TX[l], Xs[m])) * sy[l] * sy[m]
                + sx[m] * s_tx[l] * g(_comm(Ys[l], Ys[m]))
                + g(_comm(Xs[l], Xs[m])) * s_ty[l] * sy[m]
                + sx[m] * sx[l] * g(_comm(TY[l], Ys[m]))
                + sx[m] * g(_comm(Xs[l], Ys[m])) * s_ty[l]
            )
            split = split + (
                sx[m] * g(_comm(TX[l], Ys[m])) * sy[l]
                + sx[l] * g(_comm(TY[l], Xs[m])) * sy[m]
            )
            merged = merged + sx[l] * g(
                _comm(TY[l], Xs[m]) + _comm(TX[m], Ys[l])
            ) * sy[m]
    unmerged = base + common + split
    tvv = np.minimum(unmerged, base + common + merged)
    return first, tvt, tvv, unmerged


def evaluate_bounds(T, fac: FactorizedPotential, eta, orders=(1, 2),
                    force_dense: bool = False, check: bool = False):
    """All bound pieces in one pass.

    Returns:
        ``(first, tvt, tvv, tvv_unmerged)``; floats for scalar ``eta``,
        arrays otherwise.
    """
    T = np.asarray(T, dtype=float)
    etas, scalar = _etas(eta)
    S = _Seminorm(etas, len(T), check)
    if fac.diagonal_factors and not force_dense:
        res = _evaluate_diagonal(T, fac, S, orders)
    else:
        res = _evaluate_dense(T, fac, S, orders)
    return tuple(_out(np.asarray(r, dtype=float), scalar) for r in res)


def first_order_bound(T, U, fac: FactorizedPotential, eta):
    """Bound on ``||[H_t, H_v]||_eta``.

    ``U`` replaces the factorization's one-body part when given.
    """
    fac = _with_one_body(fac, U)
    return evaluate_bounds(T, fac, eta, orders=(1,))[0]


def second_order_tvt(T, U, fac: FactorizedPotential, eta):
    """Bound on ``||[[H_t, H_v], H_t]||_eta``."""
    fac = _with_one_body(fac, U)
    return evaluate_bounds(T, fac, eta, orders=(1,))[1]


def second_order_tvv(T, U, fac: FactorizedPotential, eta, variant: str = "min",
                     force_dense: bool = False):
    """Bound on ``||[[H_t, H_v], H_v]||_eta``.

    ``variant`` is ``"min"`` (default; the smaller of the merged and unmerged
    expansions) or ``"unmerged"``.
    """
    fac = _with_one_body(fac, U)
    res = evaluate_bounds(T, fac, eta, force_dense=force_dense)
    return res[3] if variant == "unmerged" else res[2]


def _with_one_body(fac: FactorizedPotential, U) -> FactorizedPotential:
    if U is None:
        return fac
    U = np.asarray(U, dtype=float)
    if U.ndim == 2 and fac.diagonal_factors and not np.any(U - np.diag(np.diag(U))):
        U = np.diag(U)
    return FactorizedPotential(U, fac.weights, fac.X, fac.Y, fac.method, fac.shift,
                               fac.diagonal_factors, fac.dropped_constant)


def general_factor_first_order(h_tilde, fac: FactorizedPotential, eta):
    """First-order ``W_1`` bound for ``H(h) + sum_j w_j H(X_j) H(X_j)``.

    ``sum_j |w_j| S([h, X_j]) S(X_j)
    + 2 sum_{i<j} |w_i w_j| S([X_i, X_j]) S(X_i) S(X_j)``.
    """
    etas, scalar = _etas(eta)
    h = np.asarray(h_tilde)
    S = _Seminorm(etas, len(h))
    n_f = fac.n_factors
    Xs = [fac.dense_factor(l)[1] for l in range(n_f)]
    absw = np.abs(fac.weights)
    sx = [S.general(x) for x in Xs]
    total = S.zero.copy()
    for j in range(n_f):
        total = total + absw[j] * S.general(_comm(h, Xs[j])) * sx[j]
    for i in range(n_f):
        for j in range(i + 1, n_f):
            c = _comm(Xs[i], Xs[j])
            if np.any(c):
                total = total + 2 * absw[i] * absw[j] * S.general(c) * sx[i] * sx[j]
    return _out(total, scalar)


# --- SHC analytic bound -----------------------------------------------------


def shc_bound(T, V, eta):
    """Closed-form bound from ``||T||`` and ``max |V_pq|``.

    Returns ``(first, tvt, tvv, W2)`` with

        tvt = 16 |T|^2 |V|max eta^2 + 4 |T|^2 |V|max eta
        tvv = 24 |T| |V|max^2 eta^3 + 12 |T| |V|max^2 eta^2

    and ``W2`` the better of the two orderings.  ``first`` counts the six
    terms of ``[H_t, H_v]`` the same way: ``4 |T| |V|max eta^2 + 2 |T| |V|max eta``.
    """
    t = float(np.linalg.norm(T, 2)) if np.size(T) else 0.0
    v = float(np.max(np.abs(V))) if np.size(V) else 0.0
    eta = np.asarray(eta, dtype=float)
    first = 4 * t * v * eta**2 + 2 * t * v * eta
    tvt = 16 * t**2 * v * eta**2 + 4 * t**2 * v * eta
    tvv = 24 * t * v**2 * eta**3 + 12 * t * v**2 * eta**2
    w2 = np.minimum(tvt + tvv / 2, tvv + tvt / 2) / 12
    if eta.ndim == 0:
        return float(first), float(tvt), float(tvv), float(w2)
    return first, tvt, tvv, w2


# --- suite ------------------------------------------------------------------


def factorize(spec: SystemSpec, method: str, V=None, U=None,
              shift: float | None = None) -> FactorizedPotential:
    """Factorize the potential of ``spec`` with the method's default shift."""
    if method == fz.COSINE:
        return fz.cosine_decompose(spec)
    if V is None or U is None:
        m = build_matrices(spec)
        V, U = m.V, m.U
    if method == fz.SPECTRAL:
        return fz.spectral_decompose(V, 0.0 if shift is None else shift, U)
    if method == fz.CHOLESKY:
        return fz.cholesky_decompose(V, shift, U)
    raise ValueError(f"unknown method {method!r}")


def _run_method(spec, method, etas, T, U, V, shift, track_memory):
    if method == SHC:
        first, tvt, tvv, _ = shc_bound(T, V, etas)
        return [
            BoundReport.assemble(SHC, e, first[i], tvt[i], tvv[i],
                                 tvv_unmerged=float(tvv[i]))
            for i, e in enumerate(etas)
        ]
    fac = factorize(spec, method, V, U, shift)
    first, tvt, tvv, unmerged = evaluate_bounds(T, fac, etas)
    return [
        BoundReport.assemble(method, e, first[i], tvt[i], tvv[i], shift=fac.shift,
                             tvv_unmerged=float(unmerged[i]))
        for i, e in enumerate(etas)
    ]


def bound_suite(spec: SystemSpec, methods: Iterable[str] = ALL_METHODS,
                eta=None, shift: dict | None = None,
                track_memory: bool = False) -> list[BoundReport]:
    """Build the system, factorize per method and evaluate every bound.

    Args:
        spec: System definition; its ``eta`` sets the cell volume.
        methods: Any of ``spectral``, ``cholesky``, ``cosine``, ``shc``.
        eta: Electron number(s) for the seminorm; defaults to ``spec.eta``.
            A sequence yields one report per value and method.
        shift: Optional per-method chemical potential override.
        track_memory: Record peak traced allocation per method.

    A failing method yields a report with ``error`` set instead of aborting.
    """
    etas = [spec.eta] if eta is None else list(np.atleast_1d(eta))
    shift = shift or {}
    m = build_matrices(spec)
    reports = []
    for method in methods:
        t0 = time.perf_counter()
        if track_memory:
            tracemalloc.start()
        try:
            rows = _run_method(spec, method, etas, m.T, m.U, m.V,
                               shift.get(method), track_memory)
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            rows = [BoundReport.failed(method, e, f"{type(exc).__name__}: {exc}")
                    for e in etas]
        peak = 0
        if track_memory:
            peak = tracemalloc.get_traced_memory()[1]
            tracemalloc.stop()
        elapsed = time.perf_counter() - t0
        for r in rows:
            r.N, r.r_s, r.sides = spec.n_orbitals, spec.wigner_seitz, spec.sides
            r.wall_time_s, r.peak_mem_bytes = elapsed, peak
        reports.extend(rows)
    return reports


def best_report(reports: Sequence[BoundReport],
                methods: Iterable[str] = (fz.SPECTRAL, fz.CHOLESKY, fz.COSINE, SHC)
                ) -> BoundReport:
    """Report with the smallest finite ``W2_best`` among ``methods``."""
    methods = set(methods)
    ok = [r for r in reports if r.method in methods and math.isfinite(r.W2_best)]
    if not ok:
        raise ValueError("no successful bound reports")
    return min(ok, key=lambda r: r.W2_best)


def optimize_shift(spec: SystemSpec, method: str, eta: int | None = None,
                   xatol: float = 1e-4) -> tuple[float, BoundReport]:
    """Bounded scalar search over the chemical potential minimizing ``W2_best``."""
    from scipy.optimize import minimize_scalar

    eta = spec.eta if eta is None else eta
    m = build_matrices(spec)
    vmax = float(np.max(np.abs(m.V)))
    lo, hi = -vmax, vmax
    if method == fz.CHOLESKY:
        lo = fz.min_pd_shift(m.V)
        hi = lo + 2 * vmax

    def objective(c):
        try:
            fac = factorize(spec, method, m.V, m.U, c)
        except fz.FactorizationError:
            return np.inf
        first, tvt, tvv, _ = evaluate_bounds(m.T, fac, eta)
        return min(tvt + tvv / 2, tvv + tvt / 2) / 12

    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol})
    fac = factorize(spec, method, m.V, m.U, res.x)
    first, tvt, tvv, unmerged = evaluate_bounds(m.T, fac, eta)
    report = BoundReport.assemble(method, eta, first, tvt, tvv, shift=float(res.x),
                                  tvv_unmerged=unmerged, N=spec.n_orbitals,
                                  r_s=spec.wigner_seitz, sides=spec.sides)
    return float(res.x), report
