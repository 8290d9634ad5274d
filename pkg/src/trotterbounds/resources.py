"""Phase-estimation gate counts from a second-order Trotter error constant.

A Trotter step applies one ``H_v`` layer (diagonal in the plane-wave dual
basis), a basis change, one ``H_t`` layer (diagonal in the plane-wave basis)
and the inverse basis change.  Equal-angle rotations are merged with Hamming
weight phasing (HWP).  Directionally controlled phase estimation makes the
controlled step cost the same as the uncontrolled one.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .hamiltonian import SystemSpec, build_matrices

PE_CONSTANT = 0.76 * math.pi
FFFT_T_COUNT = {8: 26, 16: 81}
DEFAULT_HWP_CAP = 14
ANGLE_DECIMALS = 12
EXTRA_QUBITS = 2  # phase-estimation control and synthesis ancilla

FFT = "fft"
GIVENS = "givens"
AUTO = "auto"
NONE = "none"


class BudgetError(ValueError):
    pass


class BasisChangeError(ValueError):
    pass


@dataclass(frozen=True)
class SynthesisModel:
    """T gates per arbitrary rotation: ``ceil(a log2(1/eps) + b)``."""

    a: float = 1.15
    b: float = 9.2

    def __post_init__(self) -> None:
        if not self.a > 0 or self.b < 0:
            raise ValueError("synthesis model needs a > 0 and b >= 0")

    def t_count(self, eps: float) -> int:
        if not 0 < eps < 1:
            raise ValueError(f"rotation accuracy must lie in (0, 1), got {eps}")
        return math.ceil(self.a * math.log2(1.0 / eps) + self.b)


@dataclass(frozen=True)
class ErrorBudget:
    delta_total: float
    delta_pe: float
    delta_ts: float
    delta_syn: float

    def __post_init__(self) -> None:
        parts = (self.delta_pe, self.delta_ts, self.delta_syn)
        if min(parts) <= 0:
            raise BudgetError("every budget share must be positive")
        if sum(parts) > self.delta_total * (1 + 1e-12):
            raise BudgetError("budget shares exceed the total")

    @classmethod
    def split(cls, delta_total: float, ts_fraction: float,
              syn_fraction: float) -> "ErrorBudget":
        ts, syn = float(ts_fraction), float(syn_fraction)
        pe = 1.0 - ts - syn
        return cls(float(delta_total), pe * delta_total, ts * delta_total,
                   syn * delta_total)


@dataclass(frozen=True)
class StepCost:
    """Per-step gate tallies independent of the synthesis accuracy."""

    rotations: int
    toffolis: int
    fixed_t: int = 0
    hwp_ancillas: int = 0
    potential_rotations: int = 0
    kinetic_rotations: int = 0
    basis_rotations: int = 0
    basis_change: str = NONE


@dataclass
class ResourceEstimate:
    W2: float
    delta_total: float
    budget: ErrorBudget
    N_PE: int
    t: float
    rotations_per_step: int
    toffolis_per_step: int
    t_per_rotation: int
    eps_rotation: float
    N_T: int
    N_tof: int
    aggregated: int = field(init=False)
    ancilla: int = 0
    qubitization_T: float = float("nan")
    qubitization_ancilla: int = 0
    lambda_: float = float("nan")

    def __post_init__(self) -> None:
        self.aggregated = self.N_T + 4 * self.N_tof

    def row(self) -> dict:
        d = asdict(self)
        budget = d.pop("budget")
        d["lambda"] = d.pop("lambda_")
        d.update({f"budget_{k}": v for k, v in budget.items() if k != "delta_total"})
        return d


# --- elementary error terms -------------------------------------------------


def pe_error(n_pe: int, t: float) -> float:
    """RMS phase-estimation error after ``n_pe`` directionally controlled steps."""
    if n_pe < 1 or not t > 0:
        raise ValueError("need n_pe >= 1 and t > 0")
    return PE_CONSTANT / (n_pe * t)


def trotter_energy_error(W2: float, t: float) -> float:
    if W2 < 0 or not t > 0:
        raise ValueError("need W2 >= 0 and t > 0")
    return W2 * t * t


def delta_from_mha(mha_per_electron: float, eta: int) -> float:
    """Extensive energy budget in Hartree."""
    return mha_per_electron * eta * 1e-3


# --- Hamming weight phasing -------------------------------------------------


def hamming_weight(k: int) -> int:
    return bin(k).count("1")


def _hwp_single(k: int) -> tuple[int, int]:
    return k.bit_length(), k - hamming_weight(k)


def max_group_size(cap: int) -> int:
    """Largest ``k`` whose HWP ancilla count ``k - w(k)`` fits under ``cap``."""
    k = 1
    while (k + 1) - hamming_weight(k + 1) <= cap:
        k += 1
    # k - w(k) is nondecreasing, so the first failure is final
    return k


def hwp_counts(k: int, ancilla_cap: int = DEFAULT_HWP_CAP) -> tuple[int, int, int]:
    """``(rotations, toffolis, ancillas)`` for ``k`` equal-angle rotations.

    Groups too large for ``ancilla_cap`` are split into maximal admissible
    subgroups plus a remainder.
    """
    if k < 1:
        raise ValueError("group size must be positive")
    kmax = max_group_size(ancilla_cap)
    full, rest = divmod(k, kmax)
    rot, tof = 0, 0
    anc = 0
    sizes = [kmax] * full + ([rest] if rest else [])
    for size in sizes:
        r, t = _hwp_single(size)
        rot += r
        tof += t
        anc = max(anc, t)
    return rot, tof, anc


def angle_groups(values: np.ndarray, decimals: int = ANGLE_DECIMALS) -> np.ndarray:
    """Multiplicities of distinct nonzero values after rounding."""
    rounded = np.round(np.asarray(values, dtype=float), decimals)
    rounded = rounded[rounded != 0]
    if rounded.size == 0:
        return np.zeros(0, dtype=int)
    _, counts = np.unique(rounded, return_counts=True)
    return counts


def _grouped_cost(counts, cap: int) -> tuple[int, int, int]:
    rot = tof = anc = 0
    for k in counts:
        r, t, a = hwp_counts(int(k), cap)
        rot += r
        tof += t
        anc = max(anc, a)
    return rot, tof, anc


# --- basis change -----------------------------------------------------------


def _applications(spec: SystemSpec, axis: int) -> int:
    """Number of 1D transforms along ``axis`` (each spin sector separately)."""
    others = math.prod(s for i, s in enumerate(spec.sides) if i != axis)
    return (2 if spec.spinful else 1) * others


def fft_supported(spec: SystemSpec) -> bool:
    return all(s in FFFT_T_COUNT for s in spec.sides)


def fft_t_count(spec: SystemSpec) -> int:
    """T gates for one basis change by fermionic FFTs."""
    if not fft_supported(spec):
        raise BasisChangeError(
            f"no FFFT T-count for sides {spec.sides} (known: {sorted(FFFT_T_COUNT)}); "
            "use basis_change='givens'"
        )
    return sum(_applications(spec, i) * FFFT_T_COUNT[s] for i, s in enumerate(spec.sides))


def givens_cost(spec: SystemSpec, cap: int) -> tuple[int, int, int]:
    """``(rotations, toffolis, ancillas)`` for one Givens-network basis change."""
    rot = tof = anc = 0
    for i, m in enumerate(spec.sides):
        pairs = math.comb(m, 2)
        if pairs == 0:
            continue
        # each Givens rotation is two equal-angle rotations, grouped across applications
        r, t, a = hwp_counts(2 * _applications(spec, i), cap)
        rot += pairs * r
        tof += pairs * t
        anc = max(anc, a)
    return rot, tof, anc


# --- per-step cost ----------------------------------------------------------


def trotter_step_cost(spec: SystemSpec, T=None, V=None, basis_change: str = AUTO,
                      hwp_cap: int = DEFAULT_HWP_CAP,
                      directional_control: bool = True) -> StepCost:
    """Rotation and Toffoli tallies of one (directionally controlled) Trotter step.

    ``basis_change`` is ``fft``, ``givens``, ``auto`` (fft when supported)
    or ``none`` (skip the basis change, e.g. for a diagonal ``T``).
    """
    if T is None or V is None:
        m = build_matrices(spec)
        T = m.T if T is None else T
        V = m.V if V is None else V
    T = np.asarray(T, dtype=float)
    V = np.asarray(V, dtype=float)
    iu = np.triu_indices(len(V), 1)
    v_rot, v_tof, v_anc = _grouped_cost(angle_groups(V[iu]), hwp_cap)
    evals = np.linalg.eigvalsh(T)
    k_rot, k_tof, k_anc = _grouped_cost(angle_groups(evals), hwp_cap)

    mode = basis_change
    if mode == AUTO:
        mode = FFT if fft_supported(spec) else GIVENS
    b_rot = b_tof = b_anc = fixed_t = 0
    if mode == FFT:
        fixed_t = 2 * fft_t_count(spec)
    elif mode == GIVENS:
        r, t, b_anc = givens_cost(spec, hwp_cap)
        b_rot, b_tof = 2 * r, 2 * t
    elif mode != NONE:
        raise ValueError(f"unknown basis_change {basis_change!r}")

    factor = 1 if directional_control else 2
    rotations = factor * (v_rot + k_rot + b_rot)
    return StepCost(rotations, factor * (v_tof + k_tof + b_tof), factor * fixed_t,
                    max(v_anc, k_anc, b_anc), factor * v_rot, factor * k_rot,
                    factor * b_rot, mode)


# --- budget optimization ----------------------------------------------------


def evaluate_budget(W2: float, budget: ErrorBudget, step: StepCost,
                    synthesis: SynthesisModel = SynthesisModel()) -> ResourceEstimate:
    t = math.sqrt(budget.delta_ts / W2)
    n_pe = math.ceil(PE_CONSTANT / (budget.delta_pe * t))
    rotations = max(step.rotations, 1)
    eps = budget.delta_syn * t / rotations
    t_rot = synthesis.t_count(eps)
    n_t = n_pe * (step.rotations * t_rot + step.fixed_t)
    return ResourceEstimate(
        W2=W2, delta_total=budget.delta_total, budget=budget, N_PE=n_pe, t=t,
        rotations_per_step=step.rotations, toffolis_per_step=step.toffolis,
        t_per_rotation=t_rot, eps_rotation=eps, N_T=n_t, N_tof=n_pe * step.toffolis,
        ancilla=step.hwp_ancillas + EXTRA_QUBITS,
    )


def _grid_search(objective, ts_grid, syn_grid):
    best = None
    for f_ts in ts_grid:
        for f_syn in syn_grid:
            val = objective(f_ts, f_syn)
            # strict comparison keeps the lowest fractions on ties
            if val is not None and (best is None or val < best[0]):
                best = (val, f_ts, f_syn)
    return best


def optimize_budget(W2: float, delta_total: float, step: StepCost,
                    synthesis: SynthesisModel = SynthesisModel(),
                    ts_range: tuple[float, float] = (0.05, 0.6),
                    syn_range: tuple[float, float] = (0.001, 0.05),
                    points: int = 12, levels: int = 2
                    ) -> tuple[ErrorBudget, ResourceEstimate]:
    """Minimize the aggregated T count over the error-budget split."""
    if not W2 > 0:
        raise ValueError("W2 must be positive")
    if not delta_total > 0:
        raise BudgetError("delta_total must be positive")

    def objective(f_ts, f_syn):
        try:
            est = evaluate_budget(W2, ErrorBudget.split(delta_total, f_ts, f_syn),
                                  step, synthesis)
        except (BudgetError, ValueError, OverflowError):
            return None
        return est.aggregated

    ts_lo, ts_hi = ts_range
    syn_lo, syn_hi = np.log10(syn_range[0]), np.log10(syn_range[1])
    best = None
    for _ in range(levels):
        ts_grid = np.linspace(ts_lo, ts_hi, points)
        syn_grid = 10 ** np.linspace(syn_lo, syn_hi, points)
        found = _grid_search(objective, ts_grid, syn_grid)
        if found is None:
            break
        best = found
        dts = (ts_hi - ts_lo) / (points - 1)
        dsyn = (syn_hi - syn_lo) / (points - 1)
        ts_lo, ts_hi = max(ts_range[0], best[1] - dts), min(ts_range[1], best[1] + dts)
        c = np.log10(best[2])
        syn_lo = max(np.log10(syn_range[0]), c - dsyn)
        syn_hi = min(np.log10(syn_range[1]), c + dsyn)
    if best is None:
        raise BudgetError(f"no feasible error budget for delta={delta_total}")
    budget = ErrorBudget.split(delta_total, best[1], best[2])
    return budget, evaluate_budget(W2, budget, step, synthesis)


# --- qubitization comparison ------------------------------------------------


def lambda_norm(T, V, U=None) -> float:
    """Pauli 1-norm (identity excluded) of the Jordan-Wigner Hamiltonian.

    ``a_p^dag a_q + h.c.`` gives two strings of weight ``|T_pq|/2``;
    ``n_p = (1 - Z_p)/2`` and ``n_p n_q = (1 - Z_p - Z_q + Z_p Z_q)/4``.
    """
    T = np.asarray(T, dtype=float)
    V = np.asarray(V, dtype=float)
    n = len(T)
    u = np.zeros(n) if U is None else np.asarray(U, dtype=float)
    iu = np.triu_indices(n, 1)
    hopping = np.abs(T[iu]).sum()
    Voff = V - np.diag(np.diag(V))
    z = np.abs(np.diag(T) + u + Voff.sum(axis=1)).sum() / 2
    zz = np.abs(Voff[iu] + Voff.T[iu]).sum() / 4
    return float(hopping + z + zz)


def qubitization_cost(lam: float, n: int, delta: float) -> tuple[float, int]:
    """``(T count, logical ancillas)`` of qubitized phase estimation."""
    if min(lam, n, delta) <= 0:
        raise ValueError("lambda, N and delta must be positive")
    t_count = 24 * math.sqrt(2) * math.pi * lam * n / delta
    ancilla = math.ceil(math.log2(4 * math.sqrt(2) * math.pi * lam**3 * n**5 / delta**3))
    return t_count, ancilla


# --- end to end -------------------------------------------------------------


def estimate_resources(spec: SystemSpec, W2: float, mha_per_electron: float = 1.0,
                       basis_change: str = AUTO, hwp_cap: int = DEFAULT_HWP_CAP,
                       synthesis: SynthesisModel = SynthesisModel(),
                       step_cost: Callable[..., StepCost] = trotter_step_cost
                       ) -> ResourceEstimate:
    """Optimized Trotter costs plus the qubitization comparison for ``spec``."""
    m = build_matrices(spec)
    step = step_cost(spec, m.T, m.V, basis_change=basis_change, hwp_cap=hwp_cap)
    delta = delta_from_mha(mha_per_electron, spec.eta)
    _, est = optimize_budget(W2, delta, step, synthesis)
    lam = lambda_norm(m.T, m.V, m.U)
    est.lambda_ = lam
    est.qubitization_T, est.qubitization_ancilla = qubitization_cost(
        lam, spec.n_orbitals, delta
    )
    return est
