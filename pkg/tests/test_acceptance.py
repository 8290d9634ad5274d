"""End-to-end acceptance checks.

Each test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers before asserting, so ``pytest -v`` output doubles as a report.
"""

from __future__ import annotations

import time
import tracemalloc
from functools import lru_cache

import numpy as np
import pytest

from trotterbounds.bounds import SHC, best_report, bound_suite, shc_bound
from trotterbounds.factorization import (
    CHOLESKY,
    COSINE,
    SPECTRAL,
    cholesky_decompose,
    cosine_decompose,
    reconstruction_residual,
    spectral_decompose,
)
from trotterbounds.hamiltonian import SystemSpec, build_matrices
from trotterbounds.oracle import NormalOrderedOperator, check_soundness, soundness_specs
from trotterbounds.resources import (
    delta_from_mha,
    estimate_resources,
    lambda_norm,
    qubitization_cost,
)
from trotterbounds.seminorm import brute_force_seminorm, fock_seminorm, reduced_seminorm

from conftest import random_hermitian

FACTOR_METHODS = (SPECTRAL, CHOLESKY, COSINE)


def report(capsys, n: int, ok: bool, detail: str, soft: bool = False) -> None:
    tag = "PASS" if ok else ("FAIL (soft, logged only)" if soft else "FAIL")
    with capsys.disabled():
        print(f"\ncriterion {n}: {tag} | {detail}")


def within(value: float, target: float, rel: float) -> bool:
    return abs(value - target) <= rel * abs(target)


@lru_cache(maxsize=None)
def best_w2(sides: tuple, eta: int, rs: float) -> float:
    spec = SystemSpec.jellium(sides, eta, rs)
    return best_report(bound_suite(spec, FACTOR_METHODS)).W2_best


@lru_cache(maxsize=None)
def trotter_estimate(sides: tuple, eta: int, rs: float):
    spec = SystemSpec.jellium(sides, eta, rs)
    return estimate_resources(spec, best_w2(sides, eta, rs), mha_per_electron=1.0)


def test_criterion_1_table_anchor(capsys):
    w2 = best_w2((8, 8), 49, 5.0)
    est = trotter_estimate((8, 8), 49, 5.0)
    checks = {
        "W2": (w2, 356, 0.10),
        "N_tof": (est.N_tof, 6.8e7, 0.5),
        "N_T": (est.N_T, 1.1e9, 0.5),
        "aggregated": (est.aggregated, 1.3e9, 0.5),
    }
    ok = all(within(v, t, r) for v, t, r in checks.values())
    detail = ", ".join(f"{k}={v:.4g} (target {t:.3g} +-{r:.0%})" for k, (v, t, r) in checks.items())
    report(capsys, 1, ok, detail)
    assert ok


def test_criterion_2_second_anchor(capsys):
    a = best_w2((8, 8), 10, 10.0)
    b = best_w2((8, 8), 49, 10.0)
    ok = within(a, 103, 0.10) and within(b, 89, 0.10)
    report(capsys, 2, ok, f"W2(r_s=10, eta=10)={a:.4g} (103), W2(r_s=10, eta=49)={b:.4g} (89)")
    assert ok


def _qubitization(eta: int, rs: float):
    spec = SystemSpec.jellium((8, 8), eta, rs)
    m = build_matrices(spec)
    lam = lambda_norm(m.T, m.V, m.U)
    return lam, qubitization_cost(lam, spec.n_orbitals, delta_from_mha(1.0, eta))


def test_criterion_3_qubitization(capsys):
    lam_a, (t_a, anc_a) = _qubitization(49, 5.0)
    lam_b, (t_b, anc_b) = _qubitization(10, 10.0)
    ok = (within(t_a, 3.2e8, 0.25) and abs(anc_a - 83) <= 2
          and within(t_b, 1.6e9, 0.25) and abs(anc_b - 90) <= 2)
    report(capsys, 3, ok,
           f"r_s=5 eta=49: lambda={lam_a:.4g} T={t_a:.3g} anc={anc_a}; "
           f"r_s=10 eta=10: lambda={lam_b:.4g} T={t_b:.3g} anc={anc_b}")
    assert ok


def test_criterion_4_rs_scaling(capsys):
    a5 = trotter_estimate((8, 8), 49, 5.0).aggregated
    a10 = trotter_estimate((8, 8), 49, 10.0).aggregated
    ratio = a10 / a5
    ok = within(ratio, 0.5, 0.20)
    report(capsys, 4, ok, f"aggregated r_s=5 {a5:.3g}, r_s=10 {a10:.3g}, ratio {ratio:.3f} (0.5 +-20%)")
    assert ok


def test_criterion_5_soundness(capsys):
    t0 = time.perf_counter()
    total = 0
    bad = []
    for spec in soundness_specs():
        for row in check_soundness(spec):
            total += 1
            if not row["ok"]:
                bad.append(row)
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 1800
    detail = f"{total} checks, {len(bad)} violations, {elapsed:.0f} s"
    if bad:
        detail += f"; first: {bad[0]}"
    report(capsys, 5, ok, detail)
    assert ok


def test_criterion_6_seminorm_oracles(capsys):
    rng = np.random.default_rng(6)
    worst = 0.0
    for i in range(1000):
        n = int(rng.integers(1, 9))
        eta = int(rng.integers(0, n + 1))
        A = random_hermitian(rng, n, complex_=bool(i % 2))
        if i % 3 == 0:
            A = 1j * A  # anti-hermitian
        a, b = reduced_seminorm(A, eta), brute_force_seminorm(A, eta)
        worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    worst_fock = 0.0
    for i in range(20):
        A = random_hermitian(rng, 6, complex_=bool(i % 2))
        op = NormalOrderedOperator.from_quadratic(A)
        for eta in range(7):
            worst_fock = max(worst_fock, abs(reduced_seminorm(A, eta) - fock_seminorm(op, eta)))
    ok = worst <= 1e-9 and worst_fock <= 1e-9
    report(capsys, 6, ok, f"brute force max rel diff {worst:.2e}, Fock max diff {worst_fock:.2e}")
    assert ok


def test_criterion_7_reconstruction(capsys):
    worst = 0.0
    count = 0
    for spec in soundness_specs():
        m = build_matrices(spec)
        scale = np.abs(m.V).max()
        for fac in (spectral_decompose(m.V, 0.0, m.U), cholesky_decompose(m.V, None, m.U),
                    cosine_decompose(spec)):
            worst = max(worst, reconstruction_residual(fac, m.V) / scale)
            count += 1
    ok = worst <= 1e-8
    report(capsys, 7, ok, f"{count} factorizations, worst residual / max|V| = {worst:.2e}")
    assert ok


def test_criterion_8_shc(capsys):
    _, tvt, tvv, _ = shc_bound(np.eye(1), np.ones((1, 1)), 1)
    rng = np.random.default_rng(8)
    T = random_hermitian(rng, 6)
    V = random_hermitian(rng, 6)
    etas = np.array([10, 20, 40, 80, 160])
    _, tvt_s, tvv_s, _ = shc_bound(T, V, etas)
    p_tvt = np.polyfit(np.log(etas), np.log(tvt_s), 1)[0]
    p_tvv = np.polyfit(np.log(etas), np.log(tvv_s), 1)[0]
    ok = tvt == 20 and tvv == 36 and abs(p_tvt - 2) <= 0.05 and abs(p_tvv - 3) <= 0.05
    report(capsys, 8, ok, f"tvt={tvt:g} tvv={tvv:g}; exponents {p_tvt:.3f}, {p_tvv:.3f}")
    assert ok


def test_criterion_9_ranking_soft(capsys):
    rows = {}
    for eta in (4, 8, 12, 64):
        spec = SystemSpec.jellium((8, 8), eta, 5.0)
        reps = {r.method: r.W2_best for r in bound_suite(spec, (COSINE, CHOLESKY))}
        rows[eta] = (reps[COSINE], reps[CHOLESKY])
    low = all(c < h for eta, (c, h) in rows.items() if eta <= 12)
    high = rows[64][0] > rows[64][1]
    detail = "; ".join(f"eta={e}: cosine {c:.4g} cholesky {h:.4g}" for e, (c, h) in rows.items())
    report(capsys, 9, low and high, detail, soft=True)
    # soft criterion: logged, never fails the run


@pytest.mark.slow
def test_criterion_10_performance(capsys):
    spec = SystemSpec.jellium((16, 8), 49, 5.0)
    tracemalloc.start()
    t0 = time.perf_counter()
    rep = bound_suite(spec, (COSINE,))[0]
    elapsed = time.perf_counter() - t0
    peak = tracemalloc.get_traced_memory()[1]
    tracemalloc.stop()
    ok = not rep.error and elapsed < 7200 and peak < 1e9
    report(capsys, 10, ok, f"N={spec.n_orbitals} cosine W2={rep.W2_best:.4g}, "
                           f"{elapsed:.0f} s, peak {peak / 1e6:.1f} MB")
    assert ok
