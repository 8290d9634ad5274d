"""Error constants and gate counts for three 8x8 Jellium systems.

Run with ``python3 demos/table_rows.py``; takes about a minute.
"""

from __future__ import annotations

from trotterbounds import SystemSpec, best_report, bound_suite, estimate_resources

CASES = [(5.0, 49), (10.0, 10), (10.0, 49)]


def main() -> None:
    print(f"{'r_s':>5} {'eta':>4} {'method':>9} {'W2':>8} {'N_tof':>9} {'N_T':>9} "
          f"{'aggregated':>10} {'qubit. T':>9} {'anc':>4}")
    for rs, eta in CASES:
        spec = SystemSpec.jellium((8, 8), eta, rs)
        best = best_report(bound_suite(spec, ("spectral", "cholesky", "cosine")))
        est = estimate_resources(spec, best.W2_best, mha_per_electron=1.0)
        print(f"{rs:5g} {eta:4d} {best.method:>9} {best.W2_best:8.1f} {est.N_tof:9.2e} "
              f"{est.N_T:9.2e} {est.aggregated:10.2e} {est.qubitization_T:9.2e} "
              f"{est.qubitization_ancilla:4d}")


if __name__ == "__main__":
    main()
