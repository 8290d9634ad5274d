"""Compare every bound with exact small-system quantities.

Builds a 2x2 spinful lattice (8 spin orbitals), evaluates the four bound
methods and prints them next to the exact commutator norms and Trotter
errors computed in the fixed electron-number sector.
"""

from __future__ import annotations

from trotterbounds.hamiltonian import SystemSpec
from trotterbounds.oracle import check_soundness


def main() -> None:
    for eta in (2, 3, 4):
        spec = SystemSpec.jellium((2, 2), eta, 5.0)
        print(f"\neta = {eta}")
        print(f"  {'method':>9} {'quantity':>20} {'bound':>11} {'exact':>11} ratio")
        for row in check_soundness(spec, times=(0.1,)):
            ratio = f"{row['bound'] / row['exact']:6.1f}" if row["exact"] > 1e-12 else "     -"
            print(f"  {row['method']:>9} {row['quantity']:>20} {row['bound']:11.4e} "
                  f"{row['exact']:11.4e} {ratio}")


if __name__ == "__main__":
    main()
