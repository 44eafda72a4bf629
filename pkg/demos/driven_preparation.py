"""Demo: preparing the beat with a weak drive and a fast turn-off.

Solves for the driven steady state of the three-level system at a very
small saturation parameter, then integrates across the smooth drive
turn-off ramp. The surviving excited-state coherence is what seeds the
quantum beat; the population of the undriven level stays negligible.
"""

import argparse
import math

import numpy as np

from qbeats import (
    paper_system,
    resonant_drive,
    simulate_turnoff,
    steady_state,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--saturation", type=float, default=1.7e-9,
                    help="drive saturation parameter (default 1.7e-9)")
    ap.add_argument("--n-atoms", type=float, default=10.0)
    ap.add_argument("--f-geom", type=float, default=1.0)
    args = ap.parse_args()

    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sys = paper_system(n_atoms=args.n_atoms, f_geom=args.f_geom)

    # single-atom Rabi frequency from the saturation parameter, enhanced
    # by sqrt(N) for the ensemble field
    omega1 = sys.gamma22 * math.sqrt(args.saturation / 8.0)
    drive = resonant_drive(sys, rabi2=math.sqrt(args.n_atoms) * omega1)
    print(f"drive Rabi frequency: {drive.rabi2:.3e} rad/ns "
          f"(saturation {args.saturation:.2e})")

    rho = steady_state(sys, drive)
    print("\ndriven steady state:")
    print(f"  upper population rho22   = {rho[1, 1].real:.3e}")
    print(f"  drive coherence |rho21|  = {abs(rho[1, 0]):.3e}")
    print(f"  cross coherence |rho23|  = {abs(rho[1, 2]):.3e}")

    final = simulate_turnoff(rho, sys, drive, dt=0.005)
    print("\nafter the turn-off ramp (+0.5 ns settle):")
    print(f"  lower population rho33   = {final[2, 2].real:.3e}")
    print(f"  beat coherence  |rho13|  = {abs(final[0, 2]):.3e}")
    print(f"  upper population rho22   = {final[1, 1].real:.3e}")

    leak = abs(final[0, 2]) / max(abs(rho[1, 0]), 1e-300)
    print(f"\nthe ramp converts ~{leak:.1%} of the drive coherence into the")
    print("excited-excited coherence that beats at the level splitting")


if __name__ == "__main__":
    main()
