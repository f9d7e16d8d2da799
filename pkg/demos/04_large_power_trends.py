"""Large-power behavior of the section density and the averaged energy.

For a fixed smooth perturbation of the round metric, re-embedded at growing
polarization powers, two quantities shrink together: the sup-norm distance
of the centered density combination from the centered scalar curvature, and
the gap between rescaled energy differences and the K-energy difference.
"""

import sys

from balmet import default_test_potential, run_sweep


def main():
    sweep = run_sweep([4, 8, 12, 16], phi=default_test_potential(0.3))
    print(f"K-energy difference of the test pair: {sweep.mabuchi_difference:.6f}\n")
    print(f"{'k':>4} {'density residual':>18} {'energy gap':>14} {'relative':>10}")
    for k, b, g in zip(sweep.k_values, sweep.bergman_residuals, sweep.mabuchi_gaps):
        print(f"{k:>4} {b:>18.5f} {g:>14.6f} "
              f"{g / abs(sweep.mabuchi_difference):>10.4f}")
    print(f"\nboth sequences non-increasing: {sweep.non_increasing()}")
    out = sys.argv[1] if len(sys.argv) > 1 else None
    if out:
        with open(out, "w") as fh:
            fh.write(sweep.to_csv())
        print(f"wrote {out}")


if __name__ == "__main__":
    main()
