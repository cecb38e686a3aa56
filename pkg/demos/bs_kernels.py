"""Birman-Schwinger kernels: the resolvent diagonal, its kappa -> 0 limit, and dominance over counts.

Run with ``python3 demos/bs_kernels.py``.
"""
import math

from magspec.bs_bounds import (BSKernelSpec, assemble_radial_bound, aux_count, bessel_green_diag,
                               bessel_green_diag_limit, bs_channel_bound, g0_log_bound)
from magspec.field import FieldProfile
from magspec.potential import PotentialProfile


def main():
    print("G_1^{1,2}(1.5, 1.5, kappa) approaching the limit:")
    for kappa in (1.0, 1e-2, 1e-4, 1e-6):
        print(f"  kappa={kappa:<7g} {bessel_green_diag(BSKernelSpec(1.0, 1.0, 2.0, kappa), 1.5):.10f}")
    print(f"  limit          {bessel_green_diag_limit(1.0, 1.0, 2.0, 1.5):.10f}")
    print(f"  printed closed form at r = 1: {bessel_green_diag_limit(1.0, 1.0, 2.0, 1.0, 'printed'):.4f}, "
          f"exact limit: {bessel_green_diag_limit(1.0, 1.0, 2.0, 1.0):.4f}")
    print(f"\nG_0 log bound: c = {g0_log_bound().c_hat:.4f}")
    print("\nDominance, delta = 1 on (0, inf), lam * indicator of the unit disk:")
    disk = PotentialProfile.indicator_disk()
    for lam in (1.0, 10.0, 50.0, 200.0):
        bound = bs_channel_bound(1.0, disk.scaled(lam))
        lo, hi, _ = aux_count(1.0, disk, lam=lam)
        print(f"  lam={lam:6.1f} bound={bound:8.3f} count={hi}")
    asm = assemble_radial_bound(FieldProfile.step(2.0, 1.0), PotentialProfile.w_sigma(2.0), 20.0, r_trunc=1e3)
    print("\nInteger-flux assembly for W_2 at lam = 20, per-integer partial sums:")
    for k, v in asm.truncation["partial_sums"].items():
        print(f"  up to r = {k:>5}: {v:.1f}")
    print("  (the per-integer sum keeps growing: see the decisions ledger)")


if __name__ == "__main__":
    main()
