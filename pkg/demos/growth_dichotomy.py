"""Counting growth: Weyl-linear for non-integer flux, quadratic for integer flux.

Run with ``python3 demos/growth_dichotomy.py``.
"""
from magspec.counting import CountOptions, fit_exponent, scan_coupling
from magspec.field import FieldProfile
from magspec.potential import PotentialProfile


def show(title, field, potential, lams, opts=None):
    scan = scan_coupling(field, potential, lams, opts)
    sigma, c, _ = fit_exponent(scan)
    print(f"{title}")
    for lam, n in zip(scan.lams, scan.totals):
        print(f"  lam={lam:7.1f}  N={n:7d}  N/lam={n / lam:.4f}")
    print(f"  fitted N ~ {c:.3f} lam^{sigma:.3f}\n")


def main():
    disk = PotentialProfile.indicator_disk()
    show("Disk potential, step field with flux 1/2 (Weyl value N/lam -> 1/4):",
         FieldProfile.step(1.0, 1.0), disk, [100.0, 200.0, 400.0])
    w2 = PotentialProfile.w_sigma(2.0)
    opts = CountOptions(variable="loglog")
    show("W_2 potential, step field with flux 1 (integer):", FieldProfile.step(2.0, 1.0), w2,
         [20.0, 40.0, 80.0, 160.0], opts)
    show("W_2 potential, step field with flux 1/2 (non-integer):", FieldProfile.step(1.0, 1.0), w2,
         [20.0, 40.0, 80.0, 160.0], opts)


if __name__ == "__main__":
    main()
