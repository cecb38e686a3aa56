"""Weak coupling: without a field every positive coupling binds; a flux-1/2 AB field needs a finite one.

Run with ``python3 demos/weak_coupling.py``.
"""
from magspec.counting import count_total, weak_coupling_threshold
from magspec.field import FieldProfile
from magspec.potential import PotentialProfile


def main():
    disk = PotentialProfile.indicator_disk()
    print("B = 0, disk potential:")
    for lam in (0.5, 0.25, 0.125):
        rep = count_total(FieldProfile.zero(), disk, lam)
        print(f"  lam={lam:<6} N={rep.total} (converged={rep.converged})")
    print("\nAharonov-Bohm flux 1/2: threshold upper bounds as the domain doubles")
    for level in (0, 1, 2):
        tr = weak_coupling_threshold(FieldProfile.aharonov_bohm(0.5), disk, 10.0, level=level)
        print(f"  level {level}: lam* = {tr.lam_star:.5f}")
    print("  (channel m = 0 reduces to -u'' = lam u on (0, 1) with u(0) = 0 and u'(1) = 0: lam* = pi^2/4 = 2.4674)")
    print("\nB = 0: the same bounds drift toward zero")
    for level in (0, 1, 2):
        tr = weak_coupling_threshold(FieldProfile.zero(), disk, 1.0, level=level, rel=1e-2)
        print(f"  level {level}: lam* <= {tr.lam_star:.5f}")


if __name__ == "__main__":
    main()
