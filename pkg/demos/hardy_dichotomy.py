"""Hardy weights: (1+r^2)^-1 survives non-integer flux; integer flux needs the logarithmic weight.

Run with ``python3 demos/hardy_dichotomy.py``.
"""
from magspec.field import FieldProfile
from magspec.hardy import hardy_trail, test_family_quotient


def trail(title, field, weight, refine, domain, h):
    vals = [row["value"] for row in hardy_trail(field, weight, domain, h, 2, refine)]
    print(f"  {title:<40} " + "  ".join(f"{v:.5f}" for v in vals))


def main():
    half, one = FieldProfile.step(1.0, 1.0), FieldProfile.step(2.0, 1.0)
    print("Rayleigh-Ritz Hardy constants (three refinements each):")
    trail("flux 1/2, (1+r^2)^-1, grid halving", half, "inv_one_plus_r2", "grid", 20.0, 0.04)
    trail("flux 1,   (1+r^2)^-1, domain doubling", one, "inv_one_plus_r2", "domain", 10.0, 0.05)
    trail("flux 1,   log weight, domain doubling", one, "log_weight", "domain", 10.0, 0.05)
    trail("B = 0,    chi_1,      domain doubling", FieldProfile.zero(), "chi1", "domain", 10.0, 0.05)
    print("\nTest family u_n for flux 1 against (1+|x|)^-2:")
    for n in (10.0, 50.0, 200.0, 1e4, 1e8):
        s = test_family_quotient(one, n)
        print(f"  n={n:<8g} numerator={s.numerator:9.3f}  denominator={s.denominator:9.3f}  "
              f"quotient={s.quotient:.4f}")
    print("  both parts grow like log n, so the quotient decays only slowly")


if __name__ == "__main__":
    main()
