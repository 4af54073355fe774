"""Regenerates bessel_complex.txt with mpmath at 60 significant digits.

Each line: m re(z) im(z) re J im J re Y im Y, 17 significant digits.
Points lie in |z| <= 50, |Im z| <= 10, including the left half plane.
"""
import mpmath as mp

mp.mp.dps = 60

ORDERS = [0, 1, 4, 9, 20]
POINTS = [(0.3, 0.2), (1.0, -1.0), (2.5, 4.0), (6.4, -9.29), (3.0, 9.9),
          (12.0, 0.6), (20.0, 5.0), (24.0, -8.0), (26.0, 3.0), (40.0, 10.0),
          (49.0, -2.0), (-3.0, 1.5), (-7.5, -6.0), (-30.0, 0.8), (0.0, 5.0),
          (0.05, -0.01)]


def fmt(v):
    return mp.nstr(v, 17, min_fixed=0, max_fixed=0, strip_zeros=False)


def main():
    with open("bessel_complex.txt", "w") as out:
        for m in ORDERS:
            for re, im in POINTS:
                z = mp.mpc(repr(re), repr(im))
                j = mp.besselj(m, z)
                y = mp.bessely(m, z)
                vals = [j.real, j.imag, y.real, y.imag]
                out.write(" ".join([str(m), repr(re), repr(im)] + [fmt(v) for v in vals]) + "\n")


if __name__ == "__main__":
    main()
