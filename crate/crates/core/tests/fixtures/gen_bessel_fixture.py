"""Regenerates bessel_real_axis.txt with mpmath at 200 significant digits.

Each line: m z J_m(z) Y_m(z) J_m'(z) Y_m'(z), 17 significant digits.
"""
import mpmath as mp

mp.mp.dps = 200

ORDERS = [0, 1, 2, 3, 5, 8, 13, 20]
POINTS = ["0.001", "0.01", "0.1", "0.5", "1", "1.5", "2",
          "2.5", "3.3", "4.25", "5", "6.75", "8", "9.5", "11", "12", "13.7",
          "16", "19.25", "22", "24.5", "25.5", "27", "30", "33.3", "37",
          "41.5", "45", "48.75", "50"]


def fmt(v):
    return mp.nstr(v, 17, min_fixed=0, max_fixed=0, strip_zeros=False)


def main():
    with open("bessel_real_axis.txt", "w") as out:
        for m in ORDERS:
            for s in POINTS:
                z = mp.mpf(s)
                j = mp.besselj(m, z)
                y = mp.bessely(m, z)
                jp = mp.besselj(m, z, derivative=1)
                yp = mp.bessely(m, z, derivative=1)
                out.write(" ".join([str(m), s] + [fmt(v) for v in (j, y, jp, yp)]) + "\n")


if __name__ == "__main__":
    main()
