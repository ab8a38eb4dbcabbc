"""Independent reference computations used to freeze expected values.

Run as a script to print the values that the tests hard-code.  Nothing here
imports mercer_kit except for the bell profile, whose polynomial is checked
separately.
"""
import math

import numpy as np
from scipy import integrate, special

E1, E2 = 2 * math.pi / 3, 8 * math.pi / 3


def nu(x):
    x = min(max(x, 0.0), 1.0)
    return x**4 * (35 - 84 * x + 70 * x**2 - 20 * x**3)


def bell(xi, e1=E1, e2=E2):
    m = (2 * e1 + e2) / 3
    if e1 <= xi <= m:
        return math.sin(0.5 * math.pi * nu((xi - e1) / (m - e1)))
    if m < xi <= e2:
        return math.cos(0.5 * math.pi * nu((xi - m) / (e2 - m)))
    return 0.0


def mother_wavelet(s, i=0):
    """Imaginary part of psi^(i)(s) = (i/pi) int_0^inf b(xi) d^i/du^i sin(xi u) dxi, u = s+1/2."""
    u = s + 0.5
    # d^i sin(xi u)/du^i = xi^i sin(xi u + i pi/2)
    f = lambda xi: bell(xi) * xi**i
    if i % 2 == 0:
        val, _ = integrate.quad(f, E1, E2, weight="sin", wvar=u, limit=400, epsabs=1e-14)
        return (-1) ** (i // 2) * val / math.pi
    val, _ = integrate.quad(f, E1, E2, weight="cos", wvar=u, limit=400, epsabs=1e-14)
    return (-1) ** (i // 2) * val / math.pi


def bell_energy():
    val, _ = integrate.quad(lambda x: bell(x) ** 2, E1, E2, limit=400, epsabs=1e-14,
                            points=[(2 * E1 + E2) / 3])
    return val


def hermite_function(n, x, deriv=0):
    """h_n^(deriv)(x) from the physicists' polynomial and the product rule."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    norm = 1.0 / math.sqrt(2.0**n * math.factorial(n) * math.sqrt(math.pi))
    # h = norm * H(x) g(x), g = exp(-x^2/2); g^(k) = (-1)^k He_k(x) g
    total = 0.0
    for k in range(deriv + 1):
        dh = np.polynomial.hermite.hermval(x, np.polynomial.hermite.hermder(c, deriv - k))
        dg = (-1) ** k * special.eval_hermitenorm(k, x)
        total = total + math.comb(deriv, k) * dh * dg
    return norm * total * np.exp(-0.5 * x * x)


if __name__ == "__main__":
    print("b(pi) =", bell(math.pi), " b(4pi/3) =", bell(4 * math.pi / 3))
    print("int b^2 =", bell_energy(), " pi =", math.pi)
    for s in (-0.5, 0.0, 0.25, 1.0, 3.0):
        print(s, [mother_wavelet(s, i) for i in range(4)])
