"""Independent reference implementations used only by the tests.

None of these share code with the library: Wigner-d comes from the
factorial sum, Legendre functions from the Rodrigues formula, harmonics
from scipy, and the transform from brute-force spatial quadrature.
"""

import math

import numpy as np
import sympy as sp
from scipy.special import sph_harm_y
from scipy.stats import qmc


def wigner_d_factorial(ell, row, col, beta):
    """``d^l_{row,col}(beta)`` from the explicit factorial sum (``d^1_{1,0} = -sin/sqrt 2``)."""
    mp, m = row, col
    c, s = math.cos(beta / 2.0), math.sin(beta / 2.0)
    total = 0.0
    for k in range(max(0, m - mp), min(ell + m, ell - mp) + 1):
        num = (-1) ** (mp - m + k) * c ** (2 * ell + m - mp - 2 * k) * s ** (mp - m + 2 * k)
        den = (math.factorial(ell + m - k) * math.factorial(k)
               * math.factorial(mp - m + k) * math.factorial(ell - mp - k))
        total += num / den
    norm = math.factorial(ell + m) * math.factorial(ell - m) * math.factorial(ell + mp) * math.factorial(ell - mp)
    return total * math.sqrt(norm)


def wigner_D_factorial(ell, m, mp, rho):
    varphi, vartheta, omega = rho
    return np.exp(-1j * m * varphi) * wigner_d_factorial(ell, m, mp, vartheta) * np.exp(-1j * mp * omega)


def legendre_rodrigues(ell, m, x):
    """``P_l^m(x)`` with the Condon-Shortley phase, by symbolic differentiation."""
    t = sp.Symbol("t")
    p = sp.diff((t ** 2 - 1) ** ell, t, ell) / (2 ** ell * sp.factorial(ell))
    expr = (-1) ** m * (1 - t ** 2) ** sp.Rational(m, 2) * sp.diff(p, t, m)
    return float(expr.subs(t, sp.Rational(str(x))))


def ylm_scipy(ell, m, theta, phi):
    return sph_harm_y(ell, m, theta, phi)


def ylm_matrix_scipy(L, theta, phi):
    theta = np.ravel(theta)
    phi = np.ravel(phi)
    cols = [ylm_scipy(ell, m, theta, phi) for ell in range(L) for m in range(-ell, ell + 1)]
    return np.stack(cols, axis=1)


def rotation_zyz(varphi, vartheta, omega):
    def rz(a):
        return np.array([[math.cos(a), -math.sin(a), 0], [math.sin(a), math.cos(a), 0], [0, 0, 1.0]])

    ry = np.array([[math.cos(vartheta), 0, math.sin(vartheta)], [0, 1.0, 0],
                   [-math.sin(vartheta), 0, math.cos(vartheta)]])
    return rz(varphi) @ ry @ rz(omega)


def gl_sphere_nodes(n):
    """Product Gauss-Legendre x trapezoid rule with ``n`` colatitudes and ``2n`` longitudes."""
    x, w = np.polynomial.legendre.leggauss(n)
    phi = 2 * np.pi * np.arange(2 * n) / (2 * n)
    T, P = np.meshgrid(np.arccos(x), phi, indexing="ij")
    W = np.repeat(w[:, None] * (np.pi / n), 2 * n, axis=1)
    return T.ravel(), P.ravel(), W.ravel()


def spatial_sst(f_coeffs, g_coeffs, L, rho):
    """``<f, D_rho g>`` by quadrature, evaluating ``g`` at ``R^{-1} x``."""
    th, ph, w = gl_sphere_nodes(L + 2)
    x = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    y = rotation_zyz(*rho).T @ x
    th2 = np.arccos(np.clip(y[2], -1, 1))
    ph2 = np.mod(np.arctan2(y[1], y[0]), 2 * np.pi)
    fv = ylm_matrix_scipy(L, th, ph) @ f_coeffs
    gv = ylm_matrix_scipy(L, th2, ph2) @ g_coeffs
    return np.sum(w * fv * np.conj(gv))


def so3_quadrature_coefficients(F, L):
    """``(F)^l_{m,m'} = (2l+1)/(8 pi^2) int F D^l_{m,m'} d rho`` with exact product quadrature.

    ``F(rho)`` is any callable; nodes are ``2L - 1`` uniform angles in
    ``varphi`` and ``omega`` and ``L + 1`` Gauss-Legendre nodes in ``cos(vartheta)``.
    """
    n = 2 * L - 1
    x, wx = np.polynomial.legendre.leggauss(L + 1)
    ang = 2 * np.pi * np.arange(n) / n
    vals = np.array([[[F((a, math.acos(xb), c)) for c in ang] for xb in x] for a in ang])
    out = {}
    for ell in range(L):
        for m in range(-ell, ell + 1):
            em = np.exp(-1j * m * ang)
            for mp in range(-ell, ell + 1):
                emp = np.exp(-1j * mp * ang)
                d = np.array([wigner_d_factorial(ell, m, mp, math.acos(xb)) for xb in x])
                s = np.einsum("abc,a,b,c->", vals, em, d * wx, emp)
                out[(ell, m, mp)] = (2 * ell + 1) / (8 * np.pi ** 2) * s * (2 * np.pi / n) ** 2
    return out


def qmc_area(contains, log2_n=22, seed=0):
    """Area of ``{contains(theta, phi)}`` by scrambled Sobol points mapped area-preservingly."""
    u = qmc.Sobol(2, scramble=True, seed=seed).random_base2(log2_n)
    theta = np.arccos(1.0 - 2.0 * u[:, 0])
    phi = 2.0 * np.pi * u[:, 1]
    hits = 0
    for k in range(0, theta.size, 1 << 19):
        hits += int(np.count_nonzero(contains(theta[k:k + (1 << 19)], phi[k:k + (1 << 19)])))
    return 4.0 * np.pi * hits / theta.size
