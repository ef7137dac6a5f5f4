"""Wigner-d/D functions and spectral rotation.

Everything is built on the table ``Delta^l_{m,m'} = d^l_{m,m'}(pi/2)``,
which is real and computed by a degree recursion (Trapani & Navaza) seeded
at ``l = 0``.  Risbo's recursion is kept as an independent route for the
same numbers and for ``d^l(beta)`` at arbitrary ``beta``.

``d`` follows the convention ``d^1_{1,0}(beta) = -sin(beta) / sqrt(2)``
and ``D^l_{m,m'}(phi, theta, omega) = exp(-i m phi) d^l_{m,m'}(theta)
exp(-i m' omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from numpy.typing import NDArray

from .exceptions import NumericalError
from .sphere import HarmonicCoefficients

__all__ = [
    "EulerAngles",
    "WignerDeltaTable",
    "delta_next",
    "iter_delta",
    "build_delta_table",
    "iter_risbo",
    "wigner_d",
    "wigner_d_matrix",
    "wigner_D",
    "wigner_D_matrix",
    "rotate_coefficients",
    "rotation_matrix",
]

IMAG_TOL = 1e-10


@dataclass(frozen=True)
class EulerAngles:
    """ZYZ Euler angles in radians: ``R = Rz(varphi) Ry(vartheta) Rz(omega)``."""

    varphi: float = 0.0
    vartheta: float = 0.0
    omega: float = 0.0

    @classmethod
    def from_degrees(cls, varphi, vartheta, omega):
        return cls(math.radians(varphi), math.radians(vartheta), math.radians(omega))

    def as_tuple(self):
        return (self.varphi, self.vartheta, self.omega)

    def degrees(self):
        return tuple(math.degrees(a) for a in self.as_tuple())


def _euler(rho) -> EulerAngles:
    if isinstance(rho, EulerAngles):
        return rho
    return EulerAngles(*rho)


def rotation_matrix(rho):
    """3x3 matrix ``Rz(varphi) @ Ry(vartheta) @ Rz(omega)`` (active, right-handed)."""
    rho = _euler(rho)

    def rz(a):
        c, s = math.cos(a), math.sin(a)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])

    c, s = math.cos(rho.vartheta), math.sin(rho.vartheta)
    ry = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return rz(rho.varphi) @ ry @ rz(rho.omega)


# ---------------------------------------------------------------------------
# Delta table
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _delta_step(prev, ell):
    n = 2 * ell + 1
    q = np.zeros((ell + 2, ell + 1))
    q[ell, 0] = -math.sqrt((2.0 * ell - 1.0) / (2.0 * ell)) * prev[2 * ell - 2, ell - 1]
    for mp in range(1, ell + 1):
        q[ell, mp] = math.sqrt(
            ell * (2.0 * ell - 1.0) / (2.0 * (ell + mp) * (ell + mp - 1.0))
        ) * prev[2 * ell - 2, ell + mp - 2]
    for m in range(ell - 1, -1, -1):
        denom = (ell - m) * (ell + m + 1.0)
        a = 2.0 / math.sqrt(denom)
        b = math.sqrt((ell - m - 1.0) * (ell + m + 2.0) / denom)
        for mp in range(m + 1):
            q[m, mp] = a * mp * q[m + 1, mp] - b * q[m + 2, mp]
    out = np.empty((n, n))
    for m in range(ell + 1):
        for mp in range(ell + 1):
            if mp <= m:
                v = q[m, mp]
            else:
                # d_{m,m'} = (-1)^{m-m'} d_{m',m}
                v = q[mp, m] if (mp - m) % 2 == 0 else -q[mp, m]
            out[m + ell, mp + ell] = v
            if mp > 0:
                # Delta_{m,-m'} = (-1)^{l+m} Delta_{m,m'}
                out[m + ell, ell - mp] = v if (ell + m) % 2 == 0 else -v
    for m in range(1, ell + 1):
        for j in range(n):
            # Delta_{-m,m'} = (-1)^{l+m'} Delta_{m,m'}
            v = out[m + ell, j]
            out[ell - m, j] = v if (j % 2 == 0) else -v
    return out


def delta_next(prev, ell):
    """``Delta^l`` from ``Delta^{l-1}``.

    Arrays are indexed ``[m + l, m' + l]``.  Only the row ``m = l - 1`` of
    ``prev`` is read.  The recursion fills the eighth ``0 <= m' <= m <= l``
    and the rest follows from the symmetries of ``d(pi/2)``.
    """
    if ell == 0:
        return np.ones((1, 1))
    return _delta_step(np.ascontiguousarray(prev, dtype=np.float64), ell)


def iter_delta(L):
    """Yield ``(l, Delta^l)`` for ``l = 0 .. L-1`` keeping one degree in memory."""
    d = None
    for ell in range(L):
        d = delta_next(d, ell)
        yield ell, d


def iter_risbo(L, beta):
    """Yield ``(l, d^l(beta))`` for ``l = 0 .. L-1`` by Risbo's recursion.

    The recursion climbs in half-integer steps ``j -> j + 1/2``; only
    integer ``j`` are yielded.  Arrays are indexed ``[m + l, m' + l]``.
    """
    p, q = math.sin(beta / 2.0), math.cos(beta / 2.0)
    d = np.ones((1, 1))
    yield 0, d
    for n in range(1, 2 * L - 1):
        i = np.arange(n)[:, None]
        k = np.arange(n)[None, :]
        t = d / n
        new = np.zeros((n + 1, n + 1))
        new[:-1, :-1] += np.sqrt((n - i) * (n - k)) * q * t
        new[1:, :-1] -= np.sqrt((i + 1) * (n - k)) * p * t
        new[:-1, 1:] += np.sqrt((n - i) * (k + 1)) * p * t
        new[1:, 1:] += np.sqrt((i + 1) * (k + 1)) * q * t
        d = new
        if n % 2 == 0:
            yield n // 2, d


@dataclass(frozen=True, eq=False)
class WignerDeltaTable:
    """``Delta^l_{m'',m}`` for all ``l < L``.

    ``delta`` has shape ``(L, 2L-1, 2L-1)``; the block for degree ``l``
    sits at ``delta[l, L-1-l:L+l, L-1-l:L+l]`` and the padding is zero.
    """

    L: int
    delta: NDArray[np.float64]

    def __getitem__(self, ell) -> NDArray[np.float64]:
        c = self.L - 1
        return self.delta[ell, c - ell:c + ell + 1, c - ell:c + ell + 1]

    def value(self, ell, m2, m):
        return float(self[ell][m2 + ell, m + ell])


def build_delta_table(L, method="trapani") -> WignerDeltaTable:
    """Full table of ``Delta^l`` for ``l < L``; O(L^3) time and memory.

    ``method="risbo"`` evaluates the same numbers with Risbo's recursion
    at ``beta = pi/2``.
    """
    if L < 1:
        raise ValueError("bandlimit must be >= 1")
    if method == "trapani":
        it = iter_delta(L)
    elif method == "risbo":
        it = iter_risbo(L, math.pi / 2.0)
    else:
        raise ValueError(f"unknown method {method!r}")
    table = np.zeros((L, 2 * L - 1, 2 * L - 1))
    c = L - 1
    for ell, d in it:
        table[ell, c - ell:c + ell + 1, c - ell:c + ell + 1] = d
    return WignerDeltaTable(L, table)


def _delta_for(ell, table):
    if table is not None and ell < table.L:
        return table[ell]
    d = None
    for _, d in iter_delta(ell + 1):
        pass
    return d


# ---------------------------------------------------------------------------
# d and D
# ---------------------------------------------------------------------------


def _i_power(k):
    """``i**k`` for an integer array, exactly."""
    return np.array([1.0, 1j, -1.0, -1j])[np.mod(k, 4)]


def wigner_d_matrix(ell, vartheta, table=None):
    """``d^l(vartheta)`` as a ``(2l+1, 2l+1)`` real array via the Delta expansion.

    ``d^l_{m,m'} = i^{m-m'} sum_{m''} Delta_{m'',m} Delta_{m'',m'} exp(-i m'' vartheta)``

    Raises
    ------
    NumericalError
        If the discarded imaginary part exceeds ``1e-10``.
    """
    delta = _delta_for(ell, table)
    k = np.arange(-ell, ell + 1)
    e = np.exp(-1j * k * vartheta)
    acc = delta.T @ (e[:, None] * delta)
    acc = _i_power(k[:, None] - k[None, :]) * acc
    resid = np.max(np.abs(acc.imag)) if acc.size else 0.0
    if resid > IMAG_TOL:
        raise NumericalError(
            f"wigner_d: imaginary residue {resid:.3g} exceeds {IMAG_TOL:g} at l={ell}"
        )
    return acc.real


def wigner_d(ell, m, mp, vartheta, table=None) -> float:
    """Single Wigner-d value ``d^l_{m,m'}(vartheta)``."""
    if abs(m) > ell or abs(mp) > ell:
        raise ValueError(f"orders ({m}, {mp}) exceed degree {ell}")
    delta = _delta_for(ell, table)
    k = np.arange(-ell, ell + 1)
    s = np.sum(delta[:, m + ell] * delta[:, mp + ell] * np.exp(-1j * k * vartheta))
    val = complex(_i_power(m - mp) * s)
    if abs(val.imag) > IMAG_TOL:
        raise NumericalError(f"wigner_d: imaginary residue {abs(val.imag):.3g} at l={ell}")
    return val.real


def wigner_D_matrix(ell, rho, table=None):
    """``D^l(rho)``, rows indexed by ``m``, columns by ``m'``."""
    rho = _euler(rho)
    k = np.arange(-ell, ell + 1)
    d = wigner_d_matrix(ell, rho.vartheta, table)
    return np.exp(-1j * k * rho.varphi)[:, None] * d * np.exp(-1j * k * rho.omega)[None, :]


def wigner_D(ell, m, mp, rho, table=None) -> complex:
    """``D^l_{m,m'}(varphi, vartheta, omega) = e^{-i m varphi} d^l_{m,m'}(vartheta) e^{-i m' omega}``."""
    rho = _euler(rho)
    d = wigner_d(ell, m, mp, rho.vartheta, table)
    return complex(np.exp(-1j * m * rho.varphi) * d * np.exp(-1j * mp * rho.omega))


def rotate_coefficients(c: HarmonicCoefficients, rho, table=None) -> HarmonicCoefficients:
    """Coefficients of the rotated signal, ``(D_rho f)_l^m = sum_m' D^l_{m,m'} f_l^{m'}``."""
    rho = _euler(rho)
    if table is None:
        table = build_delta_table(c.L)
    out = np.empty_like(c.coeffs)
    for ell in range(c.L):
        sl = slice(ell * ell, (ell + 1) * (ell + 1))
        out[sl] = wigner_D_matrix(ell, rho, table) @ c.coeffs[sl]
    return HarmonicCoefficients(c.L, out)
