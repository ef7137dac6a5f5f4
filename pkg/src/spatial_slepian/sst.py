"""Spatial-Slepian transform on SO(3).

``F_alpha(rho) = <f, D_rho g_alpha>`` for a signal ``f`` and Slepian
function ``g_alpha`` of the same bandlimit ``L``.  On SO(3) it is a finite
Fourier series

    F(varphi, vartheta, omega) = sum_{m, m', m''} C_{m,m',m''}
                                 exp(i (m varphi + m'' vartheta + m' omega))

with ``|m|, |m'|, |m''| < L``, so sampling ``2L - 1`` uniform nodes per axis
is alias free and the samples follow from one inverse 3-D FFT once the
O(L^4) cube ``C`` is accumulated.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba
import numpy as np
from numpy.typing import NDArray

from .exceptions import BandlimitMismatch, GridError, NonInvertible, ScaleError
from .slepian import SlepianBasis
from .sphere import HarmonicCoefficients, SphereGrid, SphereSignal, idx, sht_inverse
from .wigner import EulerAngles, _delta_step, iter_delta

__all__ = [
    "SO3Grid",
    "SO3Signal",
    "WignerCoefficients",
    "CCube",
    "wrap_orders",
    "unwrap_orders",
    "sst_point",
    "compute_C",
    "sst_from_C",
    "sst_fast",
    "sst_wigner_coefficients",
    "so3_analysis",
    "inverse_sst",
    "frame_weights",
    "frame_constant",
    "frame_bounds",
    "tight_frame_ratio",
    "zonal_sst_coefficients",
    "zonal_sst",
    "zonal_inverse",
]


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SO3Grid:
    """``2L - 1`` uniform nodes on ``[0, 2 pi)`` along each Euler axis.

    ``vartheta`` runs over the full period; nodes beyond pi are the
    periodic extension of the series and :meth:`half` drops them.
    """

    L: int

    @property
    def n(self) -> int:
        return 2 * self.L - 1

    def _nodes(self):
        return 2.0 * np.pi * np.arange(self.n) / self.n

    @property
    def varphi_nodes(self):
        return self._nodes()

    @property
    def vartheta_nodes(self):
        return self._nodes()

    @property
    def omega_nodes(self):
        return self._nodes()

    def half(self):
        """Indices of the ``vartheta`` nodes in ``[0, pi]``."""
        return np.flatnonzero(self.vartheta_nodes <= math.pi)

    def angles(self, a, b, c) -> EulerAngles:
        t = self._nodes()
        return EulerAngles(float(t[a]), float(t[b]), float(t[c]))


@dataclass(frozen=True, eq=False)
class SO3Signal:
    grid: SO3Grid
    values: NDArray[np.complex128]
    alpha: int = 1

    def __post_init__(self):
        n = self.grid.n
        if np.shape(self.values) != (n, n, n):
            raise GridError(f"SO3 values must have shape {(n, n, n)}, got {np.shape(self.values)}")


@dataclass(frozen=True, eq=False)
class WignerCoefficients:
    """``(F)^l_{m,m'}`` stored in a padded array ``coeffs[l, m + L - 1, m' + L - 1]``."""

    L: int
    coeffs: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self):
        n = 2 * self.L - 1
        if np.shape(self.coeffs) != (self.L, n, n):
            raise ValueError(f"expected shape {(self.L, n, n)}, got {np.shape(self.coeffs)}")

    def block(self, ell):
        c = self.L - 1
        return self.coeffs[ell, c - ell:c + ell + 1, c - ell:c + ell + 1]

    def __getitem__(self, key):
        ell, m, mp = key
        if abs(m) > ell or abs(mp) > ell:
            raise IndexError(f"orders ({m}, {mp}) exceed degree {ell}")
        c = self.L - 1
        return self.coeffs[ell, m + c, mp + c]


@dataclass(frozen=True, eq=False)
class CCube:
    """``C_{m,m',m''}`` stored at ``values[m + L - 1, m' + L - 1, m'' + L - 1]``."""

    L: int
    values: NDArray[np.complex128] = field(repr=False)

    def __getitem__(self, key):
        c = self.L - 1
        m, mp, m2 = key
        return self.values[m + c, mp + c, m2 + c]


def wrap_orders(centered):
    """Move order ``k`` from index ``k + L - 1`` to index ``k mod (2L - 1)``.

    Negative orders ``k in [-(L-1), -1]`` land at ``(2L - 1) + k``.
    """
    n = centered.shape[0]
    L = (n + 1) // 2
    return np.roll(centered, -(L - 1), axis=tuple(range(centered.ndim)))


def unwrap_orders(wrapped):
    n = wrapped.shape[0]
    L = (n + 1) // 2
    return np.roll(wrapped, L - 1, axis=tuple(range(wrapped.ndim)))


def _check(f: HarmonicCoefficients, basis: SlepianBasis, alpha):
    if f.L != basis.L:
        raise BandlimitMismatch(
            f"signal bandlimit {f.L} differs from Slepian bandlimit {basis.L}; "
            "the transform requires L_f == L_g"
        )
    if not 1 <= alpha <= basis.n_columns:
        raise ScaleError(f"scale alpha={alpha} outside 1..{basis.n_columns}")
    return basis.eigenvectors[:, alpha - 1]


def _i_power(k):
    return np.array([1.0, 1j, -1.0, -1j])[np.mod(k, 4)]


# ---------------------------------------------------------------------------
# forward transform
# ---------------------------------------------------------------------------


def sst_point(f: HarmonicCoefficients, basis: SlepianBasis, alpha, rho, table=None) -> complex:
    """Direct evaluation of ``F_alpha(rho)``; O(L^3) per point.

    Sums ``f_l^m conj(g_l^{m'}) conj(D^l_{m,m'}(rho))`` degree by degree,
    expanding ``d^l(vartheta)`` through ``Delta^l``.
    """
    g = _check(f, basis, alpha)
    if not isinstance(rho, EulerAngles):
        rho = EulerAngles(*rho)
    total = 0.0 + 0.0j
    deltas = ((ell, table[ell]) for ell in range(f.L)) if table is not None else iter_delta(f.L)
    for ell, delta in deltas:
        sl = slice(ell * ell, (ell + 1) * (ell + 1))
        k = np.arange(-ell, ell + 1)
        # conj(D_{m,m'}) = e^{i m varphi} d_{m,m'} e^{i m' omega},
        # d_{m,m'} = i^{m-m'} sum_k Delta_{k,m} Delta_{k,m'} e^{-i k vartheta}
        u = delta @ (f.coeffs[sl] * _i_power(k) * np.exp(1j * k * rho.varphi))
        v = delta @ (np.conj(g[sl]) * _i_power(-k) * np.exp(1j * k * rho.omega))
        total += np.sum(np.exp(-1j * k * rho.vartheta) * u * v)
    return complex(total)


@numba.njit(nogil=True, cache=True)
def _c_band(fc, gc, L, lo, hi, acc):
    """Add every degree's contribution to rows ``lo <= m'' + L - 1 < hi`` of ``acc``.

    ``acc[m'' + c, m + c, m' + c] += f_l^m conj(g_l^m') Delta_{m'',m} Delta_{m'',m'}``
    with ``Delta^l`` advanced one degree at a time.
    """
    c = L - 1
    d = np.ones((1, 1))
    for ell in range(L):
        if ell > 0:
            d = _delta_step(d, ell)
        n = 2 * ell + 1
        base = c - ell
        s = ell * ell
        brow = np.empty(n, dtype=np.complex128)
        for k in range(max(lo, base), min(hi, base + n)):
            kk = k - base
            for j in range(n):
                brow[j] = d[kk, j] * gc[s + j]
            for i in range(n):
                a = d[kk, i] * fc[s + i]
                if a == 0:
                    continue
                for j in range(n):
                    acc[k, base + i, base + j] += a * brow[j]


def _chunks(n, parts):
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _c_accumulator(f, g, workers):
    """``acc[m'' + c, m + c, m' + c] = sum_l f_l^m conj(g_l^m') Delta_{m'',m} Delta_{m'',m'}``.

    Work is split into fixed bands of ``m''`` rows.  Each band is owned by
    one thread and adds degrees in increasing order, so the result is
    bit-identical for any worker count.
    """
    L = f.L
    n = 2 * L - 1
    acc = np.zeros((n, n, n), dtype=np.complex128)
    fc = np.ascontiguousarray(f.coeffs, dtype=np.complex128)
    gc = np.ascontiguousarray(np.conj(g), dtype=np.complex128)
    if workers <= 1:
        _c_band(fc, gc, L, 0, n, acc)
        return acc
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_c_band, fc, gc, L, lo, hi, acc) for lo, hi in _chunks(n, workers)]
        for fut in futures:
            fut.result()
    return acc


def _phase_mm(L):
    k = np.arange(-(L - 1), L)
    return _i_power(k[None, :] - k[:, None])  # [m, m'] -> i^{m' - m}


def compute_C(f: HarmonicCoefficients, basis: SlepianBasis, alpha, workers=1) -> CCube:
    """Fourier cube ``C_{m,m',m''}`` of ``F_alpha``; O(L^4).

    ``C = i^{m'-m} sum_{l >= max(|m|,|m'|,|m''|)} f_l^m conj(g_l^{m'})
    Delta^l_{m'',m} Delta^l_{m'',m'}`` with ``Delta^l`` generated one degree
    at a time.
    """
    g = _check(f, basis, alpha)
    acc = _c_accumulator(f, g, workers)
    acc *= _phase_mm(f.L)[None, :, :]
    return CCube(f.L, np.ascontiguousarray(acc.transpose(1, 2, 0)))


def sst_from_C(C: CCube, alpha=1) -> SO3Signal:
    """Samples of the series on :class:`SO3Grid` by one inverse 3-D FFT."""
    n = 2 * C.L - 1
    spec = wrap_orders(C.values.transpose(0, 2, 1))  # axes (m, m'', m')
    values = np.fft.ifftn(spec) * float(n) ** 3
    return SO3Signal(SO3Grid(C.L), values, alpha)


def sst_fast(f: HarmonicCoefficients, basis: SlepianBasis, alpha, workers=1) -> SO3Signal:
    """``F_alpha`` on the full ``(2L-1)^3`` Euler grid, axes ``(varphi, vartheta, omega)``."""
    g = _check(f, basis, alpha)
    L = f.L
    n = 2 * L - 1
    acc = _c_accumulator(f, g, workers)
    acc *= _phase_mm(L)[None, :, :]
    # acc axes are (m'', m, m'); the FFT wants (m, m'', m')
    spec = wrap_orders(acc.transpose(1, 0, 2))
    del acc
    values = np.fft.ifftn(spec) * float(n) ** 3
    return SO3Signal(SO3Grid(L), values, alpha)


def sst_wigner_coefficients(f: HarmonicCoefficients, basis: SlepianBasis, alpha) -> WignerCoefficients:
    """``(F_alpha)^l_{m,m'} = f_l^m conj(g_l^{m'})``."""
    g = _check(f, basis, alpha)
    L = f.L
    c = L - 1
    out = np.zeros((L, 2 * L - 1, 2 * L - 1), dtype=np.complex128)
    for ell in range(L):
        sl = slice(ell * ell, (ell + 1) * (ell + 1))
        out[ell, c - ell:c + ell + 1, c - ell:c + ell + 1] = np.outer(f.coeffs[sl], np.conj(g[sl]))
    return WignerCoefficients(L, out)


def _sin_moments(n):
    """``I[k, k'] = int_0^pi exp(i (k - k') t) sin t dt`` for ``|k|, |k'| < (n+1)/2``."""
    L = (n + 1) // 2
    k = np.arange(-(L - 1), L)
    d = k[:, None] - k[None, :]
    out = np.zeros(d.shape, dtype=np.complex128)
    even = d % 2 == 0
    out[even] = 2.0 / (1.0 - d[even].astype(float) ** 2)
    out[d == 1] = 0.5j * np.pi
    out[d == -1] = -0.5j * np.pi
    return out


def so3_analysis(F: SO3Signal) -> WignerCoefficients:
    """Coefficients ``(F)^l_{m,m'}`` of ``F = sum (F)^l_{m,m'} conj(D^l_{m,m'})``.

    Exact for series with orders below ``L``: the FFT recovers ``C`` and the
    ``vartheta`` integral against ``d^l`` is done in closed form through
    ``Delta^l``.  O(L^4), used to invert sampled transforms.
    """
    L = F.grid.L
    n, c = 2 * L - 1, L - 1
    cube = unwrap_orders(np.fft.fftn(F.values)) / float(n) ** 3  # (m, m'', m')
    cube = cube.transpose(0, 2, 1)  # (m, m', k)
    E = (cube.reshape(n * n, n) @ _sin_moments(n)).reshape(n, n, n)
    del cube
    out = np.zeros((L, n, n), dtype=np.complex128)
    for ell, delta in iter_delta(L):
        s = slice(c - ell, c + ell + 1)
        k = np.arange(-ell, ell + 1)
        Es = E[s, s, s]  # (m, m', k')
        acc = np.einsum("km,kn,mnk->mn", delta, delta, Es, optimize=True)
        phase = _i_power(k[:, None] - k[None, :])
        out[ell, s, s] = 0.5 * (2 * ell + 1) * phase * acc
    return WignerCoefficients(L, out)


# ---------------------------------------------------------------------------
# inverse transform
# ---------------------------------------------------------------------------


def _default_eps(g):
    return 1e-12 * float(np.max(np.abs(g))) if g.size else 0.0


def inverse_sst(Fw: WignerCoefficients, basis: SlepianBasis, alpha, eps=None) -> HarmonicCoefficients:
    """Recover ``f`` from the Wigner coefficients of ``F_alpha``.

    At each degree the order ``m'`` with the largest ``|(g_alpha)_l^{m'}|``
    is used: ``f_l^m = (F)^l_{m,m'} / conj((g_alpha)_l^{m'})``.

    Raises
    ------
    NonInvertible
        If every ``|(g_alpha)_l^{m'}|`` at some degree is ``<= eps``
        (default ``1e-12`` times the largest coefficient of ``g_alpha``).
    """
    if Fw.L != basis.L:
        raise BandlimitMismatch(f"coefficients have L={Fw.L}, basis L={basis.L}")
    if not 1 <= alpha <= basis.n_columns:
        raise ScaleError(f"scale alpha={alpha} outside 1..{basis.n_columns}")
    g = basis.eigenvectors[:, alpha - 1]
    eps = _default_eps(g) if eps is None else eps
    L = Fw.L
    out = np.zeros(L * L, dtype=np.complex128)
    bad = []
    for ell in range(L):
        gl = g[ell * ell:(ell + 1) * (ell + 1)]
        j = int(np.argmax(np.abs(gl)))
        if abs(gl[j]) <= eps:
            bad.append(ell)
            continue
        out[ell * ell:(ell + 1) * (ell + 1)] = Fw.block(ell)[:, j] / np.conj(gl[j])
    if bad:
        raise NonInvertible(bad, eps)
    return HarmonicCoefficients(L, out)


# ---------------------------------------------------------------------------
# frame
# ---------------------------------------------------------------------------


def frame_weights(basis: SlepianBasis, n=None):
    """Per-degree energy gain ``w_l = 8 pi^2/(2l+1) sum_{alpha<=n} ||(g_alpha)_l||^2``.

    ``sum_alpha ||F_alpha||^2_SO3 = sum_l w_l ||f_l||^2``.
    """
    n = basis.n_well if n is None else n
    L = basis.L
    G = basis.eigenvectors[:, :n]
    ell = np.repeat(np.arange(L), 2 * np.arange(L) + 1)
    per_deg = np.bincount(ell, weights=np.sum(np.abs(G) ** 2, axis=1), minlength=L)
    return 8.0 * np.pi ** 2 / (2 * np.arange(L) + 1) * per_deg


def frame_constant(basis: SlepianBasis, n=None) -> float:
    """``sum_{alpha<=n} sum_{s,t'} 8 pi^2/(2s+1) |(g_alpha)_s^{t'}|^2``.

    This equals ``sum_s w_s`` with ``w_s`` from :func:`frame_weights`.  It
    is the normalisation the tight-frame identity is stated with; the
    actual energy gain is degree dependent, see :func:`frame_bounds`.
    """
    return float(np.sum(frame_weights(basis, n)))


def frame_bounds(basis: SlepianBasis, n=None):
    """Optimal frame bounds ``(A, B)`` of the rotated family ``{D_rho g_alpha}``."""
    w = frame_weights(basis, n)
    return float(w.min()), float(w.max())


def tight_frame_ratio(f: HarmonicCoefficients, basis: SlepianBasis, n=None) -> float:
    """``sum_alpha ||F_alpha||^2_SO3 / (frame_constant * ||f||^2)``.

    The numerator uses the Wigner-Parseval identity
    ``||F||^2 = sum 8 pi^2/(2l+1) |(F)^l_{m,m'}|^2``.
    """
    if f.L != basis.L:
        raise BandlimitMismatch(f"signal L={f.L}, basis L={basis.L}")
    energy = f.norm() ** 2
    if energy == 0.0:
        raise ValueError("tight_frame_ratio is undefined for the zero signal")
    L = f.L
    ell = np.repeat(np.arange(L), 2 * np.arange(L) + 1)
    f_deg = np.bincount(ell, weights=np.abs(f.coeffs) ** 2, minlength=L)
    num = float(np.sum(frame_weights(basis, n) * f_deg))
    return num / (frame_constant(basis, n) * energy)


# ---------------------------------------------------------------------------
# zonal specialisation
# ---------------------------------------------------------------------------


def _zonal_column(basis: SlepianBasis, alpha):
    g = basis.eigenvectors[:, alpha - 1]
    L = basis.L
    zero_idx = idx(np.arange(L), 0)
    off = np.delete(g, zero_idx)
    if np.any(off != 0):
        raise ValueError(f"Slepian function alpha={alpha} is not zonal")
    return g[zero_idx]


def zonal_sst_coefficients(f: HarmonicCoefficients, zb: SlepianBasis, alpha) -> HarmonicCoefficients:
    """``(F_alpha)_l^m = sqrt(4 pi/(2l+1)) f_l^m conj((g_alpha)_l^0)``."""
    _check(f, zb, alpha)
    g0 = _zonal_column(zb, alpha)
    ell = np.repeat(np.arange(f.L), 2 * np.arange(f.L) + 1)
    scale = np.sqrt(4.0 * np.pi / (2 * ell + 1)) * np.conj(g0[ell])
    return HarmonicCoefficients(f.L, f.coeffs * scale)


def zonal_sst(f: HarmonicCoefficients, zb: SlepianBasis, alpha, g: SphereGrid) -> SphereSignal:
    """``F_alpha(vartheta, varphi)`` for a zonal basis, sampled on the sphere grid ``g``."""
    return sht_inverse(zonal_sst_coefficients(f, zb, alpha), g)


def zonal_inverse(Fs: HarmonicCoefficients, zb: SlepianBasis, alpha, eps=None) -> HarmonicCoefficients:
    """``f_l^m = sqrt((2l+1)/(4 pi)) (F)_l^m / conj((g_alpha)_l^0)``.

    Raises
    ------
    NonInvertible
        Listing the degrees where ``|(g_alpha)_l^0| <= eps``.
    """
    if Fs.L != zb.L:
        raise BandlimitMismatch(f"coefficients have L={Fs.L}, basis L={zb.L}")
    if not 1 <= alpha <= zb.n_columns:
        raise ScaleError(f"scale alpha={alpha} outside 1..{zb.n_columns}")
    g0 = _zonal_column(zb, alpha)
    eps = _default_eps(g0) if eps is None else eps
    bad = np.flatnonzero(np.abs(g0) <= eps)
    if bad.size:
        raise NonInvertible(bad.tolist(), eps)
    ell = np.repeat(np.arange(Fs.L), 2 * np.arange(Fs.L) + 1)
    scale = np.sqrt((2 * ell + 1) / (4.0 * np.pi)) / np.conj(g0[ell])
    return HarmonicCoefficients(Fs.L, Fs.coeffs * scale)
