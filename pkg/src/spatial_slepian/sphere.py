"""Spherical harmonics, sampling grids and the quadrature-exact SHT.

Conventions
-----------
* Colatitude ``theta`` in [0, pi], longitude ``phi`` in [0, 2 pi).
* ``P_l^m`` carries the Condon-Shortley phase ``(-1)^m``.
* ``Y_l^{-m} = (-1)^m conj(Y_l^m)``.
* Harmonic coefficients are stored degree-major with flat index
  ``idx(l, m) = l**2 + l + m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import GridError

__all__ = [
    "SphereGrid",
    "SphereSignal",
    "HarmonicCoefficients",
    "idx",
    "lm_from_idx",
    "lm_arrays",
    "associated_legendre",
    "legendre_table",
    "ylm_eval",
    "ylm_matrix",
    "build_grid",
    "equiangular_grid",
    "sht_forward",
    "sht_inverse",
    "inner_product_sphere",
    "inner_product_region",
]


def idx(ell, m):
    """Flat degree-major index of ``(ell, m)``."""
    return ell * ell + ell + m


def lm_from_idx(i):
    """Inverse of :func:`idx`."""
    ell = int(math.isqrt(int(i)))
    return ell, int(i) - ell * ell - ell


def lm_arrays(L):
    """Degree and order arrays of length ``L**2`` in flat-index order."""
    ell = np.repeat(np.arange(L), 2 * np.arange(L) + 1)
    m = np.arange(L * L) - ell * ell - ell
    return ell, m


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Tensor-product sampling of the sphere.

    ``quadrature_weights`` integrate in ``x = cos(theta)`` (they sum to 2);
    the longitude integral is the uniform rule ``2 pi / n_phi``.
    """

    n_theta: int
    n_phi: int
    theta_nodes: NDArray[np.float64]
    phi_nodes: NDArray[np.float64]
    quadrature_weights: NDArray[np.float64]
    sampling: str = "gauss-legendre"

    @property
    def exact_degree(self) -> int:
        """Largest polynomial degree in cos(theta) integrated exactly."""
        if self.sampling == "gauss-legendre":
            return 2 * self.n_theta - 1
        return self.n_theta - 1

    @property
    def max_bandlimit(self) -> int:
        """Largest L for which the grid supports an exact SHT."""
        by_theta = (self.exact_degree + 2) // 2
        by_phi = (self.n_phi + 1) // 2
        return min(by_theta, by_phi)

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    def mesh(self):
        """``(theta, phi)`` arrays of shape ``(n_theta, n_phi)``."""
        return np.meshgrid(self.theta_nodes, self.phi_nodes, indexing="ij")

    def area_weights(self):
        """Per-node surface element, shape ``(n_theta, n_phi)``."""
        dphi = 2.0 * np.pi / self.n_phi
        return np.repeat(self.quadrature_weights[:, None] * dphi, self.n_phi, axis=1)

    def same_as(self, other: "SphereGrid") -> bool:
        return (
            self.sampling == other.sampling
            and self.n_theta == other.n_theta
            and self.n_phi == other.n_phi
            and np.array_equal(self.theta_nodes, other.theta_nodes)
        )


@dataclass(frozen=True, eq=False)
class SphereSignal:
    grid: SphereGrid
    values: NDArray[np.complex128]

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.shape != self.grid.shape:
            raise GridError(
                f"values have shape {values.shape}, grid expects {self.grid.shape}"
            )
        if not np.iscomplexobj(values):
            values = values.astype(np.complex128)
        object.__setattr__(self, "values", values)


@dataclass(frozen=True, eq=False)
class HarmonicCoefficients:
    """Length ``L**2`` coefficient vector, degree-major."""

    L: int
    coeffs: NDArray[np.complex128] = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.L * self.L,):
            raise ValueError(f"expected {self.L * self.L} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, L):
        return cls(L, np.zeros(L * L, dtype=np.complex128))

    @classmethod
    def delta(cls, L, ell, m, value=1.0):
        """A single nonzero coefficient at ``(ell, m)``."""
        if not 0 <= ell < L or abs(m) > ell:
            raise ValueError(f"(ell, m) = ({ell}, {m}) out of range for L={L}")
        c = np.zeros(L * L, dtype=np.complex128)
        c[idx(ell, m)] = value
        return cls(L, c)

    def __getitem__(self, lm):
        ell, m = lm
        return self.coeffs[idx(ell, m)]

    def degree_slice(self, ell):
        return self.coeffs[ell * ell:(ell + 1) * (ell + 1)]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __add__(self, other):
        if not isinstance(other, HarmonicCoefficients) or other.L != self.L:
            return NotImplemented
        return HarmonicCoefficients(self.L, self.coeffs + other.coeffs)

    def __sub__(self, other):
        if not isinstance(other, HarmonicCoefficients) or other.L != self.L:
            return NotImplemented
        return HarmonicCoefficients(self.L, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return HarmonicCoefficients(self.L, self.coeffs * scalar)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# Legendre functions and harmonics
# ---------------------------------------------------------------------------


def legendre_table(L, x):
    """Orthonormalised associated Legendre functions for ``m >= 0``.

    Returns ``lam`` with shape ``(L, L) + x.shape`` where
    ``lam[l, m] = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x)`` (zero for
    ``m > l``), Condon-Shortley phase included, so that
    ``Y_l^m = lam[l, m] * exp(i m phi)``.

    The normalisation is carried through the recursion so no factorials
    are formed.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros((L, L) + x.shape)
    sx = np.sqrt(np.clip((1.0 - x) * (1.0 + x), 0.0, None))
    pmm = np.full(x.shape, 1.0 / math.sqrt(4.0 * math.pi))
    for m in range(L):
        if m > 0:
            pmm = -math.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sx * pmm
        out[m, m] = pmm
        if m + 1 < L:
            out[m + 1, m] = math.sqrt(2.0 * m + 3.0) * x * pmm
        for ell in range(m + 2, L):
            a = math.sqrt((4.0 * ell * ell - 1.0) / (ell * ell - m * m))
            b = math.sqrt(((ell - 1.0) ** 2 - m * m) / (4.0 * (ell - 1.0) ** 2 - 1.0))
            out[ell, m] = a * (x * out[ell - 1, m] - b * out[ell - 2, m])
    return out


def associated_legendre(ell, m, x):
    """Associated Legendre function ``P_l^m(x)`` with Condon-Shortley phase.

    Evaluated through the normalised recursion and rescaled by
    ``sqrt(4 pi (l+m)! / ((2l+1) (l-m)!))`` at the end.

    Raises
    ------
    ValueError
        If ``|x| > 1``, ``m < 0`` or ``m > l``.
    """
    if ell < 0 or m < 0 or m > ell:
        raise ValueError(f"need 0 <= m <= l, got l={ell}, m={m}")
    xa = np.asarray(x, dtype=np.float64)
    if np.any(np.abs(xa) > 1.0):
        raise ValueError("associated_legendre: |x| must not exceed 1")
    lam = legendre_table(ell + 1, xa)[ell, m]
    log_scale = 0.5 * (
        math.log(4.0 * math.pi) - math.log(2.0 * ell + 1.0)
        + math.lgamma(ell + m + 1.0) - math.lgamma(ell - m + 1.0)
    )
    val = lam * math.exp(log_scale)
    return float(val) if np.ndim(val) == 0 else val


def ylm_eval(ell, m, theta, phi):
    """Spherical harmonic ``Y_l^m(theta, phi)``."""
    if ell < 0 or abs(m) > ell:
        raise ValueError(f"need |m| <= l, got l={ell}, m={m}")
    theta = np.asarray(theta, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    lam = legendre_table(ell + 1, np.cos(theta))[ell, abs(m)]
    if m < 0:
        lam = lam * (-1.0) ** m
    val = lam * np.exp(1j * m * phi)
    return complex(val) if np.ndim(val) == 0 else val


def ylm_matrix(L, theta, phi):
    """All harmonics ``Y_l^m`` with ``l < L`` at scattered points.

    Returns an array of shape ``(n_points, L**2)`` whose column
    ``idx(l, m)`` holds ``Y_l^m`` at every point.
    """
    theta = np.ravel(np.asarray(theta, dtype=np.float64))
    phi = np.ravel(np.asarray(phi, dtype=np.float64))
    lam = legendre_table(L, np.cos(theta))
    ell, m = lm_arrays(L)
    am = np.abs(m)
    sign = np.where((m < 0) & (am % 2 == 1), -1.0, 1.0)
    leg = lam[ell, am].T * sign
    return leg * np.exp(1j * np.outer(phi, m))


# ---------------------------------------------------------------------------
# grids and transforms
# ---------------------------------------------------------------------------


def build_grid(L) -> SphereGrid:
    """Gauss-Legendre grid for bandlimit ``L``.

    ``L`` nodes in ``cos(theta)`` and ``2L - 1`` uniform longitudes; exact
    for every product of two harmonics of degree below ``L``.
    """
    if L < 1:
        raise ValueError("bandlimit must be >= 1")
    x, w = np.polynomial.legendre.leggauss(L)
    # leggauss returns ascending x; flip so theta ascends from the north pole
    x, w = x[::-1], w[::-1]
    n_phi = 2 * L - 1
    return SphereGrid(
        n_theta=L,
        n_phi=n_phi,
        theta_nodes=np.arccos(x),
        phi_nodes=2.0 * np.pi * np.arange(n_phi) / n_phi,
        quadrature_weights=w,
        sampling="gauss-legendre",
    )


def fejer_weights(n):
    """Fejer's first rule on the midpoints ``theta_j = pi (j + 1/2) / n``."""
    theta = np.pi * (np.arange(n) + 0.5) / n
    k = np.arange(1, n // 2 + 1)
    s = np.cos(2.0 * np.outer(theta, k)) / (4.0 * k * k - 1.0)
    return theta, (2.0 / n) * (1.0 - 2.0 * s.sum(axis=1))


def equiangular_grid(n_theta, n_phi) -> SphereGrid:
    """Midpoint equiangular grid with Fejer weights (exact to degree n_theta - 1)."""
    theta, w = fejer_weights(n_theta)
    return SphereGrid(
        n_theta=n_theta,
        n_phi=n_phi,
        theta_nodes=theta,
        phi_nodes=2.0 * np.pi * np.arange(n_phi) / n_phi,
        quadrature_weights=w,
        sampling="equiangular",
    )


def _signed_legendre(L, theta):
    """``lam[l, m + L - 1, j]`` for all orders, negative ones by symmetry."""
    lam = legendre_table(L, np.cos(theta))
    full = np.zeros((L, 2 * L - 1, theta.size))
    full[:, L - 1:] = lam
    for m in range(1, L):
        full[:, L - 1 - m] = (-1.0) ** m * lam[:, m]
    return full


def sht_forward(s: SphereSignal, L) -> HarmonicCoefficients:
    """Spherical harmonic coefficients ``<f, Y_l^m>`` for ``l < L``.

    The longitude integral is a length-``n_phi`` FFT and the colatitude
    integral the grid's quadrature; both are exact for signals bandlimited
    to ``L`` on a sufficient grid.

    Raises
    ------
    GridError
        If the grid cannot integrate degree-``L`` products exactly.
    """
    g = s.grid
    if g.max_bandlimit < L:
        raise GridError(
            f"{g.sampling} grid {g.n_theta}x{g.n_phi} supports L <= {g.max_bandlimit}, "
            f"requested L={L}"
        )
    fm = np.fft.fft(s.values, axis=1) * (2.0 * np.pi / g.n_phi)
    orders = np.arange(-(L - 1), L)
    fm = fm[:, orders % g.n_phi]  # (n_theta, 2L-1)
    leg = _signed_legendre(L, g.theta_nodes)  # (L, 2L-1, n_theta)
    flm = np.einsum("lmj,j,jm->lm", leg, g.quadrature_weights, fm)
    ell, m = lm_arrays(L)
    return HarmonicCoefficients(L, flm[ell, m + L - 1])


def sht_inverse(c: HarmonicCoefficients, g: SphereGrid) -> SphereSignal:
    """Pointwise synthesis of ``sum_{l<L, |m|<=l} c_l^m Y_l^m`` on ``g``."""
    L = c.L
    ell, m = lm_arrays(L)
    dense = np.zeros((L, 2 * L - 1), dtype=np.complex128)
    dense[ell, m + L - 1] = c.coeffs
    leg = _signed_legendre(L, g.theta_nodes)
    fm = np.einsum("lmj,lm->jm", leg, dense)  # (n_theta, 2L-1)
    orders = np.arange(-(L - 1), L)
    if g.n_phi >= 2 * L - 1:
        spec = np.zeros((g.n_theta, g.n_phi), dtype=np.complex128)
        spec[:, orders % g.n_phi] = fm
        values = np.fft.ifft(spec, axis=1) * g.n_phi
    else:
        values = fm @ np.exp(1j * np.outer(orders, g.phi_nodes))
    return SphereSignal(g, values)


def _check_same_grid(f: SphereSignal, h: SphereSignal):
    if not f.grid.same_as(h.grid):
        raise GridError("signals are sampled on different grids")


def inner_product_sphere(f: SphereSignal, h: SphereSignal) -> complex:
    """Quadrature value of ``<f, h> = int f conj(h) ds``."""
    _check_same_grid(f, h)
    w = f.grid.area_weights()
    return complex(np.sum(w * f.values * np.conj(h.values)))


def inner_product_region(f: SphereSignal, h: SphereSignal, region) -> complex:
    """``<f, h>_R``: the sphere quadrature masked by region membership.

    The indicator of ``R`` is not bandlimited, so the result is only as
    accurate as the grid resolves the region boundary.
    """
    _check_same_grid(f, h)
    theta, phi = f.grid.mesh()
    mask = region.contains(theta, phi)
    w = f.grid.area_weights()
    return complex(np.sum((w * mask) * f.values * np.conj(h.values)))
