"""Regions, the concentration matrix and Slepian bases.

Two region kinds are supported: the north polar cap of angle ``Theta_c``
and the spherical ellipse.  The ellipse is the set of points whose
geodesic distances to two foci sum to at most ``2a``; before rotation the
foci sit at colatitude ``theta_c`` on the x-z great circle (azimuths 0 and
pi), so the ellipse is centred on the north pole and elongated along x.
Its semi-minor arc ``b`` obeys ``cos a = cos b cos theta_c``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import BandlimitMismatch, NumericalError, ScaleError
from .sphere import (
    HarmonicCoefficients,
    SphereGrid,
    SphereSignal,
    idx,
    legendre_table,
    sht_inverse,
    ylm_matrix,
)
from .wigner import EulerAngles, rotation_matrix

__all__ = [
    "PolarCap",
    "SphericalEllipse",
    "Region",
    "region_from_descriptor",
    "region_membership",
    "region_area",
    "SlepianBasis",
    "concentration_matrix",
    "solve_slepian",
    "slepian_basis",
    "zonal_basis",
    "slepian_eval",
    "slepian_analysis",
    "slepian_synthesis",
    "region_norm2",
]

log = logging.getLogger(__name__)

EIG_CLAMP = 1e-12


def _unit_vectors(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)])


def _angles(xyz):
    theta = np.arccos(np.clip(xyz[2], -1.0, 1.0))
    phi = np.mod(np.arctan2(xyz[1], xyz[0]), 2.0 * np.pi)
    return theta, phi


@dataclass(frozen=True)
class PolarCap:
    """North polar cap ``{theta <= Theta_c}``, ``0 < Theta_c <= pi``."""

    Theta_c: float
    kind = "polar_cap"

    def __post_init__(self):
        if not 0.0 < self.Theta_c <= math.pi:
            raise ValueError(f"cap angle must lie in (0, pi], got {self.Theta_c}")

    def contains(self, theta, phi, margin=0.0):
        return np.asarray(theta) <= self.Theta_c + margin

    def area(self, L_quad=None) -> float:
        return 2.0 * math.pi * (1.0 - math.cos(self.Theta_c))

    def quadrature(self, n_theta, n_phi):
        """Nodes and weights integrating over the cap.

        Gauss-Legendre in ``cos(theta)`` on ``[cos Theta_c, 1]`` times the
        uniform rule in longitude.
        """
        x, w = np.polynomial.legendre.leggauss(n_theta)
        c0 = math.cos(self.Theta_c)
        x = 0.5 * (1.0 - c0) * x + 0.5 * (1.0 + c0)
        w = 0.5 * (1.0 - c0) * w
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        th, ph = np.meshgrid(np.arccos(x), phi, indexing="ij")
        wts = np.repeat(w[:, None] * (2.0 * np.pi / n_phi), n_phi, axis=1)
        return th.ravel(), ph.ravel(), wts.ravel()

    def descriptor(self):
        return {"kind": self.kind, "Theta_c_deg": math.degrees(self.Theta_c)}


@dataclass(frozen=True)
class SphericalEllipse:
    """Spherical ellipse with focus colatitude ``theta_c`` and semi-major arc ``a``.

    ``rotation`` carries the ellipse from its pole-centred, x-aligned
    position; a point belongs to the region when its inverse-rotated image
    belongs to the unrotated ellipse.
    """

    theta_c: float
    a: float
    rotation: EulerAngles = field(default_factory=EulerAngles)
    kind = "spherical_ellipse"

    def __post_init__(self):
        if not 0.0 < self.theta_c < self.a < math.pi / 2.0:
            raise ValueError(
                f"need 0 < theta_c < a < pi/2, got theta_c={self.theta_c}, a={self.a}"
            )

    @property
    def b(self) -> float:
        """Semi-minor arc length."""
        return math.acos(math.cos(self.a) / math.cos(self.theta_c))

    def foci(self):
        """Foci of the unrotated ellipse as unit vectors, shape (3, 2)."""
        s, c = math.sin(self.theta_c), math.cos(self.theta_c)
        return np.array([[s, -s], [0.0, 0.0], [c, c]])

    def boundary_colatitude(self, phi):
        """Colatitude of the unrotated boundary at azimuth ``phi``.

        The gnomonic projection of a focal-sum spherical ellipse is a plane
        ellipse with semi-axes ``tan a`` and ``tan b``.
        """
        ta, tb = math.tan(self.a), math.tan(self.b)
        phi = np.asarray(phi, dtype=np.float64)
        r = 1.0 / np.sqrt((np.cos(phi) / ta) ** 2 + (np.sin(phi) / tb) ** 2)
        return np.arctan(r)

    def _local(self, theta, phi):
        """Points expressed in the unrotated frame, shape (3, ...)."""
        xyz = _unit_vectors(np.asarray(theta, dtype=np.float64), np.asarray(phi, dtype=np.float64))
        R = rotation_matrix(self.rotation)
        return np.tensordot(R.T, xyz, axes=1)

    def focal_sum(self, theta, phi):
        y = self._local(theta, phi)
        f = self.foci()
        d1 = np.arccos(np.clip(np.tensordot(f[:, 0], y, axes=1), -1.0, 1.0))
        d2 = np.arccos(np.clip(np.tensordot(f[:, 1], y, axes=1), -1.0, 1.0))
        return d1 + d2

    def contains(self, theta, phi, margin=0.0):
        inside = self.focal_sum(theta, phi) <= 2.0 * self.a
        if margin <= 0.0:
            return inside
        return inside | (self.distance(theta, phi) <= margin)

    def distance(self, theta, phi, n_boundary=4096):
        """Geodesic distance to the (sampled) boundary; 0 inside."""
        shape = np.shape(theta)
        y = self._local(np.ravel(theta), np.ravel(phi)).reshape(3, -1)
        pb = 2.0 * np.pi * np.arange(n_boundary) / n_boundary
        bd = _unit_vectors(self.boundary_colatitude(pb), pb)
        cosd = np.clip(bd.T @ y, -1.0, 1.0)
        dist = np.arccos(cosd.max(axis=0))
        inside = self.focal_sum(np.ravel(theta), np.ravel(phi)) <= 2.0 * self.a
        return np.where(inside, 0.0, dist).reshape(shape)

    def area(self, L_quad=64) -> float:
        """``int_0^{2 pi} (1 - cos theta_b(phi)) dphi`` by the trapezoid rule.

        The integrand is smooth and periodic, so the rule converges
        geometrically; ``L_quad`` sets ``8 L_quad`` azimuth nodes.
        """
        n = max(8 * int(L_quad), 256)
        phi = 2.0 * np.pi * np.arange(n) / n
        return float(np.sum(1.0 - np.cos(self.boundary_colatitude(phi))) * 2.0 * np.pi / n)

    def quadrature(self, n_theta, n_phi):
        """Nodes and weights over the rotated ellipse.

        Polar coordinates about the centre: uniform azimuths and, along
        each ray, Gauss-Legendre in ``theta`` on ``[0, theta_b(phi)]``.
        Nodes are then carried by the rotation.
        """
        x, w = np.polynomial.legendre.leggauss(n_theta)
        phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
        tb = self.boundary_colatitude(phi)
        th = 0.5 * (x[:, None] + 1.0) * tb[None, :]
        wts = 0.5 * w[:, None] * tb[None, :] * np.sin(th) * (2.0 * np.pi / n_phi)
        ph = np.broadcast_to(phi[None, :], th.shape)
        xyz = _unit_vectors(th.ravel(), ph.ravel())
        theta_r, phi_r = _angles(rotation_matrix(self.rotation) @ xyz)
        return theta_r, phi_r, wts.ravel()

    def descriptor(self):
        return {
            "kind": self.kind,
            "theta_c_deg": math.degrees(self.theta_c),
            "a_deg": math.degrees(self.a),
            "rotation_deg": list(self.rotation.degrees()),
        }


Region = PolarCap | SphericalEllipse


def region_from_descriptor(d) -> Region:
    if d["kind"] == "polar_cap":
        return PolarCap(math.radians(d["Theta_c_deg"]))
    if d["kind"] == "spherical_ellipse":
        return SphericalEllipse(
            math.radians(d["theta_c_deg"]),
            math.radians(d["a_deg"]),
            EulerAngles.from_degrees(*d.get("rotation_deg", (0.0, 0.0, 0.0))),
        )
    raise ValueError(f"unknown region kind {d['kind']!r}")


def region_membership(R: Region, theta, phi, margin=0.0):
    """Boolean membership, optionally of ``R`` grown by ``margin`` radians."""
    return R.contains(theta, phi, margin)


def region_area(R: Region, L_quad=64) -> float:
    return R.area(L_quad)


# ---------------------------------------------------------------------------
# concentration problem
# ---------------------------------------------------------------------------


def _cap_blocks(Theta_c, L):
    """``G[m][l-m, p-m] = 2 pi int_{cos Theta_c}^1 lam_l^m lam_p^m dx`` for m >= 0.

    The integrand is a polynomial of degree <= 2L-2 in ``x`` so ``L``
    Gauss-Legendre nodes are exact.
    """
    x, w = np.polynomial.legendre.leggauss(L)
    c0 = math.cos(Theta_c)
    x = 0.5 * (1.0 - c0) * x + 0.5 * (1.0 + c0)
    w = 0.5 * (1.0 - c0) * w
    lam = legendre_table(L, x)  # (L, L, n)
    blocks = []
    for m in range(L):
        P = lam[m:, m, :]
        G = 2.0 * np.pi * (P * w) @ P.T
        blocks.append(0.5 * (G + G.T))
    return blocks


def concentration_matrix(R: Region, L, n_theta=None, n_phi=None):
    """``K_{lm,pq} = int_R conj(Y_l^m) Y_p^q ds`` as an ``L^2 x L^2`` array.

    Caps are block diagonal in the order and computed exactly.  Ellipses
    use the region-adapted quadrature of :meth:`SphericalEllipse.quadrature`
    (``n_theta`` defaults to ``L + 8`` ray nodes, ``n_phi`` to ``4L + 16``
    azimuths).  The result is symmetrised so ``K == K^H`` exactly.
    """
    n = L * L
    if isinstance(R, PolarCap):
        K = np.zeros((n, n), dtype=np.complex128)
        for m, G in enumerate(_cap_blocks(R.Theta_c, L)):
            ii = idx(np.arange(m, L), m)
            K[np.ix_(ii, ii)] = G
            if m:
                jj = idx(np.arange(m, L), -m)
                K[np.ix_(jj, jj)] = G
        return K
    n_theta = n_theta or L + 8
    n_phi = n_phi or 4 * L + 16
    theta, phi, w = R.quadrature(n_theta, n_phi)
    Y = ylm_matrix(L, theta, phi)
    K = Y.conj().T @ (w[:, None] * Y)
    return 0.5 * (K + K.conj().T)


@dataclass(frozen=True, eq=False)
class SlepianBasis:
    """Eigen-solution of the concentration problem.

    ``eigenvectors[:, alpha - 1]`` holds the coefficients of ``g_alpha``.
    A basis may keep fewer than ``L^2`` columns (zonal bases, truncated
    files); ``eigenvalues`` always matches the stored columns.
    """

    L: int
    region: Region
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.complex128] = field(repr=False)
    shannon: float
    n_well: int
    zonal: bool = False

    @property
    def n_columns(self) -> int:
        return self.eigenvectors.shape[1]

    def _check_alpha(self, alpha):
        if not 1 <= alpha <= self.n_columns:
            raise ScaleError(f"scale alpha={alpha} outside 1..{self.n_columns}")

    def column(self, alpha) -> HarmonicCoefficients:
        """``g_alpha`` as harmonic coefficients (``alpha`` is 1-based)."""
        self._check_alpha(alpha)
        return HarmonicCoefficients(self.L, self.eigenvectors[:, alpha - 1])

    def truncated(self, n) -> "SlepianBasis":
        n = min(int(n), self.n_columns)
        return SlepianBasis(
            self.L, self.region, self.eigenvalues[:n].copy(),
            self.eigenvectors[:, :n].copy(), self.shannon, self.n_well, self.zonal,
        )


def round_half_up(x) -> int:
    return int(math.floor(x + 0.5))


def _fix_phase(vecs, rel=1e-8):
    """Make the first non-negligible entry of each column real and positive."""
    mags = np.abs(vecs)
    thresh = rel * mags.max(axis=0, keepdims=True)
    first = np.argmax(mags > thresh, axis=0)
    cols = np.arange(vecs.shape[1])
    pivot = vecs[first, cols]
    out = vecs * (np.abs(pivot) / pivot)[None, :]
    if np.iscomplexobj(out):
        # the phase product leaves rounding noise in the pivot's imaginary part
        out[first, cols] = np.abs(pivot)
    return out


def _clamp(lam):
    lam = np.where((lam < 0.0) & (lam > -EIG_CLAMP), 0.0, lam)
    return np.where((lam > 1.0) & (lam < 1.0 + EIG_CLAMP), 1.0, lam)


def _eigh(K):
    try:
        return np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        try:
            cond = np.linalg.cond(K)
        except np.linalg.LinAlgError:
            cond = float("nan")
        raise NumericalError(
            f"eigensolver failed on {K.shape[0]}x{K.shape[0]} matrix "
            f"(condition number {cond:.3g}, max |K - K^H| "
            f"{np.abs(K - K.conj().T).max():.3g}): {exc}"
        ) from exc


def _finish(lam, vec, R, L, n_keep, zonal=False, shannon=None):
    order = np.argsort(-lam, kind="stable")
    if n_keep is not None:
        order = order[:n_keep]
    lam = _clamp(lam[order])
    vec = _fix_phase(vec(order) if callable(vec) else vec[:, order])
    if shannon is None:
        shannon = R.area() / (4.0 * math.pi) * L * L
    return SlepianBasis(L, R, lam, vec, shannon, round_half_up(shannon), zonal)


def _solve_blocks(blocks, R, L, n_keep):
    """Solve the per-order cap blocks ``blocks[m]`` (``m >= 0``, shared by ``+-m``)."""
    n = L * L
    lams, owners, locals_ = [], [], []
    solved = [_eigh(G) for G in blocks]
    for m in range(-(L - 1), L):
        lam, v = solved[abs(m)]
        lams.append(lam)
        owners.extend((m, j) for j in range(lam.size))
        locals_.append(v)
    lam = np.concatenate(lams)

    def columns(order):
        out = np.zeros((n, len(order)), dtype=np.complex128)
        for col, k in enumerate(order):
            m, j = owners[k]
            out[idx(np.arange(abs(m), L), m), col] = solved[abs(m)][1][:, j]
        return out

    return _finish(lam, columns, R, L, n_keep)


def solve_slepian(K, R: Region, L, n_keep=None) -> SlepianBasis:
    """Hermitian eigendecomposition of ``K`` sorted by decreasing concentration.

    Block-diagonal cap matrices are solved order by order, which keeps each
    eigenvector a pure order ``m`` and makes the ``+-m`` degeneracy
    deterministic.  Eigenvalues within ``1e-12`` outside ``[0, 1]`` are
    clamped, and each column's phase is fixed so that its first
    non-negligible entry is real and positive.  ``n_keep`` limits the
    stored columns to the best concentrated ones.
    """
    n = L * L
    if K.shape != (n, n):
        raise ValueError(f"K has shape {K.shape}, expected ({n}, {n}) for L={L}")
    if isinstance(R, PolarCap):
        blocks = []
        for m in range(L):
            ii = idx(np.arange(m, L), m)
            G = K[np.ix_(ii, ii)]
            # cap blocks are real; solving them as real keeps the columns
            # identical to the ones built by slepian_basis
            blocks.append(G.real if np.iscomplexobj(G) and not np.any(G.imag) else G)
        return _solve_blocks(blocks, R, L, n_keep)
    lam, vec = _eigh(K)
    return _finish(lam, vec, R, L, n_keep)


def slepian_basis(R: Region, L, n_keep=None) -> SlepianBasis:
    """Build ``K`` for ``R`` and solve it.

    Caps never form the dense ``L^2 x L^2`` matrix; their order blocks are
    solved directly, so large bandlimits stay cheap when ``n_keep`` is set.
    """
    if isinstance(R, PolarCap):
        return _solve_blocks(_cap_blocks(R.Theta_c, L), R, L, n_keep)
    return solve_slepian(concentration_matrix(R, L), R, L, n_keep)


def zonal_basis(Theta_c, L) -> SlepianBasis:
    """Order-zero Slepian functions of the polar cap.

    Only the ``m = 0`` block (size ``L x L``) is solved; the returned
    basis has ``L`` columns that vanish off the ``m = 0`` entries and the
    zonal Shannon number ``L Theta_c / pi``.
    """
    cap = PolarCap(Theta_c)
    lam, v = _eigh(_cap_blocks(Theta_c, L)[0])
    vec = np.zeros((L * L, L), dtype=np.complex128)
    vec[idx(np.arange(L), 0)] = v
    return _finish(lam, vec, cap, L, None, zonal=True, shannon=L * Theta_c / math.pi)


def slepian_eval(basis: SlepianBasis, alpha, grid: SphereGrid) -> SphereSignal:
    """Spatial Slepian function ``g_alpha`` sampled on ``grid``."""
    return sht_inverse(basis.column(alpha), grid)


def slepian_analysis(c: HarmonicCoefficients, basis: SlepianBasis):
    """Slepian coefficients ``(h)_alpha = g_alpha^H h`` for every stored column."""
    if c.L != basis.L:
        raise BandlimitMismatch(f"signal L={c.L} but basis L={basis.L}")
    return basis.eigenvectors.conj().T @ c.coeffs


def slepian_synthesis(a, basis: SlepianBasis) -> HarmonicCoefficients:
    """``h = G a``, the inverse of :func:`slepian_analysis` on a full basis."""
    a = np.asarray(a)
    return HarmonicCoefficients(basis.L, basis.eigenvectors[:, :a.size] @ a)


def region_norm2(c: HarmonicCoefficients, R: Region, n_theta=None, n_phi=None) -> float:
    """``||f||_R^2`` by pointwise synthesis on the region-adapted quadrature."""
    L = c.L
    theta, phi, w = R.quadrature(n_theta or L + 8, n_phi or 4 * L + 16)
    vals = ylm_matrix(L, theta, phi) @ c.coeffs
    return float(np.sum(w * np.abs(vals) ** 2))
