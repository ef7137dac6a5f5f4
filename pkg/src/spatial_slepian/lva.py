"""Localized variation analysis.

An ensemble of observations ``f^j = b + v^j`` shares one background ``b``
and carries weak variations ``v^j`` concentrated in an unknown region.  The
transform is linear, so the background drops out of the pointwise sample
variance of the transformed stack and what remains highlights the region.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import GridError
from .slepian import Region, SlepianBasis, region_membership, slepian_basis
from .sphere import HarmonicCoefficients, SphereGrid, SphereSignal, build_grid
from .sst import SO3Signal, zonal_sst

__all__ = [
    "Ensemble",
    "VarianceMap",
    "synthesize_background",
    "synthesize_variation",
    "bvr",
    "rescale_to_bvr",
    "build_ensemble",
    "sample_variance",
    "variance_maps",
    "detect_region",
    "DetectionScore",
    "score_detection",
]


@dataclass(frozen=True, eq=False)
class Ensemble:
    L: int
    N: int
    background: HarmonicCoefficients
    variations: list = field(repr=False)
    observations: list = field(repr=False)
    seed: int = 0
    target_bvr_db: float = float("nan")


@dataclass(frozen=True, eq=False)
class VarianceMap:
    """Pointwise sample variance for one Slepian scale.

    ``grid`` is a :class:`SphereGrid` for zonal detection or the SO(3)
    grid of the stacked transforms.
    """

    alpha: int
    grid: object
    values: NDArray[np.float64]

    def __post_init__(self):
        if np.any(self.values < 0):
            raise ValueError("variance values must be non-negative")


def _rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def synthesize_background(L, seed) -> HarmonicCoefficients:
    """One realization of the background process.

    Coefficients for ``l >= 1`` are independent complex Gaussians with unit
    variance per real component; ``(b)_0^0`` is a real standard normal.
    """
    if L < 1:
        raise ValueError("bandlimit must be >= 1")
    rng = _rng(seed)
    n = L * L
    c = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    c[0] = c[0].real
    return HarmonicCoefficients(L, c)


def synthesize_variation(basis: SlepianBasis, seed=None, amplitudes=None) -> HarmonicCoefficients:
    """``v = sum_{beta <= n_well} a_beta g_beta`` with ``a_beta`` i.i.d. standard normal.

    Pass ``amplitudes`` to fix the ``a_beta`` instead of drawing them.
    """
    n = basis.n_well
    if basis.n_columns < n:
        raise ValueError(f"basis stores {basis.n_columns} columns, need n_well={n}")
    if amplitudes is None:
        amplitudes = _rng(seed).standard_normal(n)
    a = np.asarray(amplitudes, dtype=float)
    if a.shape != (n,):
        raise ValueError(f"expected {n} amplitudes, got shape {a.shape}")
    return HarmonicCoefficients(basis.L, basis.eigenvectors[:, :n] @ a)


def bvr(b: HarmonicCoefficients, v: HarmonicCoefficients) -> float:
    """Background-to-variation ratio ``10 log10(||b||^2 / ||v||^2)`` in dB."""
    nv = v.norm() ** 2
    if nv == 0.0:
        raise ZeroDivisionError("BVR is undefined for a zero variation")
    return 10.0 * math.log10(b.norm() ** 2 / nv)


def rescale_to_bvr(b: HarmonicCoefficients, v: HarmonicCoefficients, target_db) -> HarmonicCoefficients:
    nv = v.norm() ** 2
    if nv == 0.0:
        raise ZeroDivisionError("cannot rescale a zero variation")
    scale = math.sqrt(b.norm() ** 2 / (nv * 10.0 ** (target_db / 10.0)))
    return v * scale


def build_ensemble(L, N, region: Region, target_bvr_db, seed, basis: SlepianBasis | None = None) -> Ensemble:
    """Background plus ``N`` variations over ``region``, each rescaled to the target BVR.

    ``seed`` feeds a :class:`numpy.random.SeedSequence`; the background and
    every variation draw from independent spawned streams.  A prebuilt
    ``basis`` over ``region`` may be passed to skip the eigen-solve.
    """
    if N < 1:
        raise ValueError("ensemble size N must be >= 1")
    if basis is None:
        basis = slepian_basis(region, L)
    elif basis.L != L:
        raise ValueError(f"variation basis has L={basis.L}, expected {L}")
    streams = np.random.SeedSequence(seed).spawn(N + 1)
    b = synthesize_background(L, np.random.default_rng(streams[0]))
    variations, observations = [], []
    for ss in streams[1:]:
        v = synthesize_variation(basis, np.random.default_rng(ss))
        v = rescale_to_bvr(b, v, target_bvr_db)
        variations.append(v)
        observations.append(b + v)
    return Ensemble(L, N, b, variations, observations, seed, float(target_bvr_db))


def _values(item):
    if isinstance(item, (SphereSignal, SO3Signal)):
        return item.values
    return np.asarray(item)


def sample_variance(stack) -> NDArray[np.float64]:
    """Biased pointwise variance ``(1/N) sum_j |F^j - mean_j F^j|^2``.

    ``stack`` is a sequence of signals (or arrays) on one common grid.
    """
    stack = list(stack)
    if not stack:
        raise ValueError("empty stack")
    first = stack[0]
    for s in stack[1:]:
        if isinstance(first, SphereSignal) and not first.grid.same_as(s.grid):
            raise GridError("stack members live on different sphere grids")
        if isinstance(first, SO3Signal) and first.grid.L != s.grid.L:
            raise GridError("stack members live on different SO(3) grids")
    arr = np.stack([_values(s) for s in stack])
    # shifting by the first member keeps identical stacks exactly zero and
    # removes a large common part before the mean is formed
    arr = arr - arr[0]
    dev = arr - arr.mean(axis=0)
    return np.mean(dev.real ** 2 + dev.imag ** 2, axis=0)


def variance_maps(signals, zb: SlepianBasis, alphas, grid: SphereGrid | None = None, workers=1):
    """Zonal SST variance map per scale for a list of coefficient sets.

    Returns ``{alpha: VarianceMap}`` on ``grid`` (default: the quadrature
    grid of the bandlimit).
    """
    L = zb.L
    grid = build_grid(L) if grid is None else grid

    def one(alpha):
        return alpha, VarianceMap(alpha, grid, sample_variance(zonal_sst(f, zb, alpha, grid) for f in signals))

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return dict(pool.map(one, alphas))
    return dict(one(a) for a in alphas)


def _weighted_quantile(values, weights, q):
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    cw = np.cumsum(w)
    cw /= cw[-1]
    return float(v[min(np.searchsorted(cw, q, side="left"), v.size - 1)])


def detect_region(values, q, weights=None):
    """Mask of points whose value strictly exceeds the ``q``-quantile.

    With ``weights`` (e.g. quadrature cell areas) the quantile is taken
    over the weighted distribution, so ``q`` refers to a fraction of area
    rather than of grid points.
    """
    if not 0.0 < q < 1.0:
        raise ValueError("quantile q must lie in (0, 1)")
    if isinstance(values, VarianceMap):
        values = values.values
    values = np.asarray(values, dtype=float)
    if weights is None:
        thresh = float(np.quantile(values, q))
    else:
        w = np.broadcast_to(np.asarray(weights, dtype=float), values.shape).ravel()
        thresh = _weighted_quantile(values.ravel(), w, q)
    return values > thresh


@dataclass(frozen=True)
class DetectionScore:
    argmax_inside: bool
    fraction_inside: float
    masked_area: float


def score_detection(vmap: VarianceMap, region: Region, q=0.95, dilation_deg=5.0, area_weighted=True):
    """Compare a sphere variance map with the true variation region.

    ``fraction_inside`` is the share of the masked set (by area when
    ``area_weighted``, else by point count) lying inside ``region`` grown
    by ``dilation_deg`` degrees.
    """
    grid = vmap.grid
    if not isinstance(grid, SphereGrid):
        raise TypeError("detection scoring needs a sphere-domain variance map")
    theta, phi = grid.mesh()
    w = grid.area_weights() if area_weighted else np.ones(theta.shape)
    mask = detect_region(vmap.values, q, w if area_weighted else None)
    inside = region_membership(region, theta, phi, margin=math.radians(dilation_deg))
    k = np.unravel_index(int(np.argmax(vmap.values)), vmap.values.shape)
    argmax_inside = bool(region_membership(region, theta[k], phi[k]))
    total = float(np.sum(w[mask]))
    frac = float(np.sum(w[mask & inside]) / total) if total > 0 else 0.0
    return DetectionScore(argmax_inside, frac, total)
