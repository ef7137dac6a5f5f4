"""Exception types raised by the library."""

from __future__ import annotations


class SSTError(Exception):
    """Base class for all library errors."""


class GridError(SSTError, ValueError):
    """Two signals live on different grids, or a grid is too coarse."""


class BandlimitMismatch(SSTError, ValueError):
    """Signal and Slepian basis bandlimits differ (L_f must equal L_g)."""


class ScaleError(SSTError, IndexError):
    """Slepian scale alpha outside ``1..n_columns``."""


class NumericalError(SSTError, ArithmeticError):
    """A numerical health check failed (eigensolver, residue tolerance...)."""


class NonInvertible(NumericalError):
    """The inverse transform is undefined at one or more degrees.

    Attributes
    ----------
    degrees : list of int
        Degrees ``ell`` at which every usable Slepian coefficient is below
        the singularity threshold.
    """

    def __init__(self, degrees, eps=None):
        self.degrees = [int(d) for d in degrees]
        self.eps = eps
        msg = f"Slepian coefficients vanish at degrees {self.degrees}"
        if eps is not None:
            msg += f" (threshold {eps:.3g})"
        super().__init__(msg)
