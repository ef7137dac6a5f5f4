"""Spatial-Slepian transform on the sphere.

Slepian bases over polar caps and spherical ellipses, the forward and
inverse transform onto the rotation group with a fast FFT evaluation, and
a localized variation analysis pipeline built on top.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    BandlimitMismatch,
    GridError,
    NonInvertible,
    NumericalError,
    ScaleError,
    SSTError,
)
from .slepian import (  # noqa: E402
    PolarCap,
    SlepianBasis,
    SphericalEllipse,
    concentration_matrix,
    slepian_basis,
    zonal_basis,
)
from .sphere import (  # noqa: E402
    HarmonicCoefficients,
    SphereGrid,
    SphereSignal,
    build_grid,
    sht_forward,
    sht_inverse,
)
from .sst import (  # noqa: E402
    compute_C,
    inverse_sst,
    sst_fast,
    sst_point,
    sst_wigner_coefficients,
    tight_frame_ratio,
    zonal_inverse,
    zonal_sst,
)
from .wigner import EulerAngles, build_delta_table, wigner_D, wigner_d  # noqa: E402

__all__ = [
    "__version__",
    "BandlimitMismatch",
    "GridError",
    "NonInvertible",
    "NumericalError",
    "ScaleError",
    "SSTError",
    "PolarCap",
    "SlepianBasis",
    "SphericalEllipse",
    "concentration_matrix",
    "slepian_basis",
    "zonal_basis",
    "HarmonicCoefficients",
    "SphereGrid",
    "SphereSignal",
    "build_grid",
    "sht_forward",
    "sht_inverse",
    "compute_C",
    "inverse_sst",
    "sst_fast",
    "sst_point",
    "sst_wigner_coefficients",
    "tight_frame_ratio",
    "zonal_inverse",
    "zonal_sst",
    "EulerAngles",
    "build_delta_table",
    "wigner_D",
    "wigner_d",
]
