"""File formats.

Binary files are one line of JSON (the header) followed by raw
little-endian payload.  Complex arrays use ``c64le-interleaved``: float64
``(re, im)`` pairs.  Real arrays use ``f64le``.  The header lists each
payload block with its shape so a reader never has to guess sizes.

CSV exports start with a ``# {json}`` comment line carrying the same
header, followed by a column-name row.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import GridError
from .slepian import SlepianBasis, region_from_descriptor
from .sphere import (
    HarmonicCoefficients,
    SphereGrid,
    SphereSignal,
    build_grid,
    equiangular_grid,
    lm_arrays,
)
from .sst import SO3Grid, SO3Signal
from .wigner import WignerDeltaTable

__all__ = [
    "FileFormatError",
    "write_binary",
    "read_binary",
    "read_header",
    "save_sphere_signal",
    "load_sphere_signal",
    "save_coefficients",
    "load_coefficients",
    "save_basis",
    "load_basis",
    "save_so3",
    "load_so3",
    "save_delta_table",
    "load_delta_table",
    "save_mask_csv",
    "grid_from_header",
    "grid_from_nodes",
]

C64 = "c64le-interleaved"
F64 = "f64le"


class FileFormatError(OSError):
    """A file is malformed or of the wrong kind."""


# ---------------------------------------------------------------------------
# container
# ---------------------------------------------------------------------------


def _encode(arr):
    arr = np.asarray(arr)
    if np.iscomplexobj(arr):
        flat = np.ascontiguousarray(arr, dtype=np.complex128).view(np.float64)
        return C64, flat.astype("<f8").tobytes()
    return F64, np.ascontiguousarray(arr, dtype="<f8").tobytes()


def write_binary(path, header: dict, blocks: dict):
    """Write ``header`` plus the named arrays in ``blocks`` (insertion order)."""
    header = dict(header)
    header.setdefault("version", __version__)
    layout, payload = [], []
    for name, arr in blocks.items():
        dtype, raw = _encode(arr)
        layout.append({"name": name, "dtype": dtype, "shape": list(np.shape(arr))})
        payload.append(raw)
    header["blocks"] = layout
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for raw in payload:
            fh.write(raw)


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        line = fh.readline()
    try:
        return json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise FileFormatError(f"{path}: missing JSON header") from exc


def read_binary(path):
    """Return ``(header, {name: array})``."""
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise FileFormatError(f"{path}: missing JSON header") from exc
        data = fh.read()
    blocks, pos = {}, 0
    for b in header.get("blocks", []):
        shape = tuple(b["shape"])
        count = int(np.prod(shape)) if shape else 1
        if b["dtype"] not in (C64, F64):
            raise FileFormatError(f"{path}: unknown dtype {b['dtype']!r}")
        width = 2 if b["dtype"] == C64 else 1
        nbytes = 8 * width * count
        if pos + nbytes > len(data):
            raise FileFormatError(f"{path}: truncated payload in block {b['name']!r}")
        arr = np.frombuffer(data, "<f8", width * count, pos)
        if width == 2:
            arr = arr.view(np.complex128)
        blocks[b["name"]] = arr.reshape(shape).copy()
        pos += nbytes
    if pos != len(data):
        raise FileFormatError(f"{path}: {len(data) - pos} trailing bytes")
    return header, blocks


def _is_binary(path):
    with open(path, "rb") as fh:
        return fh.read(1) == b"{"


def _write_csv(path, header: dict, columns, rows):
    header = dict(header)
    header.setdefault("version", __version__)
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])


def _read_csv(path):
    meta = {}
    with open(path, newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            try:
                meta = json.loads(first[1:])
            except json.JSONDecodeError:
                meta = {}
        else:
            fh.seek(0)
        rows = list(csv.reader(fh))
    return meta, rows


# ---------------------------------------------------------------------------
# sphere signals
# ---------------------------------------------------------------------------


def _grid_header(g: SphereGrid):
    return {"n_theta": g.n_theta, "n_phi": g.n_phi, "sampling": g.sampling, "order": "theta-major"}


def grid_from_header(h) -> SphereGrid:
    n_theta, n_phi = int(h["n_theta"]), int(h["n_phi"])
    if h.get("sampling", "gauss-legendre") == "gauss-legendre":
        g = build_grid(n_theta)
        if n_phi != g.n_phi:
            g = SphereGrid(n_theta, n_phi, g.theta_nodes, 2.0 * np.pi * np.arange(n_phi) / n_phi,
                           g.quadrature_weights, g.sampling)
        return g
    return equiangular_grid(n_theta, n_phi)


def grid_from_nodes(theta, phi, tol=1e-9) -> SphereGrid:
    """Recognise Gauss-Legendre or midpoint-equiangular nodes."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n_theta, n_phi = theta.size, phi.size
    if not np.allclose(phi, 2.0 * np.pi * np.arange(n_phi) / n_phi, atol=tol):
        raise GridError("longitudes must be uniform on [0, 2 pi) starting at 0")
    gl = build_grid(n_theta)
    if np.allclose(theta, gl.theta_nodes, atol=tol):
        return grid_from_header({"n_theta": n_theta, "n_phi": n_phi, "sampling": "gauss-legendre"})
    eq = equiangular_grid(n_theta, n_phi)
    if np.allclose(theta, eq.theta_nodes, atol=tol):
        return eq
    raise GridError("colatitudes match neither Gauss-Legendre nor midpoint-equiangular nodes")


def save_sphere_signal(path, s: SphereSignal, bandlimit=None, config=None, fmt="bin", real=False):
    header = {"kind": "sphere_signal", "bandlimit": bandlimit, **_grid_header(s.grid),
              "dtype": F64 if real else C64, "config": config or {}}
    vals = s.values.real if real else s.values
    if fmt == "csv":
        theta, phi = s.grid.mesh()
        cols = ["theta", "phi", "value"] if real else ["theta", "phi", "re", "im"]
        if real:
            rows = zip(theta.ravel(), phi.ravel(), vals.ravel())
        else:
            rows = zip(theta.ravel(), phi.ravel(), vals.real.ravel(), vals.imag.ravel())
        _write_csv(path, header, cols, rows)
    else:
        write_binary(path, header, {"values": vals})


def _signal_from_long_csv(cols, data, path):
    names = [c.strip().lower() for c in cols]
    try:
        arr = np.asarray(data, dtype=float)
    except ValueError as exc:
        raise FileFormatError(f"{path}: non-numeric data") from exc
    if "theta" not in names or "phi" not in names:
        raise FileFormatError("long CSV needs theta and phi columns")
    th, ph = arr[:, names.index("theta")], arr[:, names.index("phi")]
    if "re" in names:
        vals = arr[:, names.index("re")] + 1j * (arr[:, names.index("im")] if "im" in names else 0.0)
    else:
        vals = arr[:, names.index("value")].astype(complex)
    thetas = np.unique(np.round(th, 12))
    phis = np.unique(np.round(ph, 12))
    if thetas.size * phis.size != arr.shape[0]:
        raise GridError("CSV samples do not form a complete theta x phi grid")
    grid = grid_from_nodes(thetas, phis)
    it = np.searchsorted(thetas, np.round(th, 12))
    ip = np.searchsorted(phis, np.round(ph, 12))
    out = np.zeros(grid.shape, dtype=complex)
    out[it, ip] = vals
    return SphereSignal(grid, out)


def load_sphere_signal(path) -> SphereSignal:
    """Read a binary sphere signal or a CSV grid.

    CSV input may be the long form written by :func:`save_sphere_signal`
    (``theta, phi, re, im`` or ``theta, phi, value``) or a plain matrix of
    real samples on the midpoint-equiangular grid, one colatitude per row.
    """
    if _is_binary(path):
        h, blocks = read_binary(path)
        if h.get("kind", "sphere_signal") != "sphere_signal":
            raise FileFormatError(f"{path}: not a sphere signal file")
        return SphereSignal(grid_from_header(h), blocks["values"].astype(complex))
    _, rows = _read_csv(path)
    rows = [r for r in rows if r]
    if not rows:
        raise FileFormatError(f"{path}: empty CSV")
    try:
        float(rows[0][0])
        numeric = True
    except ValueError:
        numeric = False
    if not numeric:
        return _signal_from_long_csv(rows[0], rows[1:], path)
    try:
        mat = np.asarray(rows, dtype=float)
    except ValueError as exc:
        raise FileFormatError(f"{path}: non-numeric data") from exc
    return SphereSignal(equiangular_grid(*mat.shape), mat.astype(complex))


# ---------------------------------------------------------------------------
# harmonic coefficients
# ---------------------------------------------------------------------------


def save_coefficients(path, c: HarmonicCoefficients, config=None, fmt="bin"):
    header = {"kind": "harmonic_coefficients", "L": c.L, "dtype": C64,
              "order": "l^2+l+m", "config": config or {}}
    if fmt == "csv":
        ell, m = lm_arrays(c.L)
        _write_csv(path, header, ["ell", "m", "re", "im"],
                   zip(ell.tolist(), m.tolist(), c.coeffs.real, c.coeffs.imag))
    else:
        write_binary(path, header, {"coeffs": c.coeffs})


def load_coefficients(path) -> HarmonicCoefficients:
    if _is_binary(path):
        h, blocks = read_binary(path)
        if h.get("kind") != "harmonic_coefficients":
            raise FileFormatError(f"{path}: not a harmonic-coefficient file")
        return HarmonicCoefficients(int(h["L"]), blocks["coeffs"])
    meta, rows = _read_csv(path)
    data = np.asarray(rows[1:], dtype=float)
    ell, m = data[:, 0].astype(int), data[:, 1].astype(int)
    L = int(meta.get("L", ell.max() + 1))
    out = np.zeros(L * L, dtype=complex)
    out[ell * ell + ell + m] = data[:, 2] + 1j * data[:, 3]
    return HarmonicCoefficients(L, out)


# ---------------------------------------------------------------------------
# Slepian bases
# ---------------------------------------------------------------------------


def save_basis(path, basis: SlepianBasis, store_first=None, config=None, fmt="bin"):
    """Persist the first ``store_first`` columns (default ``n_well``)."""
    n = basis.n_well if store_first is None else int(store_first)
    n = min(n, basis.n_columns)
    header = {"kind": "slepian_basis", "L": basis.L, "region": basis.region.descriptor(),
              "shannon": basis.shannon, "n_well": basis.n_well, "n_stored": n,
              "zonal": basis.zonal, "dtype": C64, "config": config or {}}
    if fmt == "csv":
        header["eigenvalues"] = basis.eigenvalues[:n].tolist()
        ell, m = lm_arrays(basis.L)
        cols = ["ell", "m"] + [f"{p}_{a}" for a in range(1, n + 1) for p in ("re", "im")]
        vec = basis.eigenvectors[:, :n]
        rows = (
            [int(ell[i]), int(m[i])] + [x for z in vec[i] for x in (float(z.real), float(z.imag))]
            for i in range(basis.L ** 2)
        )
        _write_csv(path, header, cols, rows)
    else:
        write_binary(path, header, {"eigenvalues": basis.eigenvalues[:n],
                                    "eigenvectors": basis.eigenvectors[:, :n]})


def load_basis(path) -> SlepianBasis:
    if not _is_binary(path):
        raise FileFormatError(f"{path}: basis files must be binary to be reloaded")
    h, blocks = read_binary(path)
    if h.get("kind") != "slepian_basis":
        raise FileFormatError(f"{path}: not a Slepian basis file")
    return SlepianBasis(
        int(h["L"]), region_from_descriptor(h["region"]), blocks["eigenvalues"],
        blocks["eigenvectors"].astype(complex), float(h["shannon"]), int(h["n_well"]),
        bool(h.get("zonal", False)),
    )


# ---------------------------------------------------------------------------
# SO(3) signals
# ---------------------------------------------------------------------------


def save_so3(path, F: SO3Signal, config=None, fmt="bin"):
    header = {"kind": "so3_signal", "L": F.grid.L, "alpha": F.alpha,
              "axes": "varphi,vartheta,omega", "n": F.grid.n, "dtype": C64, "config": config or {}}
    if fmt == "csv":
        t = F.grid.varphi_nodes
        a, b, c = np.meshgrid(t, t, t, indexing="ij")
        _write_csv(path, header, ["varphi", "vartheta", "omega", "re", "im"],
                   zip(a.ravel(), b.ravel(), c.ravel(), F.values.real.ravel(), F.values.imag.ravel()))
    else:
        write_binary(path, header, {"values": F.values})


def load_so3(path) -> SO3Signal:
    if not _is_binary(path):
        raise FileFormatError(f"{path}: SO(3) files must be binary to be reloaded")
    h, blocks = read_binary(path)
    if h.get("kind") != "so3_signal":
        raise FileFormatError(f"{path}: not an SO(3) signal file")
    return SO3Signal(SO3Grid(int(h["L"])), blocks["values"], int(h["alpha"]))


# ---------------------------------------------------------------------------
# Delta tables and masks
# ---------------------------------------------------------------------------


def save_delta_table(path, table: WignerDeltaTable):
    """Only the triangle ``0 <= m'' , m <= l`` per degree is stored, degree after degree."""
    parts = [table[ell][ell:, ell:].ravel() for ell in range(table.L)]
    header = {"kind": "delta_table", "L": table.L, "dtype": F64, "layout": "ell-major triangular"}
    write_binary(path, header, {"delta": np.concatenate(parts)})


def load_delta_table(path) -> WignerDeltaTable:
    h, blocks = read_binary(path)
    if h.get("kind") != "delta_table":
        raise FileFormatError(f"{path}: not a Delta table file")
    L = int(h["L"])
    flat = blocks["delta"]
    c = L - 1
    out = np.zeros((L, 2 * L - 1, 2 * L - 1))
    pos = 0
    for ell in range(L):
        k = ell + 1
        q = flat[pos:pos + k * k].reshape(k, k)
        pos += k * k
        full = np.empty((2 * ell + 1, 2 * ell + 1))
        full[ell:, ell:] = q
        mm = np.arange(ell + 1)
        # Delta_{m'',-m} = (-1)^{l+m''} Delta_{m'',m}
        sign_row = np.where((ell + mm) % 2 == 0, 1.0, -1.0)
        full[ell:, :ell] = (q[:, 1:] * sign_row[:, None])[:, ::-1]
        # Delta_{-m'',m} = (-1)^{l+m} Delta_{m'',m}
        sign_col = np.where((ell + np.arange(-ell, ell + 1)) % 2 == 0, 1.0, -1.0)
        full[:ell, :] = full[ell + 1:, :][::-1] * sign_col[None, :]
        out[ell, c - ell:c + ell + 1, c - ell:c + ell + 1] = full
    if pos != flat.size:
        raise FileFormatError(f"{path}: Delta payload has the wrong length")
    return WignerDeltaTable(L, out)


def save_mask_csv(path, mask, grid: SphereGrid, config=None):
    it, ip = np.nonzero(mask)
    header = {"kind": "mask", **_grid_header(grid), "count": int(it.size), "config": config or {}}
    _write_csv(path, header, ["i_theta", "i_phi", "theta", "phi"],
               zip(it.tolist(), ip.tolist(), grid.theta_nodes[it], grid.phi_nodes[ip]))


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
