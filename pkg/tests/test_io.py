import json
import math

import numpy as np
import pytest

from conftest import random_coeffs
from spatial_slepian import __version__
from spatial_slepian.exceptions import GridError
from spatial_slepian.io import (
    FileFormatError,
    grid_from_nodes,
    load_basis,
    load_coefficients,
    load_delta_table,
    load_so3,
    load_sphere_signal,
    read_binary,
    read_header,
    save_basis,
    save_coefficients,
    save_delta_table,
    save_mask_csv,
    save_so3,
    save_sphere_signal,
    write_binary,
)
from spatial_slepian.slepian import PolarCap, slepian_basis
from spatial_slepian.sphere import SphereSignal, build_grid, equiangular_grid, sht_inverse
from spatial_slepian.sst import sst_fast
from spatial_slepian.wigner import build_delta_table


class TestContainer:
    def test_round_trip_mixed_blocks(self, tmp_path, rng):
        p = tmp_path / "x.bin"
        a = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
        b = rng.standard_normal(5)
        write_binary(p, {"kind": "test", "note": "hi"}, {"a": a, "b": b})
        h, blocks = read_binary(p)
        assert h["kind"] == "test" and h["version"] == __version__
        assert [blk["dtype"] for blk in h["blocks"]] == ["c64le-interleaved", "f64le"]
        assert np.array_equal(blocks["a"], a) and np.array_equal(blocks["b"], b)

    def test_payload_is_little_endian_interleaved(self, tmp_path):
        p = tmp_path / "x.bin"
        write_binary(p, {}, {"z": np.array([1.5 - 2.0j])})
        raw = p.read_bytes().split(b"\n", 1)[1]
        assert np.array_equal(np.frombuffer(raw, "<f8"), [1.5, -2.0])

    def test_truncated(self, tmp_path):
        p = tmp_path / "x.bin"
        write_binary(p, {}, {"z": np.ones(10, complex)})
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(FileFormatError, match="truncated"):
            read_binary(p)

    def test_trailing_bytes(self, tmp_path):
        p = tmp_path / "x.bin"
        write_binary(p, {}, {"z": np.ones(2)})
        p.write_bytes(p.read_bytes() + b"\0" * 8)
        with pytest.raises(FileFormatError, match="trailing"):
            read_binary(p)

    def test_missing_header(self, tmp_path):
        p = tmp_path / "x.bin"
        p.write_bytes(b"\x00\x01\x02")
        with pytest.raises(FileFormatError):
            read_header(p)

    def test_missing_file_is_os_error(self, tmp_path):
        with pytest.raises(OSError):
            read_binary(tmp_path / "nope.bin")


class TestCoefficients:
    @pytest.mark.parametrize("fmt", ["bin", "csv"])
    def test_round_trip_exact(self, tmp_path, rng, fmt):
        c = random_coeffs(9, rng)
        p = tmp_path / f"c.{fmt}"
        save_coefficients(p, c, config={"seed": 3}, fmt=fmt)
        back = load_coefficients(p)
        assert back.L == 9 and np.array_equal(back.coeffs, c.coeffs)

    def test_config_embedded(self, tmp_path, rng):
        p = tmp_path / "c.bin"
        save_coefficients(p, random_coeffs(2, rng), config={"command": "ingest", "L": 2})
        h = read_header(p)
        assert h["config"] == {"command": "ingest", "L": 2} and h["version"] == __version__

    def test_wrong_kind(self, tmp_path):
        p = tmp_path / "x.bin"
        write_binary(p, {"kind": "so3_signal"}, {})
        with pytest.raises(FileFormatError):
            load_coefficients(p)


class TestSphereSignal:
    @pytest.mark.parametrize("fmt", ["bin", "csv"])
    def test_round_trip(self, tmp_path, rng, fmt):
        g = build_grid(6)
        s = sht_inverse(random_coeffs(6, rng), g)
        p = tmp_path / f"s.{fmt}"
        save_sphere_signal(p, s, bandlimit=6, fmt=fmt)
        back = load_sphere_signal(p)
        assert back.grid.same_as(g)
        assert np.array_equal(back.values, s.values)

    def test_real_csv(self, tmp_path, rng):
        g = equiangular_grid(8, 15)
        s = SphereSignal(g, rng.standard_normal(g.shape))
        p = tmp_path / "s.csv"
        save_sphere_signal(p, s, fmt="csv", real=True)
        back = load_sphere_signal(p)
        assert back.grid.sampling == "equiangular"
        assert np.array_equal(back.values.real, s.values.real)

    def test_matrix_csv_is_equiangular(self, tmp_path, rng):
        m = rng.standard_normal((5, 9))
        p = tmp_path / "m.csv"
        np.savetxt(p, m, delimiter=",", fmt="%.17g")
        s = load_sphere_signal(p)
        assert s.grid.sampling == "equiangular" and s.grid.shape == (5, 9)
        assert np.array_equal(s.values.real, m)

    def test_incomplete_long_csv(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("theta,phi,value\n0.1,0,1\n0.2,0,1\n0.2,3.14,1\n")
        with pytest.raises(GridError):
            load_sphere_signal(p)

    def test_grid_from_nodes_rejects_irregular(self):
        with pytest.raises(GridError):
            grid_from_nodes(np.array([0.1, 0.5, 2.0]), np.array([0.0, 2.0, 4.0]))


class TestBasis:
    def test_round_trip_default_stores_n_well(self, tmp_path):
        b = slepian_basis(PolarCap(math.radians(30)), 10)
        p = tmp_path / "b.slp"
        save_basis(p, b)
        back = load_basis(p)
        assert back.n_columns == b.n_well
        assert back.region == b.region and back.shannon == b.shannon and back.n_well == b.n_well
        assert np.array_equal(back.eigenvectors, b.eigenvectors[:, :b.n_well])
        assert np.array_equal(back.eigenvalues, b.eigenvalues[:b.n_well])

    def test_store_all(self, tmp_path, ellipse_basis_8):
        p = tmp_path / "b.slp"
        save_basis(p, ellipse_basis_8, store_first=64)
        back = load_basis(p)
        assert np.array_equal(back.eigenvectors, ellipse_basis_8.eigenvectors)
        assert back.region.descriptor() == ellipse_basis_8.region.descriptor()

    def test_csv_export_header(self, tmp_path, ellipse_basis_8):
        p = tmp_path / "b.csv"
        save_basis(p, ellipse_basis_8, fmt="csv")
        h = json.loads(p.read_text().splitlines()[0][1:])
        assert h["kind"] == "slepian_basis" and len(h["eigenvalues"]) == ellipse_basis_8.n_well
        with pytest.raises(FileFormatError):
            load_basis(p)


class TestSO3:
    def test_round_trip(self, tmp_path, rng, ellipse_basis_8):
        F = sst_fast(random_coeffs(8, rng), ellipse_basis_8, 2)
        p = tmp_path / "F.so3"
        save_so3(p, F)
        h = read_header(p)
        assert h["axes"] == "varphi,vartheta,omega" and h["n"] == 15 and h["dtype"] == "c64le-interleaved"
        back = load_so3(p)
        assert back.alpha == 2 and np.array_equal(back.values, F.values)


class TestDeltaTable:
    @pytest.mark.parametrize("L", [1, 2, 7, 20])
    def test_round_trip(self, tmp_path, L):
        t = build_delta_table(L)
        p = tmp_path / "d.bin"
        save_delta_table(p, t)
        back = load_delta_table(p)
        assert np.array_equal(back.delta, t.delta)

    def test_stores_only_a_quarter(self, tmp_path):
        t = build_delta_table(10)
        p = tmp_path / "d.bin"
        save_delta_table(p, t)
        h = read_header(p)
        assert h["blocks"][0]["shape"] == [sum((ell + 1) ** 2 for ell in range(10))]


class TestMask:
    def test_mask_csv(self, tmp_path):
        g = build_grid(4)
        mask = np.zeros(g.shape, bool)
        mask[1, 2] = mask[3, 0] = True
        p = tmp_path / "m.csv"
        save_mask_csv(p, mask, g, config={"q": 0.95})
        lines = p.read_text().splitlines()
        h = json.loads(lines[0][1:])
        assert h["count"] == 2 and h["config"] == {"q": 0.95}
        assert lines[1] == "i_theta,i_phi,theta,phi"
        assert [ln.split(",")[:2] for ln in lines[2:]] == [["1", "2"], ["3", "0"]]
