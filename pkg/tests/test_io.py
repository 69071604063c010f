import struct

import numpy as np
import pytest

from gnstorus.errors import FormatError
from gnstorus.io import config_hash, embed_full, read_field, read_meta, read_raw, restrict_lattice, write_field
from gnstorus.spectral import GridSpec, random_field


@pytest.mark.parametrize("grid", [GridSpec(16), GridSpec(8, lattice=5), GridSpec(16, dealias_fraction=0.5)])
@pytest.mark.parametrize("rank", ["scalar", "vector", "sym_tensor"])
def test_roundtrip_is_bit_identical(tmp_path, grid, rank, rng):
    f = random_field(grid, rank, rng)
    path = write_field(tmp_path / "f.gns", f, {"t": 0.5})
    g = read_field(path)
    assert g.grid == f.grid and g.rank == f.rank and g.real == f.real
    assert np.array_equal(g.coeffs, f.coeffs)
    assert read_meta(path)["t"] == 0.5


def test_file_size_and_header(tmp_path, rng):
    f = random_field(GridSpec(8), "vector", rng)
    path = write_field(tmp_path / "f.gns", f)
    data = path.read_bytes()
    assert len(data) == 13 + 2 * 64 * 16
    assert struct.unpack_from("<4sIIB", data) == (b"GNS1", 8, 1, 1)


def test_lattice_field_is_stored_on_full_torus(tmp_path, rng):
    """Compact sample j/n of a lattice-L field sits at x = j/(nL) on the full torus."""
    f = random_field(GridSpec(8, lattice=5), "scalar", rng)
    n, _, _, c = read_raw(write_field(tmp_path / "f.gns", f))
    assert n == 40
    full = (np.fft.ifft2(c[0]) * n * n).real
    compact = f.physical()[0]
    assert np.abs(full[:8, :8] - compact).max() < 1e-13 * np.abs(compact).max()


def test_restrict_rejects_off_lattice_modes(rng):
    c = embed_full(random_field(GridSpec(8, lattice=5), "scalar", rng))
    c = np.array(c)
    c[0, 1, 0] = 1.0
    with pytest.raises(FormatError):
        restrict_lattice(c, 5)


def test_truncated_file(tmp_path, rng):
    path = write_field(tmp_path / "f.gns", random_field(GridSpec(8), "scalar", rng))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FormatError, match="expected"):
        read_field(path)
    path.write_bytes(b"GN")
    with pytest.raises(FormatError, match="truncated"):
        read_field(path)


def test_bad_magic_names_the_expected_magic(tmp_path, rng):
    path = write_field(tmp_path / "f.gns", random_field(GridSpec(8), "scalar", rng))
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError, match="GNS1"):
        read_field(path)


@pytest.mark.parametrize("offset,value,match", [(8, 9, "rank"), (12, 7, "real")])
def test_bad_header_fields(tmp_path, rng, offset, value, match):
    path = write_field(tmp_path / "f.gns", random_field(GridSpec(8), "scalar", rng))
    data = bytearray(path.read_bytes())
    data[offset] = value
    path.write_bytes(bytes(data))
    with pytest.raises(FormatError, match=match):
        read_field(path)


def test_config_hash_is_stable():
    assert config_hash("a = 1\n") == config_hash("a = 1\n")
    assert config_hash("a = 1\n") != config_hash("a = 2\n")
    assert len(config_hash("")) == 64
