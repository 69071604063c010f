"""GNS1 binary field files and their metadata sidecars.

Layout (little endian): magic b"GNS1", u32 n, u32 rank code, u8 real flag,
then n*n*components pairs of f64 (real, imag), components outermost and
each component row-major over l1 then l2 in FFT order.

Fields on a lattice grid are written on the full torus grid of size
n * lattice, so files never depend on the lattice trick.  The lattice is
recorded in the sidecar ``<path>.meta.json`` and used on read to restore the
compact grid.
"""

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, StructuralError
from .spectral import RANK_CODES, RANK_COMPONENTS, GridSpec, SpectralField

MAGIC = b"GNS1"
HEADER = struct.Struct("<4sIIB")
RANK_FROM_CODE = {code: rank for rank, code in RANK_CODES.items()}


def embed_full(f):
    """Coefficients of ``f`` on the full torus grid of size n * lattice."""
    g = f.grid
    L = g.lattice
    if L == 1:
        return np.asarray(f.coeffs)
    nf = g.n * L
    out = np.zeros((f.coeffs.shape[0], nf, nf), complex)
    idx = (g.index * L) % nf
    out[:, idx[:, None], idx[None, :]] = f.coeffs
    return out


def restrict_lattice(coeffs, lattice):
    """Inverse of embed_full; raises FormatError if energy lies off the lattice."""
    nf = coeffs.shape[-1]
    if nf % lattice:
        raise FormatError(f"file size n={nf} is not a multiple of lattice {lattice}")
    n = nf // lattice
    grid = GridSpec(n, lattice=lattice)
    idx = (grid.index * lattice) % nf
    out = coeffs[:, idx[:, None], idx[None, :]]
    if not np.isclose(np.abs(out).sum(), np.abs(coeffs).sum(), rtol=1e-12, atol=0.0):
        raise FormatError(f"field has modes off the lattice {lattice}")
    return grid, np.ascontiguousarray(out)


def sidecar_path(path):
    return Path(str(path) + ".meta.json")


def write_field(path, f, meta=None):
    """Write ``f`` as a GNS1 file plus a sidecar with ``meta`` and the lattice."""
    path = Path(path)
    c = embed_full(f)
    n = c.shape[-1]
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n, RANK_CODES[f.rank], int(bool(f.real))))
        fh.write(np.ascontiguousarray(c).view(np.float64).astype("<f8").tobytes())
    side = {"lattice": f.grid.lattice, "dealias_fraction": f.grid.dealias_fraction, "rank": f.rank, "n_stored": n}
    side.update(meta or {})
    sidecar_path(path).write_text(json.dumps(side, sort_keys=True, indent=1))
    return path


def read_raw(path):
    """(n, rank, real, coeffs) straight from a GNS1 file."""
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, n, code, real = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if code not in RANK_FROM_CODE:
        raise FormatError(f"{path}: unknown rank code {code}")
    if real not in (0, 1):
        raise FormatError(f"{path}: bad real flag {real}")
    rank = RANK_FROM_CODE[code]
    ncomp = RANK_COMPONENTS[rank]
    expected = HEADER.size + ncomp * n * n * 16
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    c = np.frombuffer(data, dtype="<f8", offset=HEADER.size).astype(np.float64).view(np.complex128)
    return n, rank, bool(real), c.reshape(ncomp, n, n).copy()


def read_field(path, lattice=None):
    """Read a GNS1 file; the lattice comes from the sidecar unless given."""
    n, rank, real, c = read_raw(path)
    side = read_meta(path)
    L = lattice if lattice is not None else int(side.get("lattice", 1))
    frac = float(side.get("dealias_fraction", 2.0 / 3.0))
    try:
        if L > 1:
            grid, c = restrict_lattice(c, L)
            grid = GridSpec(grid.n, frac, L)
        else:
            grid = GridSpec(n, frac)
    except StructuralError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return SpectralField(grid, rank, c, real=real)


def read_meta(path):
    p = sidecar_path(path)
    if not p.exists():
        return {}
    return json.loads(p.read_text())


def config_hash(text):
    """sha256 of a configuration's canonical text."""
    return hashlib.sha256(text.encode()).hexdigest()
