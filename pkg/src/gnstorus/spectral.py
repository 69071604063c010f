"""Fourier representation of scalar, vector and symmetric-tensor fields on the 2-torus.

Modes are e^{2 pi i l.x} on [0,1)^2.  A field stores the coefficients
c_l = mean(f e^{-2 pi i l.x}) for l in the FFT-natural ordering of
[-n/2, n/2)^2, one array per stored component.

A grid may carry a ``lattice`` factor L: mode index m then stands for the
wavevector l = L m, and the samples cover one period [0, 1/L)^2.  This is an
exact representation of fields whose frequencies lie in L Z^2, which is the
case for every object of the construction when L = N_0.
"""

from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.special import j0

from .errors import ResolutionError, StructuralError

RANK_COMPONENTS = {"scalar": 1, "vector": 2, "sym_tensor": 3}
RANK_CODES = {"scalar": 0, "vector": 1, "sym_tensor": 2}

# below this ratio of discarded to retained coefficient size a product counts as alias free
ALIAS_THRESHOLD = 1e-13


@dataclass(frozen=True)
class GridSpec:
    """Uniform n x n sampling of the torus.

    ``dealias_fraction`` is the fraction of the index range kept before and
    after products (2/3 rule by default).  ``lattice`` scales mode indices to
    wavevectors.
    """

    n: int
    dealias_fraction: float = 2.0 / 3.0
    lattice: int = 1

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
            raise StructuralError(f"grid size must be an even integer >= 4, got {n!r}")
        if n & (n - 1):
            raise StructuralError(f"grid size must be a power of two, got {n}")
        if not 0.0 < self.dealias_fraction <= 1.0:
            raise StructuralError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")
        if int(self.lattice) != self.lattice or self.lattice < 1:
            raise StructuralError(f"lattice must be a positive integer, got {self.lattice}")

    @cached_property
    def index(self):
        """Integer mode indices along one axis in FFT order."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64)

    @cached_property
    def wavevector(self):
        """Pair (l1, l2) of float arrays of shape (n, n)."""
        m = self.index.astype(float) * self.lattice
        return np.meshgrid(m, m, indexing="ij")

    @cached_property
    def odd_wavevector(self):
        """Wavevector with Nyquist components zeroed, used by odd symbols."""
        m = self.index.astype(float) * self.lattice
        m[self.index == -self.n // 2] = 0.0
        return np.meshgrid(m, m, indexing="ij")

    @cached_property
    def kmag(self):
        l1, l2 = self.wavevector
        return np.hypot(l1, l2)

    @cached_property
    def radial(self):
        """(distinct |l| values, inverse index of shape (n, n)) for radial symbols."""
        m = self.index.astype(np.int64)
        sq = m[:, None] ** 2 + m[None, :] ** 2
        uniq, inv = np.unique(sq, return_inverse=True)
        return self.lattice * np.sqrt(uniq.astype(float)), inv.reshape(sq.shape)

    @cached_property
    def dealias_mask(self):
        cut = self.dealias_fraction * self.n / 2.0
        keep = np.abs(self.index) < cut
        if self.dealias_fraction >= 1.0:
            keep = self.index != -self.n // 2
        return keep[:, None] & keep[None, :]

    @property
    def spacing(self):
        return 1.0 / (self.n * self.lattice)

    @property
    def max_wavenumber(self):
        """Largest |l| on the grid."""
        return self.lattice * self.n / 2.0 * np.sqrt(2.0)

    @cached_property
    def coordinates(self):
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")

    def index_of(self, l):
        """Array indices of wavevector ``l``; raises if it is not on the grid."""
        out = []
        for c in l:
            if c % self.lattice:
                raise ResolutionError(f"wavevector {tuple(l)} is not on lattice {self.lattice}")
            m = int(c) // self.lattice
            if not -self.n // 2 <= m < self.n // 2:
                raise ResolutionError(f"wavevector {tuple(l)} exceeds grid n={self.n}")
            out.append(m % self.n)
        return tuple(out)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Immutable field given by its Fourier coefficients.

    ``coeffs`` has shape (components, n, n).  Symmetric tensors store
    (T11, T12, T22).  ``real`` flags a real-valued field.
    """

    grid: GridSpec
    rank: str
    coeffs: np.ndarray
    real: bool = True
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.rank not in RANK_COMPONENTS:
            raise StructuralError(f"unknown rank {self.rank!r}")
        c = np.asarray(self.coeffs, dtype=np.complex128)
        shape = (RANK_COMPONENTS[self.rank], self.grid.n, self.grid.n)
        if c.shape != shape:
            raise StructuralError(f"coefficient shape {c.shape} does not match {self.rank} on n={self.grid.n}")
        # the array is frozen in place; callers hand over ownership
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid, rank="scalar"):
        return cls(grid, rank, np.zeros((RANK_COMPONENTS[rank], grid.n, grid.n), complex))

    @classmethod
    def from_physical(cls, grid, values, rank=None):
        """Forward transform of samples with shape (n, n) or (components, n, n)."""
        v = np.asarray(values)
        if v.ndim == 2:
            v = v[None]
        if rank is None:
            rank = {1: "scalar", 2: "vector", 3: "sym_tensor"}.get(v.shape[0])
            if rank is None:
                raise StructuralError(f"cannot infer rank from {v.shape[0]} components")
        if v.shape[1:] != (grid.n, grid.n):
            raise StructuralError(f"samples of shape {v.shape[1:]} on grid n={grid.n}")
        real = not np.iscomplexobj(v)
        c = sfft.fft2(v, axes=(-2, -1)) / grid.n**2
        return cls(grid, rank, c, real=real)

    @classmethod
    def single_mode(cls, grid, l, amplitude=1.0, rank="scalar", component=0, real=False):
        """Field amplitude * e^{2 pi i l.x} in one component.

        With ``real=True`` the conjugate mode is added so the field is
        2 Re(amplitude e^{2 pi i l.x}).
        """
        c = np.zeros((RANK_COMPONENTS[rank], grid.n, grid.n), complex)
        c[(component,) + grid.index_of(l)] += amplitude
        if real:
            c[(component,) + grid.index_of([-x for x in l])] += np.conj(amplitude)
        return cls(grid, rank, c, real=real)

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    def physical(self):
        """Samples on the grid, shape (components, n, n)."""
        v = sfft.ifft2(self.coeffs, axes=(-2, -1)) * self.grid.n**2
        return v.real if self.real else v

    def component(self, i):
        return SpectralField(self.grid, "scalar", self.coeffs[i : i + 1], self.real)

    def with_coeffs(self, coeffs, rank=None, real=None, meta=None):
        return SpectralField(
            self.grid,
            self.rank if rank is None else rank,
            coeffs,
            self.real if real is None else real,
            dict(self.meta if meta is None else meta),
        )

    def _check(self, other):
        if not isinstance(other, SpectralField):
            raise StructuralError(f"expected a SpectralField, got {type(other).__name__}")
        if other.grid != self.grid:
            raise StructuralError(f"grid mismatch: {self.grid} vs {other.grid}")
        if other.rank != self.rank:
            raise StructuralError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __add__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.rank, self.coeffs + other.coeffs, self.real and other.real)

    def __sub__(self, other):
        self._check(other)
        return SpectralField(self.grid, self.rank, self.coeffs - other.coeffs, self.real and other.real)

    def __neg__(self):
        return SpectralField(self.grid, self.rank, -self.coeffs, self.real)

    def __mul__(self, c):
        if isinstance(c, SpectralField):
            raise StructuralError("use pointwise_product for products of fields")
        real = self.real and np.isreal(c)
        return SpectralField(self.grid, self.rank, self.coeffs * c, bool(real))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / c)


def transform_roundtrip(f):
    """Sample a field and transform back."""
    if not isinstance(f, SpectralField):
        raise StructuralError("transform_roundtrip expects a SpectralField")
    return f.with_coeffs(SpectralField.from_physical(f.grid, f.physical(), f.rank).coeffs)


def hermitian_defect(f):
    """max |c(-l) - conj(c(l))| relative to max |c|."""
    c = f.coeffs
    flipped = np.roll(c[:, ::-1, ::-1], 1, axis=(1, 2))
    scale = np.abs(c).max()
    return float(np.abs(flipped - np.conj(c)).max() / scale) if scale else 0.0


def sum_fields(fields, grid=None, rank=None):
    """Sum of an iterable of fields (zero field when empty)."""
    fields = list(fields)
    if not fields:
        return SpectralField.zeros(grid, rank)
    out = fields[0]
    for f in fields[1:]:
        out = out + f
    return out


# ---------------------------------------------------------------- symbols


@lru_cache(maxsize=64)
def fractional_symbol(grid, beta):
    """(2 pi |l|)^{2 beta}."""
    return (2.0 * np.pi * grid.kmag) ** (2.0 * beta)


@lru_cache(maxsize=8)
def derivative_symbols(grid):
    """2 pi i l_j, zero on Nyquist lines so that real fields stay real."""
    l1, l2 = grid.odd_wavevector
    return 2j * np.pi * l1, 2j * np.pi * l2


@lru_cache(maxsize=8)
def _odd_laplacian_inverse(grid):
    d1, d2 = derivative_symbols(grid)
    lap = (d1 * d1 + d2 * d2).real
    inv = np.zeros_like(lap)
    np.divide(1.0, lap, out=inv, where=lap != 0)
    return inv


@lru_cache(maxsize=8)
def leray_symbol(grid):
    """(P11, P12, P22) with P = I - l l^T / |l|^2, identity where l = 0."""
    l1, l2 = grid.odd_wavevector
    k2 = l1 * l1 + l2 * l2
    inv = np.zeros_like(k2)
    np.divide(1.0, k2, out=inv, where=k2 != 0)
    return 1.0 - l1 * l1 * inv, -l1 * l2 * inv, 1.0 - l2 * l2 * inv


@dataclass(frozen=True)
class MultiplierKind:
    """A Fourier multiplier; build with the module-level constructors."""

    name: str
    beta: float = None
    t: float = None
    j: int = None


def fractional_laplacian_kind(beta):
    if beta <= 0.5:
        raise StructuralError(f"beta must exceed 1/2, got {beta}")
    return MultiplierKind("fractional_laplacian", beta=beta)


def heat_semigroup_kind(t, beta):
    if beta <= 0.5:
        raise StructuralError(f"beta must exceed 1/2, got {beta}")
    if t < 0:
        raise StructuralError(f"heat semigroup needs t >= 0, got {t}")
    return MultiplierKind("heat_semigroup", beta=beta, t=t)


def riesz_kind(j):
    if j not in (1, 2):
        raise StructuralError(f"Riesz index must be 1 or 2, got {j}")
    return MultiplierKind("riesz", j=j)


LERAY = MultiplierKind("leray_projection")
GRADIENT = MultiplierKind("gradient")
DIVERGENCE = MultiplierKind("divergence")
INVERSE_LAPLACIAN = MultiplierKind("inverse_laplacian_meanzero")
LAPLACIAN = MultiplierKind("laplacian")


def apply_multiplier(kind, f):
    """Apply the multiplier ``kind`` to ``f``."""
    g = f.grid
    c = f.coeffs
    name = kind.name
    if name == "fractional_laplacian":
        return f.with_coeffs(c * fractional_symbol(g, kind.beta))
    if name == "heat_semigroup":
        if kind.t == 0:
            return f.with_coeffs(c.copy())
        return f.with_coeffs(c * np.exp(-kind.t * fractional_symbol(g, kind.beta)))
    if name == "laplacian":
        return f.with_coeffs(c * (-(2.0 * np.pi * g.kmag) ** 2))
    if name == "inverse_laplacian_meanzero":
        k2 = (2.0 * np.pi * g.kmag) ** 2
        inv = np.zeros_like(k2)
        np.divide(-1.0, k2, out=inv, where=k2 != 0)
        return f.with_coeffs(c * inv)
    if name == "riesz":
        d = derivative_symbols(g)[kind.j - 1]
        k = 2.0 * np.pi * g.kmag
        sym = np.zeros_like(d)
        np.divide(d, k, out=sym, where=k != 0)
        return f.with_coeffs(c * sym)
    if name == "leray_projection":
        _need(f, "vector", name)
        p11, p12, p22 = leray_symbol(g)
        return f.with_coeffs(np.stack([p11 * c[0] + p12 * c[1], p12 * c[0] + p22 * c[1]]))
    if name == "gradient":
        _need(f, "scalar", name)
        d1, d2 = derivative_symbols(g)
        return f.with_coeffs(np.stack([d1 * c[0], d2 * c[0]]), rank="vector")
    if name == "divergence":
        d1, d2 = derivative_symbols(g)
        if f.rank == "vector":
            return f.with_coeffs((d1 * c[0] + d2 * c[1])[None], rank="scalar")
        if f.rank == "sym_tensor":
            return f.with_coeffs(np.stack([d1 * c[0] + d2 * c[1], d1 * c[1] + d2 * c[2]]), rank="vector")
        raise StructuralError(f"divergence needs a vector or tensor, got {f.rank}")
    raise StructuralError(f"unknown multiplier {name!r}")


def _need(f, rank, what):
    if f.rank != rank:
        raise StructuralError(f"{what} needs a {rank} field, got {f.rank}")


def fractional_laplacian(f, beta):
    return apply_multiplier(fractional_laplacian_kind(beta), f)


def heat(f, t, beta):
    return apply_multiplier(heat_semigroup_kind(t, beta), f)


def leray(f):
    return apply_multiplier(LERAY, f)


def gradient(f):
    return apply_multiplier(GRADIENT, f)


def divergence(f):
    return apply_multiplier(DIVERGENCE, f)


def laplacian(f):
    return apply_multiplier(LAPLACIAN, f)


def perp_gradient(f):
    """(-d2 f, d1 f) for a scalar f."""
    _need(f, "scalar", "perp_gradient")
    d1, d2 = derivative_symbols(f.grid)
    c = f.coeffs[0]
    return f.with_coeffs(np.stack([-d2 * c, d1 * c]), rank="vector")


def sym_gradient_S(f):
    """S(f) = grad f + grad f^T as (2 d1 f1, d1 f2 + d2 f1, 2 d2 f2)."""
    _need(f, "vector", "sym_gradient_S")
    d1, d2 = derivative_symbols(f.grid)
    c = f.coeffs
    return f.with_coeffs(np.stack([2 * d1 * c[0], d1 * c[1] + d2 * c[0], 2 * d2 * c[1]]), rank="sym_tensor")


def antidivergence_R(f):
    """Symmetric trace-free T with div T = f - mean(f).

    T = grad g + grad g^T - (div g) I with g = Laplacian^{-1} f.
    """
    _need(f, "vector", "antidivergence_R")
    d1, d2 = derivative_symbols(f.grid)
    inv = _odd_laplacian_inverse(f.grid)
    g1 = f.coeffs[0] * inv
    g2 = f.coeffs[1] * inv
    t11 = d1 * g1 - d2 * g2
    t12 = d1 * g2 + d2 * g1
    return f.with_coeffs(np.stack([t11, t12, -t11]), rank="sym_tensor")


def gradient_stack(f):
    """Coefficients of all first derivatives, shape (2 * components, n, n)."""
    d1, d2 = derivative_symbols(f.grid)
    c = f.coeffs
    return np.concatenate([d1 * c, d2 * c])


def modulate(f, q):
    """Multiply by e^{2 pi i q.x} exactly by shifting coefficients.

    Raises ResolutionError if content would wrap around the grid.
    """
    g = f.grid
    g.index_of(q)
    shift = tuple(int(x) // g.lattice for x in q)
    c = f.coeffs
    # content must stay inside the index range after the shift
    m = g.index
    for axis, sh in zip((1, 2), shift):
        if sh == 0:
            continue
        target = m + sh
        bad = (target < -g.n // 2) | (target >= g.n // 2)
        sl = [slice(None)] * 3
        sl[axis] = bad
        if np.any(c[tuple(sl)] != 0) and np.abs(c[tuple(sl)]).max() > 1e-15 * np.abs(c).max():
            raise ResolutionError(f"modulation by {tuple(q)} wraps content around n={g.n}")
    return f.with_coeffs(np.roll(c, shift, axis=(1, 2)), real=False)


def real_part(f):
    """Field whose samples are the real parts of f's samples."""
    c = f.coeffs
    flipped = np.roll(c[:, ::-1, ::-1], 1, axis=(1, 2))
    return f.with_coeffs(0.5 * (c + np.conj(flipped)), real=True)


def imag_part(f):
    c = f.coeffs
    flipped = np.roll(c[:, ::-1, ::-1], 1, axis=(1, 2))
    return f.with_coeffs(-0.5j * (c - np.conj(flipped)), real=True)


# ---------------------------------------------------------------- mollifier


def _bump(r):
    out = np.zeros_like(r)
    inside = r < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@lru_cache(maxsize=32)
def mollifier_symbol(grid, length):
    """Fourier symbol of the unit-mass bump of radius ``length``.

    Evaluated from the radial Hankel transform by Gauss-Legendre quadrature,
    so it is exact up to quadrature error and independent of the sampling.
    """
    k_unique, inverse = np.unique(grid.kmag.ravel(), return_inverse=True)
    kl = k_unique * length
    nodes = int(max(128, 8 * kl.max() + 64))
    x, w = np.polynomial.legendre.leggauss(nodes)
    r = 0.5 * (x + 1.0)
    w = 0.5 * w * _bump(r) * r
    mass = w.sum()
    sym = np.empty_like(kl)
    chunk = max(1, 2_000_000 // nodes)
    for start in range(0, kl.size, chunk):
        arg = 2.0 * np.pi * np.outer(kl[start : start + chunk], r)
        sym[start : start + chunk] = j0(arg) @ w / mass
    sym[k_unique == 0] = 1.0
    return sym[inverse].reshape(grid.kmag.shape)


def mollify(f, length):
    """Convolution with the unit-mass bump exp(-1/(1-|x/length|^2)).

    Raises ResolutionError when ``length`` is below two grid spacings.
    """
    if not 0.0 < length <= 1.0:
        raise ResolutionError(f"mollifier length must lie in (0, 1], got {length}")
    if length < 2.0 * f.grid.spacing:
        raise ResolutionError(
            f"mollifier length {length:.3g} is below two grid spacings ({f.grid.spacing:.3g})"
        )
    return f.with_coeffs(f.coeffs * mollifier_symbol(f.grid, float(length)))


# ---------------------------------------------------------------- products


def _dealiased_samples(f):
    mask = f.grid.dealias_mask
    c = f.coeffs
    outside = np.abs(c[:, ~mask]).max() if (~mask).any() else 0.0
    scale = np.abs(c).max()
    ratio = float(outside / scale) if scale else 0.0
    v = sfft.ifft2(c * mask, axes=(-2, -1)) * f.grid.n**2
    return (v.real if f.real else v), ratio


def pointwise_product(a, b, contraction="scalar"):
    """Dealiased product of two fields.

    contraction:
      ``scalar``          a scalar times b of any rank;
      ``dot``             a.b for two vectors, giving a scalar;
      ``tensor_product``  symmetrised outer product (a(x)b + b(x)a)/2 of two vectors.

    A ratio of discarded to retained coefficients above ALIAS_THRESHOLD is
    recorded under ``meta['aliasing']``.
    """
    for f in (a, b):
        if not isinstance(f, SpectralField):
            raise StructuralError("pointwise_product expects SpectralFields")
    if a.grid != b.grid:
        raise StructuralError(f"grid mismatch: {a.grid} vs {b.grid}")
    va, ra = _dealiased_samples(a)
    vb, rb = _dealiased_samples(b)
    if contraction == "scalar":
        _need(a, "scalar", "scalar product")
        out, rank = va[0] * vb, b.rank
    elif contraction == "dot":
        if a.rank != "vector" or b.rank != "vector":
            raise StructuralError("dot product needs two vector fields")
        out, rank = (va[0] * vb[0] + va[1] * vb[1])[None], "scalar"
    elif contraction == "tensor_product":
        if a.rank != "vector" or b.rank != "vector":
            raise StructuralError("tensor product needs two vector fields")
        out = np.stack([va[0] * vb[0], 0.5 * (va[0] * vb[1] + va[1] * vb[0]), va[1] * vb[1]])
        rank = "sym_tensor"
    else:
        raise StructuralError(f"unknown contraction {contraction!r}")
    c = sfft.fft2(out, axes=(-2, -1)) / a.grid.n**2
    c *= a.grid.dealias_mask
    meta = {}
    worst = max(ra, rb)
    if worst > ALIAS_THRESHOLD:
        meta = {"aliasing": True, "alias_ratio": worst}
    return SpectralField(a.grid, rank, c, a.real and b.real, meta)


def project_div(T):
    """P div T for a symmetric tensor T."""
    return leray(divergence(T))


# ---------------------------------------------------------------- probes


def random_field(grid, rank, rng, bandwidth=None, decay=2.0, mean_zero=True):
    """Real random field with power-law spectrum limited to |l| <= bandwidth.

    The default bandwidth keeps every mode inside the dealiased band.
    """
    if bandwidth is None:
        bandwidth = grid.lattice * (grid.n / 3.0 - 1)
    k = grid.kmag
    ncomp = RANK_COMPONENTS[rank]
    v = rng.standard_normal((ncomp, grid.n, grid.n))
    c = sfft.fft2(v, axes=(-2, -1)) / grid.n
    weight = (1.0 + k / grid.lattice) ** (-decay)
    weight[k > bandwidth] = 0.0
    weight = weight * grid.dealias_mask
    if mean_zero:
        weight[0, 0] = 0.0
    return SpectralField(grid, rank, c * weight, real=True)
