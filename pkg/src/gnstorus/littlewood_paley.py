"""Dyadic frequency decomposition, Besov and Hoelder-Zygmund norms."""

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import CutoffError, EmptyBlockWarning

CHI_FLAT = 0.75  # chi = 1 on [0, CHI_FLAT]
CHI_ZERO = 1.0  # chi = 0 on [CHI_ZERO, inf); any value up to 4/3 keeps the stated supports


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
    y = 1.0 - x
    b = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return a / (a + b)


def chi(x):
    return 1.0 - smooth_step((np.asarray(x, dtype=float) - CHI_FLAT) / (CHI_ZERO - CHI_FLAT))


def phi(x):
    x = np.asarray(x, dtype=float)
    return chi(0.5 * x) - chi(x)


@dataclass(frozen=True)
class DyadicCutoffs:
    """Radial cutoffs with tabulated values on ``table_x``.

    chi is 1 on [0, 3/4] and vanishes from CHI_ZERO on; phi = chi(./2) - chi
    is supported in [3/4, 2 CHI_ZERO] and equals 1 on [CHI_ZERO, 3/2].
    """

    table_x: np.ndarray
    chi_table: np.ndarray
    phi_table: np.ndarray

    @staticmethod
    def chi(x):
        return chi(x)

    @staticmethod
    def phi(x):
        return phi(x)


def build_cutoffs(samples=4001, tol=1e-10):
    """Tabulate chi and phi and verify both partition identities."""
    x = np.linspace(0.0, 8.0, samples)
    c, p = chi(x), phi(x)
    checks = {
        "chi plateau": np.abs(chi(np.linspace(0, CHI_FLAT, 200)) - 1).max(),
        "chi support": np.abs(chi(np.linspace(4.0 / 3.0, 8.0, 200))).max(),
        "phi plateau": np.abs(phi(np.linspace(4.0 / 3.0, 1.5, 200)) - 1).max(),
        "phi support": max(np.abs(phi(np.linspace(0, 0.75, 200))).max(), np.abs(phi(np.linspace(8.0 / 3.0, 8, 200))).max()),
    }
    xs = np.linspace(0.0, 64.0, 20001)
    total = chi(xs) + sum(phi(xs * 2.0**-j) for j in range(0, 12))
    checks["inhomogeneous partition"] = np.abs(total - 1).max()
    xp = np.geomspace(1e-3, 1e3, 4001)
    total = sum(phi(xp * 2.0**-j) for j in range(-16, 16))
    checks["homogeneous partition"] = np.abs(total - 1).max()
    bad = {k: v for k, v in checks.items() if v > tol}
    if bad:
        raise CutoffError(f"cutoff identities fail: {bad}")
    return DyadicCutoffs(x, c, p)


@dataclass(frozen=True)
class BesovSpec:
    """Indices of B^s_{p,q}; p and q may be np.inf."""

    s: float
    p: float = np.inf
    q: float = np.inf
    homogeneous: bool = False

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v == np.inf or v >= 1):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")


@lru_cache(maxsize=256)
def block_symbol(grid, j, homogeneous=False):
    """Cutoff evaluated at |l| 2^{-j}; chi(|l|) for the low block j = -1."""
    if j == -1 and not homogeneous:
        return chi(grid.kmag)
    return phi(grid.kmag * 2.0 ** (-j))


def top_block(grid):
    """Largest j whose block meets the grid's resolved wavenumbers."""
    kmax = grid.lattice * grid.n / 2.0 * np.sqrt(2.0)
    return int(np.floor(np.log2(kmax / 0.75)))


def dyadic_block(u, j, homogeneous=False):
    """Delta_j u by coefficientwise multiplication."""
    if j < -1 and not homogeneous:
        raise ValueError(f"nonhomogeneous blocks start at j = -1, got {j}")
    if j > top_block(u.grid):
        warnings.warn(f"block j={j} lies beyond the grid band", EmptyBlockWarning, stacklevel=2)
    return u.with_coeffs(u.coeffs * block_symbol(u.grid, j, homogeneous))


def pointwise_magnitude(values, kind):
    """Pointwise norm of sampled components: abs, Euclidean, or operator norm for sym tensors."""
    if kind == "sym_tensor":
        t11, t12, t22 = values
        return np.abs(0.5 * (t11 + t22)) + np.hypot(0.5 * (t11 - t22), t12)
    if values.shape[0] == 1:
        return np.abs(values[0])
    return np.sqrt((np.abs(values) ** 2).sum(axis=0))


def lp_norm(values, kind, p):
    mag = pointwise_magnitude(values, kind)
    if p == np.inf:
        return float(mag.max())
    return float(np.mean(mag**p) ** (1.0 / p))


def _samples(coeffs, grid, real):
    v = sfft.ifft2(coeffs, axes=(-2, -1)) * grid.n**2
    return v.real if real else v


def block_norms(coeffs, grid, kind, p=np.inf, homogeneous=False, real=True, j_min=None):
    """Map j -> ||Delta_j u||_{L^p} for every block meeting the grid band."""
    j_lo = -1 if j_min is None else j_min
    out = {}
    for j in range(j_lo, top_block(grid) + 1):
        sym = block_symbol(grid, j, homogeneous)
        if not sym.any():
            continue
        c = coeffs * sym
        out[j] = lp_norm(_samples(c, grid, real), kind, p) if np.any(c) else 0.0
    return out


def besov_norm(u, spec, return_blocks=False):
    """||u||_{B^s_{p,q}} = l^q over j of 2^{js} ||Delta_j u||_{L^p}.

    Blocks beyond the grid band are excluded; with ``return_blocks`` the
    per-block values and the first excluded index are returned as well.
    """
    norms = block_norms(u.coeffs, u.grid, u.rank, spec.p, spec.homogeneous, u.real)
    weighted = np.array([2.0 ** (j * spec.s) * v for j, v in norms.items()])
    if weighted.size == 0:
        value = 0.0
    elif spec.q == np.inf:
        value = float(weighted.max())
    else:
        value = float((weighted**spec.q).sum() ** (1.0 / spec.q))
    if return_blocks:
        return value, {"blocks": norms, "excluded_from": top_block(u.grid) + 1}
    return value


def zygmund_from_coeffs(coeffs, grid, kind, s, real=True):
    """sup over N = 2^j, j >= 0, of N^s ||P_N u||_inf (homogeneous blocks)."""
    norms = block_norms(coeffs, grid, kind, np.inf, True, real, j_min=0)
    return max((2.0 ** (j * s) * v for j, v in norms.items()), default=0.0)


def zygmund_seminorm(u, s):
    return zygmund_from_coeffs(u.coeffs, u.grid, u.rank, s, u.real)


def reconstruct(u):
    """Sum of all nonhomogeneous blocks meeting the grid band."""
    c = sum(u.coeffs * block_symbol(u.grid, j) for j in range(-1, top_block(u.grid) + 1))
    return u.with_coeffs(c)
