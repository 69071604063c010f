"""Numerical toolkit for the two-branch construction of non-unique solutions
of the generalized Navier-Stokes equations on the two-torus."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"
