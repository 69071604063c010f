"""Spectral operators, dyadic blocks and Besov norms on a random field.

    python3 demos/spectral_tour.py
"""

import numpy as np

from gnstorus.littlewood_paley import BesovSpec, besov_norm, dyadic_block, top_block
from gnstorus.norms import sup_norm
from gnstorus.spectral import GridSpec, antidivergence_R, divergence, fractional_laplacian, leray, random_field


def main():
    rng = np.random.default_rng(0)
    g = GridSpec(64)
    u = leray(random_field(g, "vector", rng))
    print(f"|u|_inf = {sup_norm(u):.4f}, |div u|_inf = {sup_norm(divergence(u)):.2e}")
    print(f"|(-Lap)^1.25 u|_inf = {sup_norm(fractional_laplacian(u, 1.25)):.4e}")
    R = antidivergence_R(u)
    print(f"|div R u - u|_inf = {sup_norm(divergence(R) - u):.2e}")
    for j in range(-1, top_block(g) + 1):
        print(f"block {j:2d}: |Delta_j u|_inf = {sup_norm(dyadic_block(u, j)):.4e}")
    for s in (-1.45, -0.5, 0.0, 0.5):
        print(f"|u|_B^{s:+.2f}_inf,inf = {besov_norm(u, BesovSpec(s)):.4e}")


if __name__ == "__main__":
    main()
