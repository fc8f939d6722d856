"""Shared numerical oracles used by several test modules.

Everything here is deliberately independent of the code paths under
test: quadrature uses numpy's Gauss-Legendre nodes directly, and the
closed forms are hard-coded textbook polynomials.
"""

import numpy as np

# Phase-free associated Legendre closed forms up to l = 4.
LEGENDRE_CLOSED = {
    (0, 0): lambda x: np.ones_like(x),
    (1, 0): lambda x: x,
    (1, 1): lambda x: np.sqrt(1 - x**2),
    (2, 0): lambda x: 0.5 * (3 * x**2 - 1),
    (2, 1): lambda x: 3 * x * np.sqrt(1 - x**2),
    (2, 2): lambda x: 3 * (1 - x**2),
    (3, 0): lambda x: 0.5 * (5 * x**3 - 3 * x),
    (3, 1): lambda x: 1.5 * (5 * x**2 - 1) * np.sqrt(1 - x**2),
    (3, 2): lambda x: 15 * x * (1 - x**2),
    (3, 3): lambda x: 15 * (1 - x**2) ** 1.5,
    (4, 0): lambda x: 0.125 * (35 * x**4 - 30 * x**2 + 3),
    (4, 1): lambda x: 2.5 * (7 * x**3 - 3 * x) * np.sqrt(1 - x**2),
    (4, 2): lambda x: 7.5 * (7 * x**2 - 1) * (1 - x**2),
    (4, 3): lambda x: 105 * x * (1 - x**2) ** 1.5,
    (4, 4): lambda x: 105 * (1 - x**2) ** 2,
}


def gegenbauer_closed(nu: int, alpha: float, x):
    """Textbook expansions of C_nu^alpha for nu <= 4."""
    x = np.asarray(x, dtype=float)
    a = float(alpha)
    if nu == 0:
        return np.ones_like(x)
    if nu == 1:
        return 2 * a * x
    if nu == 2:
        return -a + 2 * a * (1 + a) * x**2
    if nu == 3:
        return -2 * a * (1 + a) * x + (4.0 / 3.0) * a * (1 + a) * (2 + a) * x**3
    if nu == 4:
        return (
            0.5 * a * (1 + a)
            - 2 * a * (1 + a) * (2 + a) * x**2
            + (2.0 / 3.0) * a * (1 + a) * (2 + a) * (3 + a) * x**4
        )
    raise ValueError(f"no closed form recorded for nu={nu}")


def enumerate_triples_bruteforce(n_max, l_max, m_max, psi_symmetric):
    """Independent triple enumeration with explicit filters, canonical order."""
    out = []
    for n in range(n_max + 1):
        for l in range(n + 1):
            if l > l_max:
                continue
            if psi_symmetric and (n - l) % 2 == 1:
                continue
            for m in range(-l, l + 1):
                if abs(m) > m_max:
                    continue
                out.append((n, l, m))
    return out


def sphere_product_grid(n_cos_theta=64, n_phi=128):
    """Quadrature over the 2-sphere: Gauss-Legendre in cos(theta), uniform phi."""
    x, w = np.polynomial.legendre.leggauss(n_cos_theta)
    theta = np.arccos(x)
    phi = np.arange(n_phi) * 2.0 * np.pi / n_phi
    w_phi = 2.0 * np.pi / n_phi
    phi_grid = np.tile(phi, n_cos_theta)
    theta_grid = np.repeat(theta, n_phi)
    weights = np.repeat(w, n_phi) * w_phi
    return phi_grid, theta_grid, weights


def psi_quadrature(n_psi=128):
    """Nodes and sin^2-weighted Gauss-Legendre weights for psi on [0, pi]."""
    x, w = np.polynomial.legendre.leggauss(n_psi)
    psi = (x + 1.0) * np.pi / 2.0
    weights = w * (np.pi / 2.0) * np.sin(psi) ** 2
    return psi, weights


def hsh_gram_quadrature(index_set, n_cos_theta=64, n_phi=128, n_psi=128):
    """Gram matrix of the set under the 3-sphere surface measure.

    Product rule: Gauss-Legendre in cos(theta), uniform phi, Gauss-Legendre
    in psi with the sin^2(psi) weight folded into the node weights.
    """
    phi_grid, theta_grid, w_dir = sphere_product_grid(n_cos_theta, n_phi)
    psi, w_psi = psi_quadrature(n_psi)
    spherical = index_set.sh_table(phi_grid, theta_grid)[:, index_set.lm_positions]
    radial = index_set.radial_table(psi)[:, index_set.nl_positions]
    gram = np.zeros((len(index_set), len(index_set)))
    for k in range(psi.size):
        rows = spherical * radial[k]
        gram += w_psi[k] * (rows.T @ (rows * w_dir[:, None]))
    return gram
