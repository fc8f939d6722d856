"""Real hyperspherical harmonics on the 3-sphere and their building blocks.

A basis function Z_nl^m(phi, theta, psi) factors into a radial part
N(n,l) * sin(psi)**l * C_{n-l}^{l+1}(cos psi) depending on (n, l) only,
and a real spherical harmonic Y_l^m(phi, theta) depending on (l, m).
:class:`IndexSet` enumerates a truncated, optionally parity-filtered
family of (n, l, m) triples and evaluates both factors in bulk, which is
what the fitting and decoding layers build on.

Normalizations are fixed so that the basis is orthonormal under the
3-sphere surface measure sin(psi)^2 dpsi sin(theta) dtheta dphi, and the
associated Legendre functions carry no Condon-Shortley phase (the sign
factor only flips the sign of some fitted coefficients, so external SH
tables with the phase differ by (-1)^m for odd m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

# hsh_normalization works in the log-gamma domain and is validated up to
# this order; beyond it the contract is untested and we refuse.
MAX_ORDER = 200

_LN_2 = math.log(2.0)
_LN_PI = math.log(math.pi)


@dataclass(frozen=True, order=True)
class HshIndex:
    """The (n, l, m) triple addressing one hyperspherical harmonic."""

    n: int
    l: int
    m: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if not 0 <= self.l <= self.n:
            raise ValueError(f"l must be in [0, n={self.n}], got {self.l}")
        if abs(self.m) > self.l:
            raise ValueError(f"|m| must be <= l={self.l}, got {self.m}")


def gegenbauer(nu: int, alpha: float, x: float) -> float:
    """Evaluate the Gegenbauer polynomial C_nu^alpha(x) by recurrence.

    C_0 = 1, C_1 = 2*alpha*x and
    nu*C_nu = 2*x*(nu+alpha-1)*C_{nu-1} - (nu+2*alpha-2)*C_{nu-2}.
    """
    if nu < 0:
        raise ValueError(f"nu must be >= 0, got {nu}")
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if nu == 0:
        return 1.0
    prev = 1.0
    cur = 2.0 * alpha * x
    for k in range(2, nu + 1):
        prev, cur = cur, (2.0 * x * (k + alpha - 1.0) * cur - (k + 2.0 * alpha - 2.0) * prev) / k
    return cur


def assoc_legendre(l: int, m: int, x: float) -> float:
    """Associated Legendre function P_l^m(x) without Condon-Shortley phase.

    Uses the stable upward recurrence in l starting from
    P_m^m(x) = (2m-1)!! * (1-x^2)^(m/2).
    """
    if m < 0 or m > l:
        raise ValueError(f"m must be in [0, l={l}], got {m}")
    if not math.isfinite(x):
        raise ValueError(f"x must be finite, got {x!r}")
    if abs(x) > 1.0:
        if abs(x) - 1.0 > 1e-9:
            raise ValueError(f"x must be in [-1, 1], got {x!r}")
        x = math.copysign(1.0, x)
    s = math.sqrt((1.0 - x) * (1.0 + x))
    pmm = 1.0
    for k in range(1, m + 1):
        pmm *= (2.0 * k - 1.0) * s
    if l == m:
        return pmm
    pnext = x * (2.0 * m + 1.0) * pmm
    for ll in range(m + 2, l + 1):
        pmm, pnext = pnext, (x * (2.0 * ll - 1.0) * pnext - (ll + m - 1.0) * pmm) / (ll - m)
    return pnext


def sh_normalization(l: int, m: int) -> float:
    """Orthonormalizing factor for the real spherical harmonic Y_l^m."""
    if abs(m) > l:
        raise ValueError(f"|m| must be <= l={l}, got {m}")
    two_minus_delta = 1.0 if m == 0 else 2.0
    ln = 0.5 * (
        math.log(two_minus_delta)
        + math.log(2.0 * l + 1.0)
        - math.log(4.0 * math.pi)
        + math.lgamma(l - abs(m) + 1)
        - math.lgamma(l + abs(m) + 1)
    )
    return math.exp(ln)


def real_sh(l: int, m: int, phi: float, theta: float) -> float:
    """Real spherical harmonic: cos(m*phi) branch for m >= 0, sin for m < 0."""
    if not (math.isfinite(phi) and math.isfinite(theta)):
        raise ValueError("phi and theta must be finite")
    p = assoc_legendre(l, abs(m), math.cos(theta))
    if m >= 0:
        return sh_normalization(l, m) * p * math.cos(m * phi)
    return sh_normalization(l, m) * p * math.sin(-m * phi)


def hsh_normalization(n: int, l: int) -> float:
    """Orthonormalizing factor N(n, l) for the hyperspherical harmonic.

    N(n,l) = 2^l * l! * sqrt(2*(n+1)*(n-l)! / (pi*(n+l+1)!)), evaluated
    through log-gamma so no intermediate overflows up to n = 200.
    """
    if not 0 <= l <= n:
        raise ValueError(f"need 0 <= l <= n, got n={n}, l={l}")
    if n > MAX_ORDER:
        raise ValueError(f"n={n} exceeds supported maximum order {MAX_ORDER}")
    ln = (
        l * _LN_2
        + math.lgamma(l + 1)
        + 0.5 * (_LN_2 + math.log(n + 1.0) + math.lgamma(n - l + 1) - _LN_PI - math.lgamma(n + l + 2))
    )
    return math.exp(ln)


def hsh(idx: HshIndex, phi: float, theta: float, psi: float) -> float:
    """Evaluate Z_nl^m(phi, theta, psi) = N(n,l) sin^l(psi) C_{n-l}^{l+1}(cos psi) Y_l^m(phi, theta)."""
    if not math.isfinite(psi):
        raise ValueError(f"psi must be finite, got {psi!r}")
    radial = hsh_normalization(idx.n, idx.l) * math.sin(psi) ** idx.l * gegenbauer(
        idx.n - idx.l, idx.l + 1, math.cos(psi)
    )
    return radial * real_sh(idx.l, idx.m, phi, theta)


def _legendre_table(l_max: int, m_max: int, x: np.ndarray) -> np.ndarray:
    """P_l^m(x) (phase-free) for all 0 <= m <= min(l, m_max), l <= l_max.

    Returns an array of shape (l_max+1, m_max+1, len(x)); entries with
    m > l are left zero.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((l_max + 1, m_max + 1) + x.shape)
    s = np.sqrt((1.0 - x) * (1.0 + x))
    pmm = np.ones_like(x)
    for m in range(m_max + 1):
        if m > 0:
            pmm = pmm * ((2.0 * m - 1.0) * s)
        if m > l_max:
            break
        out[m, m] = pmm
        if m + 1 <= l_max:
            out[m + 1, m] = x * (2.0 * m + 1.0) * pmm
        for ll in range(m + 2, l_max + 1):
            out[ll, m] = (x * (2.0 * ll - 1.0) * out[ll - 1, m] - (ll + m - 1.0) * out[ll - 2, m]) / (ll - m)
    return out


def _gegenbauer_table(nu_max: int, alpha: float, x: np.ndarray) -> np.ndarray:
    """C_nu^alpha(x) for nu = 0..nu_max; shape (nu_max+1, len(x))."""
    x = np.asarray(x, dtype=float)
    out = np.empty((nu_max + 1,) + x.shape)
    out[0] = 1.0
    if nu_max >= 1:
        out[1] = 2.0 * alpha * x
    for k in range(2, nu_max + 1):
        out[k] = (2.0 * x * (k + alpha - 1.0) * out[k - 1] - (k + 2.0 * alpha - 2.0) * out[k - 2]) / k
    return out


def sh_matrix(order: int, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Design matrix of all real SHs with l <= order at the given angles.

    Columns follow (l, m) lexicographic order (m ascending from -l), so
    the matrix has shape (len(phi), (order+1)**2).
    """
    if order < 0:
        raise ValueError(f"order must be >= 0, got {order}")
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if phi.shape != theta.shape:
        raise ValueError("phi and theta must have matching shapes")
    p = _legendre_table(order, order, np.cos(theta))
    out = np.empty((phi.size, (order + 1) ** 2))
    col = 0
    for l in range(order + 1):
        for m in range(-l, l + 1):
            trig = np.cos(m * phi) if m >= 0 else np.sin(-m * phi)
            out[:, col] = sh_normalization(l, m) * p[l, abs(m)] * trig
            col += 1
    return out


class IndexSet:
    """Truncated, ordered enumeration of admissible (n, l, m) triples.

    Limits obey n_max >= l_max >= m_max >= 0; members satisfy n <= n_max,
    l <= min(n, l_max) and |m| <= min(l, m_max).  With ``psi_symmetric``
    only triples with even n - l survive, i.e. the basis functions that
    are symmetric about psi = pi/2.  The ordering is lexicographic by
    (n, l, m) with m ascending from -l; coefficient vectors and matrix
    columns everywhere follow it.
    """

    def __init__(self, n_max: int, l_max: int, m_max: int, psi_symmetric: bool) -> None:
        if not n_max >= l_max >= m_max >= 0:
            raise ValueError(
                f"limits must satisfy n_max >= l_max >= m_max >= 0, got ({n_max}, {l_max}, {m_max})"
            )
        self.n_max = int(n_max)
        self.l_max = int(l_max)
        self.m_max = int(m_max)
        self.psi_symmetric = bool(psi_symmetric)

        indices: list[HshIndex] = []
        for n in range(self.n_max + 1):
            for l in range(min(n, self.l_max) + 1):
                if self.psi_symmetric and (n - l) % 2 != 0:
                    continue
                m_lim = min(l, self.m_max)
                indices.extend(HshIndex(n, l, m) for m in range(-m_lim, m_lim + 1))
        self.indices: tuple[HshIndex, ...] = tuple(indices)

        # Factor bookkeeping: column j evaluates as
        # radial[nl_positions[j]] * spherical[lm_positions[j]].
        nl_seen: dict[tuple[int, int], int] = {}
        lm_seen: dict[tuple[int, int], int] = {}
        nl_pos = np.empty(len(indices), dtype=np.intp)
        lm_pos = np.empty(len(indices), dtype=np.intp)
        for j, idx in enumerate(indices):
            nl_pos[j] = nl_seen.setdefault((idx.n, idx.l), len(nl_seen))
            lm_pos[j] = lm_seen.setdefault((idx.l, idx.m), len(lm_seen))
        self.nl_pairs: tuple[tuple[int, int], ...] = tuple(nl_seen)
        self.lm_pairs: tuple[tuple[int, int], ...] = tuple(lm_seen)
        self.nl_positions = nl_pos
        self.lm_positions = lm_pos

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self) -> Iterator[HshIndex]:
        return iter(self.indices)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IndexSet):
            return NotImplemented
        return (self.n_max, self.l_max, self.m_max, self.psi_symmetric) == (
            other.n_max,
            other.l_max,
            other.m_max,
            other.psi_symmetric,
        )

    def __hash__(self) -> int:
        return hash((self.n_max, self.l_max, self.m_max, self.psi_symmetric))

    def __repr__(self) -> str:
        return (
            f"IndexSet(n_max={self.n_max}, l_max={self.l_max}, m_max={self.m_max}, "
            f"psi_symmetric={self.psi_symmetric}, size={len(self)})"
        )

    def radial_table(self, psi: np.ndarray) -> np.ndarray:
        """Radial factors N(n,l) sin^l(psi) C_{n-l}^{l+1}(cos psi).

        Returns shape (len(psi), len(self.nl_pairs)), columns ordered as
        ``self.nl_pairs``.
        """
        psi = np.atleast_1d(np.asarray(psi, dtype=float))
        x = np.cos(psi)
        sin_psi = np.sin(psi)
        out = np.empty((psi.size, len(self.nl_pairs)))
        by_l: dict[int, list[tuple[int, int]]] = {}
        for pos, (n, l) in enumerate(self.nl_pairs):
            by_l.setdefault(l, []).append((pos, n))
        for l, entries in by_l.items():
            nu_max = max(n for _, n in entries) - l
            c = _gegenbauer_table(nu_max, l + 1, x)
            s_pow = sin_psi**l
            for pos, n in entries:
                out[:, pos] = hsh_normalization(n, l) * s_pow * c[n - l]
        return out

    def sh_table(self, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """Real SH factors Y_l^m for every (l, m) pair used by the set.

        Returns shape (len(phi), len(self.lm_pairs)), columns ordered as
        ``self.lm_pairs``.
        """
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if phi.shape != theta.shape:
            raise ValueError("phi and theta must have matching shapes")
        m_eff = min(self.l_max, self.m_max)
        p = _legendre_table(self.l_max, m_eff, np.cos(theta))
        out = np.empty((phi.size, len(self.lm_pairs)))
        for pos, (l, m) in enumerate(self.lm_pairs):
            trig = np.cos(m * phi) if m >= 0 else np.sin(-m * phi)
            out[:, pos] = sh_normalization(l, m) * p[l, abs(m)] * trig
        return out


def build_index_set(n_max: int, l_max: int, m_max: int, psi_symmetric: bool) -> IndexSet:
    """Enumerate the truncated basis in canonical order."""
    return IndexSet(n_max, l_max, m_max, psi_symmetric)


def eval_basis_row(index_set: IndexSet, phi: float, theta: float, psi: float) -> np.ndarray:
    """All basis functions of the set at one direction, as a length-|set| vector."""
    radial = index_set.radial_table(np.array([float(psi)]))[0]
    spherical = index_set.sh_table(np.array([float(phi)]), np.array([float(theta)]))[0]
    return radial[index_set.nl_positions] * spherical[index_set.lm_positions]
