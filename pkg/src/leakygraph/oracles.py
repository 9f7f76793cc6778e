"""Independent reference solutions for the point-interaction results.

* full ring: angular-momentum reduction ``gamma R I_l(kR) K_l(kR) = 1``;
* separable star examples: straight line and right-angle cross;
* infinite straight polymer threshold;
* Birman-Schwinger Nystrom solver for star graphs with finite arms;
* lower bound on the number of bound states of a broken line.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, optimize
from scipy.spatial.distance import cdist

from . import specfun
from .spectral import Spectrum

__all__ = [
    "RingLevel",
    "ring_exact",
    "ring_levels",
    "ring_spectrum",
    "line_threshold",
    "cross_eigenvalue",
    "polymer_alpha",
    "polymer_threshold",
    "BSOperator",
    "StarBSResult",
    "star_bs_lowest",
    "nest_bound",
]

TWO_PI = 2.0 * math.pi


# --------------------------------------------------------------------------
# Ring


@dataclass(frozen=True)
class RingLevel:
    l: int
    E: float
    kappa: float

    @property
    def multiplicity(self):
        return 1 if self.l == 0 else 2


def ring_exact(R, gamma, l, tol=1e-14):
    """Level of the full ring in angular-momentum sector ``l``, or ``None``.

    Solves ``gamma R P_l(kappa R) = 1`` with ``P_l = I_l K_l`` strictly
    decreasing; a root exists iff ``gamma R > 2 l``.
    """
    if R <= 0 or gamma <= 0 or l < 0 or int(l) != l:
        raise ValueError("need R > 0, gamma > 0 and integer l >= 0")
    l = int(l)
    if l > 0 and gamma * R <= 2 * l:
        return None

    def f(kappa):
        return gamma * R * specfun.bessel_ik_product(l, kappa * R) - 1.0

    hi = gamma
    while f(hi) > 0:
        hi *= 2.0
    lo = 0.5 * hi
    while f(lo) < 0:
        lo *= 0.5
        if lo < 1e-300:
            return None
    kappa = optimize.brentq(f, lo, hi, xtol=tol * lo, rtol=4 * np.finfo(float).eps)
    return RingLevel(l, -kappa * kappa, kappa)


def ring_levels(R, gamma, tol=1e-14):
    """All full-ring levels, ``l = 0, 1, ...`` while ``gamma R > 2 l``."""
    out = []
    l = 0
    while True:
        lev = ring_exact(R, gamma, l, tol)
        if lev is None:
            return out
        out.append(lev)
        l += 1


def ring_spectrum(R, gamma):
    """The full-ring levels as a :class:`Spectrum` tagged ``oracle``."""
    levels = sorted(ring_levels(R, gamma), key=lambda v: v.E)
    return Spectrum(
        energies=np.array([v.E for v in levels]),
        multiplicities=np.array([v.multiplicity for v in levels]),
        flags=["oracle"] * len(levels),
        degeneracy_tol=0.0,
        settings={"R": R, "gamma": gamma, "l": [v.l for v in levels]},
        provenance="oracle",
    )


# --------------------------------------------------------------------------
# Separable examples


def line_threshold(gamma):
    """Bottom of the essential spectrum of a straight leaky line, ``-gamma**2/4``."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    return -0.25 * gamma * gamma


def cross_eigenvalue(gamma):
    """Isolated eigenvalue ``-gamma**2/2`` of the right-angle cross."""
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    return -0.5 * gamma * gamma


# --------------------------------------------------------------------------
# Straight polymer


def _polymer_series(a, m_max):
    # sum_{m=1}^{M} (1/sqrt((2 pi m)^2 + a^2) - 1/(2 pi m)) + integral tail
    b = TWO_PI * np.arange(1, m_max + 1, dtype=float)
    root = np.sqrt(b * b + a * a)
    terms = -(a * a) / (b * root * (root + b))
    # tail: (1/2pi) [ln(4 pi/a) - asinh(z) + ln m0], z = 2 pi m0 / a, m0 = M + 1/2
    z = TWO_PI * (m_max + 0.5) / a
    tail = -math.log1p(1.0 / (2.0 * z * (z + math.sqrt(z * z + 1.0)))) / TWO_PI
    return math.fsum(terms) + tail


def polymer_alpha(kappa, n, l0, m_max=10 ** 6):
    """Coupling for which an infinite polymer with period ``l0/n`` has its
    continuum threshold at ``-kappa**2``."""
    a = kappa * l0 / n
    return (n / (2.0 * l0 * kappa) - math.log(TWO_PI * n / l0) / TWO_PI
            + _polymer_series(a, m_max))


def polymer_threshold(alpha, n, l0, m_max=10 ** 6, tol=1e-12):
    """``kappa`` solving the polymer threshold condition for coupling ``alpha``.

    The right-hand side is strictly decreasing in ``kappa``; the root is
    bracketed by doubling and refined with Brent's method.
    """
    if n < 1 or l0 <= 0:
        raise ValueError("need n >= 1 and l0 > 0")
    if m_max < 10 ** 4:
        raise ValueError("m_max must be at least 1e4")

    def f(k):
        return polymer_alpha(k, n, l0, m_max) - alpha

    lo, hi = 1.0, 1.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo *= 0.5
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2.0
    if not (f(lo) > 0 > f(hi)):
        raise ValueError("no root in bracket for this coupling")
    kappa = optimize.brentq(f, lo, hi, xtol=1e-15 * lo, rtol=4 * np.finfo(float).eps)
    if abs(f(kappa)) >= max(tol, 1e-10):
        raise ValueError(f"polymer residual {abs(f(kappa)):.2e} above tolerance")
    return kappa


# --------------------------------------------------------------------------
# Birman-Schwinger operator on a star with finite arms


@dataclass
class BSOperator:
    """Nystrom discretisation of ``gamma R_{m,m}`` on the arms of a star.

    Midpoint nodes ``s_i = (i - 1/2) h`` on each arm; the self cell of the
    logarithmic diagonal is integrated exactly.
    """

    directions: np.ndarray  # arm angles theta_j
    gamma: float
    arm_length: float
    nodes_per_arm: int

    def __post_init__(self):
        h = self.arm_length / self.nodes_per_arm
        s = (np.arange(self.nodes_per_arm) + 0.5) * h
        self.h = h
        self.nodes = s
        self.weights = np.full(self.nodes_per_arm, h)
        pts = [np.column_stack([s * math.cos(t), s * math.sin(t)]) for t in self.directions]
        self.points = np.vstack(pts)
        d = cdist(self.points, self.points)
        np.fill_diagonal(d, 1.0)  # placeholder, overwritten by the self cell
        self._dist = d

    def matrix(self, kappa):
        k = specfun.bessel_k0(kappa * self._dist) * self.h
        self_cell = 2.0 * specfun.k0_integral(0.5 * kappa * self.h) / kappa
        np.fill_diagonal(k, self_cell)
        return k * (self.gamma / TWO_PI)

    def lambda_max(self, kappa):
        a = self.matrix(kappa)
        n = a.shape[0]
        return float(linalg.eigvalsh(a, subset_by_index=[n - 1, n - 1], check_finite=False)[0])


@dataclass
class StarBSResult:
    operator: BSOperator
    kappa: float  # None when no bound state below the threshold
    energy: float

    def lambda_max(self, kappa):
        return self.operator.lambda_max(kappa)


def star_bs_lowest(beta, gamma, arm_length=None, nodes_per_arm=300, tol=1e-8):
    """Lowest bound state of a two-arm star from the Birman-Schwinger condition.

    ``beta`` is the angle between the arms (or a sequence of angles for
    more arms).  The energy is ``-kappa**2`` where the largest eigenvalue of
    the Nystrom matrix equals one; only ``kappa > gamma/2`` (below the
    continuum threshold) is searched.  ``kappa`` is ``None`` when there is
    no such root.
    """
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    if nodes_per_arm < 50:
        raise ValueError("nodes_per_arm must be at least 50")
    angles = np.atleast_1d(np.asarray(beta, dtype=float))
    if np.any(angles <= 0) or angles.sum() >= TWO_PI:
        raise ValueError("angles must be positive with sum below 2pi")
    if arm_length is None:
        arm_length = 30.0 / gamma
    directions = np.concatenate([[0.0], np.cumsum(angles)])
    op = BSOperator(directions, float(gamma), float(arm_length), int(nodes_per_arm))

    k_lo = 0.5 * gamma
    if op.lambda_max(k_lo) < 1.0:
        return StarBSResult(op, None, None)
    k_hi = gamma
    while op.lambda_max(k_hi) > 1.0:
        k_hi *= 2.0
    kappa = optimize.brentq(lambda k: op.lambda_max(k) - 1.0, k_lo, k_hi, xtol=tol * 1e-2 * k_lo)
    return StarBSResult(op, kappa, -kappa * kappa)


# --------------------------------------------------------------------------
# Bound-state count estimate


def nest_bound(beta):
    """Trial-function lower bound on the number of bound states of a broken
    line with opening angle ``beta``::

        (1 / 16 pi) cot(beta/2) (8 sec(beta/2) - 5)^(3/2) / (8 sec(beta/2) - 3)^(1/2)

    Behaves like ``3^(3/2) / (8 pi sqrt 5) / beta`` as ``beta -> 0``.
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0) or np.any(beta >= math.pi):
        raise ValueError("beta must lie in (0, pi)")
    sec = 1.0 / np.cos(0.5 * beta)
    val = (1.0 / (16.0 * math.pi)) / np.tan(0.5 * beta) * (8 * sec - 5) ** 1.5 / np.sqrt(8 * sec - 3)
    return float(val) if val.ndim == 0 else val
