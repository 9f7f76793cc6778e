"""Real-argument modified Bessel functions used by every kernel.

``K0`` and ``K1`` are thin, domain-checked wrappers over the Cephes routines
in :mod:`scipy.special`.  The product ``I_l(x) K_l(x)`` is evaluated here
directly as a product of ratios so that neither factor is ever formed; this
keeps it finite for large orders and tiny arguments where ``K_l`` overflows.

The free Green function of the two-dimensional Laplacian at negative energy
``-kappa**2`` is ``K0(kappa * r) / (2 * pi)``; see :func:`green`.
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "EULER_GAMMA",
    "SpecFunDomainError",
    "SpecFunResult",
    "bessel_k0",
    "bessel_k1",
    "bessel_ik_product",
    "k0_integral",
    "green",
]

EULER_GAMMA = float(np.euler_gamma)

# Above this argument exp(-x) underflows the double range.
_UNDERFLOW_X = 700.0


class SpecFunDomainError(ValueError):
    """Raised when a special function is called outside (0, inf)."""


@dataclass(frozen=True)
class SpecFunResult:
    value: float
    status: str  # "ok" or "underflow_to_zero"


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise SpecFunDomainError("argument must be finite and > 0")
    return x


def _wrap(x, values, full_output):
    if not full_output:
        return values if np.ndim(values) else float(values)
    if np.ndim(values):
        raise ValueError("full_output is only supported for scalar arguments")
    status = "underflow_to_zero" if float(x) > _UNDERFLOW_X and values == 0.0 else "ok"
    return SpecFunResult(float(values), status)


def bessel_k0(x, full_output=False):
    """Macdonald function K0 for real ``x > 0``.

    Accepts scalars or arrays.  With ``full_output=True`` (scalar only) a
    :class:`SpecFunResult` carrying the underflow status is returned.
    """
    x = _check_positive(x)
    return _wrap(x, special.k0(x), full_output)


def bessel_k1(x, full_output=False):
    """Macdonald function K1 for real ``x > 0``; ``-K0'(x) = K1(x)``."""
    x = _check_positive(x)
    return _wrap(x, special.k1(x), full_output)


def _ik_product_scalar(l, x):
    # P_0 from exponentially scaled factors, then
    # P_l = P_0 * prod_k (I_k/I_{k-1}) (K_k/K_{k-1}); each factor is O(1).
    p = special.i0e(x) * special.k0e(x)
    if l == 0:
        return p
    # I-ratios r_k = I_k/I_{k-1} by backward recurrence (continued fraction).
    start = l + int(x) + 60
    r = 0.0
    ratios_i = np.empty(l + 1)
    for k in range(start, 0, -1):
        r = 1.0 / (2.0 * k / x + r)
        if k <= l:
            ratios_i[k] = r
    # K-ratios s_k = K_k/K_{k-1} by forward recurrence (stable for K).
    s = special.k1e(x) / special.k0e(x)
    for k in range(1, l + 1):
        if k > 1:
            s = 1.0 / s + 2.0 * (k - 1) / x
        p *= ratios_i[k] * s
    return p


def bessel_ik_product(l, x):
    """Product ``I_l(x) * K_l(x)`` for integer ``l >= 0`` and ``x > 0``.

    Tends to ``1/(2l)`` as ``x -> 0`` (``l >= 1``) and to ``1/(2x)`` as
    ``x -> inf``.  Vectorised over ``x``.
    """
    if int(l) != l or l < 0:
        raise SpecFunDomainError("order must be a non-negative integer")
    l = int(l)
    x = _check_positive(x)
    if x.ndim == 0:
        return float(_ik_product_scalar(l, float(x)))
    return np.array([_ik_product_scalar(l, float(v)) for v in x.ravel()]).reshape(x.shape)


def k0_integral(z):
    """``int_0^z K0(t) dt`` for ``z > 0``.

    Term-wise integration of the ascending series of K0 for ``z <= 4``;
    the Struve-function closed form beyond.
    """
    z = float(_check_positive(z))
    if z <= 4.0:
        u = 0.5 * z
        log_u = np.log(u)
        total = 0.0
        term = u  # (z/2)^(2k+1) / (k!)^2
        psi = -EULER_GAMMA  # digamma(k+1)
        for k in range(60):
            c = term / (2 * k + 1) * (psi - log_u + 1.0 / (2 * k + 1))
            total += c
            if abs(c) < 1e-17 * abs(total):
                break
            term *= u * u / ((k + 1) ** 2)
            psi += 1.0 / (k + 1)
        return 2.0 * total
    # int_0^z K0 = (pi z / 2) [K0(z) L_{-1}(z) + K1(z) L_0(z)]
    return 0.5 * np.pi * z * (special.k0(z) * special.modstruve(-1, z)
                              + special.k1(z) * special.modstruve(0, z))


def green(kappa, r):
    """Free Green function ``K0(kappa r) / 2pi`` at energy ``-kappa**2``."""
    return bessel_k0(kappa * np.asarray(r, dtype=float)) / (2.0 * np.pi)
