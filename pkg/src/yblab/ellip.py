"""Jacobi elliptic functions sn, cn, dn and the complete elliptic integral.

Implemented with the arithmetic-geometric mean and the descending Landen
transformation (DLMF 22.20(ii)).  Real arguments and real modulus 0 <= k < 1
only; complex matrix entries that need the imaginary unit are assembled from
real sn/cn via :func:`e_fn`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonConvergence

_LANDEN_TOL = 1e-15
_MAX_ITER = 32


@dataclass(frozen=True)
class EllipticTriple:
    sn: float
    cn: float
    dn: float


def _check_modulus(k: float) -> None:
    if not (0.0 <= k < 1.0):
        raise ValueError(f"elliptic modulus {k} out of range [0, 1)")


def jacobi(u: float, k: float) -> EllipticTriple:
    """sn, cn, dn of real argument u at modulus k."""
    _check_modulus(k)
    if not math.isfinite(u):
        raise ValueError("argument must be finite")
    if k < _LANDEN_TOL:
        return EllipticTriple(math.sin(u), math.cos(u), 1.0)

    a = [1.0]
    b = [math.sqrt(1.0 - k * k)]
    c = [k]
    n = 0
    while abs(c[n]) > _LANDEN_TOL:
        if n >= _MAX_ITER:
            raise NonConvergence("Landen recursion did not reach tolerance")
        a.append(0.5 * (a[n] + b[n]))
        b.append(math.sqrt(a[n] * b[n]))
        c.append(0.5 * (a[n] - b[n]))
        n += 1

    phi = (2.0 ** n) * a[n] * u
    phi_prev = phi
    for m in range(n, 0, -1):
        phi_prev = phi
        s = c[m] / a[m] * math.sin(phi)
        # |s| can creep past 1 by rounding only
        s = max(-1.0, min(1.0, s))
        phi = 0.5 * (phi + math.asin(s))
    sn = math.sin(phi)
    cn = math.cos(phi)
    dn = cn / math.cos(phi_prev - phi) if n >= 1 else 1.0
    return EllipticTriple(sn, cn, dn)


def complete_K(k: float) -> float:
    """Complete elliptic integral of the first kind, by the AGM."""
    _check_modulus(k)
    a, b = 1.0, math.sqrt(1.0 - k * k)
    for _ in range(_MAX_ITER):
        if abs(a - b) <= 1e-17:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    else:
        raise NonConvergence("AGM for K(k) did not converge")
    return math.pi / (2.0 * a)


def e_fn(u: float, k: float) -> complex:
    """cn(u,k) + i sn(u,k): the unimodular combination used by colored presets."""
    t = jacobi(u, k)
    return complex(t.cn, t.sn)
