"""Dense complex matrix algebra for two- and three-site operators.

Everything here works on plain ``numpy`` arrays of complex128.  Matrices are
tiny (at most 27x27 after embedding), so no sparse representation is used.
The residual norm throughout is the max entry modulus (Chebyshev norm): the
underlying identities are per-entry, so this is the natural scale.
"""

from __future__ import annotations

import numpy as np

from .errors import CapacityError

# Largest matrix any operation may produce: the three-site space at n=3.
MAX_DIM = 729

# Floor for relative-residual denominators, to avoid blowups at near-zero
# products.
_REL_FLOOR = 1e-300


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with a capacity cap of MAX_DIM on the result."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise CapacityError(
            f"kron result dimension {a.shape[0] * b.shape[0]} exceeds cap {MAX_DIM}"
        )
    return np.kron(a, b)


def permutation_matrix(n: int) -> np.ndarray:
    """The two-site swap P on C^n (x) C^n: P(e_i (x) e_j) = e_j (x) e_i."""
    if n not in (2, 3):
        raise ValueError(f"unsupported local dimension {n}; expected 2 or 3")
    p = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            p[i * n + j, j * n + i] = 1.0
    return p


def embed(r: np.ndarray, pair: int, n: int) -> np.ndarray:
    """Embed a two-site operator into the three-site space C^n (x) C^n (x) C^n.

    ``pair`` names the two tensor slots acted on: 12, 23 or 13.  The 13
    embedding conjugates by the swap on slots 2,3.
    """
    r = np.asarray(r, dtype=complex)
    if r.shape != (n * n, n * n):
        raise ValueError(f"operator shape {r.shape} does not match local dimension {n}")
    eye = np.eye(n, dtype=complex)
    if pair == 12:
        return kron(r, eye)
    if pair == 23:
        return kron(eye, r)
    if pair == 13:
        ip = kron(eye, permutation_matrix(n))
        return ip @ kron(r, eye) @ ip
    raise ValueError(f"unknown pair {pair}; expected 12, 13 or 23")


def ybe_residual(model, u, v, w) -> tuple[float, float]:
    """Max-entry residual of R12(u,v) R13(u,w) R23(v,w) - R23 R13 R12.

    Returns ``(abs, rel)`` where ``rel`` is normalized by the max entry of the
    left-hand product.  Evaluation errors of the model (singular points)
    propagate to the caller.
    """
    n = int(round(model.dim ** 0.5))
    r12 = embed(model.matrix(u, v), 12, n)
    r13 = embed(model.matrix(u, w), 13, n)
    r23 = embed(model.matrix(v, w), 23, n)
    lhs = r12 @ r13 @ r23
    rhs = r23 @ r13 @ r12
    abs_res = float(np.max(np.abs(lhs - rhs)))
    scale = max(float(np.max(np.abs(lhs))), _REL_FLOOR)
    return abs_res, abs_res / scale
