"""Iwasawa decomposition, height function and convergence cone for SL_n.

Both the Lie algebra of the diagonal torus and its dual are modelled as
trace-zero n-tuples with the dot-product pairing, so the exponent of an
Eisenstein term is a literal dot product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TRACE_TOL = 1e-12


@dataclass(frozen=True)
class ParabolicType:
    composition: tuple[int, ...]

    def __post_init__(self):
        comp = tuple(int(k) for k in self.composition)
        if not comp or any(k < 1 for k in comp):
            raise ValueError(f"invalid composition {self.composition}")
        object.__setattr__(self, "composition", comp)

    @classmethod
    def minimal(cls, n: int) -> "ParabolicType":
        return cls((1,) * n)

    @property
    def n(self) -> int:
        return sum(self.composition)

    @property
    def is_minimal(self) -> bool:
        return all(k == 1 for k in self.composition)

    def blocks(self) -> list[slice]:
        out, start = [], 0
        for k in self.composition:
            out.append(slice(start, start + k))
            start += k
        return out

    def boundaries(self) -> list[int]:
        """Indices i such that the simple root e_i - e_{i+1} crosses a block boundary."""
        out, acc = [], 0
        for k in self.composition[:-1]:
            acc += k
            out.append(acc - 1)
        return out


@dataclass(frozen=True)
class IwasawaData:
    p_part: np.ndarray
    k_part: np.ndarray


def block_average(v, P: ParabolicType) -> np.ndarray:
    v = np.asarray(v)
    out = np.empty_like(v)
    for blk in P.blocks():
        out[blk] = v[blk].mean()
    return out


def iwasawa(g) -> IwasawaData:
    """Split g = p k with p upper triangular (positive diagonal) and k in SO(n).

    Rows of g are orthonormalized from the bottom up.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n):
        raise ValueError("g must be square")
    d = np.linalg.det(g)
    if not np.isfinite(d) or abs(d - 1.0) > 1e-9:
        raise ValueError(f"g must have determinant 1 (got {d!r})")
    k = np.zeros_like(g)
    p = np.zeros_like(g)
    for i in range(n - 1, -1, -1):
        r = g[i].copy()
        for j in range(i + 1, n):
            p[i, j] = r @ k[j]
        r -= p[i, i + 1:] @ k[i + 1:]
        # second pass keeps the rows orthogonal to working precision
        corr = k[i + 1:] @ r
        r -= corr @ k[i + 1:]
        p[i, i + 1:] += corr
        norm = np.linalg.norm(r)
        if norm == 0.0:
            raise ValueError("g is singular")
        p[i, i] = norm
        k[i] = r / norm
    return IwasawaData(p_part=p, k_part=k)


def _project_trace_zero(v):
    return v - v.mean()


def height(g, P: ParabolicType | None = None) -> np.ndarray:
    """H_P(g) as a trace-zero n-vector of logs, block-averaged for non-minimal P."""
    data = iwasawa(g)
    h = _project_trace_zero(np.log(np.diag(data.p_part)))
    if P is None:
        return h
    if P.n != h.shape[0]:
        raise ValueError("parabolic type does not match matrix size")
    return block_average(h, P)


def rho(P: ParabolicType) -> np.ndarray:
    n = P.n
    base = np.array([(n - 1) / 2 - i for i in range(n)])
    return block_average(base, P)


def _check_spectral(lam, P: ParabolicType) -> np.ndarray:
    lam = np.asarray(lam, dtype=complex)
    if lam.shape != (P.n,):
        raise ValueError("spectral parameter has the wrong length")
    if abs(lam.sum()) > TRACE_TOL:
        raise ValueError("spectral parameter must have trace zero")
    for blk in P.blocks():
        if np.max(np.abs(lam[blk] - lam[blk][0])) > TRACE_TOL:
            raise ValueError("spectral parameter must be constant on the blocks of P")
    return lam


def sl2_parameter(t: complex) -> np.ndarray:
    """lambda = t * alpha for the positive root alpha = e1 - e2."""
    return np.array([t, -t], dtype=complex)


def exponent_factor(g, lam, P: ParabolicType) -> complex:
    """exp(<rho_P + lambda, H_P(g)>)."""
    lam = _check_spectral(lam, P)
    h = height(g, P)
    return complex(np.exp(np.dot(rho(P) + lam, h)))


def cone_contains(lam, P: ParabolicType) -> bool:
    lam = _check_spectral(lam, P)
    r = rho(P)
    re = lam.real
    return all(re[i] - re[i + 1] > r[i] - r[i + 1] for i in range(P.n - 1)
               if i in P.boundaries())


def sl2_point_matrix(z: complex) -> np.ndarray:
    """The upper triangular g with g.i = z."""
    x, y = z.real, z.imag
    if y <= 0:
        raise ValueError("z must lie in the upper half plane")
    s = np.sqrt(y)
    return np.array([[s, x / s], [0.0, 1.0 / s]])
