"""Diffusion generators on polynomials and their invariant measures.

Each coordinate carries a one-dimensional diffusion operator

    L_i phi = a_i(x) phi'' + b_i(x) phi'

with polynomial coefficients:

    ==================  ===============  ===================  ======================
    coordinate          a_i(x)           b_i(x)               invariant law
    ==================  ===============  ===================  ======================
    Ornstein-Uhlenbeck  1                -x                   N(0, 1)
    Laguerre(nu)        x                nu + 1 - x           Gamma(nu + 1)
    Jacobi(alpha,beta)  x(1 - x)         alpha - (alpha+beta)x Beta(alpha, beta)
    ==================  ===============  ===================  ======================

A :class:`ProductStructure` is the tensor product: ``L = sum_i L_i`` acting on
coordinate ``i``, with the product measure.  Everything is exact; integrals
come from closed-form moment tables, never quadrature.

Note the Laguerre convention: ``LaguerreCoordinate(nu)`` has drift
``nu + 1 - x`` and therefore invariant law Gamma(nu + 1), with eigenfunctions
``L_n^(nu)``.  To target Gamma(nu) use ``LaguerreCoordinate(nu - 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Sequence, Tuple

import gmpy2

from .exactpoly import (
    ZERO,
    AffineArgument,
    DimensionError,
    Hermite,
    Jacobi,
    Laguerre,
    MultiPoly,
    Rational,
    rational,
)


@dataclass(frozen=True)
class OUCoordinate:
    """Ornstein-Uhlenbeck coordinate, standard Gaussian invariant law."""

    diffusion = (1,)
    drift = (0, -1)

    @property
    def family(self):
        return Hermite()

    def eigenvalue(self, k: int) -> Rational:
        return gmpy2.mpq(k)

    def raw_moment(self, k: int) -> Rational:
        return _gauss_moment(k)

    def to_dict(self) -> dict:
        return {"type": "ou"}


@dataclass(frozen=True)
class LaguerreCoordinate:
    """Laguerre coordinate with drift ``nu + 1 - x``; invariant law Gamma(nu + 1)."""

    nu: Rational

    def __post_init__(self):
        object.__setattr__(self, "nu", rational(self.nu))
        if self.nu <= -1:
            raise ValueError(f"Laguerre parameter must exceed -1, got {self.nu}")

    @property
    def diffusion(self):
        return (0, 1)

    @property
    def drift(self):
        return (self.nu + 1, -1)

    @property
    def family(self):
        return Laguerre(self.nu)

    @property
    def shape(self) -> Rational:
        """Shape parameter of the invariant Gamma law."""
        return self.nu + 1

    def eigenvalue(self, k: int) -> Rational:
        return gmpy2.mpq(k)

    def raw_moment(self, k: int) -> Rational:
        return _gamma_moment(self.nu + 1, k)

    def to_dict(self) -> dict:
        return {"type": "laguerre", "nu": str(self.nu)}


@dataclass(frozen=True)
class JacobiCoordinate:
    """Jacobi coordinate on [0, 1] with invariant law Beta(alpha, beta).

    Eigenfunctions are ``P_n^(alpha-1, beta-1)(1 - 2x)`` with eigenvalue
    ``n (n + alpha + beta - 1)``.
    """

    alpha: Rational
    beta: Rational

    def __post_init__(self):
        object.__setattr__(self, "alpha", rational(self.alpha))
        object.__setattr__(self, "beta", rational(self.beta))
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"Jacobi measure parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def diffusion(self):
        return (0, 1, -1)

    @property
    def drift(self):
        return (self.alpha, -(self.alpha + self.beta))

    @property
    def family(self):
        return AffineArgument(Jacobi(self.alpha - 1, self.beta - 1), -2, 1)

    def eigenvalue(self, k: int) -> Rational:
        return k * (k + self.alpha + self.beta - 1)

    def raw_moment(self, k: int) -> Rational:
        return _beta_moment(self.alpha, self.beta, k)

    def to_dict(self) -> dict:
        return {"type": "jacobi", "alpha": str(self.alpha), "beta": str(self.beta)}


CoordinateStructure = OUCoordinate | LaguerreCoordinate | JacobiCoordinate


@lru_cache(maxsize=None)
def _gauss_moment(k: int) -> Rational:
    if k % 2:
        return ZERO
    out = gmpy2.mpq(1)
    for j in range(k - 1, 0, -2):
        out *= j
    return out


@lru_cache(maxsize=None)
def _gamma_moment(shape: Rational, k: int) -> Rational:
    out = gmpy2.mpq(1)
    for j in range(k):
        out *= shape + j
    return out


@lru_cache(maxsize=None)
def _beta_moment(a: Rational, b: Rational, k: int) -> Rational:
    out = gmpy2.mpq(1)
    for j in range(k):
        out *= (a + j) / (a + b + j)
    return out


def coordinate_from_dict(entry: dict) -> CoordinateStructure:
    """Build a coordinate from ``{"type": "ou" | "laguerre" | "jacobi", ...}``."""
    if not isinstance(entry, dict):
        raise ValueError(f"coordinate entry must be an object, got {entry!r}")
    kind = entry.get("type")
    allowed = {"ou": {"type"}, "laguerre": {"type", "nu"}, "jacobi": {"type", "alpha", "beta"}}
    if kind not in allowed:
        raise ValueError(f"unknown coordinate type {kind!r}")
    if set(entry) != allowed[kind]:
        raise ValueError(f"{kind} coordinate needs exactly the fields {sorted(allowed[kind])}")
    if kind == "ou":
        return OUCoordinate()
    if kind == "laguerre":
        return LaguerreCoordinate(rational(entry["nu"]))
    return JacobiCoordinate(rational(entry["alpha"]), rational(entry["beta"]))


@dataclass(frozen=True)
class ProductStructure:
    """Tensor product of one-dimensional diffusion coordinates."""

    coords: Tuple[CoordinateStructure, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(self.coords))
        if not self.coords:
            raise ValueError("a product structure needs at least one coordinate")

    @classmethod
    def ou(cls, d: int = 1) -> "ProductStructure":
        return cls((OUCoordinate(),) * d)

    @classmethod
    def laguerre(cls, nu, d: int = 1) -> "ProductStructure":
        return cls((LaguerreCoordinate(nu),) * d)

    @classmethod
    def jacobi(cls, alpha, beta, d: int = 1) -> "ProductStructure":
        return cls((JacobiCoordinate(alpha, beta),) * d)

    @classmethod
    def from_spec(cls, entries: Sequence[dict]) -> "ProductStructure":
        if not isinstance(entries, list) or not entries:
            raise ValueError("structure must be a non-empty list of coordinate entries")
        return cls(tuple(coordinate_from_dict(e) for e in entries))

    def to_spec(self) -> list:
        return [c.to_dict() for c in self.coords]

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def families(self) -> tuple:
        return tuple(c.family for c in self.coords)

    @property
    def spectral_gap(self) -> Rational:
        """Smallest non-zero eigenvalue ``lambda_1`` of ``-L``."""
        return min(c.eigenvalue(1) for c in self.coords)

    def index_eigenvalue(self, index: Sequence[int]) -> Rational:
        """Eigenvalue of the tensor basis element with multi-index ``index``."""
        total = ZERO
        for c, k in zip(self.coords, index):
            total += c.eigenvalue(k)
        return total

    def _check(self, p: MultiPoly) -> None:
        if p.dim != self.dim:
            raise DimensionError(f"polynomial has dimension {p.dim}, structure {self.dim}")


def apply_L(S: ProductStructure, p: MultiPoly) -> MultiPoly:
    """Apply the generator ``L = sum_i a_i(x_i) d_ii + b_i(x_i) d_i``."""
    S._check(p)
    out: Dict[tuple, Rational] = {}
    for i, coord in enumerate(S.coords):
        a, b = coord.diffusion, coord.drift
        for exp, c in p.items():
            k = exp[i]
            if k == 0:
                continue
            e = list(exp)
            if k >= 2:
                base = c * (k * (k - 1))
                for j, aj in enumerate(a):
                    if aj:
                        e[i] = k - 2 + j
                        key = tuple(e)
                        out[key] = out.get(key, ZERO) + base * aj
            base = c * k
            for j, bj in enumerate(b):
                if bj:
                    e[i] = k - 1 + j
                    key = tuple(e)
                    out[key] = out.get(key, ZERO) + base * bj
    return MultiPoly._from_clean(S.dim, {e: c for e, c in out.items() if c})


def carre_du_champ(S: ProductStructure, p: MultiPoly, q: MultiPoly | None = None) -> MultiPoly:
    """``Gamma(p, q) = (L(pq) - p Lq - q Lp) / 2``; ``q`` defaults to ``p``."""
    S._check(p)
    if q is None:
        q = p
    S._check(q)
    lp = apply_L(S, p)
    lq = lp if q is p else apply_L(S, q)
    return (apply_L(S, p * q) - p * lq - q * lp).scale(gmpy2.mpq(1, 2))


def gradient_form(S: ProductStructure, p: MultiPoly, q: MultiPoly) -> MultiPoly:
    """``sum_i a_i(x_i) d_i p d_i q``; equals Gamma for these diffusions."""
    S._check(p)
    S._check(q)
    total = MultiPoly.zero(S.dim)
    for i, coord in enumerate(S.coords):
        a = coord.diffusion
        weight = MultiPoly(
            S.dim,
            {tuple(j if m == i else 0 for m in range(S.dim)): aj for j, aj in enumerate(a) if aj},
        )
        total = total + weight * p.derivative(i) * q.derivative(i)
    return total


def integrate(S: ProductStructure, p: MultiPoly) -> Rational:
    """Exact integral of ``p`` against the invariant product measure."""
    S._check(p)
    total = ZERO
    coords = S.coords
    for exp, c in p.items():
        term = c
        for coord, k in zip(coords, exp):
            if k:
                term *= coord.raw_moment(k)
                if not term:
                    break
        total += term
    return total


def moment(S: ProductStructure, X: MultiPoly, k: int) -> Rational:
    """``int X^k dmu``."""
    if k < 1:
        raise ValueError("moment order must be at least 1")
    return integrate(S, X ** k)


def coordinate_eigenvalue(coord: CoordinateStructure, k: int) -> Rational:
    if k < 0:
        raise ValueError("eigenvalue index must be non-negative")
    return coord.eigenvalue(k)
