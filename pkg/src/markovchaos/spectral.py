"""Eigenspace decomposition, projections and chaos diagnostics.

Polynomials are split into eigencomponents by expanding them in the tensor
orthogonal basis of the structure and grouping basis elements by their total
eigenvalue.  The operator-product form of the projection is kept as an
independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence

import gmpy2

from .exactpoly import ZERO, MultiPoly, Rational, product_basis_expand, product_basis_reconstruct, rational
from .structures import ProductStructure, apply_L, integrate


@dataclass(frozen=True)
class SpectralDecomposition:
    """Map eigenvalue -> non-zero eigencomponent ``J_eta(p)``."""

    dim: int
    components: Dict[Rational, MultiPoly] = field(default_factory=dict)

    @property
    def support(self) -> List[Rational]:
        return sorted(self.components)

    @property
    def max_support(self) -> Optional[Rational]:
        return max(self.components) if self.components else None

    def __getitem__(self, eta) -> MultiPoly:
        return self.components.get(rational(eta), MultiPoly.zero(self.dim))

    def reconstruct(self) -> MultiPoly:
        total = MultiPoly.zero(self.dim)
        for comp in self.components.values():
            total = total + comp
        return total


def decompose(S: ProductStructure, p: MultiPoly) -> SpectralDecomposition:
    S._check(p)
    coeffs = product_basis_expand(p, S.families)
    grouped: Dict[Rational, dict] = {}
    for idx, c in coeffs.items():
        grouped.setdefault(S.index_eigenvalue(idx), {})[idx] = c
    families = S.families
    components = {
        eta: product_basis_reconstruct(part, families) for eta, part in grouped.items()
    }
    return SpectralDecomposition(S.dim, components)


def project(S: ProductStructure, p: MultiPoly, eta) -> MultiPoly:
    """``J_eta(p)``; the zero polynomial when ``eta`` is not in the support."""
    return decompose(S, p)[eta]


def project_operator_formula(S: ProductStructure, p: MultiPoly, eta, support: Sequence) -> MultiPoly:
    """``prod_{lam != eta} (lam - eta)^-1 (L + lam) p`` over ``support``.

    ``support`` must contain every eigenvalue present in ``p`` plus ``eta``.
    """
    eta = rational(eta)
    lams = [rational(v) for v in support]
    if len(set(lams)) != len(lams):
        raise ValueError("support contains repeated eigenvalues")
    if eta not in lams:
        raise ValueError(f"eigenvalue {eta} is not in the supplied support")
    out = p
    for lam in lams:
        if lam == eta:
            continue
        out = (apply_L(S, out) + out.scale(lam)).scale(1 / (lam - eta))
    return out


def eigenvalue_of(S: ProductStructure, p: MultiPoly) -> Optional[Rational]:
    """Eigenvalue of ``-L`` at ``p``, or ``None`` if ``p`` mixes eigenspaces."""
    if p.is_zero():
        raise ValueError("the zero polynomial has no eigenvalue")
    dec = decompose(S, p)
    if len(dec.components) == 1:
        return dec.support[0]
    return None


# ---------------------------------------------------------------------------
# Spectrum enumeration and the doubled-index bound
# ---------------------------------------------------------------------------

def _index_ranges(eigs: Sequence[Callable[[int], Rational]], bound: Rational) -> List[List[int]]:
    ranges = []
    for ev in eigs:
        ks = [0]
        k = 1
        while ev(k) <= bound:
            ks.append(k)
            k += 1
        ranges.append(ks)
    return ranges


def _max_doubled(eigs: Sequence[Callable[[int], Rational]], lam: Rational) -> Optional[Rational]:
    """max of ``sum_j ev_j(2 i_j)`` over index vectors with ``sum_j ev_j(i_j) == lam``."""
    ranges = _index_ranges(eigs, lam)
    best: list = [None]

    def walk(j, remaining, acc):
        if remaining < 0:
            return
        if j == len(eigs):
            if remaining == 0 and (best[0] is None or acc > best[0]):
                best[0] = acc
            return
        for k in ranges[j]:
            ev = eigs[j](k)
            if ev > remaining:
                break
            walk(j + 1, remaining - ev, acc + eigs[j](2 * k))

    walk(0, lam, ZERO)
    return best[0]


@lru_cache(maxsize=None)
def chaos_threshold(S: ProductStructure, lam) -> Rational:
    """Upper bound for the spectrum of ``X^2`` when ``X`` has eigenvalue ``lam``.

    Maximizes ``sum_j lambda^(j)_{2 i_j}`` over multi-indices representing
    ``lam``.  For Hermite/Laguerre coordinates this is ``2 lam``.
    """
    lam = rational(lam)
    best = _max_doubled([c.eigenvalue for c in S.coords], lam)
    if best is None:
        raise ValueError(f"{lam} is not an eigenvalue of the structure")
    return best


def doubled_index_bound(indices: Sequence[int], alpha, beta) -> Rational:
    """Largest eigenvalue that can occur in ``X^2`` for a Jacobi eigenfunction.

    ``indices`` is any multi-index of ``X``'s eigenvalue; the maximum runs over
    all multi-indices with the same total eigenvalue.
    """
    s = rational(alpha) + rational(beta)

    def ev(k: int) -> Rational:
        return k * (k + s - 1)

    if any(i < 0 for i in indices):
        raise ValueError("indices must be non-negative")
    lam = sum((ev(i) for i in indices), ZERO)
    return _max_doubled([ev] * len(indices), lam)


def spectrum_upto(S: ProductStructure, bound) -> List[Rational]:
    """All eigenvalues of ``-L`` not exceeding ``bound``."""
    bound = rational(bound)
    values = {ZERO}
    for coord in S.coords:
        ks = [coord.eigenvalue(k) for k in _index_ranges([coord.eigenvalue], bound)[0]]
        values = {v + e for v in values for e in ks if v + e <= bound}
    return sorted(values)


def jacobi_gap_inequality_holds(alpha, beta, p: int) -> bool:
    """``2 lambda_p (s+1)/s >= lambda_{2p}`` for the Jacobi spectrum, ``s = alpha + beta``."""
    s = rational(alpha) + rational(beta)
    lam = lambda k: k * (k + s - 1)  # noqa: E731
    return 2 * lam(p) * (s + 1) / s >= lam(2 * p)


# ---------------------------------------------------------------------------
# Chaos check and the general principle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChaosReport:
    eigenvalue: Optional[Rational]
    square_support: List[Rational]
    max_support: Optional[Rational]
    threshold: Optional[Rational]
    is_chaotic: bool
    reason: str = ""

    def to_dict(self) -> dict:
        fmt = lambda v: None if v is None else str(v)  # noqa: E731
        return {
            "eigenvalue": fmt(self.eigenvalue),
            "support": [str(v) for v in self.square_support],
            "max_support": fmt(self.max_support),
            "threshold": fmt(self.threshold),
            "chaotic": self.is_chaotic,
            "reason": self.reason,
        }


def chaos_check(S: ProductStructure, X: MultiPoly) -> ChaosReport:
    if X.is_zero():
        return ChaosReport(None, [], None, None, False, "zero polynomial")
    lam = eigenvalue_of(S, X)
    if lam is None:
        return ChaosReport(None, [], None, None, False, "not an eigenfunction")
    dec = decompose(S, X * X)
    top = dec.max_support
    threshold = chaos_threshold(S, lam)
    ok = top <= threshold
    return ChaosReport(
        lam, dec.support, top, threshold, ok,
        "" if ok else "square has components above the doubled-index threshold",
    )


def annihilator_vanishes(S: ProductStructure, X: MultiPoly) -> bool:
    """``prod_{eta <= T} (L + eta) X^2 == 0`` with ``T`` the chaos threshold of ``X``."""
    lam = eigenvalue_of(S, X)
    if lam is None:
        raise ValueError("X is not an eigenfunction")
    out = X * X
    for eta in spectrum_upto(S, chaos_threshold(S, lam)):
        out = apply_L(S, out) + out.scale(eta)
        if out.is_zero():
            return True
    return out.is_zero()


@dataclass(frozen=True)
class PrincipleCheck:
    eta: Rational
    I2: Rational
    I1: Rational
    c: Optional[Rational]
    lower_ok: bool
    upper_ok: bool

    @property
    def sandwich_ok(self) -> bool:
        return self.lower_ok and self.upper_ok


def general_principle(S: ProductStructure, p: MultiPoly, eta) -> PrincipleCheck:
    """Evaluate ``I2 <= eta*I1 <= c*eta*I2`` exactly.

    ``I2 = int p (L+eta)^2 p``, ``I1 = int p (L+eta) p`` and ``1/c`` is the
    smallest non-zero gap ``eta - lambda`` over the support of ``p``.
    """
    eta = rational(eta)
    dec = decompose(S, p)
    if dec.components and dec.max_support > eta:
        raise ValueError(f"eta={eta} is below the top eigenvalue {dec.max_support} of p")
    q = apply_L(S, p) + p.scale(eta)
    r = apply_L(S, q) + q.scale(eta)
    I1 = integrate(S, p * q)
    I2 = integrate(S, p * r)
    gaps = [eta - lam for lam in dec.support if eta != lam]
    c = 1 / min(gaps) if gaps else None
    lower = I2 <= eta * I1
    upper = (eta * I1 <= c * eta * I2) if c is not None else I1 == 0
    return PrincipleCheck(eta, I2, I1, c, lower, upper)
