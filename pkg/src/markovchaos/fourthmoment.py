"""Fourth-moment criteria for Gaussian, Gamma and Beta targets.

For an eigenfunction ``X`` of ``-L`` with eigenvalue ``lam`` and a target law
with mean ``mu``, put ``Y = X + mu``.  Each target comes with

* a Gamma-expression ``G(X)`` whose L2 norm measures the distance to the target,
* a second orthogonal polynomial ``Q`` and constants ``K``, ``a`` such that
  ``G(X) = K (L + a lam) Q(Y)``,
* the moment statistic ``int aQ(Y)^2 - Q'(Y)^3 X / (3 Q'') dmu``, a linear
  combination of the first four moments of ``X``.

Whenever the square of ``X`` has no spectral mass above ``a*lam`` this gives

    int G(X)^2 dmu  <=  K^2 a lam^2 * statistic.

Moments passed around here are always moments of the centred ``X``, not of
``Y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Dict, Mapping, Optional

import gmpy2

from .exactpoly import ZERO, MultiPoly, Rational, compose, hermite, jacobi, laguerre, rational
from .spectral import decompose, eigenvalue_of
from .structures import ProductStructure, apply_L, carre_du_champ, integrate, moment


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianTarget:
    """Standard normal law."""

    name = "gaussian"

    @property
    def mean(self) -> Rational:
        return ZERO

    @property
    def factor(self) -> Rational:
        return gmpy2.mpq(2)

    @property
    def prefactor(self) -> Rational:
        return gmpy2.mpq(1, 2)

    def second_poly(self) -> MultiPoly:
        return hermite(2)

    def drift_poly(self, Y: MultiPoly, lam: Rational) -> MultiPoly:
        return MultiPoly.constant(Y.dim, lam)

    def raw_moment(self, k: int) -> Rational:
        if k % 2:
            return ZERO
        out = gmpy2.mpq(1)
        for j in range(k - 1, 0, -2):
            out *= j
        return out

    def printed_statistic(self, m: Mapping[int, Rational]) -> Rational:
        return m[4] - 6 * m[2] + 3

    def printed_scale(self) -> Rational:
        """``lemma statistic / printed statistic`` implied by the bound theorem."""
        return gmpy2.mpq(2, 3)

    def to_dict(self) -> dict:
        return {"type": "gaussian"}


@dataclass(frozen=True)
class GammaTarget:
    """Gamma(nu) law with density ``x^(nu-1) e^-x / Gamma(nu)``."""

    nu: Rational
    name = "gamma"

    def __post_init__(self):
        object.__setattr__(self, "nu", rational(self.nu))
        if self.nu <= 0:
            raise ValueError(f"Gamma shape must be positive, got {self.nu}")

    @property
    def mean(self) -> Rational:
        return self.nu

    @property
    def factor(self) -> Rational:
        return gmpy2.mpq(2)

    @property
    def prefactor(self) -> Rational:
        return gmpy2.mpq(1)

    def second_poly(self) -> MultiPoly:
        return laguerre(2, self.nu - 1)

    def drift_poly(self, Y: MultiPoly, lam: Rational) -> MultiPoly:
        return Y.scale(lam)

    def raw_moment(self, k: int) -> Rational:
        out = gmpy2.mpq(1)
        for j in range(k):
            out *= self.nu + j
        return out

    def printed_statistic(self, m: Mapping[int, Rational]) -> Rational:
        nu = self.nu
        return m[4] - 6 * m[3] + 6 * (1 - nu) * m[2] + 3 * nu * nu

    def printed_scale(self) -> Rational:
        return gmpy2.mpq(1, 6)

    def to_dict(self) -> dict:
        return {"type": "gamma", "nu": str(self.nu)}


@dataclass(frozen=True)
class BetaTarget:
    """Beta(alpha, beta) law on [0, 1]."""

    alpha: Rational
    beta: Rational
    name = "beta"

    def __post_init__(self):
        object.__setattr__(self, "alpha", rational(self.alpha))
        object.__setattr__(self, "beta", rational(self.beta))
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"Beta parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def s(self) -> Rational:
        return self.alpha + self.beta

    @property
    def mean(self) -> Rational:
        return self.alpha / self.s

    @property
    def factor(self) -> Rational:
        return 2 * (self.s + 1) / self.s

    @property
    def prefactor(self) -> Rational:
        return 1 / ((self.s + 1) * (self.s + 2))

    def second_poly(self) -> MultiPoly:
        return jacobi(2, self.alpha - 1, self.beta - 1).substitute_affine([(-2, 1)])

    def drift_poly(self, Y: MultiPoly, lam: Rational) -> MultiPoly:
        return (Y * (1 - Y)).scale(lam / self.s)

    def raw_moment(self, k: int) -> Rational:
        out = gmpy2.mpq(1)
        for j in range(k):
            out *= (self.alpha + j) / (self.s + j)
        return out

    def printed_statistic(self, m: Mapping[int, Rational]) -> Rational:
        a, s = self.alpha, self.s
        r = (a + 1) / (s + 2)
        return m[4] + 3 * r * m[3] + 3 * (a + 1) ** 2 * m[2] - s * r ** 3

    def printed_scale(self) -> Rational:
        # printed bound 2(s+1) lam^2/(3s) * printed  vs  2 c lam^2 * statistic
        s = self.s
        return (s + 1) ** 2 * (s + 2) ** 2 / 3

    @property
    def c_const(self) -> Rational:
        s = self.s
        return 1 / (s * (s + 1) * (s + 2) ** 2)

    def to_dict(self) -> dict:
        return {"type": "beta", "alpha": str(self.alpha), "beta": str(self.beta)}


TargetLaw = GaussianTarget | GammaTarget | BetaTarget


def target_from_dict(entry: dict) -> TargetLaw:
    if not isinstance(entry, dict):
        raise ValueError(f"target must be an object, got {entry!r}")
    kind = entry.get("type")
    allowed = {"gaussian": {"type"}, "gamma": {"type", "nu"}, "beta": {"type", "alpha", "beta"}}
    if kind not in allowed:
        raise ValueError(f"unknown target type {kind!r}")
    if set(entry) != allowed[kind]:
        raise ValueError(f"{kind} target needs exactly the fields {sorted(allowed[kind])}")
    if kind == "gaussian":
        return GaussianTarget()
    if kind == "gamma":
        return GammaTarget(rational(entry["nu"]))
    return BetaTarget(rational(entry["alpha"]), rational(entry["beta"]))


def central_moments(t: TargetLaw, up_to: int = 4) -> Dict[int, Rational]:
    """Moments of ``Y - mean`` for ``Y`` distributed exactly as the target."""
    mu = t.mean
    out = {}
    for k in range(1, up_to + 1):
        out[k] = sum(
            (comb(k, j) * t.raw_moment(j) * (-mu) ** (k - j) for j in range(k + 1)), ZERO
        )
    return out


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

def _eigenvalue(S: ProductStructure, X: MultiPoly) -> Rational:
    if X.is_zero():
        raise ValueError("X must be a non-zero eigenfunction")
    lam = eigenvalue_of(S, X)
    if lam is None:
        raise ValueError("X is not an eigenfunction of the structure")
    if lam == 0:
        raise ValueError("X must have a positive eigenvalue")
    return lam


def doubling_identity(S: ProductStructure, X: MultiPoly, lam) -> bool:
    """``2 Gamma(X) == (L + 2 lam) X^2``."""
    lam = rational(lam)
    sq = X * X
    return carre_du_champ(S, X).scale(2) == apply_L(S, sq) + sq.scale(2 * lam)


def gamma_expression(S: ProductStructure, X: MultiPoly, t: TargetLaw) -> MultiPoly:
    lam = _eigenvalue(S, X)
    Y = X + t.mean
    return carre_du_champ(S, Y) - t.drift_poly(Y, lam)


def l_expression(S: ProductStructure, X: MultiPoly, t: TargetLaw) -> MultiPoly:
    """``K (L + a lam) Q(Y)``."""
    lam = _eigenvalue(S, X)
    QY = compose(t.second_poly(), X + t.mean)
    return (apply_L(S, QY) + QY.scale(t.factor * lam)).scale(t.prefactor)


def l_expression_identity(S: ProductStructure, X: MultiPoly, t: TargetLaw) -> bool:
    try:
        return gamma_expression(S, X, t) == l_expression(S, X, t)
    except ValueError:
        return False


def distance_functional(S: ProductStructure, X: MultiPoly, t: TargetLaw) -> Rational:
    g = gamma_expression(S, X, t)
    return integrate(S, g * g)


def lemma_polynomial(Q: MultiPoly, a, shift=0) -> MultiPoly:
    """``R(x) = a Q(x+shift)^2 - Q'(x+shift)^3 x / (3 Q'')`` as a univariate polynomial.

    ``int R(X) dmu`` is the moment statistic; ``Q`` must have degree exactly two.
    """
    if Q.dim != 1 or Q.degree != 2:
        raise ValueError("Q must be a univariate polynomial of degree exactly two")
    a = rational(a)
    x = MultiPoly.variable(1, 0)
    Qs = compose(Q, x + rational(shift))
    dQ = Qs.derivative(0)
    second = Qs.derivative(0, 2).constant_term()
    return (Qs * Qs).scale(a) - (dQ ** 3 * x).scale(1 / (3 * second))


def statistic_weights(t: TargetLaw, a=None) -> Dict[int, Rational]:
    """Weights ``w_k`` with ``statistic = sum_k w_k m_k(X)`` (``m_0 = 1``)."""
    R = lemma_polynomial(t.second_poly(), t.factor if a is None else a, t.mean)
    return {k: c for k, c in enumerate(R.univariate_coefficients()) if c}


def moment_statistic(t: TargetLaw, a=None, moments: Mapping[int, object] | None = None) -> Rational:
    """Statistic as a combination of ``moments`` of ``X``.

    ``a`` defaults to the target's factor.  ``m_1`` may be omitted (eigenfunctions
    with positive eigenvalue are centred); every other moment with a non-zero
    weight must be supplied.
    """
    if moments is None:
        raise ValueError("moments are required")
    m = {int(k): rational(v) for k, v in moments.items()}
    m[0] = gmpy2.mpq(1)
    m.setdefault(1, ZERO)
    total = ZERO
    for k, w in statistic_weights(t, a).items():
        if k not in m:
            raise ValueError(f"moment m{k} is required")
        total += w * m[k]
    return total


def lemma_identity_sides(S: ProductStructure, X: MultiPoly, Q: MultiPoly, a) -> tuple:
    """Both sides of ``int Q(X)(L + a lam)Q(X) = lam int R(X)``, computed independently."""
    lam = _eigenvalue(S, X)
    a = rational(a)
    QX = compose(Q, X)
    lhs = integrate(S, QX * (apply_L(S, QX) + QX.scale(a * lam)))
    R = lemma_polynomial(Q, a)
    rhs = lam * sum(
        (c * (integrate(S, X ** k) if k else 1) for k, c in enumerate(R.univariate_coefficients())),
        ZERO,
    )
    return lhs, rhs


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

class BoundViolation(AssertionError):
    """A proven inequality failed under its hypotheses; ``result`` is the counterexample."""

    def __init__(self, result: "CriterionResult"):
        super().__init__(f"distance {result.distance} exceeds bound {result.bound}")
        self.result = result


@dataclass(frozen=True)
class CriterionResult:
    target: TargetLaw
    eigenvalue: Rational
    moments: Dict[int, Rational]
    distance: Rational
    statistic: Rational
    bound: Rational
    printed_bound: Rational
    max_support: Rational
    spectral_condition_ok: bool
    improved_distance: Optional[Rational] = None
    improved_bound: Optional[Rational] = None

    @property
    def bound_holds(self) -> bool:
        return self.distance <= self.bound

    def to_dict(self) -> dict:
        fmt = lambda v: None if v is None else str(v)  # noqa: E731
        return {
            "target": self.target.to_dict(),
            "eigenvalue": str(self.eigenvalue),
            "moments": {f"m{k}": str(v) for k, v in sorted(self.moments.items())},
            "distance": str(self.distance),
            "statistic": str(self.statistic),
            "bound": str(self.bound),
            "printed_bound": str(self.printed_bound),
            "max_support": str(self.max_support),
            "spectral_condition_ok": self.spectral_condition_ok,
            "bound_holds": self.bound_holds,
            "improved_distance": fmt(self.improved_distance),
            "improved_bound": fmt(self.improved_bound),
        }


def spectral_condition(S: ProductStructure, X: MultiPoly, t: TargetLaw) -> bool:
    """Top eigenvalue of ``X^2`` is at most ``a * lam``."""
    lam = _eigenvalue(S, X)
    return decompose(S, X * X).max_support <= t.factor * lam


def fourth_moment_bound(S: ProductStructure, X: MultiPoly, t: TargetLaw) -> CriterionResult:
    """Distance, moment statistic and bound for ``X`` against target ``t``.

    Raises :class:`BoundViolation` if the spectral condition holds but the
    bound fails.
    """
    lam = _eigenvalue(S, X)
    m = {k: moment(S, X, k) for k in range(1, 5)}
    top = decompose(S, X * X).max_support
    condition = top <= t.factor * lam
    stat = moment_statistic(t, moments=m)
    K, a = t.prefactor, t.factor
    bound = K * K * a * lam * lam * stat
    printed_stat = t.printed_statistic(m)
    if isinstance(t, BetaTarget):
        printed_bound = 2 * (t.s + 1) * lam * lam / (3 * t.s) * printed_stat
    else:
        printed_bound = lam * lam / 3 * printed_stat
    improved_distance = improved_bound = None
    if isinstance(t, GaussianTarget):
        g = carre_du_champ(S, X) - m[2] * lam
        improved_distance = integrate(S, g * g)
        gap = S.spectral_gap
        improved_bound = (lam * lam / 3 - gap * lam / 6) * (m[4] - 3 * m[2] * m[2])
    result = CriterionResult(
        target=t,
        eigenvalue=lam,
        moments=m,
        distance=distance_functional(S, X, t),
        statistic=stat,
        bound=bound,
        printed_bound=printed_bound,
        max_support=top,
        spectral_condition_ok=condition,
        improved_distance=improved_distance,
        improved_bound=improved_bound,
    )
    if condition and (not result.bound_holds or (improved_bound is not None and improved_distance > improved_bound)):
        raise BoundViolation(result)
    return result


@dataclass(frozen=True)
class StatisticComparison:
    lemma_route: Rational
    printed: Rational
    scale: Rational
    agree: bool

    def to_dict(self) -> dict:
        return {
            "lemma_route": str(self.lemma_route),
            "printed": str(self.printed),
            "scale": str(self.scale),
            "agree": self.agree,
        }


def printed_statistic_comparison(t: TargetLaw, moments: Mapping[int, object]) -> StatisticComparison:
    """Compare the derived statistic with the closed-form moment expression.

    ``agree`` means ``lemma_route == scale * printed`` where ``scale`` is the
    ratio implied by the corresponding bound.
    """
    m = {int(k): rational(v) for k, v in moments.items()}
    m.setdefault(1, ZERO)
    lemma = moment_statistic(t, moments=m)
    printed = t.printed_statistic(m)
    scale = t.printed_scale()
    return StatisticComparison(lemma, printed, scale, lemma == scale * printed)


def derived_beta_expression(t: BetaTarget) -> Dict[int, Rational]:
    """Statistic weights rescaled to the printed form (``m4`` coefficient 1)."""
    w = statistic_weights(t)
    lead = w[4]
    return {k: v / lead for k, v in w.items()}
