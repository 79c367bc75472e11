"""Exact sparse multivariate polynomials over the rationals.

A polynomial in ``d`` variables is stored as a dictionary mapping exponent
tuples (length ``d``) to non-zero rational coefficients::

    x1^2*x2 - 1   ->   {(2, 1): 1, (0, 0): -1}      (d = 2)

The zero polynomial is the empty dictionary.  Coefficients are ``gmpy2.mpq``
values; anything accepted by :func:`rational` (ints, ``Fraction``, ``"p/q"``
strings) may be passed in.  Floats are rejected on purpose, the exact core never
rounds.

The module also provides the three classical orthogonal families (Hermite,
Laguerre, Jacobi), exact change of basis to tensor products of them, and a
plain-text format that round-trips bit-exactly.
"""

from __future__ import annotations

import numbers
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import gmpy2

Rational = gmpy2.mpq
Exponent = Tuple[int, ...]

_MPQ = type(gmpy2.mpq(0))
_MPZ = type(gmpy2.mpz(0))
ZERO = gmpy2.mpq(0)
ONE = gmpy2.mpq(1)


class DimensionError(ValueError):
    """Raised when polynomials of different arity are combined."""


class PolyParseError(ValueError):
    """Malformed polynomial text; ``position`` is the 0-based offending column."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def rational(value) -> Rational:
    """Coerce ``value`` to an exact rational.

    Accepts ints, ``Fraction``, ``gmpy2`` integers/rationals and strings such as
    ``"3"``, ``"-1/2"``.  Floats (and bools) raise ``TypeError``.
    """
    if isinstance(value, _MPQ):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a rational coefficient")
    if isinstance(value, (int, _MPZ, Fraction)):
        return gmpy2.mpq(value)
    if isinstance(value, str):
        text = value.strip()
        if not re.fullmatch(r"[+-]?\d+(/\d+)?", text):
            raise ValueError(f"not a rational literal: {value!r}")
        return gmpy2.mpq(text)
    if isinstance(value, numbers.Rational):
        return gmpy2.mpq(value.numerator, value.denominator)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def rational_str(value) -> str:
    """Canonical ``"p/q"`` (or ``"p"``) string of a rational."""
    return str(rational(value))


def _is_exact(value) -> bool:
    return isinstance(value, (int, _MPZ, _MPQ, Fraction)) and not isinstance(value, bool)


class MultiPoly:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[Sequence[int], object] | None = None):
        if dim < 1:
            raise ValueError("dimension must be positive")
        clean: Dict[Exponent, Rational] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != dim or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for dimension {dim}")
            c = rational(coeff)
            if c:
                clean[exp] = clean.get(exp, ZERO) + c
                if not clean[exp]:
                    del clean[exp]
        self.dim = dim
        self._terms = clean
        self._hash = None

    @classmethod
    def _from_clean(cls, dim: int, terms: Dict[Exponent, Rational]) -> "MultiPoly":
        obj = cls.__new__(cls)
        obj.dim = dim
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "MultiPoly":
        return cls._from_clean(dim, {})

    @classmethod
    def constant(cls, dim: int, value) -> "MultiPoly":
        c = rational(value)
        return cls._from_clean(dim, {(0,) * dim: c} if c else {})

    @classmethod
    def variable(cls, dim: int, index: int) -> "MultiPoly":
        """The coordinate ``x_{index+1}`` (``index`` is 0-based)."""
        if not 0 <= index < dim:
            raise ValueError(f"variable index {index} out of range for dimension {dim}")
        exp = [0] * dim
        exp[index] = 1
        return cls._from_clean(dim, {tuple(exp): ONE})

    @classmethod
    def univariate(cls, coeffs: Sequence) -> "MultiPoly":
        """Univariate polynomial from ascending coefficients ``c0, c1, ...``."""
        return cls(1, {(k,): c for k, c in enumerate(coeffs) if rational(c)})

    # -- inspection -----------------------------------------------------
    @property
    def terms(self) -> Dict[Exponent, Rational]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(e) for e in self._terms)

    def coefficient(self, exp: Sequence[int]) -> Rational:
        return self._terms.get(tuple(exp), ZERO)

    def constant_term(self) -> Rational:
        return self._terms.get((0,) * self.dim, ZERO)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def univariate_coefficients(self) -> list:
        """Ascending coefficient list of a univariate polynomial."""
        if self.dim != 1:
            raise DimensionError("univariate_coefficients needs dimension 1")
        out = [ZERO] * (self.degree + 1)
        for (k,), c in self._terms.items():
            out[k] = c
        return out

    # -- arithmetic -----------------------------------------------------
    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.dim != self.dim:
                raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
            return other
        return MultiPoly.constant(self.dim, other)

    def __add__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        out = dict(self._terms)
        for exp, c in other._terms.items():
            s = out.get(exp, ZERO) + c
            if s:
                out[exp] = s
            else:
                out.pop(exp, None)
        return MultiPoly._from_clean(self.dim, out)

    __radd__ = __add__

    def __neg__(self) -> "MultiPoly":
        return MultiPoly._from_clean(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other) -> "MultiPoly":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "MultiPoly":
        return (-self) + other

    def scale(self, factor) -> "MultiPoly":
        f = rational(factor)
        if not f:
            return MultiPoly.zero(self.dim)
        return MultiPoly._from_clean(self.dim, {e: c * f for e, c in self._terms.items()})

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        out: Dict[Exponent, Rational] = {}
        if self.dim == 1:
            for (a,), ca in self._terms.items():
                for (b,), cb in other._terms.items():
                    key = (a + b,)
                    out[key] = out.get(key, ZERO) + ca * cb
        else:
            for ea, ca in self._terms.items():
                for eb, cb in other._terms.items():
                    key = tuple(x + y for x, y in zip(ea, eb))
                    out[key] = out.get(key, ZERO) + ca * cb
        return MultiPoly._from_clean(self.dim, {e: c for e, c in out.items() if c})

    def __rmul__(self, other) -> "MultiPoly":
        return self.__mul__(other)

    def __pow__(self, n: int) -> "MultiPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = MultiPoly.constant(self.dim, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, MultiPoly):
            return self.dim == other.dim and self._terms == other._terms
        if _is_exact(other):
            return self._terms == MultiPoly.constant(self.dim, other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._terms.items())))
        return self._hash

    # -- calculus and substitution -------------------------------------
    def derivative(self, index: int, order: int = 1) -> "MultiPoly":
        """Partial derivative in ``x_{index+1}``."""
        out: Dict[Exponent, Rational] = {}
        for exp, c in self._terms.items():
            k = exp[index]
            if k < order:
                continue
            factor = 1
            for j in range(order):
                factor *= k - j
            new = list(exp)
            new[index] = k - order
            out[tuple(new)] = c * factor
        return MultiPoly._from_clean(self.dim, out)

    def substitute_affine(self, maps: Sequence[Tuple[object, object]]) -> "MultiPoly":
        """Compose with ``x_i -> a_i * x_i + b_i`` for every coordinate."""
        if len(maps) != self.dim:
            raise DimensionError(f"expected {self.dim} affine maps, got {len(maps)}")
        images = [
            MultiPoly.variable(self.dim, i).scale(a) + rational(b)
            for i, (a, b) in enumerate(maps)
        ]
        return self.substitute(images)

    def substitute(self, images: Sequence["MultiPoly"]) -> "MultiPoly":
        """Replace ``x_i`` by ``images[i]``; images share a common dimension."""
        if len(images) != self.dim:
            raise DimensionError(f"expected {self.dim} images, got {len(images)}")
        target_dim = images[0].dim
        powers: list = [[MultiPoly.constant(target_dim, 1)] for _ in images]
        result = MultiPoly.zero(target_dim)
        for exp, c in self._terms.items():
            term = MultiPoly.constant(target_dim, c)
            for i, k in enumerate(exp):
                while len(powers[i]) <= k:
                    powers[i].append(powers[i][-1] * images[i])
                if k:
                    term = term * powers[i][k]
            result = result + term
        return result

    def evaluate(self, point: Sequence):
        return evaluate(self, point)

    # -- text -----------------------------------------------------------
    def to_text(self) -> str:
        return format_poly(self)

    def __str__(self) -> str:
        return format_poly(self)

    def __repr__(self) -> str:
        return f"MultiPoly({self.dim}, {format_poly(self)!r})"


def compose(outer: MultiPoly, inner: MultiPoly) -> MultiPoly:
    """``outer(inner)`` for a univariate ``outer`` (Horner scheme)."""
    if outer.dim != 1:
        raise DimensionError("outer polynomial must be univariate")
    coeffs = outer.univariate_coefficients()
    result = MultiPoly.zero(inner.dim)
    for c in reversed(coeffs):
        result = result * inner + c
    return result


def evaluate(p: MultiPoly, point: Sequence):
    """Evaluate ``p`` at ``point`` by nested Horner schemes.

    Exact inputs give an exact rational; any float (or numpy array) entry
    switches to float arithmetic, so a list of sample columns evaluates
    row-wise in one call.
    """
    if len(point) != p.dim:
        raise DimensionError(f"point has length {len(point)}, polynomial dimension {p.dim}")
    exact = all(_is_exact(v) for v in point)
    values = [rational(v) for v in point] if exact else list(point)
    terms = list(p.items())
    if not exact:
        terms = [(e, float(c)) for e, c in terms]
    return _horner(terms, values, 0, exact)


def _horner(terms, values, idx, exact):
    if not terms:
        return ZERO if exact else 0.0
    if idx == len(values):
        return terms[0][1]
    groups: Dict[int, list] = {}
    for exp, c in terms:
        groups.setdefault(exp[idx], []).append((exp, c))
    top = max(groups)
    x = values[idx]
    acc = ZERO if exact else 0.0
    for k in range(top, -1, -1):
        acc = acc * x
        if k in groups:
            acc = acc + _horner(groups[k], values, idx + 1, exact)
    return acc


# ---------------------------------------------------------------------------
# Orthogonal families
# ---------------------------------------------------------------------------

def _falling(z, k: int) -> Rational:
    out = ONE
    for j in range(k):
        out *= z - j
    return out


def _rising(z, k: int) -> Rational:
    out = ONE
    for j in range(k):
        out *= z + j
    return out


def _check_degree(n: int) -> None:
    if not isinstance(n, int) or n < 0:
        raise ValueError(f"degree must be a non-negative integer, got {n!r}")


def hermite(n: int) -> MultiPoly:
    """Probabilists' Hermite polynomial ``H_n`` (monic, ``H_2 = x^2 - 1``)."""
    _check_degree(n)
    return _hermite(n)


@lru_cache(maxsize=None)
def _hermite(n: int) -> MultiPoly:
    if n == 0:
        return MultiPoly.constant(1, 1)
    if n == 1:
        return MultiPoly.variable(1, 0)
    x = MultiPoly.variable(1, 0)
    return x * _hermite(n - 1) - _hermite(n - 2).scale(n - 1)


def laguerre(n: int, nu) -> MultiPoly:
    """Generalized Laguerre polynomial ``L_n^(nu)`` via the three-term recurrence."""
    _check_degree(n)
    nu = rational(nu)
    if nu <= -1:
        raise ValueError(f"Laguerre parameter must exceed -1, got {nu}")
    return _laguerre(n, nu)


@lru_cache(maxsize=None)
def _laguerre(n: int, nu: Rational) -> MultiPoly:
    if n == 0:
        return MultiPoly.constant(1, 1)
    x = MultiPoly.variable(1, 0)
    if n == 1:
        return -x + (nu + 1)
    m = n - 1
    prev, prev2 = _laguerre(m, nu), _laguerre(m - 1, nu)
    return ((-x + (2 * m + 1 + nu)) * prev - prev2.scale(m + nu)).scale(gmpy2.mpq(1, n))


def jacobi(n: int, alpha, beta) -> MultiPoly:
    """Jacobi polynomial ``P_n^(alpha, beta)`` in the standard normalization."""
    _check_degree(n)
    a, b = rational(alpha), rational(beta)
    if a <= -1 or b <= -1:
        raise ValueError(f"Jacobi parameters must exceed -1, got ({a}, {b})")
    return _jacobi(n, a, b)


@lru_cache(maxsize=None)
def _jacobi(n: int, a: Rational, b: Rational) -> MultiPoly:
    if n == 0:
        return MultiPoly.constant(1, 1)
    x = MultiPoly.variable(1, 0)
    if n == 1:
        return (x.scale(a + b + 2) + (a - b)).scale(gmpy2.mpq(1, 2))
    m = n - 1
    s = 2 * m + a + b
    lhs = 2 * (m + 1) * (m + a + b + 1) * s
    lead = (s + 1) * (s + 2) * s
    shift = (s + 1) * (a * a - b * b)
    back = 2 * (m + a) * (m + b) * (s + 2)
    out = (x.scale(lead) + shift) * _jacobi(m, a, b) - _jacobi(m - 1, a, b).scale(back)
    return out.scale(1 / lhs)


def laguerre_rodrigues(n: int, nu) -> MultiPoly:
    """``L_n^(nu)`` expanded directly from the Rodrigues formula (Leibniz rule)."""
    _check_degree(n)
    nu = rational(nu)
    coeffs = [ZERO] * (n + 1)
    # d^n/dx^n (e^{-x} x^{n+nu}) = e^{-x} sum_k C(n,k) (-1)^{n-k} (n+nu)_k^falling x^{n+nu-k}
    for k in range(n + 1):
        coeffs[n - k] += comb(n, k) * (-1) ** (n - k) * _falling(n + nu, k)
    return MultiPoly.univariate([c / factorial(n) for c in coeffs])


def jacobi_rodrigues(n: int, alpha, beta) -> MultiPoly:
    """``P_n^(alpha, beta)`` expanded directly from the Rodrigues formula."""
    _check_degree(n)
    a, b = rational(alpha), rational(beta)
    x = MultiPoly.variable(1, 0)
    one_minus, one_plus = -x + 1, x + 1
    total = MultiPoly.zero(1)
    # derivative of (1-x)^{n+a} (1+x)^{n+b}, the weight factors cancel afterwards
    for k in range(n + 1):
        c = comb(n, k) * (-1) ** k * _falling(n + a, k) * _falling(n + b, n - k)
        total = total + (one_minus ** (n - k) * one_plus ** k).scale(c)
    return total.scale(gmpy2.mpq((-1) ** n, 2 ** n * factorial(n)))


@dataclass(frozen=True)
class Hermite:
    """Probabilists' Hermite family (standard Gaussian weight)."""

    def poly(self, n: int) -> MultiPoly:
        return hermite(n)


@dataclass(frozen=True)
class Laguerre:
    """Laguerre family ``L_n^(nu)``; weight ``x^nu e^{-x}`` on ``(0, inf)``."""

    nu: Rational

    def __post_init__(self):
        object.__setattr__(self, "nu", rational(self.nu))
        if self.nu <= -1:
            raise ValueError(f"Laguerre parameter must exceed -1, got {self.nu}")

    def poly(self, n: int) -> MultiPoly:
        return laguerre(n, self.nu)


@dataclass(frozen=True)
class Jacobi:
    """Jacobi family ``P_n^(alpha, beta)`` on ``[-1, 1]``."""

    alpha: Rational
    beta: Rational

    def __post_init__(self):
        object.__setattr__(self, "alpha", rational(self.alpha))
        object.__setattr__(self, "beta", rational(self.beta))
        if self.alpha <= -1 or self.beta <= -1:
            raise ValueError(f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})")

    def poly(self, n: int) -> MultiPoly:
        return jacobi(n, self.alpha, self.beta)


@dataclass(frozen=True)
class AffineArgument:
    """A family evaluated at ``scale * x + shift``, e.g. ``P_n(1 - 2x)``."""

    family: object
    scale: Rational
    shift: Rational

    def __post_init__(self):
        object.__setattr__(self, "scale", rational(self.scale))
        object.__setattr__(self, "shift", rational(self.shift))
        if not self.scale:
            raise ValueError("affine argument needs a non-zero scale")

    def poly(self, n: int) -> MultiPoly:
        return _affine_poly(self, n)


@lru_cache(maxsize=None)
def _affine_poly(fam: AffineArgument, n: int) -> MultiPoly:
    return fam.family.poly(n).substitute_affine([(fam.scale, fam.shift)])


OrthogonalFamily = Hermite | Laguerre | Jacobi | AffineArgument


# ---------------------------------------------------------------------------
# Change of basis
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _power_in_basis(family, k: int) -> Tuple[Tuple[int, Rational], ...]:
    """``x^k = sum_j c_j F_j`` by back-substitution on the triangular basis matrix."""
    residual = MultiPoly.univariate([0] * k + [1])
    out = []
    for j in range(k, -1, -1):
        c = residual.coefficient((j,))
        if not c:
            continue
        basis = family.poly(j)
        coef = c / basis.coefficient((j,))
        out.append((j, coef))
        residual = residual - basis.scale(coef)
    assert residual.is_zero()
    return tuple(out)


def product_basis_expand(p: MultiPoly, families: Sequence) -> Dict[Tuple[int, ...], Rational]:
    """Coefficients of ``p`` in the tensor basis ``prod_j F^(j)_{i_j}(x_j)``."""
    if len(families) != p.dim:
        raise DimensionError(f"{len(families)} families for a {p.dim}-variate polynomial")
    out: Dict[Tuple[int, ...], Rational] = {}
    for exp, c in p.items():
        pieces = [_power_in_basis(fam, k) for fam, k in zip(families, exp)]
        for combo in product(*pieces):
            idx = tuple(j for j, _ in combo)
            coef = c
            for _, w in combo:
                coef *= w
            out[idx] = out.get(idx, ZERO) + coef
    return {idx: c for idx, c in out.items() if c}


def basis_element(index: Sequence[int], families: Sequence) -> MultiPoly:
    """``prod_j F^(j)_{index_j}(x_j)`` as a polynomial in ``len(families)`` variables."""
    return _basis_element(tuple(index), tuple(families))


@lru_cache(maxsize=4096)
def _basis_element(index, families) -> MultiPoly:
    dim = len(families)
    result = MultiPoly.constant(dim, 1)
    for j, (fam, k) in enumerate(zip(families, index)):
        if k == 0:
            continue
        uni = fam.poly(k)
        lifted = MultiPoly._from_clean(
            dim, {tuple(e[0] if i == j else 0 for i in range(dim)): c for e, c in uni.items()}
        )
        result = result * lifted
    return result


def product_basis_reconstruct(coeffs: Mapping[Sequence[int], object], families: Sequence) -> MultiPoly:
    """Inverse of :func:`product_basis_expand`."""
    result = MultiPoly.zero(len(families))
    for idx, c in coeffs.items():
        result = result + basis_element(idx, families).scale(c)
    return result


# ---------------------------------------------------------------------------
# Text format:  "3/2*x1^2*x2 - x1 + 1/4"
# ---------------------------------------------------------------------------

def _term_key(exp: Exponent):
    return (-sum(exp), tuple(-e for e in exp))


def format_poly(p: MultiPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for exp in sorted(p._terms, key=_term_key):
        c = p._terms[exp]
        mono = "*".join(
            f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}" for i, e in enumerate(exp) if e
        )
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        if not parts:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append((" - " if c < 0 else " + ") + body)
    return "".join(parts)


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<var>x(?P<idx>\d+))|(?P<op>[-+*/^]))")


def parse_poly(text: str, dim: int | None = None) -> MultiPoly:
    """Parse a sum of monomials such as ``"x1^2 - 3/2*x1*x2 + 1"``.

    ``dim`` fixes the number of variables; when omitted it is the largest
    variable index present (at least 1).
    """
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            skip = len(text[pos:]) - len(text[pos:].lstrip())
            raise PolyParseError(f"unexpected character {text[pos + skip]!r}", pos + skip)
        start = m.end() - len(m.group(0).lstrip())
        if m.group("num") is not None:
            tokens.append(("num", int(m.group("num")), start))
        elif m.group("var") is not None:
            tokens.append(("var", int(m.group("idx")), start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    tokens.append(("end", None, len(text)))

    i = 0
    terms: list = []

    def peek():
        return tokens[i]

    def expect_int(what):
        nonlocal i
        kind, val, at = tokens[i]
        if kind != "num":
            raise PolyParseError(f"expected {what}", at)
        i += 1
        return val

    def factor(coeff, powers):
        nonlocal i
        kind, val, at = peek()
        if kind == "num":
            i += 1
            num = val
            if peek()[:2] == ("op", "/"):
                i += 1
                den_at = peek()[2]
                den = expect_int("denominator")
                if den == 0:
                    raise PolyParseError("zero denominator", den_at)
                return coeff * gmpy2.mpq(num, den), powers
            return coeff * num, powers
        if kind == "var":
            i += 1
            if val < 1:
                raise PolyParseError("variables are numbered from x1", at)
            k = 1
            if peek()[:2] == ("op", "^"):
                i += 1
                k = expect_int("exponent")
            powers[val] = powers.get(val, 0) + k
            return coeff, powers
        raise PolyParseError("expected a number or variable", at)

    sign = 1
    kind, val, at = peek()
    if kind == "end":
        raise PolyParseError("empty polynomial", at)
    if kind == "op" and val in "+-":
        sign = -1 if val == "-" else 1
        i += 1
    while True:
        coeff, powers = factor(gmpy2.mpq(sign), {})
        while peek()[:2] == ("op", "*"):
            i += 1
            coeff, powers = factor(coeff, powers)
        terms.append((coeff, powers))
        kind, val, at = peek()
        if kind == "end":
            break
        if kind == "op" and val in "+-":
            sign = -1 if val == "-" else 1
            i += 1
            continue
        raise PolyParseError(f"unexpected token {val!r}", at)

    needed = max([max(pw, default=0) for _, pw in terms] + [1])
    if dim is None:
        dim = needed
    elif needed > dim:
        bad = next(at for kind, val, at in tokens if kind == "var" and val > dim)
        raise PolyParseError(f"variable index exceeds dimension {dim}", bad)
    out: Dict[Exponent, Rational] = {}
    for coeff, powers in terms:
        exp = tuple(powers.get(j + 1, 0) for j in range(dim))
        out[exp] = out.get(exp, ZERO) + coeff
    return MultiPoly(dim, out)
