"""Exact coefficients (rationals with a formal 2*pi*i) and truncated power series."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Dict, Iterable, Mapping, Sequence, Tuple, Union

from sympy import Add, Expr, Rational, Symbol, bernoulli, expand, factorial
from sympy.polys.domains import QQ
from sympy.polys.ring_series import rs_exp, rs_log, rs_mul, rs_pow, rs_series_inversion
from sympy.polys.rings import ring

RationalLike = Union[int, Fraction, str]

TAU_SYMBOL = Symbol("tau")


class ScalarError(ValueError):
    """Base class for coefficient and series errors."""


class OrderMismatch(ScalarError):
    """Raised when two series with different truncation orders are combined."""


class DivisorNotUnital(ScalarError):
    """Raised when dividing by a series whose constant term is not 1."""


class NotUnital(ScalarError):
    """Raised when log/sqrt/power receive a series whose constant term is not 1."""


class NonzeroConstantTerm(ScalarError):
    """Raised when exp receives a series with a nonzero constant term."""


class NotInvertible(ScalarError):
    """Raised when dividing by a tau-scalar that is not a monomial."""


def parse_rational(value: RationalLike) -> Fraction:
    """Parse ``3``, ``"3"``, ``"-7/2"`` or a Fraction into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ScalarError(f"Not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ScalarError(f"Not a rational: {value!r}") from exc
    raise ScalarError(f"Not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class TauScalar:
    """Rational Laurent polynomial in the formal symbol tau (standing for 2*pi*i).

    ``terms`` holds ``(exponent, coefficient)`` pairs sorted by exponent with no
    zero coefficients, so equal values compare equal.
    """

    terms: Tuple[Tuple[int, Fraction], ...] = ()

    @classmethod
    def from_map(cls, mapping: Mapping[int, RationalLike]) -> "TauScalar":
        cleaned: Dict[int, Fraction] = {}
        for exp, coeff in mapping.items():
            value = parse_rational(coeff)
            if value:
                cleaned[int(exp)] = cleaned.get(int(exp), Fraction(0)) + value
        return cls(tuple(sorted((k, v) for k, v in cleaned.items() if v)))

    @classmethod
    def rational(cls, value: RationalLike) -> "TauScalar":
        return cls.from_map({0: value})

    @classmethod
    def monomial(cls, coeff: RationalLike, exp: int) -> "TauScalar":
        return cls.from_map({exp: coeff})

    @classmethod
    def coerce(cls, value: "ScalarLike") -> "TauScalar":
        if isinstance(value, TauScalar):
            return value
        return cls.rational(value)

    def as_dict(self) -> Dict[int, Fraction]:
        return dict(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __add__(self, other: "ScalarLike") -> "TauScalar":
        other = TauScalar.coerce(other)
        merged = self.as_dict()
        for exp, coeff in other.terms:
            merged[exp] = merged.get(exp, Fraction(0)) + coeff
        return TauScalar.from_map(merged)

    __radd__ = __add__

    def __neg__(self) -> "TauScalar":
        return TauScalar(tuple((k, -v) for k, v in self.terms))

    def __sub__(self, other: "ScalarLike") -> "TauScalar":
        return self + (-TauScalar.coerce(other))

    def __rsub__(self, other: "ScalarLike") -> "TauScalar":
        return TauScalar.coerce(other) - self

    def __mul__(self, other: "ScalarLike") -> "TauScalar":
        other = TauScalar.coerce(other)
        if not self.terms or not other.terms:
            return ZERO
        product: Dict[int, Fraction] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                product[e1 + e2] = product.get(e1 + e2, Fraction(0)) + c1 * c2
        return TauScalar.from_map(product)

    __rmul__ = __mul__

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def inverse(self) -> "TauScalar":
        if not self.is_monomial():
            raise NotInvertible(f"Only nonzero tau-monomials are invertible, got {self}")
        exp, coeff = self.terms[0]
        return TauScalar(((-exp, 1 / coeff),))

    def __truediv__(self, other: "ScalarLike") -> "TauScalar":
        return self * TauScalar.coerce(other).inverse()

    def __pow__(self, n: int) -> "TauScalar":
        if n < 0:
            return self.inverse() ** (-n)
        result = ONE
        for _ in range(n):
            result = result * self
        return result

    def scale(self, factor: RationalLike) -> "TauScalar":
        return self * TauScalar.rational(factor)

    def shift(self, exp: int) -> "TauScalar":
        """Multiply by ``tau**exp``."""
        return TauScalar(tuple((k + exp, v) for k, v in self.terms))

    def is_rational(self) -> bool:
        return all(exp == 0 for exp, _ in self.terms)

    def rational_value(self) -> Fraction:
        if not self.is_rational():
            raise ScalarError(f"{self} is not a plain rational")
        return self.terms[0][1] if self.terms else Fraction(0)

    def min_exponent(self) -> int:
        return self.terms[0][0] if self.terms else 0

    def max_exponent(self) -> int:
        return self.terms[-1][0] if self.terms else 0

    def evaluate(self, tau: Fraction) -> Fraction:
        """Substitute a nonzero rational for tau."""
        return sum((coeff * tau**exp for exp, coeff in self.terms), Fraction(0))

    def to_sympy(self) -> Expr:
        return Add(*(Rational(c.numerator, c.denominator) * TAU_SYMBOL**exp for exp, c in self.terms))

    @classmethod
    def from_sympy(cls, expr: Any) -> "TauScalar":
        """Read back a Laurent polynomial in ``tau`` with rational coefficients."""
        mapping: Dict[int, Fraction] = {}
        for term in Add.make_args(expand(expr)):
            coeff, exp = term.as_coeff_exponent(TAU_SYMBOL)
            if coeff.has(TAU_SYMBOL) or not coeff.is_Rational or not exp.is_Integer:
                raise ScalarError(f"Not a rational Laurent polynomial in tau: {expr}")
            key = int(exp)
            mapping[key] = mapping.get(key, Fraction(0)) + Fraction(int(coeff.p), int(coeff.q))
        return cls.from_map(mapping)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for exp, coeff in self.terms:
            if exp == 0:
                parts.append(format_rational(coeff))
            elif coeff == 1:
                parts.append(f"tau^{exp}")
            elif coeff == -1:
                parts.append(f"-tau^{exp}")
            else:
                parts.append(f"{format_rational(coeff)}*tau^{exp}")
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"TauScalar({self})"

    def to_document(self) -> list:
        return [{"tau_exp": exp, "coeff": format_rational(coeff)} for exp, coeff in self.terms]

    @classmethod
    def from_document(cls, payload: object) -> "TauScalar":
        """Accept a rational (int or "p/q") or a list of ``{"tau_exp", "coeff"}``."""
        if isinstance(payload, (list, tuple)):
            mapping: Dict[int, Fraction] = {}
            for item in payload:
                if not isinstance(item, Mapping) or "coeff" not in item:
                    raise ScalarError(f"Bad tau-scalar term: {item!r}")
                exp = int(item.get("tau_exp", 0))
                mapping[exp] = mapping.get(exp, Fraction(0)) + parse_rational(item["coeff"])
            return cls.from_map(mapping)
        return cls.rational(payload)  # type: ignore[arg-type]


ScalarLike = Union[TauScalar, int, Fraction, str]

ZERO = TauScalar()
ONE = TauScalar(((0, Fraction(1)),))
TAU = TauScalar(((1, Fraction(1)),))


def render_coefficient(value: TauScalar) -> str:
    """Render a coefficient for use in front of a symbol; sums get parentheses."""
    text = str(value)
    if len(value.terms) > 1:
        return f"({text})"
    return text


def render_terms(pairs: Iterable[Tuple[TauScalar, str]]) -> str:
    """Join ``coefficient symbol`` pairs with `` + ``; an empty symbol means a constant."""
    parts = []
    for coeff, symbol in pairs:
        if not coeff:
            continue
        text = render_coefficient(coeff)
        parts.append(f"{text}{symbol}")
    return " + ".join(parts) if parts else "0"


@lru_cache(maxsize=None)
def _series_ring(rational: bool) -> Tuple[Any, Any]:
    domain = QQ if rational else QQ.frac_field(TAU_SYMBOL)
    return ring("z", domain)


@dataclass(frozen=True)
class CharSeries:
    """Power series in z truncated after ``z**order``."""

    order: int
    coeffs: Tuple[TauScalar, ...]

    def __post_init__(self) -> None:
        if self.order < 0:
            raise ScalarError(f"Truncation order must be non-negative, got {self.order}")
        if len(self.coeffs) != self.order + 1:
            raise ScalarError(
                f"Series of order {self.order} needs {self.order + 1} coefficients, got {len(self.coeffs)}"
            )

    @classmethod
    def from_values(cls, values: Sequence["ScalarLike"], order: int) -> "CharSeries":
        coeffs = [TauScalar.coerce(v) for v in list(values)[: order + 1]]
        coeffs.extend([ZERO] * (order + 1 - len(coeffs)))
        return cls(order, tuple(coeffs))

    @classmethod
    def one(cls, order: int) -> "CharSeries":
        return cls.from_values([1], order)

    @classmethod
    def zero(cls, order: int) -> "CharSeries":
        return cls.from_values([], order)

    def __getitem__(self, k: int) -> TauScalar:
        return self.coeffs[k] if 0 <= k <= self.order else ZERO

    def is_unital(self) -> bool:
        return self.coeffs[0] == ONE

    def _check_order(self, other: "CharSeries") -> None:
        if self.order != other.order:
            raise OrderMismatch(f"Series orders differ: {self.order} vs {other.order}")

    def is_rational(self) -> bool:
        return all(c.is_rational() for c in self.coeffs)

    def to_ring(self, rational: bool = True) -> Tuple[Any, Any]:
        """This series as an element of ``QQ[z]`` (or ``QQ(tau)[z]``) and the generator z."""
        R, z = _series_ring(rational and self.is_rational())
        domain = R.domain
        element = R.from_dict(
            {(k,): domain.from_sympy(c.to_sympy()) for k, c in enumerate(self.coeffs) if c}
        )
        return element, z

    @classmethod
    def from_ring(cls, element: Any, order: int) -> "CharSeries":
        domain = element.ring.domain
        values = [
            TauScalar.from_sympy(domain.to_sympy(element.get((k,), domain.zero))) for k in range(order + 1)
        ]
        return cls(order, tuple(values))

    def _pair_in_ring(self, other: "CharSeries") -> Tuple[Any, Any, Any]:
        rational = self.is_rational() and other.is_rational()
        a, z = self.to_ring(rational)
        b, _ = other.to_ring(rational)
        return a, b, z

    def __add__(self, other: "CharSeries") -> "CharSeries":
        self._check_order(other)
        return CharSeries(self.order, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "CharSeries") -> "CharSeries":
        self._check_order(other)
        return CharSeries(self.order, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "CharSeries":
        return CharSeries(self.order, tuple(-a for a in self.coeffs))

    def __mul__(self, other: "CharSeries") -> "CharSeries":
        self._check_order(other)
        a, b, z = self._pair_in_ring(other)
        return CharSeries.from_ring(rs_mul(a, b, z, self.order + 1), self.order)

    def __truediv__(self, other: "CharSeries") -> "CharSeries":
        self._check_order(other)
        if not other.is_unital():
            raise DivisorNotUnital(f"Divisor constant term must be 1, got {other.coeffs[0]}")
        a, b, z = self._pair_in_ring(other)
        prec = self.order + 1
        return CharSeries.from_ring(rs_mul(a, rs_series_inversion(b, z, prec), z, prec), self.order)

    def scale(self, factor: "ScalarLike") -> "CharSeries":
        factor = TauScalar.coerce(factor)
        return CharSeries(self.order, tuple(c * factor for c in self.coeffs))

    def derivative(self) -> "CharSeries":
        """d/dz, keeping the order (the top coefficient becomes 0)."""
        values = [self.coeffs[k].scale(k) for k in range(1, self.order + 1)]
        return CharSeries.from_values(values, self.order)

    def integral(self) -> "CharSeries":
        """Antiderivative with zero constant term, truncated at the same order."""
        values = [ZERO] + [self.coeffs[k - 1].scale(Fraction(1, k)) for k in range(1, self.order + 1)]
        return CharSeries(self.order, tuple(values))

    def exp(self) -> "CharSeries":
        if self.coeffs[0]:
            raise NonzeroConstantTerm(f"exp needs a zero constant term, got {self.coeffs[0]}")
        if not any(self.coeffs):
            return CharSeries.one(self.order)
        f, z = self.to_ring()
        return CharSeries.from_ring(rs_exp(f, z, self.order + 1), self.order)

    def log(self) -> "CharSeries":
        if not self.is_unital():
            raise NotUnital(f"log needs constant term 1, got {self.coeffs[0]}")
        if not any(self.coeffs[1:]):
            return CharSeries.zero(self.order)
        f, z = self.to_ring()
        return CharSeries.from_ring(rs_log(f, z, self.order + 1), self.order)

    def power(self, alpha: RationalLike) -> "CharSeries":
        """``f**alpha`` for unital f and rational alpha."""
        if not self.is_unital():
            raise NotUnital(f"power needs constant term 1, got {self.coeffs[0]}")
        a = parse_rational(alpha)
        if not any(self.coeffs[1:]) or not a:
            return CharSeries.one(self.order)
        f, z = self.to_ring()
        # rs_pow takes the denominator root first, then the integer power
        result = rs_pow(f, Rational(a.numerator, a.denominator), z, self.order + 1)
        return CharSeries.from_ring(result, self.order)

    def sqrt(self) -> "CharSeries":
        return self.power(Fraction(1, 2))

    def __str__(self) -> str:
        pairs = []
        for k, coeff in enumerate(self.coeffs):
            symbol = "" if k == 0 else ("*z" if k == 1 else f"*z^{k}")
            pairs.append((coeff, symbol))
        return render_terms(pairs)


def series_arith(a: CharSeries, b: CharSeries, op: str) -> CharSeries:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ScalarError(f"Unknown series operation: {op}")


def series_exp_log_sqrt(f: CharSeries, op: str) -> CharSeries:
    if op == "exp":
        return f.exp()
    if op == "log":
        return f.log()
    if op == "sqrt":
        return f.sqrt()
    raise ScalarError(f"Unknown series function: {op}")


def _to_fraction(value: Any) -> Fraction:
    value = Rational(value)
    return Fraction(int(value.p), int(value.q))


def exp_series(c: RationalLike, order: int) -> CharSeries:
    """Truncation of ``exp(c*z)``."""
    return CharSeries.from_values([0, parse_rational(c)], order).exp()


def todd_series(order: int) -> CharSeries:
    """Truncation of z/(1 - e^{-z}) = sum_k B_k^+ z^k / k!."""
    if order < 0:
        raise ScalarError(f"Truncation order must be non-negative, got {order}")
    # B_1 = +1/2 here; sympy's own sign for B_1 changed between releases
    values = [
        Fraction(1, 2) if k == 1 else _to_fraction(bernoulli(k) / factorial(k)) for k in range(order + 1)
    ]
    return CharSeries.from_values(values, order)


def modified_todd_series(order: int) -> CharSeries:
    """Truncation of z/(e^{z/2} - e^{-z/2}); only even powers survive."""
    if order < 0:
        raise ScalarError(f"Truncation order must be non-negative, got {order}")
    values = [
        _to_fraction((Rational(2) ** (1 - k) - 1) * bernoulli(k) / factorial(k)) if k % 2 == 0 else Fraction(0)
        for k in range(order + 1)
    ]
    return CharSeries.from_values(values, order)
