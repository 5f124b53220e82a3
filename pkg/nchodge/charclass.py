"""Characteristic classes computed from Chern data by Newton's identities."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import List, Sequence, Tuple, Union

from .cohring import CohClass, CohRing
from .scalars import (
    CharSeries,
    NonzeroConstantTerm,
    NotUnital,
    RationalLike,
    TauScalar,
    modified_todd_series,
    parse_rational,
    todd_series,
)


class CharClassError(ValueError):
    """Base class for characteristic-class errors."""


class BadChernDegrees(CharClassError):
    """Raised when c_k does not sit in bidegree (k,k) or there are too many classes."""


class SeriesNotUnital(CharClassError):
    """Raised when a multiplicative class is requested for a non-unital series."""


class OrderTooSmall(CharClassError):
    """Raised when a series is truncated below the ring dimension."""


class MissingTangentData(CharClassError):
    """Raised when a ring carries no tangent Chern classes."""


@dataclass(frozen=True)
class BundleData:
    """Rank and Chern classes ``chern[k-1] = c_k`` of a (formal) bundle."""

    ring: CohRing
    rank: int
    chern: Tuple[CohClass, ...] = ()

    def __post_init__(self) -> None:
        if len(self.chern) > self.ring.n:
            raise BadChernDegrees(
                f"{len(self.chern)} Chern classes given on a ring of dimension {self.ring.n}"
            )
        for k, c in enumerate(self.chern, start=1):
            if c.ring != self.ring:
                raise BadChernDegrees(f"c_{k} lives in another ring")
            if c and c.bidegrees() != {(k, k)}:
                raise BadChernDegrees(f"c_{k} must lie in bidegree ({k},{k}), found {sorted(c.bidegrees())}")

    def c(self, k: int) -> CohClass:
        if k == 0:
            return CohClass.unit(self.ring)
        if 1 <= k <= len(self.chern):
            return self.chern[k - 1]
        return CohClass.zero(self.ring)


def _trim(classes: Sequence[CohClass]) -> Tuple[CohClass, ...]:
    values = list(classes)
    while values and not values[-1]:
        values.pop()
    return tuple(values)


def bundle_from_classes(ring: CohRing, rank: int, classes: Sequence[CohClass]) -> BundleData:
    return BundleData(ring, rank, _trim(classes))


def trivial_bundle(ring: CohRing, rank: int = 1) -> BundleData:
    return BundleData(ring, rank)


def line_bundle(ring: CohRing, degree: Union[RationalLike, Sequence[RationalLike]]) -> BundleData:
    """O(a) or O(a_1, ..., a_m): rank one with c_1 = sum a_i H_i over the polarization classes.

    A single degree on a ring with several polarization classes means the same
    degree on every one of them.
    """
    classes = ring.polarization_classes
    if not classes:
        raise CharClassError(f"Ring {ring.name} has no polarization class for O(a)")
    if isinstance(degree, (list, tuple)):
        degrees = [parse_rational(d) for d in degree]
        if len(degrees) != len(classes):
            raise CharClassError(
                f"Ring {ring.name} has {len(classes)} polarization classes, got {len(degrees)} degrees"
            )
    else:
        degrees = [parse_rational(degree)] * len(classes)
    c1 = CohClass.zero(ring)
    for label, a in zip(classes, degrees):
        c1 = c1 + CohClass.basis_class(ring, label, a)
    return bundle_from_classes(ring, 1, [c1])


def tangent_bundle(ring: CohRing) -> BundleData:
    if not ring.tangent_known:
        raise MissingTangentData(f"Ring {ring.name} carries no tangent Chern data")
    return bundle_from_classes(ring, ring.n, [ring.tangent_class(k) for k in range(1, ring.n + 1)])


def spec_bundle(ring: CohRing, name: str) -> BundleData:
    spec = ring.bundle(name)
    classes = [CohClass.zero(ring)] * ring.n
    for k, vector in spec.chern:
        classes[k - 1] = CohClass.from_sparse(ring, vector)
    return bundle_from_classes(ring, spec.rank, classes)


_LINE = re.compile(r"O\((-?\d+(?:\s*,\s*-?\d+)*)\)")


def resolve_bundle(ring: CohRing, text: str) -> BundleData:
    """Resolve ``O``, ``O(a)``, ``O(a,b)``, ``O^r``, ``T`` or a bundle named in the ring document."""
    text = text.strip()
    if text == "O":
        return trivial_bundle(ring)
    if text.startswith("O^"):
        return trivial_bundle(ring, int(text[2:]))
    match = _LINE.fullmatch(text)
    if match:
        degrees = [int(part) for part in match.group(1).split(",")]
        return line_bundle(ring, degrees[0] if len(degrees) == 1 else degrees)
    if text in ("T", "TX"):
        return tangent_bundle(ring)
    if any(spec.name == text for spec in ring.bundles):
        return spec_bundle(ring, text)
    raise CharClassError(f"Unknown bundle '{text}' on ring {ring.name}")


def total_chern_class(b: BundleData) -> CohClass:
    total = CohClass.unit(b.ring)
    for c in b.chern:
        total = total + c
    return total


def _diagonal_parts(c: CohClass) -> List[CohClass]:
    return [c.component(k, k) for k in range(1, c.ring.n + 1)]


def direct_sum(e: BundleData, f: BundleData) -> BundleData:
    """Whitney sum: c(E + F) = c(E) c(F)."""
    total = total_chern_class(e) * total_chern_class(f)
    return bundle_from_classes(e.ring, e.rank + f.rank, _diagonal_parts(total))


def dual_bundle(b: BundleData) -> BundleData:
    return BundleData(b.ring, b.rank, tuple(c.scale(-1) if k % 2 else c for k, c in enumerate(b.chern, 1)))


def power_sums(b: BundleData) -> List[CohClass]:
    """Newton power sums p_1..p_n of the Chern roots, expressed in the c_k."""
    n = b.ring.n
    sums: List[CohClass] = []
    for k in range(1, n + 1):
        acc = b.c(k).scale((-1) ** (k - 1) * k)
        for i in range(1, k):
            term = b.c(i) * sums[k - i - 1]
            acc = acc + (term if i % 2 else -term)
        sums.append(acc)
    return sums


def chern_character(b: BundleData) -> CohClass:
    result = CohClass.unit(b.ring).scale(b.rank)
    for k, p_k in enumerate(power_sums(b), start=1):
        result = result + p_k.scale(Fraction(1, factorial(k)))
    return result


def exp_class(c: CohClass) -> CohClass:
    """exp of a class with zero constant term; the sum stops once powers vanish."""
    if c.constant_term():
        raise NonzeroConstantTerm(f"exp needs a class with zero constant term, got {c}")
    result = CohClass.unit(c.ring)
    term = CohClass.unit(c.ring)
    m = 1
    while True:
        term = (term * c).scale(Fraction(1, m))
        if not term:
            return result
        result = result + term
        m += 1


def class_power(c: CohClass, alpha: RationalLike) -> CohClass:
    """``c**alpha`` for unital c as the binomial series in ``c - 1``."""
    if not c.is_unital():
        raise NotUnital(f"Rational powers need a unital class, got constant term {c.constant_term()}")
    a = parse_rational(alpha)
    x = c.nilpotent_part()
    result = CohClass.unit(c.ring)
    term = CohClass.unit(c.ring)
    coefficient = Fraction(1)
    m = 1
    while True:
        term = term * x
        coefficient = coefficient * (a - m + 1) / m
        if not term:
            return result
        result = result + term.scale(coefficient)
        m += 1


def sqrt_class(c: CohClass) -> CohClass:
    return class_power(c, Fraction(1, 2))


def multiplicative_class(series: CharSeries, b: BundleData) -> CohClass:
    """prod_i series(x_i) over the Chern roots, as exp(sum_k a_k p_k) with a = log(series)."""
    if not series.is_unital():
        raise SeriesNotUnital(f"Series constant term must be 1, got {series[0]}")
    if series.order < b.ring.n:
        raise OrderTooSmall(f"Series order {series.order} is below ring dimension {b.ring.n}")
    log = series.log()
    exponent = CohClass.zero(b.ring)
    for k, p_k in enumerate(power_sums(b), start=1):
        if log[k]:
            exponent = exponent + p_k.scale(log[k])
    return exp_class(exponent)


def nc_normalize(c: CohClass) -> CohClass:
    """Multiply each (p,q) component by (-1/tau)^p."""
    return c.map_bidegree(lambda p, q: TauScalar.monomial((-1) ** p, -p))


def nc_chern_character(b: BundleData) -> CohClass:
    return nc_normalize(chern_character(b))


def dual_character(c: CohClass) -> CohClass:
    """Chern-character dual: (k,k) components times (-1)^k."""
    return c.map_bidegree(lambda p, q: TauScalar.rational((-1) ** ((p + q) // 2)))


@lru_cache(maxsize=None)
def todd_class(ring: CohRing) -> CohClass:
    return multiplicative_class(todd_series(ring.n), tangent_bundle(ring))


@lru_cache(maxsize=None)
def modified_todd_class(ring: CohRing) -> CohClass:
    return multiplicative_class(modified_todd_series(ring.n), tangent_bundle(ring))


@lru_cache(maxsize=None)
def sqrt_todd(ring: CohRing, modified: bool = False) -> CohClass:
    return sqrt_class(modified_todd_class(ring) if modified else todd_class(ring))


def mukai_vector(b: BundleData) -> CohClass:
    return chern_character(b) * sqrt_todd(b.ring)


def first_chern_class(ring: CohRing) -> CohClass:
    if not ring.tangent_known:
        raise MissingTangentData(f"Ring {ring.name} carries no tangent Chern data")
    return ring.tangent_class(1)


def is_calabi_yau(ring: CohRing) -> bool:
    return not first_chern_class(ring)

