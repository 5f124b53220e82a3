"""u-adic lattice elements on the HKR image of periodic cyclic homology."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from .charclass import class_power, modified_todd_class, sqrt_todd, todd_class
from .cohring import CohClass, CohRing, RingMismatch
from .documents import DocumentError, as_int, require
from .scalars import ONE, ScalarError, ScalarLike, TauScalar, render_terms

TWISTS = ("J", "K")


class HodgeError(ValueError):
    """Base class for HP lattice errors."""


class MixedParity(HodgeError):
    """Raised when an element mixes even and odd total degrees."""


@dataclass(frozen=True, eq=False)
class HPElement:
    """Truncated u-series with coefficients in a ring: ``coeffs[k]`` multiplies ``u**k``."""

    ring: CohRing
    u_order: int
    coeffs: Tuple[CohClass, ...]

    def __post_init__(self) -> None:
        if self.u_order < 0:
            raise HodgeError(f"u_order must be non-negative, got {self.u_order}")
        if len(self.coeffs) != self.u_order + 1:
            raise HodgeError(f"Expected {self.u_order + 1} u-coefficients, got {len(self.coeffs)}")

    @classmethod
    def zero(cls, ring: CohRing, u_order: int) -> "HPElement":
        return cls(ring, u_order, (CohClass.zero(ring),) * (u_order + 1))

    @classmethod
    def from_series(cls, ring: CohRing, u_order: int, series: Mapping[int, CohClass]) -> "HPElement":
        values = [CohClass.zero(ring)] * (u_order + 1)
        for k, value in series.items():
            if 0 <= k <= u_order:
                values[k] = values[k] + value
        return cls(ring, u_order, tuple(values))

    def _check(self, other: "HPElement") -> None:
        if self.ring is not other.ring and self.ring != other.ring:
            raise RingMismatch(f"Elements live in different rings: {self.ring.name} vs {other.ring.name}")
        if self.u_order != other.u_order:
            raise HodgeError(f"u_order differs: {self.u_order} vs {other.u_order}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HPElement):
            return NotImplemented
        return self.u_order == other.u_order and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.u_order, self.coeffs))

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def __add__(self, other: "HPElement") -> "HPElement":
        self._check(other)
        return HPElement(self.ring, self.u_order, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "HPElement") -> "HPElement":
        self._check(other)
        return HPElement(self.ring, self.u_order, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "HPElement":
        return HPElement(self.ring, self.u_order, tuple(-a for a in self.coeffs))

    def scale(self, factor: ScalarLike) -> "HPElement":
        return HPElement(self.ring, self.u_order, tuple(a.scale(factor) for a in self.coeffs))

    def times_u(self, power: int = 1) -> "HPElement":
        """Multiply by ``u**power`` (power >= 0), dropping terms beyond u_order."""
        if power < 0:
            raise HodgeError("Only non-negative u-shifts stay in the lattice")
        shifted = [CohClass.zero(self.ring)] * power + list(self.coeffs)
        return HPElement(self.ring, self.u_order, tuple(shifted[: self.u_order + 1]))

    def map_classes(self, fn) -> "HPElement":
        return HPElement(self.ring, self.u_order, tuple(fn(a) for a in self.coeffs))

    def substitute_minus_u(self) -> "HPElement":
        return HPElement(
            self.ring, self.u_order, tuple(a if k % 2 == 0 else -a for k, a in enumerate(self.coeffs))
        )

    def __str__(self) -> str:
        pairs = []
        for k, value in enumerate(self.coeffs):
            if not value:
                continue
            symbol = "" if k == 0 else ("*u" if k == 1 else f"*u^{k}")
            pairs.append((value, symbol))
        if not pairs:
            return "0"
        return " + ".join(f"({value}){symbol}" if symbol else f"{value}" for value, symbol in pairs)


def hkr_embed(a: CohClass, u_order: int = 0) -> HPElement:
    return HPElement.from_series(a.ring, u_order, {0: a})


def twist_class(ring: CohRing, which: str, inverse: bool = False) -> CohClass:
    """sqrt(td) for J, sqrt(td') for K; ``inverse`` gives the reciprocal square root."""
    if which not in TWISTS:
        raise HodgeError(f"Unknown twist '{which}', expected one of {', '.join(TWISTS)}")
    modified = which == "K"
    if not inverse:
        return sqrt_todd(ring, modified)
    base = modified_todd_class(ring) if modified else todd_class(ring)
    return class_power(base, Fraction(-1, 2))


def twist(x: HPElement, which: str, inverse: bool = False) -> HPElement:
    factor = twist_class(x.ring, which, inverse)
    return x.map_classes(lambda a: factor * a)


def vee(x: HPElement) -> HPElement:
    """(-1)^p on H^q(Omega^p)."""
    return x.map_classes(lambda a: a.map_bidegree(lambda p, q: ONE if p % 2 == 0 else -ONE))


def u_valuation(x: HPElement) -> Union[int, float]:
    for k, value in enumerate(x.coeffs):
        if value:
            return k
    return math.inf


def parity(x: HPElement) -> Optional[int]:
    """Common parity of total degrees in the support; None for zero."""
    degrees = set()
    for value in x.coeffs:
        degrees |= {d % 2 for d in value.degrees()}
    if len(degrees) > 1:
        raise MixedParity(f"Element mixes even and odd total degrees: {x}")
    return degrees.pop() if degrees else None


def hodge_level(x: HPElement) -> Optional[int]:
    """Smallest form degree p in the support (the Hodge filtration step containing x)."""
    levels = [x.ring.basis[idx].p for value in x.coeffs for idx, _ in value.items()]
    return min(levels) if levels else None


def _normalizable(coeff: TauScalar, p: int) -> bool:
    shifted = coeff.shift(p)
    return shifted.min_exponent() >= 0 and shifted.max_exponent() <= p


def rational_check(x: HPElement) -> bool:
    """True when tau^p times every (p,q) coefficient is a rational polynomial in tau of degree <= p."""
    for value in x.coeffs:
        for idx, coeff in value.items():
            if not _normalizable(coeff, x.ring.basis[idx].p):
                return False
    return True


def element_to_document(x: HPElement) -> dict:
    components: List[Dict[str, Any]] = []
    for idx, element in enumerate(x.ring.basis):
        series = [value.coeffs[idx] for value in x.coeffs]
        if not any(series):
            continue
        components.append(
            {
                "label": element.label,
                "u_coeffs": [str(c) if c.is_rational() else c.to_document() for c in series],
            }
        )
    return {"u_order": x.u_order, "components": components}


def element_from_document(ring: CohRing, document: Mapping[str, Any]) -> HPElement:
    try:
        u_order = as_int(require(document, "u_order", "element"), "u_order")
        components = require(document, "components", "element")
    except DocumentError as exc:
        raise HodgeError(str(exc)) from exc
    values: Dict[int, Dict[int, TauScalar]] = {}
    for entry in components:
        idx = ring.index(str(entry["label"]))
        for k, raw in enumerate(entry.get("u_coeffs", [])):
            if k > u_order:
                raise HodgeError(f"u-coefficient {k} exceeds u_order {u_order}")
            try:
                coeff = TauScalar.from_document(raw)
            except ScalarError as exc:
                raise HodgeError(str(exc)) from exc
            values.setdefault(k, {})[idx] = coeff
    return HPElement.from_series(
        ring, u_order, {k: CohClass.from_sparse(ring, vector.items()) for k, vector in values.items()}
    )


def series_text(coeffs: Tuple[TauScalar, ...], variable: str = "u") -> str:
    pairs = []
    for k, coeff in enumerate(coeffs):
        symbol = "" if k == 0 else (f"*{variable}" if k == 1 else f"*{variable}^{k}")
        pairs.append((coeff, symbol))
    return render_terms(pairs)
