"""Bigraded cohomology rings given by exact structure constants."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import comb
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

from sympy.polys.domains import QQ
from sympy.polys.matrices import DomainMatrix

from .documents import DocumentError, as_int, builtin_name, parse_document, require
from .scalars import ONE, TAU, TAU_SYMBOL, ZERO, ScalarError, ScalarLike, TauScalar, render_terms

SparseVector = Tuple[Tuple[int, TauScalar], ...]

TRACE_MODES = ("algebraic", "analytic", "ramadoss")

CHECK_NAMES = (
    "bidegree_range",
    "unit",
    "top",
    "grading",
    "commutativity",
    "associativity",
    "poincare",
)


class RingError(ValueError):
    """Base class for cohomology-ring errors."""


class RingMismatch(RingError):
    """Raised when classes from different rings are combined."""


class ProductUnavailable(RingError):
    """Raised when a partial ring is asked for a product it does not specify."""


class BadDiamond(RingError):
    """Raised when a formal Hodge diamond is not symmetric or lacks its corners."""


class ParseError(RingError):
    """Raised when a ring document does not match the schema."""


class ValidationError(RingError):
    """Raised when a ring fails one of its invariants."""

    def __init__(self, invariant: str, detail: str) -> None:
        super().__init__(f"Ring invariant '{invariant}' failed: {detail}")
        self.invariant = invariant
        self.detail = detail


@dataclass(frozen=True)
class BasisElement:
    label: str
    p: int
    q: int

    @property
    def degree(self) -> int:
        return self.p + self.q

    @property
    def bidegree(self) -> Tuple[int, int]:
        return (self.p, self.q)


@dataclass(frozen=True)
class BundleSpec:
    """Named Chern data carried by a ring document: ``chern`` holds ``(k, c_k)``."""

    name: str
    rank: int
    chern: Tuple[Tuple[int, SparseVector], ...] = ()


def _sparse(values: Mapping[int, TauScalar]) -> SparseVector:
    return tuple(sorted((int(k), v) for k, v in values.items() if v))


def _koszul(a: BasisElement, b: BasisElement) -> int:
    return -1 if (a.degree * b.degree) % 2 else 1


@dataclass(frozen=True)
class CohRing:
    """Finite-dimensional bigraded ring with a distinguished top class.

    ``products`` lists ``((i, j), vector)`` for non-unit basis pairs; a pair
    missing from the table multiplies to zero, except in ``partial`` rings
    where a missing pair landing in an inhabited bidegree is unknown.
    """

    n: int
    basis: Tuple[BasisElement, ...]
    products: Tuple[Tuple[Tuple[int, int], SparseVector], ...]
    top_index: int
    partial: bool = False
    tangent_chern: Tuple[Tuple[int, SparseVector], ...] = ()
    bundles: Tuple[BundleSpec, ...] = ()
    polarization: Optional[str] = None
    polarizations: Tuple[str, ...] = ()
    tangent_known: bool = True
    name: str = field(default="ring", compare=False)

    @cached_property
    def _table(self) -> Dict[Tuple[int, int], Dict[int, TauScalar]]:
        return {pair: dict(vector) for pair, vector in self.products}

    @cached_property
    def _label_index(self) -> Dict[str, int]:
        return {element.label: idx for idx, element in enumerate(self.basis)}

    @cached_property
    def _by_bidegree(self) -> Dict[Tuple[int, int], List[int]]:
        grouped: Dict[Tuple[int, int], List[int]] = {}
        for idx, element in enumerate(self.basis):
            grouped.setdefault(element.bidegree, []).append(idx)
        return grouped

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def polarization_classes(self) -> Tuple[str, ...]:
        """Degree-(1,1) classes that ``O(a)`` and ``O(a, b, ...)`` are built from."""
        if self.polarizations:
            return self.polarizations
        return (self.polarization,) if self.polarization else ()

    @cached_property
    def unit_index(self) -> int:
        candidates = self._by_bidegree.get((0, 0), [])
        if len(candidates) != 1:
            raise ValidationError("unit", f"expected one class in bidegree (0,0), found {len(candidates)}")
        return candidates[0]

    @property
    def hodge_numbers(self) -> Dict[Tuple[int, int], int]:
        return {bideg: len(indices) for bideg, indices in sorted(self._by_bidegree.items())}

    def indices_in(self, p: int, q: int) -> List[int]:
        return list(self._by_bidegree.get((p, q), []))

    def index(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError as exc:
            raise RingError(f"Unknown basis label '{label}' in ring {self.name}") from exc

    def table_entry(self, i: int, j: int) -> Optional[Dict[int, TauScalar]]:
        return self._table.get((i, j))

    def product_vector(self, i: int, j: int) -> Dict[int, TauScalar]:
        """Structure constants of ``e_i * e_j`` as ``{index: coefficient}``."""
        entry = self._table.get((i, j))
        if entry is not None:
            return entry
        unit = self.unit_index
        if i == unit:
            return {j: ONE}
        if j == unit:
            return {i: ONE}
        a, b = self.basis[i], self.basis[j]
        p, q = a.p + b.p, a.q + b.q
        if p > self.n or q > self.n or not self._by_bidegree.get((p, q)):
            return {}
        # the listed pairing entries are the whole pairing
        if self.partial and (p, q) != (self.n, self.n):
            raise ProductUnavailable(
                f"Product {a.label} * {b.label} is not specified in partial ring {self.name}"
            )
        return {}

    def tangent_class(self, k: int) -> "CohClass":
        for degree, vector in self.tangent_chern:
            if degree == k:
                return CohClass.from_sparse(self, vector)
        return CohClass.zero(self)

    def bundle(self, name: str) -> BundleSpec:
        for spec in self.bundles:
            if spec.name == name:
                return spec
        raise RingError(f"Ring {self.name} has no bundle named '{name}'")


@dataclass(frozen=True, eq=False)
class CohClass:
    """A class in a ring: one coefficient per basis element."""

    ring: CohRing
    coeffs: Tuple[TauScalar, ...]

    @classmethod
    def zero(cls, ring: CohRing) -> "CohClass":
        return cls(ring, (ZERO,) * ring.dim)

    @classmethod
    def unit(cls, ring: CohRing) -> "CohClass":
        return cls.basis_class(ring, ring.unit_index)

    @classmethod
    def basis_class(cls, ring: CohRing, which: int | str, coeff: ScalarLike = 1) -> "CohClass":
        idx = ring.index(which) if isinstance(which, str) else which
        values = [ZERO] * ring.dim
        values[idx] = TauScalar.coerce(coeff)
        return cls(ring, tuple(values))

    @classmethod
    def from_sparse(cls, ring: CohRing, vector: Iterable[Tuple[int, TauScalar]]) -> "CohClass":
        values = [ZERO] * ring.dim
        for idx, coeff in vector:
            values[idx] = values[idx] + coeff
        return cls(ring, tuple(values))

    @classmethod
    def from_labels(cls, ring: CohRing, mapping: Mapping[str, ScalarLike]) -> "CohClass":
        return cls.from_sparse(ring, [(ring.index(label), TauScalar.coerce(v)) for label, v in mapping.items()])

    def _check_ring(self, other: "CohClass") -> None:
        if self.ring is not other.ring and self.ring != other.ring:
            raise RingMismatch(f"Classes live in different rings: {self.ring.name} vs {other.ring.name}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CohClass):
            return NotImplemented
        return (self.ring is other.ring or self.ring == other.ring) and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash(self.coeffs)

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def items(self) -> Iterator[Tuple[int, TauScalar]]:
        for idx, coeff in enumerate(self.coeffs):
            if coeff:
                yield idx, coeff

    def __add__(self, other: "CohClass") -> "CohClass":
        self._check_ring(other)
        return CohClass(self.ring, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "CohClass") -> "CohClass":
        self._check_ring(other)
        return CohClass(self.ring, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "CohClass":
        return CohClass(self.ring, tuple(-a for a in self.coeffs))

    def scale(self, factor: ScalarLike) -> "CohClass":
        factor = TauScalar.coerce(factor)
        return CohClass(self.ring, tuple(c * factor for c in self.coeffs))

    def __mul__(self, other: "CohClass") -> "CohClass":
        return cup(self, other)

    def map_bidegree(self, factor) -> "CohClass":
        """Multiply each ``(p, q)`` component by ``factor(p, q)``."""
        values = []
        for element, coeff in zip(self.ring.basis, self.coeffs):
            values.append(coeff * factor(element.p, element.q) if coeff else ZERO)
        return CohClass(self.ring, tuple(values))

    def component(self, p: int, q: int) -> "CohClass":
        return self.map_bidegree(lambda pp, qq: ONE if (pp, qq) == (p, q) else ZERO)

    def constant_term(self) -> TauScalar:
        return self.coeffs[self.ring.unit_index]

    def is_unital(self) -> bool:
        return self.constant_term() == ONE

    def nilpotent_part(self) -> "CohClass":
        return self - CohClass.unit(self.ring).scale(self.constant_term())

    def degrees(self) -> set:
        return {self.ring.basis[idx].degree for idx, _ in self.items()}

    def bidegrees(self) -> set:
        return {self.ring.basis[idx].bidegree for idx, _ in self.items()}

    def coefficient(self, label: str) -> TauScalar:
        return self.coeffs[self.ring.index(label)]

    def to_document(self) -> list:
        payload = []
        for idx, coeff in self.items():
            value: Any = coeff.to_document()
            if coeff.is_rational():
                value = str(coeff)
            payload.append({"label": self.ring.basis[idx].label, "coeff": value})
        return payload

    def __str__(self) -> str:
        unit = self.ring.unit_index
        pairs = []
        for idx, coeff in self.items():
            symbol = "" if idx == unit else f" {self.ring.basis[idx].label}"
            pairs.append((coeff, symbol))
        return render_terms(pairs)

    def __repr__(self) -> str:
        return f"CohClass({self.ring.name}: {self})"


def cup(a: CohClass, b: CohClass) -> CohClass:
    a._check_ring(b)
    ring = a.ring
    acc: Dict[int, TauScalar] = {}
    for i, ci in a.items():
        for j, cj in b.items():
            vector = ring.product_vector(i, j)
            if not vector:
                continue
            weight = ci * cj
            for k, c in vector.items():
                acc[k] = acc.get(k, ZERO) + weight * c
    return CohClass.from_sparse(ring, acc.items())


def integrate(a: CohClass, mode: str = "algebraic") -> TauScalar:
    """Trace of the top component.

    ``algebraic`` reads the top coefficient; ``analytic`` applies
    (-1)^{n(n-1)/2} tau^n to it; ``ramadoss`` applies (-1)^{n(n+1)/2}.
    """
    ring = a.ring
    value = a.coeffs[ring.top_index]
    n = ring.n
    if mode == "algebraic":
        return value
    if mode == "analytic":
        sign = -1 if (n * (n - 1) // 2) % 2 else 1
        return (value * TAU**n).scale(sign)
    if mode == "ramadoss":
        sign = -1 if (n * (n + 1) // 2) % 2 else 1
        return value.scale(sign)
    raise RingError(f"Unknown trace mode: {mode}")


def hochschild_grading(ring: CohRing) -> Dict[int, int]:
    """dim HH_k = sum of h^{p,q} over p - q = k."""
    grading: Dict[int, int] = {}
    for (p, q), count in ring.hodge_numbers.items():
        grading[p - q] = grading.get(p - q, 0) + count
    return dict(sorted(grading.items()))


def parity_dimensions(ring: CohRing) -> Dict[str, int]:
    even = sum(1 for element in ring.basis if element.degree % 2 == 0)
    return {"even": even, "odd": ring.dim - even}


# --- validation -----------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    ring_name: str
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name: str) -> CheckResult:
        for result in self.checks:
            if result.name == name:
                return result
        raise KeyError(name)

    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def to_dict(self) -> dict:
        return {
            "ring": self.ring_name,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def _check_bidegree_range(ring: CohRing) -> CheckResult:
    bad = [e.label for e in ring.basis if not (0 <= e.p <= ring.n and 0 <= e.q <= ring.n)]
    labels = [e.label for e in ring.basis]
    if len(set(labels)) != len(labels):
        return CheckResult("bidegree_range", False, "duplicate basis labels")
    if bad:
        return CheckResult("bidegree_range", False, f"bidegree outside [0,{ring.n}]: {', '.join(bad)}")
    return CheckResult("bidegree_range", True)


def _check_unit(ring: CohRing) -> CheckResult:
    units = ring.indices_in(0, 0)
    if len(units) != 1:
        return CheckResult("unit", False, f"expected one class in bidegree (0,0), found {len(units)}")
    unit = units[0]
    for (i, j), vector in ring.products:
        if unit in (i, j):
            other = j if i == unit else i
            if vector != ((other, ONE),):
                return CheckResult(
                    "unit", False, f"{ring.basis[i].label} * {ring.basis[j].label} does not act as the identity"
                )
    return CheckResult("unit", True)


def _check_top(ring: CohRing) -> CheckResult:
    if not 0 <= ring.top_index < ring.dim:
        return CheckResult("top", False, "top index out of range")
    top = ring.basis[ring.top_index]
    if top.bidegree != (ring.n, ring.n):
        return CheckResult("top", False, f"top class {top.label} sits in {top.bidegree}, not ({ring.n},{ring.n})")
    if len(ring.indices_in(ring.n, ring.n)) != 1:
        return CheckResult("top", False, f"bidegree ({ring.n},{ring.n}) must hold exactly one class")
    return CheckResult("top", True)


def _check_grading(ring: CohRing) -> CheckResult:
    for (i, j), vector in ring.products:
        a, b = ring.basis[i], ring.basis[j]
        target = (a.p + b.p, a.q + b.q)
        for k, _ in vector:
            if ring.basis[k].bidegree != target:
                return CheckResult(
                    "grading",
                    False,
                    f"{a.label} * {b.label} has a term {ring.basis[k].label} outside bidegree {target}",
                )
    return CheckResult("grading", True)


def _known(ring: CohRing, i: int, j: int) -> Optional[Dict[int, TauScalar]]:
    try:
        return ring.product_vector(i, j)
    except ProductUnavailable:
        return None


def _check_commutativity(ring: CohRing) -> CheckResult:
    for (i, j), _ in ring.products:
        left = _known(ring, i, j)
        right = _known(ring, j, i)
        if left is None or right is None:
            continue
        sign = _koszul(ring.basis[i], ring.basis[j])
        expected = {k: v.scale(sign) for k, v in right.items()}
        if _sparse(left) != _sparse(expected):
            return CheckResult(
                "commutativity",
                False,
                f"{ring.basis[i].label} * {ring.basis[j].label} != "
                f"{'-' if sign < 0 else '+'}{ring.basis[j].label} * {ring.basis[i].label}",
            )
    return CheckResult("commutativity", True)


def _times_basis(ring: CohRing, vector: Mapping[int, TauScalar], k: int, left: bool) -> Dict[int, TauScalar]:
    acc: Dict[int, TauScalar] = {}
    for idx, coeff in vector.items():
        pv = ring.product_vector(k, idx) if left else ring.product_vector(idx, k)
        for t, c in pv.items():
            acc[t] = acc.get(t, ZERO) + coeff * c
    return {t: v for t, v in acc.items() if v}


def _check_associativity(ring: CohRing) -> CheckResult:
    unit = ring.unit_index
    nonzero = [(i, j) for (i, j), vector in ring.products if vector and unit not in (i, j)]
    others = [k for k in range(ring.dim) if k != unit]
    triples = set()
    for i, j in nonzero:
        for k in others:
            triples.add((i, j, k))
            triples.add((k, i, j))
    for i, j, k in sorted(triples):
        try:
            left = _times_basis(ring, ring.product_vector(i, j), k, left=False)
            right = _times_basis(ring, ring.product_vector(j, k), i, left=True)
        except ProductUnavailable:
            continue
        if left != right:
            labels = ", ".join(ring.basis[x].label for x in (i, j, k))
            return CheckResult("associativity", False, f"(ab)c != a(bc) for ({labels})")
    return CheckResult("associativity", True)


def poincare_matrix(ring: CohRing, rows: Sequence[int], cols: Sequence[int]) -> List[List[TauScalar]]:
    top = ring.top_index
    matrix = []
    for i in rows:
        matrix.append([ring.product_vector(i, j).get(top, ZERO) for j in cols])
    return matrix


def _nonsingular(matrix: List[List[TauScalar]]) -> bool:
    """Exact full-rank test over QQ, or over QQ(tau) when some entry involves tau."""
    size = len(matrix)
    if size == 0:
        return True
    rational = all(c.is_rational() for row in matrix for c in row)
    domain = QQ if rational else QQ.frac_field(TAU_SYMBOL)
    rows = [[domain.from_sympy(c.to_sympy()) for c in row] for row in matrix]
    return DomainMatrix(rows, (size, size), domain).rank() == size


def _check_poincare(ring: CohRing) -> CheckResult:
    n = ring.n
    for (p, q), indices in sorted(ring._by_bidegree.items()):
        partners = ring.indices_in(n - p, n - q)
        if len(partners) != len(indices):
            return CheckResult(
                "poincare", False, f"h^{{{p},{q}}} = {len(indices)} but h^{{{n - p},{n - q}}} = {len(partners)}"
            )
        try:
            block = poincare_matrix(ring, indices, partners)
        except ProductUnavailable as exc:
            return CheckResult("poincare", False, str(exc))
        if not _nonsingular(block):
            return CheckResult("poincare", False, f"pairing block ({p},{q}) x ({n - p},{n - q}) is degenerate")
    return CheckResult("poincare", True)


def validate_ring(ring: CohRing) -> ValidationReport:
    """Run every ring invariant and report pass/fail per check."""
    checks = [_check_bidegree_range(ring), _check_unit(ring), _check_top(ring)]
    structural_ok = all(check.passed for check in checks)
    checks.append(_check_grading(ring))
    for name, runner in (
        ("commutativity", _check_commutativity),
        ("associativity", _check_associativity),
        ("poincare", _check_poincare),
    ):
        if structural_ok:
            checks.append(runner(ring))
        else:
            checks.append(CheckResult(name, False, "skipped: unit/top structure is invalid"))
    return ValidationReport(ring.name, tuple(checks))


def ensure_valid(ring: CohRing) -> CohRing:
    report = validate_ring(ring)
    for check in report.checks:
        if not check.passed:
            raise ValidationError(check.name, check.detail)
    return ring


# --- construction ---------------------------------------------------------


class RingBuilder:
    """Collects basis elements and structure constants before freezing a ring."""

    def __init__(self, n: int, name: str) -> None:
        self.n = n
        self.name = name
        self.basis: List[BasisElement] = []
        self.table: Dict[Tuple[int, int], Dict[int, TauScalar]] = {}
        self.chern: Dict[int, Dict[int, TauScalar]] = {}
        self.bundles: List[BundleSpec] = []
        self.polarization: Optional[str] = None
        self.polarizations: List[str] = []
        self.partial = False
        self.tangent_known = True
        self.top: Optional[str] = None

    def add(self, label: str, p: int, q: int) -> int:
        self.basis.append(BasisElement(label, p, q))
        return len(self.basis) - 1

    def index(self, label: str) -> int:
        for idx, element in enumerate(self.basis):
            if element.label == label:
                return idx
        raise RingError(f"Unknown basis label '{label}'")

    def set_product(self, left: str, right: str, result: Mapping[str, ScalarLike]) -> None:
        vector = {self.index(label): TauScalar.coerce(c) for label, c in result.items()}
        self.table[(self.index(left), self.index(right))] = {k: v for k, v in vector.items() if v}

    def set_graded_pair(self, left: str, right: str, result: Mapping[str, ScalarLike]) -> None:
        """Set ``left*right`` and the Koszul-signed ``right*left``."""
        self.set_product(left, right, result)
        if left != right:
            a, b = self.basis[self.index(left)], self.basis[self.index(right)]
            sign = _koszul(a, b)
            self.set_product(right, left, {k: TauScalar.coerce(v).scale(sign) for k, v in result.items()})

    def set_chern(self, k: int, value: Mapping[str, ScalarLike]) -> None:
        self.chern[k] = {self.index(label): TauScalar.coerce(c) for label, c in value.items()}

    def build(self) -> CohRing:
        if self.top is None:
            raise RingError(f"Ring {self.name} has no top class")
        return CohRing(
            n=self.n,
            basis=tuple(self.basis),
            products=tuple(sorted((pair, _sparse(vec)) for pair, vec in self.table.items())),
            top_index=self.index(self.top),
            partial=self.partial,
            tangent_chern=tuple(sorted((k, _sparse(v)) for k, v in self.chern.items() if _sparse(v))),
            bundles=tuple(self.bundles),
            polarization=self.polarization,
            polarizations=tuple(self.polarizations),
            tangent_known=self.tangent_known,
            name=self.name,
        )


def _power_label(k: int, generator: str = "h") -> str:
    if k == 0:
        return "1"
    if k == 1:
        return generator
    return f"{generator}^{k}"


def projective_space(n: int) -> CohRing:
    if n < 1:
        raise RingError(f"Projective space needs n >= 1, got {n}")
    builder = RingBuilder(n, f"p{n}")
    for k in range(n + 1):
        builder.add(_power_label(k), k, k)
    for i in range(1, n + 1):
        for j in range(1, n + 1 - i):
            builder.set_product(_power_label(i), _power_label(j), {_power_label(i + j): 1})
    # c(P^n) = (1 + h)^{n+1}
    for k in range(1, n + 1):
        builder.set_chern(k, {_power_label(k): comb(n + 1, k)})
    builder.top = _power_label(n)
    builder.polarization = "h"
    return builder.build()


def elliptic_curve() -> CohRing:
    builder = RingBuilder(1, "e")
    builder.add("1", 0, 0)
    builder.add("dz", 1, 0)
    builder.add("dzb", 0, 1)
    builder.add("pt", 1, 1)
    builder.set_graded_pair("dz", "dzb", {"pt": 1})
    builder.top = "pt"
    return builder.build()


def _diamond_labels(p: int, q: int, count: int) -> List[str]:
    if count == 1:
        return [f"e{p}{q}"]
    return [f"e{p}{q}_{i}" for i in range(1, count + 1)]


def formal_cy(
    diamond: Mapping[Tuple[int, int], int],
    *,
    name: str = "formal-cy",
    products: Optional[Mapping[Tuple[str, str], Mapping[str, ScalarLike]]] = None,
    pairing: Optional[Mapping[Tuple[str, str], ScalarLike]] = None,
    chern: Optional[Mapping[int, Mapping[str, ScalarLike]]] = None,
    polarization: Optional[str] = None,
) -> CohRing:
    """Ring from a Hodge diamond with only the Poincare pairing as products.

    Classes are labelled ``e{p}{q}`` (or ``e{p}{q}_{i}``), the unit is ``1`` and
    the top class ``pt``. Complementary bidegrees pair diagonally with value 1
    unless ``pairing`` overrides it; ``products`` adds middle products. The
    result is partial: other middle products are unknown.
    """
    cells = {(int(p), int(q)): int(h) for (p, q), h in diamond.items() if int(h) > 0}
    if not cells:
        raise BadDiamond("Empty Hodge diamond")
    n = max(max(p, q) for p, q in cells)
    if cells.get((0, 0)) != 1 or cells.get((n, n)) != 1:
        raise BadDiamond(f"Diamond needs h^{{0,0}} = h^{{{n},{n}}} = 1")
    for (p, q), h in cells.items():
        if p < 0 or q < 0:
            raise BadDiamond(f"Negative bidegree ({p},{q})")
        if cells.get((q, p), 0) != h:
            raise BadDiamond(f"h^{{{p},{q}}} != h^{{{q},{p}}}")
        if cells.get((n - p, n - q), 0) != h:
            raise BadDiamond(f"h^{{{p},{q}}} != h^{{{n - p},{n - q}}}")

    builder = RingBuilder(n, name)
    builder.partial = True
    labels: Dict[Tuple[int, int], List[str]] = {}
    for p, q in sorted(cells, key=lambda pq: (pq[0] + pq[1], pq[0])):
        if (p, q) == (0, 0):
            names = ["1"]
        elif (p, q) == (n, n):
            names = ["pt"]
        else:
            names = _diamond_labels(p, q, cells[(p, q)])
        labels[(p, q)] = names
        for label in names:
            builder.add(label, p, q)
    builder.top = "pt"

    overrides = dict(pairing or {})
    for (p, q), names in labels.items():
        partner = (n - p, n - q)
        if (p, q) in ((0, 0), (n, n)) or (p, q) > partner:
            continue
        for left, right in zip(names, labels[partner]):
            value = overrides.pop((left, right), 1)
            builder.set_graded_pair(left, right, {"pt": value})
    for (left, right), value in overrides.items():
        builder.set_graded_pair(left, right, {"pt": value})
    for (left, right), result in (products or {}).items():
        builder.set_graded_pair(left, right, result)
    for k, value in (chern or {}).items():
        builder.set_chern(k, value)
    if polarization is not None:
        builder.index(polarization)
        builder.polarization = polarization
    return builder.build()


K3_DIAMOND = {(0, 0): 1, (2, 0): 1, (0, 2): 1, (1, 1): 20, (2, 2): 1}

QUINTIC_DIAMOND = {
    (0, 0): 1,
    (1, 1): 1,
    (2, 2): 1,
    (3, 3): 1,
    (3, 0): 1,
    (0, 3): 1,
    (2, 1): 101,
    (1, 2): 101,
}


def k3() -> CohRing:
    # H^{1,1} pairing of signature (1, 19)
    pairing = {(f"e11_{i}", f"e11_{i}"): -1 for i in range(2, 21)}
    return formal_cy(K3_DIAMOND, name="k3", pairing=pairing, chern={2: {"pt": 24}})


def quintic_diamond() -> CohRing:
    """Quintic threefold diamond; ``e11`` plays the hyperplane H with H^3 = 5."""
    return formal_cy(
        QUINTIC_DIAMOND,
        name="quintic-diamond",
        products={("e11", "e11"): {"e22": 1}},
        pairing={("e11", "e22"): 5},
        chern={2: {"e22": 10}, 3: {"pt": -200}},
        polarization="e11",
    )


def product(r1: CohRing, r2: CohRing) -> CohRing:
    """Kunneth product with (a|b)(c|d) = (-1)^{|b||c|} (ac)|(bd)."""
    if r1.partial or r2.partial:
        raise RingError("Products of partial rings are not supported")
    builder = RingBuilder(r1.n + r2.n, f"{r1.name}x{r2.name}")

    def label(i: int, j: int) -> str:
        return f"{r1.basis[i].label}|{r2.basis[j].label}"

    pairs = [(i, j) for i in range(r1.dim) for j in range(r2.dim)]
    for i, j in pairs:
        builder.add(label(i, j), r1.basis[i].p + r2.basis[j].p, r1.basis[i].q + r2.basis[j].q)
    unit = builder.index(label(r1.unit_index, r2.unit_index))
    for a, b in pairs:
        for c, d in pairs:
            left, right = builder.index(label(a, b)), builder.index(label(c, d))
            if unit in (left, right):
                continue
            sign = _koszul(r2.basis[b], r1.basis[c])
            result: Dict[str, TauScalar] = {}
            for k1, v1 in r1.product_vector(a, c).items():
                for k2, v2 in r2.product_vector(b, d).items():
                    key = label(k1, k2)
                    result[key] = result.get(key, ZERO) + (v1 * v2).scale(sign)
            result = {k: v for k, v in result.items() if v}
            if result:
                builder.set_product(label(a, b), label(c, d), result)
    # c(X x Y) = c(X) c(Y)
    total_degree = r1.n + r2.n
    for k in range(1, total_degree + 1):
        value: Dict[str, TauScalar] = {}
        for i in range(0, k + 1):
            left_class = CohClass.unit(r1) if i == 0 else r1.tangent_class(i)
            right_class = CohClass.unit(r2) if k - i == 0 else r2.tangent_class(k - i)
            for x, cx in left_class.items():
                for y, cy in right_class.items():
                    key = label(x, y)
                    value[key] = value.get(key, ZERO) + cx * cy
        if any(value.values()):
            builder.set_chern(k, value)
    # pullbacks of each factor's polarizations; O(a, b) is a pr_1^*H_1 + b pr_2^*H_2
    unit1, unit2 = r1.basis[r1.unit_index].label, r2.basis[r2.unit_index].label
    builder.polarizations = [f"{h}|{unit2}" for h in r1.polarization_classes]
    builder.polarizations += [f"{unit1}|{h}" for h in r2.polarization_classes]
    builder.top = label(r1.top_index, r2.top_index)
    return builder.build()


BUILTIN_ALIASES = {"elliptic": "e", "quintic": "quintic-diamond"}


def build_builtin(name: str) -> CohRing:
    """Built-in rings: ``p<n>``, ``e``, ``k3``, ``quintic-diamond``, ``AxB`` products."""
    key = BUILTIN_ALIASES.get(name, name)
    if "x" in key:
        left, _, right = key.partition("x")
        return ensure_valid(product(build_builtin(left), build_builtin(right)))
    match = re.fullmatch(r"p(\d+)", key)
    if match:
        return projective_space(int(match.group(1)))
    if key == "e":
        return elliptic_curve()
    if key == "k3":
        return k3()
    if key == "quintic-diamond":
        return quintic_diamond()
    raise RingError(f"Unknown built-in ring: {name}")


# --- documents ------------------------------------------------------------


def _class_entries(builder: RingBuilder, entries: Any, context: str) -> Dict[str, TauScalar]:
    if not isinstance(entries, list):
        raise ParseError(f"{context} must be a list of {{label, coeff}} entries")
    result: Dict[str, TauScalar] = {}
    for entry in entries:
        if not isinstance(entry, Mapping) or "label" not in entry:
            raise ParseError(f"{context} entry needs a label: {entry!r}")
        label = str(entry["label"])
        builder.index(label)
        try:
            coeff = TauScalar.from_document(entry.get("coeff", 1))
        except ScalarError as exc:
            raise ParseError(f"{context}: {exc}") from exc
        result[label] = result.get(label, ZERO) + coeff
    return result


def _chern_entries(builder: RingBuilder, entries: Any, context: str) -> Dict[int, Dict[str, TauScalar]]:
    if not isinstance(entries, list):
        raise ParseError(f"{context} must be a list of {{k, class}} entries")
    result = {}
    for entry in entries:
        if not isinstance(entry, Mapping) or "k" not in entry:
            raise ParseError(f"{context} entry needs k: {entry!r}")
        result[as_int(entry["k"], "k")] = _class_entries(builder, entry.get("class", []), f"{context} c_k")
    return result


def ring_from_document(document: Mapping[str, Any], *, validate: bool = True) -> CohRing:
    try:
        n = as_int(require(document, "dimension", "ring"), "dimension")
        basis = require(document, "basis", "ring")
    except DocumentError as exc:
        raise ParseError(str(exc)) from exc
    if not document.get("top"):
        raise ValidationError("top", "no top class designated")
    top = str(document["top"])
    builder = RingBuilder(n, str(document.get("name", "ring")))
    if not isinstance(basis, list) or not basis:
        raise ParseError("Ring basis must be a non-empty list")
    try:
        for entry in basis:
            builder.add(str(entry["label"]), as_int(entry["p"], "p"), as_int(entry["q"], "q"))
        for entry in document.get("products", []) or []:
            result = _class_entries(builder, entry.get("result", []), "product result")
            builder.set_product(str(entry["left"]), str(entry["right"]), result)
        for k, value in _chern_entries(builder, document.get("tangent_chern", []) or [], "tangent_chern").items():
            builder.chern[k] = {builder.index(label): coeff for label, coeff in value.items()}
        for name, spec in (document.get("bundles") or {}).items():
            chern = _chern_entries(builder, spec.get("chern", []) or [], f"bundle {name}")
            builder.bundles.append(
                BundleSpec(
                    name=str(name),
                    rank=as_int(spec.get("rank", 1), "rank"),
                    chern=tuple(
                        sorted(
                            (k, _sparse({builder.index(lbl): c for lbl, c in v.items()}))
                            for k, v in chern.items()
                        )
                    ),
                )
            )
    except (KeyError, TypeError, AttributeError, DocumentError) as exc:
        raise ParseError(f"Malformed ring document: {exc}") from exc
    except RingError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from exc
    builder.partial = str(document.get("partial", "false")).lower() == "true"
    builder.polarization = document.get("polarization")
    builder.polarizations = [str(label) for label in document.get("polarizations") or []]
    for label in builder.polarizations:
        try:
            builder.index(label)
        except RingError as exc:
            raise ValidationError("polarizations", f"polarization '{label}' is not a basis label") from exc
    builder.tangent_known = "tangent_chern" in document
    try:
        builder.index(top)
    except RingError as exc:
        raise ValidationError("top", f"top class '{top}' is not a basis label") from exc
    builder.top = top
    ring = builder.build()
    return ensure_valid(ring) if validate else ring


def load_ring(source: Any) -> CohRing:
    """Load a ring from a mapping, document text, or a ``builtin:`` reference."""
    if isinstance(source, Mapping):
        return ring_from_document(source)
    if isinstance(source, str):
        name = builtin_name(source)
        if name is not None:
            return build_builtin(name)
        try:
            document = parse_document(source)
        except DocumentError as exc:
            raise ParseError(str(exc)) from exc
        return ring_from_document(document)
    raise ParseError(f"Cannot load a ring from {type(source).__name__}")


def ring_to_document(ring: CohRing) -> dict:
    def entries(vector: SparseVector) -> list:
        return CohClass.from_sparse(ring, vector).to_document()

    document: Dict[str, Any] = {
        "name": ring.name,
        "dimension": ring.n,
        "basis": [{"label": e.label, "p": e.p, "q": e.q} for e in ring.basis],
        "top": ring.basis[ring.top_index].label,
        "products": [
            {"left": ring.basis[i].label, "right": ring.basis[j].label, "result": entries(vector)}
            for (i, j), vector in ring.products
        ],
    }
    if ring.tangent_known:
        document["tangent_chern"] = [{"k": k, "class": entries(v)} for k, v in ring.tangent_chern]
    if ring.partial:
        document["partial"] = True
    if ring.polarization:
        document["polarization"] = ring.polarization
    if ring.polarizations:
        document["polarizations"] = list(ring.polarizations)
    if ring.bundles:
        document["bundles"] = {
            spec.name: {"rank": spec.rank, "chern": [{"k": k, "class": entries(v)} for k, v in spec.chern]}
            for spec in ring.bundles
        }
    return document


_TERM = re.compile(r"\s*([+-])?\s*([^+\-\s][^+\-]*)")


def parse_class(ring: CohRing, text: str) -> CohClass:
    """Parse ``"1 + 3/2*h - h^2"`` style input into a class."""
    result = CohClass.zero(ring)
    stripped = text.strip()
    if not stripped:
        raise RingError("Empty class expression")
    position = 0
    while position < len(stripped):
        match = _TERM.match(stripped, position)
        if not match:
            raise RingError(f"Cannot parse class expression: {text!r}")
        sign = -1 if match.group(1) == "-" else 1
        term = match.group(2).strip()
        position = match.end()
        coeff_text, _, label = term.rpartition("*" if "*" in term else " ")
        label = label.strip()
        if not coeff_text:
            coeff_text, label = "1", term
        if label not in ring._label_index:
            try:
                value = Fraction(term)
            except ValueError as exc:
                raise RingError(f"Unknown basis label or rational '{term}' in {text!r}") from exc
            result = result + CohClass.unit(ring).scale(value * sign)
            continue
        try:
            coeff = Fraction(coeff_text.strip())
        except ValueError as exc:
            raise RingError(f"Bad coefficient '{coeff_text}' in {text!r}") from exc
        result = result + CohClass.basis_class(ring, label, coeff * sign)
    return result
