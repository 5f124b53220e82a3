"""Formal deformations over a polydisk: Kodaira-Spencer operators and u-connections.

A family is modelled on the cohomology ring of its central fibre. Each
direction ``t_j`` carries an operator ``kappa_j`` of bidegree (-1,+1) acting
as a derivation of the ring, and sections are truncated polynomials in
``t_1..t_mu`` and Laurent polynomials in ``u`` with a fixed amount of
negative headroom, so that ``nabla_j = d/dt_j - kappa_j / u`` never has to
drop its pole term silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .cohring import (
    CheckResult,
    CohClass,
    CohRing,
    ProductUnavailable,
    RingError,
    load_ring,
    ring_to_document,
)
from .documents import DocumentError, as_int, builtin_name, parse_document
from .example_data import FAMILY_DOCUMENTS, family_document
from .scalars import ScalarError, TauScalar
from .tracing import traced

Key = Tuple[int, Tuple[int, ...]]


class FamilyError(ValueError):
    """Base class for deformation-family errors."""


class UHeadroomExhausted(FamilyError):
    """Raised when a 1/u action would leave the stored u-range of a section."""


class TNotUnital(FamilyError):
    """Raised when the twist class has constant term different from 1."""


class TNotConstant(FamilyError):
    """Raised when the twist class depends on t or u."""


@dataclass(frozen=True)
class KappaOperator:
    """Linear map on the ring given by the images of the basis."""

    ring: CohRing
    images: Tuple[CohClass, ...]

    def apply(self, c: CohClass) -> CohClass:
        result = CohClass.zero(self.ring)
        for idx, coeff in c.items():
            image = self.images[idx]
            if image:
                result = result + image.scale(coeff)
        return result

    def support(self) -> List[int]:
        return [idx for idx, image in enumerate(self.images) if image]

    def compose(self, other: "KappaOperator") -> "KappaOperator":
        """``self after other``."""
        return KappaOperator(self.ring, tuple(self.apply(image) for image in other.images))


def _leibniz(ring: CohRing, known: Mapping[int, CohClass], i: int, j: int) -> CohClass:
    left = known[i] * CohClass.basis_class(ring, j)
    right = CohClass.basis_class(ring, i) * known[j]
    return left + right


def build_kappa(ring: CohRing, values: Mapping[str, CohClass], direction: int = 0) -> KappaOperator:
    """Extend values on generators to a derivation and check it.

    Unspecified classes get their value from a product ``e_i e_j = c e_k``
    with ``c`` an invertible scalar when both factors are known; classes that
    are never such a product default to zero.
    """
    known: Dict[int, CohClass] = {ring.unit_index: CohClass.zero(ring)}
    for label, value in values.items():
        known[ring.index(label)] = value
    single_targets: Dict[int, List[Tuple[int, int, TauScalar]]] = {}
    for (i, j), vector in ring.products:
        if len(vector) == 1 and vector[0][1].is_monomial():
            k, c = vector[0]
            single_targets.setdefault(k, []).append((i, j, c))

    def saturate() -> None:
        changed = True
        while changed:
            changed = False
            for k, sources in single_targets.items():
                if k in known:
                    continue
                for i, j, c in sources:
                    if i in known and j in known:
                        try:
                            known[k] = _leibniz(ring, known, i, j).scale(c.inverse())
                        except ProductUnavailable:
                            continue
                        changed = True
                        break

    saturate()
    for idx in range(ring.dim):
        if idx not in known and idx not in single_targets:
            known[idx] = CohClass.zero(ring)
    saturate()
    images = tuple(known.get(idx, CohClass.zero(ring)) for idx in range(ring.dim))
    operator = KappaOperator(ring, images)
    _check_bidegree(operator, direction)
    _check_derivation(operator, direction)
    return operator


def _check_bidegree(operator: KappaOperator, direction: int) -> None:
    ring = operator.ring
    for idx, image in enumerate(operator.images):
        source = ring.basis[idx]
        expected = {(source.p - 1, source.q + 1)}
        if image and image.bidegrees() != expected:
            raise FamilyError(
                f"kappa_{direction}({source.label}) must lie in bidegree "
                f"({source.p - 1},{source.q + 1}), found {sorted(image.bidegrees())}"
            )


def _check_derivation(operator: KappaOperator, direction: int) -> None:
    ring = operator.ring
    active = set(operator.support())
    pairs = {pair for pair, _ in ring.products}
    for i in active:
        for j in range(ring.dim):
            pairs.add((i, j))
            pairs.add((j, i))
    for i, j in sorted(pairs):
        try:
            product = CohClass.from_sparse(ring, ring.product_vector(i, j).items())
            lhs = operator.apply(product)
            rhs = operator.images[i] * CohClass.basis_class(ring, j) + CohClass.basis_class(
                ring, i
            ) * operator.images[j]
        except ProductUnavailable:
            continue
        if lhs != rhs:
            raise FamilyError(
                f"kappa_{direction} is not a derivation on "
                f"{ring.basis[i].label} * {ring.basis[j].label}: {lhs} != {rhs}"
            )


@dataclass(frozen=True)
class DeformationSpec:
    ring: CohRing
    kappas: Tuple[KappaOperator, ...]
    t_order: int = 2
    u_order: int = 2
    u_headroom: int = 2
    name: str = "family"

    def __post_init__(self) -> None:
        if not self.kappas:
            raise FamilyError("A family needs at least one direction")
        if self.u_order < 1:
            raise FamilyError(f"u_order must be at least 1, got {self.u_order}")
        if self.u_headroom < 1:
            raise FamilyError(f"u_headroom must be at least 1, got {self.u_headroom}")
        if self.t_order < 0:
            raise FamilyError(f"t_order must be non-negative, got {self.t_order}")

    @property
    def mu(self) -> int:
        return len(self.kappas)

    def kappa(self, j: int) -> KappaOperator:
        if not 0 <= j < self.mu:
            raise FamilyError(f"Direction {j} out of range for mu = {self.mu}")
        return self.kappas[j]


def _unit_vector(mu: int, j: int) -> Tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(mu))


@dataclass(frozen=True, eq=False)
class FamilySection:
    """Sparse sum of ``u^a t^m * class`` terms."""

    ring: CohRing
    mu: int
    t_order: int
    u_order: int
    u_headroom: int
    terms: Tuple[Tuple[Key, CohClass], ...]

    @classmethod
    def _build(
        cls,
        like: Union["FamilySection", DeformationSpec],
        values: Mapping[Key, CohClass],
        headroom: Optional[int] = None,
    ) -> "FamilySection":
        room = like.u_headroom if headroom is None else headroom
        t_order = like.t_order
        u_order = like.u_order
        mu = like.mu
        cleaned: Dict[Key, CohClass] = {}
        for (u_exp, t_exp), value in values.items():
            if not value or u_exp > u_order or sum(t_exp) > t_order:
                continue
            if u_exp < -room:
                raise UHeadroomExhausted(f"u^{u_exp} is below the stored range u^-{room}")
            if len(t_exp) != mu:
                raise FamilyError(f"t multi-index {t_exp} does not match mu = {mu}")
            cleaned[(u_exp, t_exp)] = value
        return cls(like.ring, mu, t_order, u_order, room, tuple(sorted(cleaned.items(), key=lambda kv: kv[0])))

    @classmethod
    def lattice(
        cls, spec: DeformationSpec, values: Mapping[Key, CohClass], headroom: Optional[int] = None
    ) -> "FamilySection":
        """Section in the non-negative u-lattice; poles are rejected."""
        for (u_exp, _), value in values.items():
            if u_exp < 0 and value:
                raise FamilyError(f"Sections are built with u-exponents >= 0, got u^{u_exp}")
        return cls._build(spec, values, headroom)

    @classmethod
    def constant(cls, spec: DeformationSpec, value: CohClass, headroom: Optional[int] = None) -> "FamilySection":
        return cls.lattice(spec, {(0, (0,) * spec.mu): value}, headroom)

    def as_dict(self) -> Dict[Key, CohClass]:
        return dict(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FamilySection):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __hash__(self) -> int:
        return hash(self.terms)

    def _combine(self, other: "FamilySection", sign: int) -> "FamilySection":
        merged = self.as_dict()
        for key, value in other.terms:
            merged[key] = merged[key] + value.scale(sign) if key in merged else value.scale(sign)
        return FamilySection._build(self, merged, max(self.u_headroom, other.u_headroom))

    def __add__(self, other: "FamilySection") -> "FamilySection":
        return self._combine(other, 1)

    def __sub__(self, other: "FamilySection") -> "FamilySection":
        return self._combine(other, -1)

    def __neg__(self) -> "FamilySection":
        return self.map_classes(lambda c: -c)

    def map_classes(self, fn) -> "FamilySection":
        return FamilySection._build(self, {key: fn(value) for key, value in self.terms})

    def derivative(self, j: int) -> "FamilySection":
        result: Dict[Key, CohClass] = {}
        for (u_exp, t_exp), value in self.terms:
            power = t_exp[j]
            if power == 0:
                continue
            lowered = tuple(p - 1 if i == j else p for i, p in enumerate(t_exp))
            key = (u_exp, lowered)
            term = value.scale(power)
            result[key] = result[key] + term if key in result else term
        return FamilySection._build(self, result)

    def shift_u(self, power: int) -> "FamilySection":
        return FamilySection._build(self, {(u_exp + power, t_exp): value for (u_exp, t_exp), value in self.terms})

    def cup_left(self, t_class: CohClass) -> "FamilySection":
        return self.map_classes(lambda c: t_class * c)

    def u_valuation(self) -> Union[int, float]:
        return min((u_exp for (u_exp, _), _value in self.terms), default=math.inf)

    def is_constant(self) -> bool:
        return all(u_exp == 0 and not any(t_exp) for (u_exp, t_exp), _ in self.terms)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for (u_exp, t_exp), value in self.terms:
            monomial = "".join(f"*t{i + 1}^{p}" if p > 1 else f"*t{i + 1}" for i, p in enumerate(t_exp) if p)
            u_part = "" if u_exp == 0 else ("*u" if u_exp == 1 else f"*u^{u_exp}")
            parts.append(f"({value}){u_part}{monomial}")
        return " + ".join(parts)


def mc_check(d: DeformationSpec) -> bool:
    """Abelian Maurer-Cartan model: the kappa_j pairwise commute."""
    for i in range(d.mu):
        for j in range(i + 1, d.mu):
            if d.kappas[i].compose(d.kappas[j]).images != d.kappas[j].compose(d.kappas[i]).images:
                return False
    return True


def connect(s: FamilySection, j: int, d: DeformationSpec) -> FamilySection:
    """nabla_j s = ds/dt_j - u^{-1} kappa_j(s)."""
    kappa = d.kappa(j)
    pole = s.map_classes(kappa.apply).shift_u(-1)
    return s.derivative(j) - pole


def apply_kappa(s: FamilySection, j: int, d: DeformationSpec) -> FamilySection:
    return s.map_classes(d.kappa(j).apply)


def basis_corpus(d: DeformationSpec, headroom: Optional[int] = None) -> List[FamilySection]:
    """Constant basis sections, their t_j multiples and their u multiples."""
    corpus: List[FamilySection] = []
    zero_t = (0,) * d.mu
    for idx in range(d.ring.dim):
        e = CohClass.basis_class(d.ring, idx)
        corpus.append(FamilySection.lattice(d, {(0, zero_t): e}, headroom))
        if d.t_order >= 1:
            for j in range(d.mu):
                corpus.append(FamilySection.lattice(d, {(0, _unit_vector(d.mu, j)): e}, headroom))
        corpus.append(FamilySection.lattice(d, {(1, zero_t): e}, headroom))
    return corpus


def random_section(d: DeformationSpec, rng: np.random.Generator, terms: int = 4) -> FamilySection:
    """Section with small integer coefficients on random basis classes, u and t monomials."""
    values: Dict[Key, CohClass] = {}
    for _ in range(terms):
        idx = int(rng.integers(d.ring.dim))
        u_exp = int(rng.integers(0, d.u_order + 1))
        t_exp = tuple(int(x) for x in rng.integers(0, d.t_order + 1, size=d.mu))
        while sum(t_exp) > d.t_order:
            t_exp = tuple(max(0, x - 1) for x in t_exp)
        coeff = int(rng.integers(-3, 4))
        term = CohClass.basis_class(d.ring, idx, coeff)
        key = (u_exp, t_exp)
        values[key] = values[key] + term if key in values else term
    return FamilySection.lattice(d, values)


@dataclass(frozen=True)
class FamilyReport:
    family: str
    checks: Tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def transversality_check(d: DeformationSpec, corpus: Optional[Sequence[FamilySection]] = None) -> FamilyReport:
    """u * nabla_j keeps every lattice section inside the lattice."""
    sections = list(corpus) if corpus is not None else basis_corpus(d)
    with traced("transversality_check", family=d.name, sections=len(sections)):
        for s in sections:
            if s.u_valuation() < 0:
                continue
            for j in range(d.mu):
                moved = connect(s, j, d).shift_u(1)
                if moved.u_valuation() < 0:
                    return FamilyReport(
                        d.name, (CheckResult("transversality", False, f"u*nabla_{j} leaves the lattice on {s}"),)
                    )
    return FamilyReport(d.name, (CheckResult("transversality", True, f"{len(sections)} sections"),))


def flatness_check(d: DeformationSpec) -> FamilyReport:
    if not mc_check(d):
        return FamilyReport(
            d.name,
            (CheckResult("flatness", False, "precondition failed: mc_check is false (kappa operators do not commute)"),),
        )
    corpus = basis_corpus(d, headroom=max(d.u_headroom, 2))
    with traced("flatness_check", family=d.name, sections=len(corpus)):
        for i in range(d.mu):
            for j in range(i + 1, d.mu):
                for s in corpus:
                    bracket = connect(connect(s, j, d), i, d) - connect(connect(s, i, d), j, d)
                    if bracket:
                        return FamilyReport(
                            d.name, (CheckResult("flatness", False, f"[nabla_{i}, nabla_{j}] != 0 on {s}"),)
                        )
    return FamilyReport(d.name, (CheckResult("flatness", True, f"{d.mu} directions"),))


def _twist_class(t: Union[CohClass, FamilySection]) -> CohClass:
    if isinstance(t, FamilySection):
        if not t.is_constant():
            raise TNotConstant(f"Twist class must not depend on t or u: {t}")
        value = t.as_dict().get((0, (0,) * t.mu))
        t = value if value is not None else CohClass.zero(t.ring)
    if not t.is_unital():
        raise TNotUnital(f"Twist class must have constant term 1, got {t.constant_term()}")
    return t


def intertwining_defect(
    t: Union[CohClass, FamilySection], s: FamilySection, j: int, d: DeformationSpec
) -> FamilySection:
    """nabla_j(T s) - T nabla_j(s); equals -u^{-1} kappa_j(T) s."""
    twist = _twist_class(t)
    with traced("intertwining_defect", family=d.name, direction=j):
        return connect(s.cup_left(twist), j, d) - connect(s, j, d).cup_left(twist)


def expected_defect(t: Union[CohClass, FamilySection], s: FamilySection, j: int, d: DeformationSpec) -> FamilySection:
    twist = _twist_class(t)
    return -s.cup_left(d.kappa(j).apply(twist)).shift_u(-1)


def leibniz_defect(t: CohClass, s: FamilySection, j: int, d: DeformationSpec) -> FamilySection:
    """kappa_j(T s) - T kappa_j(s) - kappa_j(T) s, zero for a derivation."""
    kappa = d.kappa(j)
    return (
        apply_kappa(s.cup_left(t), j, d)
        - apply_kappa(s, j, d).cup_left(t)
        - s.cup_left(kappa.apply(t))
    )


def family_report(d: DeformationSpec) -> FamilyReport:
    commuting = mc_check(d)
    checks: List[CheckResult] = [CheckResult("mc", commuting, "" if commuting else "kappa operators do not commute")]
    with traced("family_report", family=d.name, mu=d.mu):
        checks.extend(transversality_check(d).checks)
        checks.extend(flatness_check(d).checks)
    return FamilyReport(d.name, tuple(checks))


# --- documents ------------------------------------------------------------


def family_from_document(document: Mapping[str, Any]) -> DeformationSpec:
    ring_source = document.get("ring")
    if ring_source is None:
        raise FamilyError("Family document needs a ring")
    try:
        ring = load_ring(ring_source)
        mu = as_int(document.get("mu", 1), "mu")
        values: List[Dict[str, CohClass]] = [{} for _ in range(mu)]
        for entry in document.get("kappa", []) or []:
            direction = as_int(entry.get("direction", 0), "direction")
            if not 0 <= direction < mu:
                raise FamilyError(f"kappa direction {direction} out of range for mu = {mu}")
            value = CohClass.zero(ring)
            for term in entry.get("value", []) or []:
                value = value + CohClass.basis_class(
                    ring, str(term["label"]), TauScalar.from_document(term.get("coeff", 1))
                )
            values[direction][str(entry["on"])] = value
        kappas = tuple(build_kappa(ring, v, direction) for direction, v in enumerate(values))
        return DeformationSpec(
            ring=ring,
            kappas=kappas,
            t_order=as_int(document.get("t_order", 2), "t_order"),
            u_order=as_int(document.get("u_order", 2), "u_order"),
            u_headroom=as_int(document.get("u_headroom", 2), "u_headroom"),
            name=str(document.get("name", "family")),
        )
    except (DocumentError, RingError, ScalarError, KeyError, TypeError) as exc:
        raise FamilyError(f"Malformed family document: {exc}") from exc


def load_family(source: Any) -> DeformationSpec:
    if isinstance(source, Mapping):
        return family_from_document(source)
    if isinstance(source, str):
        name = builtin_name(source)
        if name is not None:
            if name not in FAMILY_DOCUMENTS:
                raise FamilyError(f"Unknown built-in family: {name}")
            return family_from_document(family_document(name))
        try:
            return family_from_document(parse_document(source))
        except DocumentError as exc:
            raise FamilyError(str(exc)) from exc
    raise FamilyError(f"Cannot load a family from {type(source).__name__}")


def family_to_document(d: DeformationSpec, ring_reference: Optional[str] = None) -> dict:
    kappa: List[Dict[str, Any]] = []
    for direction, operator in enumerate(d.kappas):
        for idx, image in enumerate(operator.images):
            if image:
                kappa.append({"direction": direction, "on": d.ring.basis[idx].label, "value": image.to_document()})
    return {
        "name": d.name,
        "ring": ring_reference or ring_to_document(d.ring),
        "mu": d.mu,
        "t_order": d.t_order,
        "u_order": d.u_order,
        "u_headroom": d.u_headroom,
        "kappa": kappa,
    }


def builtin_families() -> Iterable[str]:
    return sorted(FAMILY_DOCUMENTS)
