"""Higher residue, canonical and Mukai pairings and the HRR cross-check."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

from .charclass import (
    BundleData,
    MissingTangentData,
    chern_character,
    dual_character,
    first_chern_class,
    nc_chern_character,
    nc_normalize,
    todd_class,
)
from .cohring import CohClass, CohRing, RingMismatch, cup, integrate
from .ncvshs import HPElement, hkr_embed, parity, series_text, twist, twist_class, vee
from .scalars import ZERO, TauScalar
from .tracing import traced


class PairingError(ValueError):
    """Base class for pairing errors."""


class RouteMismatch(PairingError):
    """Raised when the two HRR routes disagree (a sign or tau bookkeeping bug)."""


class NotCalabiYau(PairingError):
    """Raised when the symmetry property is requested on a ring with c_1 != 0."""


@dataclass(frozen=True)
class PairingValue:
    """u-series ``coeffs[k] * u**k`` truncated at ``order``."""

    order: int
    coeffs: Tuple[TauScalar, ...]

    def __getitem__(self, k: int) -> TauScalar:
        return self.coeffs[k] if 0 <= k <= self.order else ZERO

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def __sub__(self, other: "PairingValue") -> "PairingValue":
        order = min(self.order, other.order)
        return PairingValue(order, tuple(self[k] - other[k] for k in range(order + 1)))

    def scale(self, factor) -> "PairingValue":
        return PairingValue(self.order, tuple(c * TauScalar.coerce(factor) for c in self.coeffs))

    def times_u(self) -> "PairingValue":
        return PairingValue(self.order, (ZERO,) + self.coeffs[: self.order])

    def at_minus_u(self) -> "PairingValue":
        return PairingValue(self.order, tuple(c if k % 2 == 0 else -c for k, c in enumerate(self.coeffs)))

    def constant(self) -> TauScalar:
        return self.coeffs[0]

    def __str__(self) -> str:
        return series_text(self.coeffs)


def _same_ring(a: HPElement, b: HPElement) -> None:
    if a.ring is not b.ring and a.ring != b.ring:
        raise RingMismatch(f"Elements live in different rings: {a.ring.name} vs {b.ring.name}")


def _sign(n: int) -> int:
    return -1 if (n * (n + 1) // 2) % 2 else 1


def _sesquilinear(
    a: HPElement,
    b: HPElement,
    weight: Callable[[CohClass, CohClass], CohClass],
    trace: str,
) -> PairingValue:
    """(-1)^{n(n+1)/2} sum_k u^k sum_{i+j=k} (-1)^j tr(weight(a_i, b_j))."""
    order = min(a.u_order, b.u_order)
    sign = _sign(a.ring.n)
    coeffs = []
    for k in range(order + 1):
        acc = ZERO
        for i in range(k + 1):
            j = k - i
            if not a.coeffs[i] or not b.coeffs[j]:
                continue
            value = integrate(weight(a.coeffs[i], b.coeffs[j]), trace)
            acc = acc + (value if j % 2 == 0 else -value)
        coeffs.append(acc.scale(sign))
    return PairingValue(order, tuple(coeffs))


def higher_residue(a: HPElement, b: HPElement, which: str = "J") -> PairingValue:
    """Integrate J(a)(u) against J(vee b)(-u); ``which="K"`` uses the sqrt(td') twist."""
    _same_ring(a, b)
    parity(a)
    parity(b)
    with traced("higher_residue", ring=a.ring.name):
        left = twist(a, which)
        right = twist(vee(b), which)
        return _sesquilinear(left, right, cup, "algebraic")


def canonical_pairing(a: HPElement, b: HPElement, trace: str = "algebraic") -> PairingValue:
    """(-1)^{n(n+1)/2} integral of a(u) b(-u) td.

    ``trace="analytic"`` integrates analytically against the nc-normalised
    Todd class instead.
    """
    _same_ring(a, b)
    with traced("canonical_pairing", ring=a.ring.name, trace=trace):
        td = todd_class(a.ring)
        if trace == "analytic":
            td = nc_normalize(td)
        return _sesquilinear(a, b, lambda x, y: x * y * td, trace)


def mukai_pairing(e: BundleData, f: BundleData) -> TauScalar:
    """integral of ch(E)^dual ch(F) td, the u = 0 specialization of the pairing."""
    if e.ring != f.ring:
        raise RingMismatch("Bundles live in different rings")
    return integrate(dual_character(chern_character(e)) * chern_character(f) * todd_class(e.ring))


@dataclass(frozen=True)
class HRRResult:
    chi: TauScalar
    classical: TauScalar
    canonical: TauScalar


def hrr_routes(e: BundleData, f: BundleData) -> HRRResult:
    """chi(E,F) classically and through the nc Chern character with the analytic trace."""
    classical = mukai_pairing(e, f)
    left = vee(hkr_embed(nc_chern_character(e)))
    right = hkr_embed(nc_chern_character(f))
    canonical = canonical_pairing(left, right, trace="analytic").constant()
    return HRRResult(chi=classical, classical=classical, canonical=canonical)


def hrr_chi(e: BundleData, f: BundleData) -> TauScalar:
    with traced("hrr_chi", ring=e.ring.name, rank_e=e.rank, rank_f=f.rank):
        result = hrr_routes(e, f)
        if result.classical != result.canonical:
            raise RouteMismatch(
                f"Classical route gives {result.classical}, canonical route gives {result.canonical}"
            )
        return result.chi


def symmetry_defect(a: HPElement, b: HPElement) -> PairingValue:
    """<a,b>(u) - (-1)^{n+|a||b|} <b,a>(-u); zero when the pairing is symmetric."""
    _same_ring(a, b)
    ring = a.ring
    if not ring.tangent_known:
        raise MissingTangentData(f"Ring {ring.name} carries no tangent Chern data")
    if first_chern_class(ring):
        raise NotCalabiYau(f"Ring {ring.name} has c_1 = {first_chern_class(ring)}")
    pa, pb = parity(a) or 0, parity(b) or 0
    sign = -1 if (ring.n + pa * pb) % 2 else 1
    forward = higher_residue(a, b)
    backward = higher_residue(b, a).at_minus_u()
    return forward - backward.scale(sign)


@dataclass(frozen=True)
class ResidueGram:
    """Constant terms of the higher residue pairing on basis classes.

    ``entries`` maps ``(i, j)`` to ``<e_i, e_j>``; pairs that are absent pair to zero.
    """

    ring: CohRing
    entries: Dict[Tuple[int, int], TauScalar]

    def __getitem__(self, key: Tuple[int, int]) -> TauScalar:
        return self.entries.get(key, ZERO)


def _partner_rows(ring: CohRing) -> List[List[Tuple[int, TauScalar]]]:
    """For each basis class e_k, the classes e_j with a nonzero integral of e_k e_j."""
    n, top = ring.n, ring.top_index
    rows = []
    for k, element in enumerate(ring.basis):
        row = []
        for j in ring.indices_in(n - element.p, n - element.q):
            value = ring.product_vector(k, j).get(top, ZERO)
            if value:
                row.append((j, value))
        rows.append(row)
    return rows


def residue_gram(ring: CohRing, which: str = "J") -> ResidueGram:
    """Gram matrix of the higher residue pairing on the basis placed at u^0.

    The twist class is even, so ``<e_i, e_j> = sign (-1)^{p_j} integral(T^2 e_i e_j)``
    and one cup per basis class is enough.
    """
    with traced("residue_gram", ring=ring.name, twist=which, dim=ring.dim) as span:
        factor = twist_class(ring, which)
        square = factor * factor
        rows = _partner_rows(ring)
        sign = _sign(ring.n)
        entries: Dict[Tuple[int, int], TauScalar] = {}
        for i in range(ring.dim):
            image = square * CohClass.basis_class(ring, i)
            for k, coeff in image.items():
                for j, value in rows[k]:
                    term = coeff * value
                    entries[(i, j)] = entries.get((i, j), ZERO) + (term if ring.basis[j].p % 2 == 0 else -term)
        entries = {key: value.scale(sign) for key, value in entries.items() if value}
        span["nchodge.entries"] = len(entries)
        return ResidueGram(ring, entries)


@dataclass(frozen=True)
class SymmetrySweep:
    ring: str
    pairs: int
    violations: Tuple[Tuple[str, str, TauScalar], ...]

    @property
    def passed(self) -> bool:
        return not self.violations


def symmetry_sweep(ring: CohRing, which: str = "J") -> SymmetrySweep:
    """Check <e_i,e_j> = (-1)^{n+|e_i||e_j|} <e_j,e_i> on every pair of basis classes."""
    if not ring.tangent_known:
        raise MissingTangentData(f"Ring {ring.name} carries no tangent Chern data")
    if first_chern_class(ring):
        raise NotCalabiYau(f"Ring {ring.name} has c_1 = {first_chern_class(ring)}")
    with traced("symmetry_sweep", ring=ring.name) as span:
        gram = residue_gram(ring, which)
        keys = set(gram.entries) | {(j, i) for i, j in gram.entries}
        violations = []
        for i, j in sorted(keys):
            a, b = ring.basis[i], ring.basis[j]
            sign = -1 if (ring.n + a.degree * b.degree) % 2 else 1
            defect = gram[(i, j)] - gram[(j, i)].scale(sign)
            if defect:
                violations.append((a.label, b.label, defect))
        span["nchodge.violations"] = len(violations)
        return SymmetrySweep(ring.name, ring.dim * ring.dim, tuple(violations))
