from __future__ import annotations

import itertools
import random
import time
from fractions import Fraction
from math import factorial

import pytest

from nchodge import pairing
from nchodge.charclass import bundle_from_classes, line_bundle, resolve_bundle, todd_class, trivial_bundle
from nchodge.cohring import CohClass, RingMismatch, build_builtin, integrate, projective_space
from nchodge.ncvshs import HPElement, MixedParity, hkr_embed, vee
from nchodge.pairing import (
    NotCalabiYau,
    PairingValue,
    ResidueGram,
    canonical_pairing,
    higher_residue,
    hrr_chi,
    hrr_routes,
    mukai_pairing,
    residue_gram,
    symmetry_defect,
    symmetry_sweep,
)
from nchodge.scalars import TauScalar
from nchodge.tracing import RECORDER


def setup_function(_) -> None:
    RECORDER.clear()


def basis(ring, label, coeff=1, u_order=0):
    return hkr_embed(CohClass.basis_class(ring, label, coeff), u_order)


def binomial_chi(a: int, n: int) -> Fraction:
    """C(a+n, n) as a polynomial in a, valid for negative a."""
    value = Fraction(1)
    for i in range(1, n + 1):
        value *= a + i
    return value / factorial(n)


def random_element(ring, u_order, rng, parity_bit):
    labels = [e.label for e in ring.basis if e.degree % 2 == parity_bit]
    series = {}
    for k in range(u_order + 1):
        value = CohClass.zero(ring)
        for label in rng.sample(labels, min(2, len(labels))):
            value = value + CohClass.basis_class(ring, label, rng.randint(-3, 3))
        series[k] = value
    return HPElement.from_series(ring, u_order, series)


def test_elliptic_higher_residue_values():
    ring = build_builtin("e")
    one = basis(ring, "1")
    pt = basis(ring, "pt")
    assert not higher_residue(one, one)
    assert higher_residue(one, pt).constant() == TauScalar.rational(1)
    assert higher_residue(pt, one).constant() == TauScalar.rational(-1)


def test_pairing_value_truncates_at_smaller_order():
    ring = build_builtin("e")
    value = higher_residue(basis(ring, "1", u_order=3), basis(ring, "pt", u_order=1))
    assert value.order == 1
    assert str(PairingValue(1, (TauScalar.rational(2), TauScalar.rational(0)))) == "2"


@pytest.mark.parametrize("name", ["e", "k3", "quintic-diamond", "p2"])
def test_higher_residue_is_canonical_pairing_after_vee(name):
    ring = build_builtin(name)
    rng = random.Random(7)
    for _ in range(200):
        bit = rng.randint(0, 1) if name == "e" else 0
        a = random_element(ring, 2, rng, bit)
        b = random_element(ring, 2, rng, bit)
        assert higher_residue(a, b) == canonical_pairing(a, vee(b))


def test_sesquilinearity():
    ring = build_builtin("k3")
    rng = random.Random(11)
    a = random_element(ring, 2, rng, 0)
    b = random_element(ring, 2, rng, 0)
    base = higher_residue(a, b)
    assert higher_residue(a.times_u(), b) == base.times_u()
    assert higher_residue(a, b.times_u()) == base.times_u().scale(-1)


def test_canonical_pairing_is_zero_on_zero():
    ring = projective_space(2)
    zero = HPElement.zero(ring, 1)
    assert not canonical_pairing(zero, basis(ring, "h", u_order=1))
    assert not canonical_pairing(basis(ring, "h", u_order=1), zero)


def test_pairing_rejects_mixed_parity_and_foreign_rings():
    ring = build_builtin("e")
    mixed = hkr_embed(CohClass.unit(ring) + CohClass.basis_class(ring, "dz"))
    with pytest.raises(MixedParity):
        higher_residue(mixed, basis(ring, "pt"))
    with pytest.raises(RingMismatch):
        higher_residue(basis(ring, "pt"), basis(projective_space(1), "h"))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_hrr_on_projective_spaces(n):
    ring = projective_space(n)
    o = trivial_bundle(ring)
    for a in range(-5, 6):
        assert hrr_chi(o, line_bundle(ring, a)) == TauScalar.rational(binomial_chi(a, n))


def test_hrr_examples():
    p2 = projective_space(2)
    assert hrr_chi(trivial_bundle(p2), line_bundle(p2, 1)) == TauScalar.rational(3)
    p1 = projective_space(1)
    assert hrr_chi(trivial_bundle(p1), line_bundle(p1, -1)) == TauScalar.rational(0)


def test_hrr_routes_agree_between_line_bundles():
    ring = projective_space(3)
    for a, b in itertools.product(range(-2, 3), repeat=2):
        routes = hrr_routes(line_bundle(ring, a), line_bundle(ring, b))
        assert routes.classical == routes.canonical
        # chi(O(a), O(b)) = chi(O, O(b - a))
        assert routes.chi == TauScalar.rational(binomial_chi(b - a, 3))


def _line(ring, **coeffs):
    return bundle_from_classes(ring, 1, [CohClass.from_labels(ring, coeffs)])


def _bundles(name):
    ring = build_builtin(name)
    if name == "e":
        return ring, [trivial_bundle(ring), trivial_bundle(ring, 2), _line(ring, pt=3), _line(ring, pt=-2)]
    if name == "k3":
        return ring, [trivial_bundle(ring), _line(ring, e11_1=1), _line(ring, e11_1=2, e11_2=1), _line(ring, e11_3=-1)]
    if name == "quintic-diamond":
        return ring, [trivial_bundle(ring), line_bundle(ring, 1), line_bundle(ring, -2), resolve_bundle(ring, "T")]
    bundles = [trivial_bundle(ring), line_bundle(ring, 1), line_bundle(ring, -1), resolve_bundle(ring, "T")]
    if name == "p1xp1":
        bundles += [line_bundle(ring, degrees) for degrees in ((1, -1), (2, 0), (-1, 3))]
    return ring, bundles


@pytest.mark.parametrize("name", ["e", "k3", "quintic-diamond", "p1xp1", "exp1"])
def test_hrr_routes_agree_beyond_projective_spaces(name):
    ring, bundles = _bundles(name)
    for e, f in itertools.product(bundles, repeat=2):
        routes = hrr_routes(e, f)
        assert routes.classical == routes.canonical, (name, e, f)
        assert routes.chi.is_rational()


def test_hrr_values_beyond_projective_spaces():
    e = build_builtin("e")
    assert hrr_chi(trivial_bundle(e), _line(e, pt=3)) == TauScalar.rational(3)
    k3 = build_builtin("k3")
    # chi(L) = L^2/2 + 2 with L^2 = 2^2 - 1^2 on e11_1, e11_2
    assert hrr_chi(trivial_bundle(k3), _line(k3, e11_1=2, e11_2=1)) == TauScalar.rational(Fraction(7, 2))
    quintic = build_builtin("quintic-diamond")
    # chi(O(a)) = 5a^3/6 + 25a/6
    assert hrr_chi(trivial_bundle(quintic), line_bundle(quintic, 1)) == TauScalar.rational(5)
    assert hrr_chi(trivial_bundle(quintic), line_bundle(quintic, 2)) == TauScalar.rational(15)
    surface = build_builtin("p1xp1")
    for a, b in itertools.product(range(-2, 3), repeat=2):
        assert hrr_chi(trivial_bundle(surface), line_bundle(surface, (a, b))) == TauScalar.rational((a + 1) * (b + 1))


def test_hrr_records_a_span():
    ring = projective_space(1)
    hrr_chi(trivial_bundle(ring), line_bundle(ring, 2))
    ops = [e["attrs"]["nchodge.op"] for e in RECORDER.events]
    assert "hrr_chi" in ops
    assert "canonical_pairing" in ops


def test_mukai_pairing():
    k3 = build_builtin("k3")
    assert mukai_pairing(trivial_bundle(k3), trivial_bundle(k3)) == TauScalar.rational(2)
    p1 = projective_space(1)
    for a in range(-3, 4):
        assert mukai_pairing(trivial_bundle(p1), line_bundle(p1, a)) == TauScalar.rational(a + 1)
    p3 = projective_space(3)
    assert mukai_pairing(trivial_bundle(p3), trivial_bundle(p3)) == integrate(todd_class(p3))


def test_mukai_pairing_across_rings_fails():
    with pytest.raises(RingMismatch):
        mukai_pairing(trivial_bundle(projective_space(1)), trivial_bundle(projective_space(2)))


def test_symmetry_examples_on_elliptic_curve():
    ring = build_builtin("e")
    assert not symmetry_defect(basis(ring, "1"), basis(ring, "pt"))
    assert not symmetry_defect(basis(ring, "dz"), basis(ring, "dzb"))


@pytest.mark.parametrize("name", ["e", "k3", "quintic-diamond", "exe"])
def test_symmetry_holds_on_every_basis_pair_of_calabi_yau_rings(name):
    ring = build_builtin(name)
    sweep = symmetry_sweep(ring)
    assert sweep.passed, sweep.violations[:3]
    assert sweep.pairs == ring.dim * ring.dim


def test_quintic_symmetry_sweep_is_fast():
    ring = build_builtin("quintic-diamond")
    start = time.perf_counter()
    sweep = symmetry_sweep(ring)
    assert sweep.passed
    assert sweep.pairs == 206 * 206
    assert time.perf_counter() - start < 5.0


@pytest.mark.parametrize("name", ["e", "k3", "quintic-diamond"])
def test_residue_gram_matches_the_pairing_on_basis_classes(name):
    ring = build_builtin(name)
    gram = residue_gram(ring)
    rng = random.Random(23)
    pairs = [(i, j) for i in range(ring.dim) for j in range(ring.dim)]
    chosen = pairs if len(pairs) <= 400 else rng.sample(pairs, 60) + sorted(gram.entries)[:60]
    for i, j in chosen:
        a = hkr_embed(CohClass.basis_class(ring, i))
        b = hkr_embed(CohClass.basis_class(ring, j))
        assert gram[(i, j)] == higher_residue(a, b).constant(), (ring.basis[i].label, ring.basis[j].label)


def test_symmetry_holds_for_u_dependent_elements():
    ring = build_builtin("k3")
    rng = random.Random(29)
    for _ in range(10):
        a = random_element(ring, 2, rng, 0)
        b = random_element(ring, 2, rng, 0).times_u()
        assert not symmetry_defect(a, b)


def test_symmetry_sweep_reports_asymmetric_entries(monkeypatch):
    ring = build_builtin("e")
    honest = residue_gram(ring)
    one, pt = ring.index("1"), ring.index("pt")
    broken = dict(honest.entries)
    broken[(one, pt)] = broken[(one, pt)] + 1
    monkeypatch.setattr(pairing, "residue_gram", lambda r, which="J": ResidueGram(r, broken))
    sweep = symmetry_sweep(ring)
    assert not sweep.passed
    assert {(left, right) for left, right, _ in sweep.violations} == {("1", "pt"), ("pt", "1")}


def test_symmetry_sweep_records_a_span():
    symmetry_sweep(build_builtin("e"))
    ends = [e["attrs"] for e in RECORDER.events if e["event"] == "end"]
    sweep = next(attrs for attrs in ends if attrs["nchodge.op"] == "symmetry_sweep")
    assert sweep["nchodge.violations"] == 0
    assert any(attrs["nchodge.op"] == "residue_gram" for attrs in ends)


def test_symmetry_requires_calabi_yau():
    ring = projective_space(2)
    with pytest.raises(NotCalabiYau):
        symmetry_defect(basis(ring, "1"), basis(ring, "h^2"))
    with pytest.raises(NotCalabiYau):
        symmetry_sweep(ring)


@pytest.mark.parametrize("name", ["e", "k3", "quintic-diamond"])
def test_j_and_k_agree_on_calabi_yau_rings(name):
    ring = build_builtin(name)
    rng = random.Random(3)
    a = random_element(ring, 1, rng, 0)
    b = random_element(ring, 1, rng, 0)
    assert higher_residue(a, b, which="K") == higher_residue(a, b, which="J")
