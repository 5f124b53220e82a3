from __future__ import annotations

import math
import random
from fractions import Fraction

import pytest

from nchodge.charclass import MissingTangentData
from nchodge.cohring import CohClass, RingMismatch, build_builtin, projective_space, ring_from_document
from nchodge.ncvshs import (
    HodgeError,
    HPElement,
    MixedParity,
    element_from_document,
    element_to_document,
    hkr_embed,
    hodge_level,
    parity,
    rational_check,
    twist,
    u_valuation,
    vee,
)
from nchodge.scalars import TAU, TauScalar


def basis(ring, label, coeff=1):
    return CohClass.basis_class(ring, label, coeff)


def test_hkr_embed_sits_in_u_degree_zero():
    ring = projective_space(1)
    x = hkr_embed(basis(ring, "h"), u_order=2)
    assert x.coeffs[0] == basis(ring, "h")
    assert not x.coeffs[1] and not x.coeffs[2]
    assert not hkr_embed(CohClass.zero(ring), 3)


def test_twist_on_k3():
    ring = build_builtin("k3")
    one = hkr_embed(CohClass.unit(ring))
    assert twist(one, "J").coeffs[0] == CohClass.unit(ring) + basis(ring, "pt")


def test_twists_agree_and_are_trivial_on_the_elliptic_curve():
    ring = build_builtin("e")
    x = HPElement.from_series(ring, 1, {0: basis(ring, "dz"), 1: CohClass.unit(ring)})
    assert twist(x, "J") == x
    assert twist(x, "K") == x


def test_modified_twist_is_trivial_on_p1():
    ring = projective_space(1)
    one = hkr_embed(CohClass.unit(ring))
    assert twist(one, "K") == one
    assert twist(one, "J") != one


@pytest.mark.parametrize("name", ["p2", "k3", "quintic-diamond"])
@pytest.mark.parametrize("which", ["J", "K"])
def test_twist_then_inverse_twist_is_identity(name, which):
    ring = build_builtin(name)
    for element in ring.basis:
        x = HPElement.from_series(ring, 1, {0: basis(ring, element.label), 1: basis(ring, element.label, 3)})
        back = twist(twist(x, which), which, inverse=True)
        assert back == x
        assert u_valuation(twist(x, which)) == u_valuation(x)


def test_unknown_twist_rejected():
    ring = projective_space(1)
    with pytest.raises(HodgeError):
        twist(hkr_embed(CohClass.unit(ring)), "L")


def test_twist_needs_tangent_data():
    document = {
        "dimension": 1,
        "basis": [{"label": "1", "p": 0, "q": 0}, {"label": "h", "p": 1, "q": 1}],
        "top": "h",
    }
    ring = ring_from_document(document)
    with pytest.raises(MissingTangentData):
        twist(hkr_embed(CohClass.unit(ring)), "J")


def test_vee_signs_and_involution():
    ring = projective_space(1)
    x = hkr_embed(CohClass.unit(ring) + basis(ring, "h"), 1).times_u()
    assert vee(x).coeffs[1] == CohClass.unit(ring) - basis(ring, "h")
    assert vee(vee(x)) == x
    k3 = build_builtin("k3")
    pt = hkr_embed(basis(k3, "pt"))
    assert vee(pt) == pt
    assert vee(x.times_u()) == vee(x).times_u()


def test_u_valuation():
    ring = projective_space(1)
    h = hkr_embed(basis(ring, "h"), 2)
    assert u_valuation(h) == 0
    assert u_valuation(h.times_u()) == 1
    assert u_valuation(HPElement.zero(ring, 2)) == math.inf


def test_times_u_truncates_and_rejects_negative_shifts():
    ring = projective_space(1)
    h = hkr_embed(basis(ring, "h"), 1)
    assert not h.times_u(2)
    with pytest.raises(HodgeError):
        h.times_u(-1)


def test_substitute_minus_u():
    ring = projective_space(1)
    one = CohClass.unit(ring)
    x = HPElement.from_series(ring, 2, {0: one, 1: one, 2: one})
    assert x.substitute_minus_u().coeffs == (one, -one, one)


@pytest.mark.parametrize(
    "coeff,expected",
    [(TauScalar.rational(1), True), (TAU**-1, True), (TAU, False), (TAU**-2, False)],
)
def test_rational_check_on_p1_hyperplane(coeff, expected):
    ring = projective_space(1)
    x = hkr_embed(basis(ring, "h", coeff))
    assert rational_check(x) is expected


@pytest.mark.parametrize("which", ["J", "K"])
def test_twists_preserve_rationality(which):
    ring = projective_space(2)
    x = hkr_embed(CohClass.unit(ring) + basis(ring, "h", TAU**-1) + basis(ring, "h^2", TAU**-2), 1)
    assert rational_check(x)
    assert rational_check(twist(x, which))


def random_rational_element(ring, rng, u_order=1):
    """Coefficients on (p,q) are tau^-p times a rational polynomial of degree <= p."""
    series = {}
    for k in range(u_order + 1):
        value = CohClass.zero(ring)
        for element in rng.sample(list(ring.basis), min(3, ring.dim)):
            coeff = TauScalar.from_map(
                {j - element.p: Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for j in range(element.p + 1)}
            )
            value = value + CohClass.basis_class(ring, element.label, coeff)
        series[k] = value
    return HPElement.from_series(ring, u_order, series)


@pytest.mark.parametrize("name", ["p2", "p3", "k3", "quintic-diamond", "p1xp1"])
def test_twists_preserve_rationality_on_random_elements(name):
    ring = build_builtin(name)
    rng = random.Random(41)
    for _ in range(100):
        x = random_rational_element(ring, rng)
        assert rational_check(x)
        for which in ("J", "K"):
            assert rational_check(twist(x, which)), (which, x)


def test_parity_and_hodge_level():
    ring = build_builtin("e")
    assert parity(hkr_embed(basis(ring, "dz"))) == 1
    assert parity(hkr_embed(CohClass.unit(ring) + basis(ring, "pt"))) == 0
    assert parity(HPElement.zero(ring, 0)) is None
    with pytest.raises(MixedParity):
        parity(hkr_embed(CohClass.unit(ring) + basis(ring, "dz")))
    assert hodge_level(hkr_embed(basis(ring, "dz") + basis(ring, "dzb"))) == 0
    assert hodge_level(HPElement.zero(ring, 0)) is None


def test_element_shape_is_checked():
    ring = projective_space(1)
    with pytest.raises(HodgeError):
        HPElement(ring, -1, ())
    with pytest.raises(HodgeError):
        HPElement(ring, 1, (CohClass.zero(ring),))


def test_arithmetic_across_rings_or_orders_fails():
    with pytest.raises(RingMismatch):
        hkr_embed(CohClass.unit(projective_space(1))) + hkr_embed(CohClass.unit(projective_space(2)))
    ring = projective_space(1)
    with pytest.raises(HodgeError):
        hkr_embed(CohClass.unit(ring), 0) + hkr_embed(CohClass.unit(ring), 1)


def test_element_document_round_trip():
    ring = projective_space(2)
    x = HPElement.from_series(ring, 1, {0: basis(ring, "h", TAU**-1), 1: basis(ring, "h^2", 3)})
    document = element_to_document(x)
    assert document["u_order"] == 1
    assert [c["label"] for c in document["components"]] == ["h", "h^2"]
    assert element_from_document(ring, document) == x


def test_element_document_errors():
    ring = projective_space(1)
    with pytest.raises(HodgeError):
        element_from_document(ring, {"components": []})
    with pytest.raises(HodgeError):
        element_from_document(ring, {"u_order": 0, "components": [{"label": "h", "u_coeffs": [1, 2]}]})
