from __future__ import annotations

import random
from fractions import Fraction

import pytest

from nchodge.charclass import (
    BadChernDegrees,
    BundleData,
    CharClassError,
    MissingTangentData,
    OrderTooSmall,
    SeriesNotUnital,
    chern_character,
    class_power,
    direct_sum,
    dual_bundle,
    exp_class,
    is_calabi_yau,
    line_bundle,
    modified_todd_class,
    multiplicative_class,
    mukai_vector,
    nc_chern_character,
    nc_normalize,
    power_sums,
    resolve_bundle,
    sqrt_class,
    sqrt_todd,
    tangent_bundle,
    todd_class,
    total_chern_class,
    trivial_bundle,
)
from nchodge.cohring import CohClass, build_builtin, projective_space, ring_from_document
from nchodge.scalars import CharSeries, NonzeroConstantTerm, NotUnital, TauScalar, modified_todd_series, todd_series


def cls(ring, **coeffs):
    mapping = {("1" if label == "one" else label.replace("_", "^")): value for label, value in coeffs.items()}
    return CohClass.from_labels(ring, mapping)


def test_todd_of_projective_line_and_plane():
    p1 = projective_space(1)
    assert str(todd_class(p1)) == "1 + 1 h"
    p2 = projective_space(2)
    assert todd_class(p2) == cls(p2, one=1, h=Fraction(3, 2), h_2=1)


def test_modified_todd_is_todd_times_exp_of_minus_half_c1():
    for n in (1, 2, 3, 4):
        ring = projective_space(n)
        c1 = ring.tangent_class(1)
        assert modified_todd_class(ring) == todd_class(ring) * exp_class(c1.scale(Fraction(-1, 2)))
    p2 = projective_space(2)
    assert modified_todd_class(p2) == cls(p2, one=1, h_2=Fraction(-1, 8))


@pytest.mark.parametrize("name", ["e", "k3", "quintic-diamond"])
def test_todd_classes_agree_on_calabi_yau_rings(name):
    ring = build_builtin(name)
    assert is_calabi_yau(ring)
    assert modified_todd_class(ring) == todd_class(ring)


def test_k3_todd_and_mukai_vector():
    ring = build_builtin("k3")
    pt = CohClass.basis_class(ring, "pt")
    unit = CohClass.unit(ring)
    assert todd_class(ring) == unit + pt.scale(2)
    assert sqrt_todd(ring) == unit + pt
    assert mukai_vector(trivial_bundle(ring)) == unit + pt


def test_quintic_todd_class():
    ring = build_builtin("quintic")
    expected = CohClass.unit(ring) + CohClass.basis_class(ring, "e22", Fraction(5, 6))
    assert todd_class(ring) == expected


def test_chern_character_of_line_bundles():
    ring = projective_space(2)
    assert chern_character(line_bundle(ring, 3)) == cls(ring, one=1, h=3, h_2=Fraction(9, 2))
    assert chern_character(dual_bundle(line_bundle(ring, 3))) == chern_character(line_bundle(ring, -3))


def test_tangent_bundle_character_and_whitney_sum():
    ring = projective_space(2)
    tangent = tangent_bundle(ring)
    assert chern_character(tangent) == cls(ring, one=2, h=3, h_2=Fraction(3, 2))
    o1 = line_bundle(ring, 1)
    three = direct_sum(direct_sum(o1, o1), o1)
    assert total_chern_class(three) == total_chern_class(tangent)
    assert three.rank == 3


def test_power_sums():
    ring = projective_space(2)
    two = direct_sum(line_bundle(ring, 1), line_bundle(ring, 1))
    assert power_sums(two) == [cls(ring, h=2), cls(ring, h_2=2)]


def test_bundle_resolution():
    ring = projective_space(3)
    assert resolve_bundle(ring, "O^3").rank == 3
    assert chern_character(resolve_bundle(ring, "O")) == CohClass.unit(ring)
    assert resolve_bundle(ring, "O(-2)") == line_bundle(ring, -2)
    assert resolve_bundle(ring, "TX") == tangent_bundle(ring)
    with pytest.raises(CharClassError):
        resolve_bundle(ring, "Sym2")


def test_named_bundles_from_document():
    document = {
        "dimension": 1,
        "basis": [{"label": "1", "p": 0, "q": 0}, {"label": "h", "p": 1, "q": 1}],
        "top": "h",
        "tangent_chern": [{"k": 1, "class": [{"label": "h", "coeff": 2}]}],
        "bundles": {"V": {"rank": 2, "chern": [{"k": 1, "class": [{"label": "h", "coeff": 5}]}]}},
    }
    ring = ring_from_document(document)
    bundle = resolve_bundle(ring, "V")
    assert bundle.rank == 2
    assert chern_character(bundle) == CohClass.from_labels(ring, {"1": 2, "h": 5})


def test_line_bundle_needs_polarization():
    with pytest.raises(CharClassError):
        line_bundle(build_builtin("e"), 1)


def test_bad_chern_degrees():
    ring = projective_space(2)
    with pytest.raises(BadChernDegrees):
        BundleData(ring, 1, (CohClass.basis_class(ring, "h^2"),))
    with pytest.raises(BadChernDegrees):
        BundleData(ring, 1, (CohClass.zero(ring),) * 3)


def test_multiplicative_class_errors():
    ring = projective_space(3)
    with pytest.raises(OrderTooSmall):
        multiplicative_class(todd_series(2), tangent_bundle(ring))
    with pytest.raises(SeriesNotUnital):
        multiplicative_class(CharSeries.from_values([2, 1], 3), tangent_bundle(ring))


def test_missing_tangent_data():
    document = {
        "dimension": 1,
        "basis": [{"label": "1", "p": 0, "q": 0}, {"label": "h", "p": 1, "q": 1}],
        "top": "h",
    }
    ring = ring_from_document(document)
    with pytest.raises(MissingTangentData):
        todd_class(ring)
    with pytest.raises(MissingTangentData):
        is_calabi_yau(ring)


def test_exp_and_powers_of_classes():
    ring = projective_space(2)
    h = CohClass.basis_class(ring, "h")
    assert exp_class(h) == cls(ring, one=1, h=1, h_2=Fraction(1, 2))
    with pytest.raises(NonzeroConstantTerm):
        exp_class(CohClass.unit(ring))
    td = todd_class(ring)
    root = class_power(td, Fraction(1, 2))
    assert root * root == td
    assert class_power(td, -1) * td == CohClass.unit(ring)
    with pytest.raises(NotUnital):
        class_power(h, 2)


def test_nc_normalisation():
    ring = projective_space(1)
    h = CohClass.basis_class(ring, "h")
    assert nc_normalize(h) == h.scale(TauScalar.monomial(-1, -1))
    expected = CohClass.unit(ring) + h.scale(TauScalar.monomial(-2, -1))
    assert nc_chern_character(line_bundle(ring, 2)) == expected


def test_sqrt_class_of_plane_todd_class():
    p2 = projective_space(2)
    td = cls(p2, one=1, h=Fraction(3, 2), h_2=1)
    root = sqrt_class(td)
    assert root == cls(p2, one=1, h=Fraction(3, 4), h_2=Fraction(7, 32))
    assert root * root == td
    with pytest.raises(NotUnital):
        sqrt_class(cls(p2, h=1))


def _random_bundle(ring, rng):
    classes = [
        CohClass.basis_class(ring, f"h^{k}" if k > 1 else "h", Fraction(rng.randint(-4, 4), rng.randint(1, 3)))
        for k in range(1, ring.n + 1)
    ]
    return BundleData(ring, rng.randint(1, 4), tuple(classes))


def test_multiplicative_classes_satisfy_whitney_sum_formula():
    ring = projective_space(3)
    rng = random.Random(13)
    series_pool = [
        todd_series(3),
        modified_todd_series(3),
        CharSeries.from_values([1, "1/3", -2, "5/7"], 3),
    ]
    for _ in range(25):
        e, f = _random_bundle(ring, rng), _random_bundle(ring, rng)
        total = direct_sum(e, f)
        for series in series_pool:
            assert multiplicative_class(series, total) == multiplicative_class(series, e) * multiplicative_class(series, f)


def test_product_rings_carry_pulled_back_polarizations():
    ring = build_builtin("p1xp1")
    assert ring.polarization_classes == ("h|1", "1|h")
    bundle = line_bundle(ring, (2, -1))
    assert bundle.c(1) == CohClass.from_labels(ring, {"h|1": 2, "1|h": -1})
    assert line_bundle(ring, 3).c(1) == CohClass.from_labels(ring, {"h|1": 3, "1|h": 3})
    assert resolve_bundle(ring, "O(2, -1)").c(1) == bundle.c(1)
    assert resolve_bundle(ring, "O(1)").c(1) == resolve_bundle(ring, "O(1,1)").c(1)
    with pytest.raises(CharClassError):
        line_bundle(ring, (1, 2, 3))


def test_products_with_an_unpolarized_factor():
    ring = build_builtin("exp1")
    assert ring.polarization_classes == ("1|h",)
    assert line_bundle(ring, 2).c(1) == CohClass.from_labels(ring, {"1|h": 2})
    with pytest.raises(CharClassError):
        line_bundle(build_builtin("exe"), 1)


def test_quintic_hyperplane_bundle():
    ring = build_builtin("quintic-diamond")
    assert chern_character(resolve_bundle(ring, "O(1)")) == CohClass.from_labels(
        ring, {"1": 1, "e11": 1, "e22": Fraction(1, 2), "pt": Fraction(5, 6)}
    )
