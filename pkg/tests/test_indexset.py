from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ccscatter.errors import IntegrabilityError, SymbolicOrderError
from ccscatter.indexset import (ABSENT, DOUBLE, FAMILY_DATA, FAMILY_F, FAMILY_H, FAMILY_I,
                                FAMILY_M, FAMILY_PSI0, INF, PRODUCT, PSI_LR, PSI_MR_REDUCED,
                                SINGLE, TRIPLE, IndexFamily, LiftChart, NAMED_FAMILIES, br,
                                compose_families, composition_charts, contained_in,
                                extended_union, mapping_on_functions, projection_charts,
                                pullback_family, pushforward_family, reg, sig, sum_families,
                                transpose_family)

H = Fraction(1, 2)


def row(fam, faces=None):
    faces = fam.space.faces if faces is None else faces
    return [str(fam[f]) for f in faces]


REG3 = ("L", "M", "R", "LM", "MR", "LR", "LMR")
CROSS3 = tuple("c" + f for f in REG3)


# -- extended union ---------------------------------------------------------

def test_union_examples():
    assert extended_union(br(0, H), br(H, H, True)) == br(0, H)
    assert extended_union(br(1, 0, True), br(H, 1, True)) == br(1, 0, True)
    assert extended_union(INF, br(0, H)) == br(0, H)
    assert extended_union(br(0, H), INF) == br(0, H)


def test_union_equal_offsets_adds_log():
    assert extended_union(br(0, H), br(0, H)) == br(0, H, True)
    assert extended_union(reg(sig("l")), reg(sig("l"))).plus


def test_union_incomparable_raises():
    with pytest.raises(SymbolicOrderError):
        extended_union(br(1), br(0, 1))  # 1 vs n: equal at n = 1, no log marker
    with pytest.raises(SymbolicOrderError):
        extended_union(reg(sig("l")), reg(1))


ENTRIES = st.sampled_from([INF, br(0), br(H, plus=True), br(0, H), br(H, H, plus=True),
                           br(1, plus=True), br(0, 1), br(H, 1, plus=True), br(2)])


@given(ENTRIES, ENTRIES)
def test_union_commutative(a, b):
    try:
        ab = extended_union(a, b)
    except SymbolicOrderError:
        with pytest.raises(SymbolicOrderError):
            extended_union(b, a)
        return
    assert ab == extended_union(b, a)


@given(ENTRIES, ENTRIES, ENTRIES)
def test_union_associative(a, b, c):
    try:
        left = extended_union(extended_union(a, b), c)
        right = extended_union(a, extended_union(b, c))
    except SymbolicOrderError:
        return
    assert left == right


@given(ENTRIES)
def test_union_identity(a):
    assert extended_union(INF, a) == a


# -- charts -----------------------------------------------------------------

def test_lift_chart_table():
    # rows of the lift chart, one letter per triple face (regular and crossover alike)
    from ccscatter.indexset import PSI_LM, PSI_MR
    expect = [
        (PSI_LM, "l r -- f r l f"),
        (PSI_MR, "-- l r l f r f"),
        (PSI_LR, "l -- r l r f f"),
    ]
    for chart, letters in expect:
        r = chart.row()
        assert " ".join(r[f] for f in REG3) == letters
        assert " ".join(r["c" + f] for f in REG3).replace("c", "") == letters
        assert chart.is_b_fibration


def test_identity_pullback():
    ident = LiftChart("id", DOUBLE, DOUBLE, {f: (f,) for f in DOUBLE.faces}, {"l": "l", "r": "r"})
    assert pullback_family(ident, FAMILY_F) == FAMILY_F


def test_pullback_rows_ff():
    a, b, _ = composition_charts(FAMILY_F, FAMILY_F)
    assert row(a, REG3) == ["∞", "σ_M", "--", "∞", "σ_R", "∞", "∞"]
    assert row(b, REG3) == ["--", "∞", "σ_R", "∞", "∞", "σ_R", "∞"]
    assert row(a, CROSS3) == ["[(n+1)/2]_+", "[n/2]", "--", "[1/2]_+", "[n/2]", "[(n+1)/2]_+", "[1/2]_+"]
    assert row(b, CROSS3) == ["--", "[(n+1)/2]_+", "[n/2]", "[(n+1)/2]_+", "[1/2]_+", "[n/2]", "[1/2]_+"]


def test_ff_pushforward_terms():
    _, _, s = composition_charts(FAMILY_F, FAMILY_F)
    # middle crossover face: [n + 1/2]_+ (integrable); left crossover ladder
    assert str(s["cM"]) == "[(2n+1)/2]_+"
    assert str(s["cLM"]) == "[(n+2)/2]_+"
    assert str(s["cLMR"]) == "[1]_+"
    assert str(s["cLR"]) == "[(2n+1)/2]_+"


def test_pullback_rows_mf():
    a, b, _ = composition_charts(FAMILY_M, FAMILY_F)
    assert row(a, REG3) == ["σ_L", "σ_M", "--", "0", "σ_R", "σ_R", "0"]
    assert row(b, REG3) == ["--", "∞", "σ_R", "∞", "∞", "σ_R", "∞"]
    # the printed chart writes the LM / LMR cells as 0; they are the ladder [0]
    assert row(a, CROSS3) == ["[n/2]", "[n/2]", "--", "[0]", "[n/2]", "[n/2]", "[0]"]
    assert row(b, CROSS3) == ["--", "[(n+1)/2]_+", "[n/2]", "[(n+1)/2]_+", "[1/2]_+", "[n/2]", "[1/2]_+"]


def test_pullback_rows_mh_reduced():
    a, b, _ = composition_charts(FAMILY_M, FAMILY_H, "reduced")
    assert row(a, ("L", "M", "R", "LM")) == ["σ_L", "σ_M", "--", "0"]
    assert row(b, ("L", "M", "R", "LM")) == ["--", "∞", "σ_R", "∞"]
    assert row(a, ("cL", "cM", "cR", "cLM")) == ["[n/2]", "[n/2]", "--", "[0]"]
    assert row(b, ("cL", "cM", "cR", "cLM")) == ["--", "[(n+1)/2]_+", "[n/2]", "[(n+1)/2]_+"]


def test_psi_mr_pullback_of_h():
    b = pullback_family(PSI_MR_REDUCED, FAMILY_H)
    assert (str(b["M"]), str(b["R"]), str(b["LM"])) == ("∞", "σ_R", "∞")


def test_empty_preimage_pushforward():
    chart = LiftChart("drop", SINGLE, SINGLE, {"reg": (), "cross": ("cross",)}, {"": ""})
    out = pushforward_family(chart, FAMILY_DATA)
    assert out["reg"] == INF


def test_pushforward_integrability():
    bad = IndexFamily(TRIPLE, tuple(br(-1) if f == "cM" else INF for f in TRIPLE.faces))
    with pytest.raises(IntegrabilityError):
        pushforward_family(PSI_LR, bad)


def test_pushforward_crossover_mf():
    _, _, s = composition_charts(FAMILY_M, FAMILY_F)
    out = pushforward_family(PSI_LR, s)
    assert row(out, ("cl", "cr", "cf")) == ["[n/2]", "[n/2]", "[1/2]_+"]


# -- compositions -----------------------------------------------------------

def test_f_closed_under_composition():
    ff = compose_families(FAMILY_F, FAMILY_F)
    assert row(ff) == ["∞", "σ_r", "∞", "[(n+1)/2]_+", "[n/2]", "[1]_+"]
    for f in DOUBLE.faces:
        assert contained_in(ff[f], FAMILY_F[f])
        if f != "cf":
            assert ff[f] == FAMILY_F[f]


def test_f_powers_front_crossover():
    f2 = compose_families(FAMILY_F, FAMILY_F)
    f3 = compose_families(f2, FAMILY_F)
    assert str(f2["cf"]) == "[1]_+"
    assert str(f3["cf"]) == "[3/2]_+"
    # beyond that the front-crossover order min(l/2, n + 1/2) depends on n
    with pytest.raises(SymbolicOrderError):
        compose_families(f3, FAMILY_F)


def test_m_compose_f():
    assert row(compose_families(FAMILY_M, FAMILY_F)) == [
        "σ_l", "σ_r", "2σ_f", "[n/2]", "[n/2]", "[1/2]_+"]


def test_m_compose_h_is_i():
    mh = compose_families(FAMILY_M, FAMILY_H)
    assert mh.space == PRODUCT
    assert mh == FAMILY_I
    assert row(mh) == ["σ_l", "σ_r", "[n/2]", "[n/2]"]


def test_smoothing_compositions():
    assert compose_families(FAMILY_PSI0, FAMILY_H) == FAMILY_H
    assert compose_families(FAMILY_PSI0, FAMILY_F) == FAMILY_F


def test_mapping_rows():
    assert row(mapping_on_functions(FAMILY_M, FAMILY_DATA)) == ["σ", "[n/2]"]
    assert row(mapping_on_functions(FAMILY_I, FAMILY_DATA)) == ["σ", "[n/2]"]
    assert mapping_on_functions(FAMILY_PSI0, FAMILY_DATA) == FAMILY_DATA
    # intermediate product A u_R on the double space
    _, beta_r = projection_charts(DOUBLE)
    prod = sum_families(FAMILY_M, pullback_family(beta_r, FAMILY_DATA))
    assert row(prod) == ["σ_l", "∞", "∞", "[n/2]", "[(2n+1)/2]_+", "[(n+1)/2]_+"]


@pytest.mark.parametrize("name", sorted(NAMED_FAMILIES))
def test_all_infinite_data(name):
    fam = NAMED_FAMILIES[name]
    if fam.space == SINGLE:
        return
    # faces summed with the rapidly vanishing data become INF; the kernel's
    # own left faces (never summed with u) survive the push-forward
    nothing = IndexFamily(SINGLE, (INF, INF))
    _, beta_r = projection_charts(fam.space)
    prod = sum_families(fam, pullback_family(beta_r, nothing))
    for face in fam.space.faces:
        if face not in ("l", "cl"):
            assert prod[face] == INF
    out = mapping_on_functions(fam, nothing)
    expect = [str(fam[f]).replace("σ_l", "σ") for f in ("l", "cl")]
    assert row(out) == expect


def test_m_transpose_symmetric():
    assert transpose_family(FAMILY_M) == FAMILY_M
    assert transpose_family(FAMILY_F) != FAMILY_F


def test_absent_is_additive_identity():
    from ccscatter.indexset import add_entries
    for e in (INF, br(0, H), reg(sig("l"))):
        assert add_entries(ABSENT, e) == e
