import json
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from halftoning.diffusion import (
    FIRST_ORDER,
    H2,
    H3,
    Direction,
    FeedbackFilter,
    SchemeError,
    builtin_schemes,
    expand_scheme,
    format_extended,
    load_scheme_json,
    make_scheme,
    resolve_scheme,
    scheme_from_dict,
    scheme_to_dict,
    verify_order,
)

z = sympy.symbols("z")


def sympy_order_quotient(taps, r):
    """Divide 1 - sum h_n z^n by (1 - z)^r; None when the remainder is nonzero."""
    num = 1 - sum(sympy.Rational(str(t)) * z ** (n + 1) for n, t in enumerate(taps))
    q, rem = sympy.div(sympy.Poly(num, z), sympy.Poly((1 - z) ** r, z))
    if not rem.is_zero:
        return None
    coeffs = q.all_coeffs()[::-1]
    return tuple(F(str(c)) for c in coeffs)


# matrices as tabulated for the second-order examples: (di, dj) -> coefficient
A23 = {(0, 0): 1, (0, 1): F(-3, 4), (0, 3): F(1, 4), (1, 0): F(-4, 6), (4, 0): F(1, 6)}
A33 = {(0, 0): 1, (0, 1): F(-4, 6), (0, 4): F(1, 6), (1, 0): F(-4, 6), (4, 0): F(1, 6)}
FS33 = {
    (0, 0): 1, (0, 1): F(-28, 48), (0, 4): F(7, 48),
    (1, -1): F(-12, 48), (1, 0): F(-20, 48), (1, 1): F(-4, 48),
    (4, -4): F(3, 48), (4, 0): F(5, 48), (4, 4): F(1, 48),
}  # fmt: skip


@pytest.mark.parametrize("name,expected", [("a23", A23), ("a33", A33), ("fs2-33", FS33)])
def test_extended_matrices(name, expected):
    assert expand_scheme(builtin_schemes()[name]) == expected


def test_fs1_expansion():
    assert expand_scheme(builtin_schemes()["fs1"]) == {
        (0, 0): 1, (0, 1): F(-7, 16), (1, -1): F(-3, 16), (1, 0): F(-5, 16), (1, 1): F(-1, 16)
    }  # fmt: skip


def test_format_keeps_unreduced_products():
    text = format_extended(builtin_schemes()["fs2-33"])
    for label in ["-28/48", "7/48", "-12/48", "-20/48", "-4/48", "3/48", "5/48", "1/48", "[1]"]:
        assert label in text.split()
    top = format_extended(builtin_schemes()["a23"]).splitlines()[1].split()
    assert top == ["[1]", "-3/4", "0", "1/4"]


@pytest.mark.parametrize("name", sorted(builtin_schemes()))
def test_builtin_weights_sum_to_one(name):
    assert builtin_schemes()[name].weight_sum() == 1


def test_order_certificates():
    assert verify_order(H2, 2) == (True, (F(1), F(1, 2)))
    assert verify_order(H3, 2) == (True, (F(1), F(2, 3), F(1, 3)))
    assert verify_order(FIRST_ORDER, 1) == (True, (F(1),))
    assert not verify_order(H3, 3)
    assert not verify_order(FIRST_ORDER, 2)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=12), min_size=1, max_size=5),
    st.integers(1, 3),
)
def test_verify_order_matches_polynomial_division(taps, r):
    cert = verify_order(FeedbackFilter(taps), r)
    expected = sympy_order_quotient(taps, r)
    if expected is None:
        assert not cert.holds
    else:
        assert cert.holds
        trimmed = list(expected)
        while len(trimmed) > 1 and trimmed[-1] == 0:
            trimmed.pop()
        assert cert.g == tuple(trimmed)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.lists(st.fractions(-2, 2, max_denominator=8), min_size=0, max_size=3))
def test_constructed_filters_certify(r, g_tail):
    # build h from a chosen g: 1 - h(z) = (1 - z)^r g(z) with g_0 = 1
    g = sympy.Poly([sympy.Rational(str(c)) for c in ([F(1)] + g_tail)][::-1], z)
    poly = sympy.Poly(1, z) - sympy.Poly((1 - z) ** r, z) * g
    coeffs = poly.all_coeffs()[::-1]
    taps = [F(str(c)) for c in coeffs[1:]]
    assert coeffs[0] == 0
    assert verify_order(FeedbackFilter(taps), r).holds


def test_invalid_schemes():
    with pytest.raises(SchemeError):
        Direction(0, 0)
    with pytest.raises(SchemeError):
        Direction(-1, 2)
    with pytest.raises(SchemeError):
        make_scheme("bad", [(0, 1, "1/2"), (1, 0, "1/3")])
    with pytest.raises(SchemeError):
        make_scheme("dup", [(0, 1, "1/2"), (0, 1, "1/2")])
    with pytest.raises(SchemeError):
        make_scheme("ord", [(0, 1, 1, H2)], order=3)
    with pytest.raises(TypeError):
        make_scheme("float", [(0, 1, 1.0)])


def test_json_round_trip(tmp_path):
    for scheme in builtin_schemes().values():
        doc = json.loads(json.dumps(scheme_to_dict(scheme)))
        assert scheme_from_dict(doc) == scheme
    path = tmp_path / "s.json"
    path.write_text(json.dumps(scheme_to_dict(builtin_schemes()["a23"])))
    assert load_scheme_json(path) == builtin_schemes()["a23"]
    assert resolve_scheme(str(path)).name == "a23"


def test_malformed_json():
    with pytest.raises(SchemeError):
        scheme_from_dict({"name": "x"})


def test_resolve_unknown_lists_builtins():
    with pytest.raises(KeyError) as info:
        resolve_scheme("nosuch")
    assert "fs1" in str(info.value) and "jjn2-33" in str(info.value)


def test_reach():
    assert builtin_schemes()["fs2-33"].reach() == (4, 4)
    assert builtin_schemes()["fs1"].reach() == (1, 1)
