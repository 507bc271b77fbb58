import math
from fractions import Fraction

from hypothesis import given, strategies as st

from graphdelay.exact import Surd, abs2, recognize

fr = st.fractions(max_denominator=50).filter(lambda x: abs(x) < 100)


@given(fr, fr, fr, fr)
def test_field_operations_match_floats(a, b, c, d):
    x, y = Surd(a, b), Surd(c, d)
    for exact, approx in [(x + y, float(x) + float(y)), (x - y, float(x) - float(y)), (x * y, float(x) * float(y))]:
        assert math.isclose(float(exact), approx, rel_tol=1e-12, abs_tol=1e-9)


def test_sqrt2_squared():
    r = Surd(0, 1)
    assert r * r == 2
    assert (r * r).is_rational and (r * r).to_fraction() == 2
    assert abs2(Surd(0, Fraction(1, 2))) == Fraction(1, 2)


def test_recognize():
    assert recognize(0.375) == Fraction(3, 8)
    assert recognize(math.sqrt(2) / 2) == Surd(0, Fraction(1, 2))
    assert recognize(math.pi) is None
    assert recognize(float("nan")) is None
