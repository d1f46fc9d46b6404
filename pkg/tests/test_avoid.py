import pytest
from gmpy2 import mpq

from qbiject.avoid import (AvoidFamily, default_family, lft_eval, lft_first,
                           lft_inverse, lft_second)
from qbiject.errors import ParseError, PoleInUnit
from qbiject.ratcore import iter_unit_rationals


def test_lft_eval_examples():
    assert lft_eval(0, mpq(3, 7), "first") == mpq(3, 7)  # identity
    assert lft_eval(mpq(1, 2), mpq(1, 2), "first") == mpq(2, 3)
    with pytest.raises(PoleInUnit):
        lft_eval(2, mpq(1, 2), "first")
    with pytest.raises(PoleInUnit):
        lft_eval(1, mpq(1, 2), "second")


def test_first_family_is_increasing_bijection():
    for a in (0, mpq(1, 2), -1, mpq(-7, 3)):
        f = lft_first(a)
        assert f.certify_increasing_unit_bijection()


def test_second_family_is_decreasing_involution():
    for a in (0, mpq(1, 2), -2):
        f = lft_second(a)
        assert f.eval(0) == 1 and f.eval(1) == 0
        for q in (mpq(1, 3), mpq(2, 5), mpq(9, 11)):
            assert f.eval(f.eval(q)) == q


def test_inverse_round_trip():
    for family in ("first", "second"):
        for a in (0, mpq(1, 2), -3):
            inv = lft_inverse(a, family)
            for q in iter_unit_rationals(6):
                assert inv.eval(lft_eval(a, q, family)) == q


def test_default_family_shape():
    fam = default_family()
    assert len(fam) == 32
    # the first member is the identity
    for q in (mpq(0), mpq(1, 3), mpq(1)):
        assert fam.get(0).eval(q) == q
    assert fam.get(32) is None
    assert fam.get(31) is not None


def test_default_family_members_distinct():
    fam = default_family()
    probe = mpq(1, 3)
    values = [f.eval(probe) for f in fam.funcs]
    assert len(set(values)) == len(values)


def test_increasing_subfamily_keeps_defaults():
    fam = default_family()
    assert len(fam.increasing_subfamily()) == len(fam)


def test_family_save_load_roundtrip(tmp_path):
    fam = default_family()
    path = tmp_path / "fam.json"
    fam.save(path)
    loaded = AvoidFamily.load(path)
    assert len(loaded) == len(fam)
    probe = mpq(2, 7)
    for f, g in zip(fam.funcs, loaded.funcs):
        assert f.eval(probe) == g.eval(probe)


def test_family_rejects_poles():
    with pytest.raises(PoleInUnit):
        lft_first(mpq(3, 2))


def test_family_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('[{"num": "oops"}]')
    with pytest.raises(ParseError):
        AvoidFamily.load(path)
