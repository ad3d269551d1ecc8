from fractions import Fraction

import pytest

from miniwhy import corpus
from miniwhy.errors import MiniWhyError
from miniwhy.interp import eval_formula
from miniwhy.parser import parse
from miniwhy.typecheck import check_unit


def test_five_entries_with_expected_names():
    names = [e.name for e in corpus.corpus_sources()]
    assert names == ["rectangle_translate", "find_nth_lowest_number",
                     "sqrt_newton", "calculate_std_dev", "lemmas"]


def test_every_entry_parses_and_typechecks():
    for e in corpus.corpus_sources():
        unit = parse(corpus.source_text(e.name), e.name)
        assert check_unit(unit) == [], e.name


def test_sqrt_entry_carries_the_declared_epsilon():
    assert "1.2E-7" in corpus.source_text("sqrt_newton")


def test_oracle_nth_lowest_examples():
    assert corpus.oracle_nth_lowest([3, 1, 2], 3, 1) == 2
    assert corpus.oracle_nth_lowest([5], 1, 0) == 5
    assert corpus.oracle_nth_lowest([2, 2, 2, 2], 4, 2) == 2


def test_oracle_nth_lowest_is_pure():
    buf = [9, 4, 7]
    corpus.oracle_nth_lowest(buf, 3, 0)
    assert buf == [9, 4, 7]


def test_oracle_bounds():
    with pytest.raises(MiniWhyError):
        corpus.oracle_nth_lowest([1], 2, 0)
    with pytest.raises(MiniWhyError):
        corpus.oracle_nth_lowest([1, 2], 2, 2)


def test_random_case_deterministic():
    for name in ("sqrt_newton", "find_nth_lowest_number",
                 "calculate_std_dev", "rectangle_translate"):
        a = corpus.random_case(name, 7, 3)
        b = corpus.random_case(name, 7, 3)
        assert a == b
        assert corpus.random_case(name, 8, 3) != a or name == "lemmas"


def test_sqrt_cases_lie_in_the_generator_range():
    for i in range(500):
        (c,) = corpus.random_case("sqrt_newton", 7, i)
        assert Fraction(10) ** -9 <= c <= Fraction(10) ** 9


def test_generated_cases_satisfy_requires():
    for name in ("sqrt_newton", "find_nth_lowest_number", "calculate_std_dev",
                 "rectangle_translate"):
        tu = corpus.unit(name)
        method = corpus.entry(name).method
        decl = tu.method(method)
        for i in range(200):
            args = corpus.random_case(name, 11, i)
            env = {p: v for (p, _), v in zip(decl.params, args)}
            assert eval_formula(decl.spec.requires,
                                {"Here": env, "Old": env}, "rational"), \
                (name, args)


def test_stddev_generator_mixes_adversarial_triples():
    kinds = {"realizable": 0, "negative": 0}
    for i in range(400):
        n, s, s2 = corpus.random_case("calculate_std_dev", 3, i)
        if n >= 1 and n * s2 - s * s >= 0:
            kinds["realizable"] += 1
        else:
            kinds["negative"] += 1
    assert kinds["realizable"] > 50
    assert kinds["negative"] > 20            # includes n<=0 and sum2<0 triples


def test_quickselect_padding_respects_requires():
    seen_padding = False
    for i in range(200):
        buf, buflen, n = corpus.random_case("find_nth_lowest_number", 5, i)
        assert 1 <= buflen <= len(buf)
        assert 0 <= n < buflen
        seen_padding |= len(buf) > buflen
    assert seen_padding


def test_randomized_translate_both_modes():
    for mode in ("rational", "binary64"):
        rep = corpus.run_randomized("rectangle_translate", 100, 3, mode)
        assert rep.cases == 100
        assert rep.ok, rep.failures[:2]


def test_randomized_quickselect_small():
    rep = corpus.run_randomized("find_nth_lowest_number", 150, 7, "rational")
    assert rep.ok, rep.failures[:2]
    rep64 = corpus.run_randomized("find_nth_lowest_number", 150, 7, "binary64")
    assert rep64.ok, rep64.failures[:2]


def test_randomized_stddev_rational():
    rep = corpus.run_randomized("calculate_std_dev", 300, 11, "rational")
    assert rep.ok, rep.failures[:2]


def test_stddev_spot_case_rational():
    out, reason = corpus.run_case("calculate_std_dev", [3, 6, 14], "rational")
    assert out.status == "normal" and reason is None
    r = Fraction(out.return_value)
    assert r * r >= 1 and r * r - 1 < corpus.SQRT_EPS     # true value is 1


def test_exhaustive_grid_small():
    rep = corpus.run_exhaustive(max_len=3, values=(0, 1, 2))
    expected = sum((3 ** L) * L for L in range(1, 4))
    assert rep.cases == expected
    assert rep.ok, rep.failures[:2]


def test_exhaustive_only_defined_for_quickselect():
    with pytest.raises(MiniWhyError):
        corpus.run_exhaustive("sqrt_newton")


def test_stddev_behaviours_mutually_exclusive():
    tu = corpus.unit("calculate_std_dev")
    decl = tu.method("calculate_std_dev")
    assumes = [b.assumes for b in decl.spec.behaviours]
    assert len(assumes) == 2
    for i in range(400):
        n, s, s2 = corpus.random_case("calculate_std_dev", 13, i)
        env = {"n": n, "sum": s, "sum2": s2}
        truths = [eval_formula(a, {"Here": env, "Old": env}, "rational")
                  for a in assumes]
        assert truths.count(True) <= 1, (n, s, s2)


def test_lemma_entry_has_no_harness_method():
    rep = corpus.run_randomized("lemmas", 10, 1, "rational")
    assert rep.cases == 0 and rep.ok


def test_unknown_entry():
    with pytest.raises(MiniWhyError):
        corpus.random_case("no_such_entry", 1, 0)
