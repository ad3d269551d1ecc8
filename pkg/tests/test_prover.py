import random
from fractions import Fraction

from miniwhy import corpus
from miniwhy import syntax as S
from miniwhy.errors import EvalError
from miniwhy.interp import eval_formula, exec_method
from miniwhy.prover import prove_internal
from miniwhy.vcgen import (Obligation, Origin, generate_obligations,
                           instantiate_on_trace)

from helpers import typed_formula


def mk(goal, hyps=(), sorts=None, fresh=False):
    ob = Obligation(id="t:000:assert", name="test",
                    origin=Origin("m", 1, "assert"),
                    hypotheses=list(hyps),
                    hyp_sources=["requires"] * len(hyps),
                    goal=goal, var_sorts=dict(sorts or {}))
    if fresh:
        ob.loop_ids = (0,)
    return ob


def test_both_division_lemmas_prove_without_hints(lemmas_unit):
    obs = generate_obligations(lemmas_unit)
    for ob in obs:
        st = prove_internal(ob)
        assert st.proved, (ob.id, st.reason)
        assert any("division-sign" in r for r in st.rule_trace)


def test_linear_validity():
    f = typed_formula("x > 0 && y > 0 ==> x + y > 0", {"x": S.REAL, "y": S.REAL})
    st = prove_internal(mk(f, sorts={"x": S.REAL, "y": S.REAL}))
    assert st.proved


def test_newton_preservation_stays_unknown(sqrt_unit):
    obs = generate_obligations(sqrt_unit, "sqrt_newton")
    preserve = next(ob for ob in obs if ob.kind == "invariant-preserve")
    st = prove_internal(preserve)
    assert st.status == "unknown"
    assert "nonlinear" in st.reason


def test_refutation_carries_a_verified_counterexample():
    f = typed_formula("x > 1.0", {"x": S.REAL})
    st = prove_internal(mk(f, sorts={"x": S.REAL}))
    assert st.status == "refuted"
    cex = st.counterexample
    assert cex and not eval_formula(f, {"Here": dict(cex), "Old": dict(cex)},
                                    "rational")


def test_hypotheses_condition_refutation():
    hyp = typed_formula("x > 5.0", {"x": S.REAL})
    goal = typed_formula("x > 1.0", {"x": S.REAL})
    st = prove_internal(mk(goal, hyps=[hyp], sorts={"x": S.REAL}))
    assert st.proved


def test_integer_goals_never_refuted():
    # valid over the integers, invalid over the rationals: must stay unknown
    k = {"k": S.INT}
    f = typed_formula("2 * k != 1", k)
    st = prove_internal(mk(f, sorts=k))
    assert st.status == "unknown"
    assert "integer" in st.reason or "incomplete" in st.reason


def test_havoc_obligations_never_refuted():
    f = typed_formula("x > 1.0", {"x": S.REAL})
    st = prove_internal(mk(f, sorts={"x": S.REAL}, fresh=True))
    assert st.status == "unknown"
    assert "havoc" in st.reason


def test_strict_cycle_detection():
    f = typed_formula("x < y && y < z ==> x < z",
                      {"x": S.REAL, "y": S.REAL, "z": S.REAL})
    st = prove_internal(mk(f, sorts={"x": S.REAL, "y": S.REAL, "z": S.REAL}))
    assert st.proved


def test_equality_reasoning():
    f = typed_formula("x == y + 1.0 && y == 2.0 ==> x == 3.0",
                      {"x": S.REAL, "y": S.REAL})
    st = prove_internal(mk(f, sorts={"x": S.REAL, "y": S.REAL}))
    assert st.proved


def test_no_corpus_obligation_is_refuted():
    for entry in corpus.corpus_sources():
        tu = corpus.unit(entry.name)
        for ob in generate_obligations(tu):
            st = prove_internal(ob)
            assert st.status != "refuted", (entry.name, ob.id, st.counterexample)


def _ground_env(rng, sorts):
    env = {}
    for name, ty in sorts.items():
        if ty == S.INT:
            env[name] = rng.randint(-20, 20)
        elif ty == S.REAL:
            env[name] = Fraction(rng.randint(-60, 60), rng.choice([1, 2, 3, 4]))
        else:
            return None       # arrays: not a ground-samplable sort here
    return env


def test_proved_obligations_survive_random_ground_sampling():
    """No proved-internal obligation is falsified by 10^4 random assignments
    over its (scalar) free symbols."""
    rng = random.Random(99)
    proved = []
    for entry in corpus.corpus_sources():
        tu = corpus.unit(entry.name)
        for ob in generate_obligations(tu):
            if prove_internal(ob).proved:
                proved.append(ob)
    assert proved
    budget = 10_000
    per = max(1, budget // len(proved))
    tested = 0
    for ob in proved:
        hyps = [h for h, s in zip(ob.hypotheses, ob.hyp_sources) if s != "lemma"]
        test = ob.goal
        for h in reversed(hyps):
            test = S.Binary(op="==>", left=h, right=test, ty=S.BOOL)
        for _ in range(per):
            env = _ground_env(rng, ob.var_sorts)
            if env is None:
                break
            try:
                ok = eval_formula(test, {"Here": dict(env), "Old": dict(env)},
                                  "rational")
            except EvalError:
                break         # quantified or array-dependent: not samplable
            tested += 1
            assert ok, (ob.id, env)
    assert tested >= 1000


def test_proved_obligations_pass_trace_validation(sqrt_unit):
    obs = generate_obligations(sqrt_unit)
    out = exec_method(sqrt_unit, "sqrt", [Fraction(3, 2)], "rational", trace=True)
    assert out.status == "normal"
    rep = instantiate_on_trace(obs, out)
    verdicts = {r.id: r for r in rep.results}
    for ob in obs:
        if prove_internal(ob).proved:
            assert verdicts[ob.id].verdict in ("pass", "not-instantiable")
            assert verdicts[ob.id].verdict != "fail"


def test_resource_cap_reports_unknown():
    # 40 disjunctions distribute into 2^40 conjunctions: the cap must trip
    parts = " && ".join(f"(u > {k}.0 || v > {k}.0)" for k in range(40))
    f = typed_formula(f"{parts} ==> u + v > -1000.0", {"u": S.REAL, "v": S.REAL})
    st = prove_internal(mk(f, sorts={"u": S.REAL, "v": S.REAL}))
    assert st.status in ("unknown", "proved-internal")
    if st.status == "unknown":
        assert "resource" in st.reason or "abstraction" in st.reason
