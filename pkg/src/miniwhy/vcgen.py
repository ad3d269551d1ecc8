"""Weakest-precondition obligation generator and trace-based validation.

wp walks statements backward. The postcondition and every pending side
obligation are transformed alike: assignments substitute, conditionals
branch-guard, loops replace assigned variables with fresh havoc symbols and
wrap pending goals in `I && b ==> .` (inside the body) or `I && !b ==> .`
(after the loop). A side obligation therefore arrives at the method entry as
a closed formula over entry-state symbols, with the requires clause and the
unit lemmas as hypotheses.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from . import syntax as S
from .errors import EvalError, VcgenError
from .interp import ExecutionOutcome, eval_formula, loop_table, unit_digest
from .printer import expr_to_str
from .typecheck import TypedUnit

# obligation kinds (Origin.kind)
KINDS = ("ensures", "behaviour", "invariant-init", "invariant-preserve",
         "variant-nonneg", "variant-decrease", "assert", "call-requires",
         "division-guard", "bounds-guard", "lemma")


@dataclass(frozen=True)
class Origin:
    method: str
    line: int
    kind: str
    detail: str = ""      # behaviour name, guard description...


@dataclass
class Obligation:
    id: str
    name: str
    origin: Origin
    hypotheses: list          # formulas (lemmas + requires [+ assumes])
    goal: S.Expr
    status: str = "unknown"   # unknown | proved-internal | exported | trace-validated
    hyp_sources: list = field(default_factory=list)   # 'lemma'|'requires'|'assumes'
    var_sorts: dict = field(default_factory=dict)     # free symbol -> SemType
    loop_ids: tuple = ()                              # loops whose havoc symbols occur
    detail: str = ""

    @property
    def kind(self) -> str:
        return self.origin.kind

    @property
    def has_fresh(self) -> bool:
        return bool(self.loop_ids)


@dataclass
class ObligationSet:
    unit: str
    unit_digest: str
    obligations: list
    methods: tuple = ()

    def __iter__(self):
        return iter(self.obligations)

    def __len__(self):
        return len(self.obligations)

    def by_id(self, oid: str) -> Obligation:
        for ob in self.obligations:
            if ob.id == oid:
                return ob
        raise KeyError(oid)


# ---------------------------------------------------------------------------
# formula transformations

def _entry_tag(loop_id) -> str:
    return f"LoopEntry#{loop_id}"


def lower(f: S.Expr, loop_id=None) -> S.Expr:
    """Resolve Permut labels into explicit per-state array terms. LoopEntry
    markers are tagged with the owning loop so that only that loop's havoc
    consumes them."""
    def tr(e):
        if isinstance(e, S.PermutPred):
            def wrap(label, arr):
                if label in ("Old", "Pre"):
                    return S.OldExpr(operand=arr, pos=arr.pos, ty=arr.ty)
                if label == "LoopEntry":
                    return S.AtLabel(operand=arr, label=_entry_tag(loop_id),
                                     pos=arr.pos, ty=arr.ty)
                return arr
            arr = tr(e.array)
            return S.PermutAtom(a1=wrap(e.label1, arr), a2=wrap(e.label2, arr),
                                lo=tr(e.lo), hi=tr(e.hi), pos=e.pos, ty=S.BOOL)
        return _map_children(e, tr)
    return tr(f)


def _map_children(e: S.Expr, fn) -> S.Expr:
    if isinstance(e, S.Unary):
        return replace(e, operand=fn(e.operand))
    if isinstance(e, S.Binary):
        return replace(e, left=fn(e.left), right=fn(e.right))
    if isinstance(e, S.Index):
        return replace(e, array=fn(e.array), index=fn(e.index))
    if isinstance(e, S.LengthExpr):
        return replace(e, array=fn(e.array))
    if isinstance(e, S.Coerce):
        return replace(e, operand=fn(e.operand))
    if isinstance(e, S.OldExpr):
        return replace(e, operand=fn(e.operand))
    if isinstance(e, S.AtLabel):
        return replace(e, operand=fn(e.operand))
    if isinstance(e, S.Forall):
        return replace(e, body=fn(e.body))
    if isinstance(e, S.Store):
        return replace(e, array=fn(e.array), index=fn(e.index), value=fn(e.value))
    if isinstance(e, S.PermutAtom):
        return replace(e, a1=fn(e.a1), a2=fn(e.a2), lo=fn(e.lo), hi=fn(e.hi))
    if isinstance(e, S.PermutPred):
        return replace(e, array=fn(e.array), lo=fn(e.lo), hi=fn(e.hi))
    if isinstance(e, S.Call):
        return replace(e, args=[fn(a) for a in e.args])
    return e        # leaves: literals, Var, FreshVar, ResultExpr


def subst(f: S.Expr, name: str, repl: S.Expr) -> S.Expr:
    """Replace current-state occurrences of a scalar variable.

    Occurrences inside \\old(...) and \\at(..., LoopEntry) are pinned to
    their own state and left alone. Quantifier binders never collide with
    program variables (the typechecker forbids shadowing).
    """
    def tr(e):
        if isinstance(e, S.Var) and e.name == name:
            return repl
        if isinstance(e, (S.OldExpr, S.AtLabel)):
            return e
        return _map_children(e, tr)
    return tr(f)


def subst_store(f: S.Expr, name: str, idx: S.Expr, val: S.Expr) -> S.Expr:
    """Replace current-state occurrences of array `name` by store(name, idx, val)."""
    def tr(e):
        if isinstance(e, S.Var) and e.name == name:
            return S.Store(array=e, index=idx, value=val, pos=e.pos, ty=e.ty)
        if isinstance(e, (S.OldExpr, S.AtLabel)):
            return e
        return _map_children(e, tr)
    return tr(f)


def subst_result(f: S.Expr, repl: S.Expr) -> S.Expr:
    def tr(e):
        if isinstance(e, S.ResultExpr):
            return repl
        return _map_children(e, tr)
    return tr(f)


def unwrap_old(f: S.Expr) -> S.Expr:
    """At obligation close every remaining current-state symbol denotes the
    entry state, so \\old(e) collapses to e."""
    def tr(e):
        if isinstance(e, S.OldExpr):
            return tr(e.operand)
        return _map_children(e, tr)
    return tr(f)


def havoc(f: S.Expr, mapping: dict, entry_tag: str = None) -> S.Expr:
    """Replace loop-assigned variables by fresh symbols. This loop's own
    \\at(e, LoopEntry) markers denote the iteration-start state, which IS
    the havoc state, so they unwrap under the same mapping; markers owned by
    other loops stay pinned untouched."""
    def tr(e):
        if isinstance(e, S.Var) and e.name in mapping:
            return mapping[e.name]
        if isinstance(e, S.OldExpr):
            return e
        if isinstance(e, S.AtLabel):
            if entry_tag is not None and e.label == entry_tag:
                return unwrap(e.operand)
            return e
        return _map_children(e, tr)

    def unwrap(e):
        if isinstance(e, S.Var) and e.name in mapping:
            return mapping[e.name]
        if isinstance(e, S.OldExpr):
            return e
        return _map_children(e, unwrap)
    return tr(f)


def assigned_vars(st: S.Stmt) -> set:
    out = set()
    for n in S.walk(st):
        if isinstance(n, (S.VarDecl, S.Assign, S.ArrayAssign)):
            out.add(n.name)
    return out


def _imp(a: S.Expr, b: S.Expr) -> S.Expr:
    return S.Binary(op="==>", left=a, right=b, pos=b.pos, ty=S.BOOL)


def _and(a: S.Expr, b: S.Expr) -> S.Expr:
    return S.Binary(op="&&", left=a, right=b, pos=a.pos, ty=S.BOOL)


def _not(a: S.Expr) -> S.Expr:
    return S.Unary(op="!", operand=a, pos=a.pos, ty=S.BOOL)


def _int(v: int) -> S.Expr:
    return S.IntLit(value=v, ty=S.INT)


def _ge0(e: S.Expr) -> S.Expr:
    return S.Binary(op=">=", left=e, right=_int(0), pos=e.pos, ty=S.BOOL)


# ---------------------------------------------------------------------------
# guards

def collect_guards(e: S.Expr) -> list:
    """(kind, formula, line, detail) for every division and array access in a
    program expression, post-order."""
    out = []

    def visit(x):
        if not isinstance(x, S.Node):
            return
        if isinstance(x, S.Binary):
            visit(x.left)
            visit(x.right)
            if x.op == "/":
                zero = S.Coerce(operand=_int(0), ty=S.REAL)
                out.append(("division-guard",
                            S.Binary(op="!=", left=x.right, right=zero,
                                     pos=x.pos, ty=S.BOOL),
                            x.pos[0], f"divisor {expr_to_str(x.right)} != 0"))
            return
        if isinstance(x, S.Index):
            visit(x.array)
            visit(x.index)
            length = S.LengthExpr(array=x.array, pos=x.pos, ty=S.INT)
            inb = _and(_ge0(x.index),
                       S.Binary(op="<", left=x.index, right=length,
                                pos=x.pos, ty=S.BOOL))
            out.append(("bounds-guard", inb, x.pos[0],
                        f"index {expr_to_str(x.index)} within {expr_to_str(x.array)}"))
            return
        if isinstance(x, S.NewArray):
            visit(x.size)
            out.append(("bounds-guard", _ge0(x.size), x.pos[0],
                        f"array size {expr_to_str(x.size)} >= 0"))
            return
        if isinstance(x, S.Unary):
            visit(x.operand)
        elif isinstance(x, S.Coerce):
            visit(x.operand)
        elif isinstance(x, S.Call):
            for a in x.args:
                visit(a)
    visit(e)
    return out


# ---------------------------------------------------------------------------
# the wp engine

@dataclass
class _Side:
    sid: int
    kind: str
    line: int
    detail: str
    formula: S.Expr


class _Wp:
    def __init__(self, tunit: TypedUnit, method: S.MethodDecl,
                 exit_post: S.Expr, exit_kind: str):
        self.tunit = tunit
        self.method = method
        self.exit_post = exit_post
        self.exit_kind = exit_kind
        self.loops = loop_table(method)
        self.sid = itertools.count()

    def new_side(self, kind, formula, line, detail="") -> _Side:
        return _Side(next(self.sid), kind, line, detail, formula)

    def guard_sides(self, e: S.Expr) -> list:
        return [self.new_side(kind, f, line, detail)
                for kind, f, line, detail in collect_guards(e)]

    def wp(self, st: S.Stmt, post: S.Expr, kind: str, sides: list):
        """Returns (pre, pre_kind, sides'). sides' entries with sid matching
        an input side are its transformed continuation."""
        if isinstance(st, S.Block):
            for s in reversed(st.stmts):
                post, kind, sides = self.wp(s, post, kind, sides)
            return post, kind, sides
        if isinstance(st, S.VarDecl):
            if st.init is None:
                return post, kind, sides
            return self.assign_like(st, st.name, st.init, post, kind, sides)
        if isinstance(st, S.Assign):
            return self.assign_like(st, st.name, st.expr, post, kind, sides)
        if isinstance(st, S.ArrayAssign):
            new = (self.guard_sides(st.index) + self.guard_sides(st.expr) +
                   [self.new_side("bounds-guard",
                                  self.index_guard(st), st.pos[0],
                                  f"store index {expr_to_str(st.index)} within {st.name}")])
            tr = lambda f: subst_store(f, st.name, st.index, st.expr)
            return (tr(post), kind,
                    [replace(s, formula=tr(s.formula)) for s in sides] + new)
        if isinstance(st, S.If):
            new_cond = self.guard_sides(st.cond)
            p1, k1, s1 = self.wp(st.then, post, kind, sides)
            if st.orelse is not None:
                p2, k2, s2 = self.wp(st.orelse, post, kind, sides)
            else:
                p2, k2, s2 = post, kind, list(sides)
            pre = _and(_imp(st.cond, p1), _imp(_not(st.cond), p2))
            merged = self.merge_branches(st.cond, sides, s1, s2)
            out_kind = k1 if k1 != kind else k2
            return pre, out_kind, merged + new_cond
        if isinstance(st, S.While):
            return self.loop(st, st, post, kind, sides)
        if isinstance(st, S.DoWhile):
            return self.do_loop(st, post, kind, sides)
        if isinstance(st, S.Return):
            if st.expr is None:
                return self.exit_post, self.exit_kind, sides
            if isinstance(st.expr, S.Call):
                return self.call(st, st.expr, None, sides)
            new = self.guard_sides(st.expr)
            return (subst_result(self.exit_post, st.expr), self.exit_kind,
                    sides + new)
        if isinstance(st, S.AssertStmt):
            f = lower(st.formula)
            side = self.new_side("assert", f, st.pos[0])
            return _imp(f, post), kind, sides + [side]
        raise VcgenError(f"cannot compute wp of {type(st).__name__}")

    def assign_like(self, st, name, expr, post, kind, sides):
        if isinstance(expr, S.Call):
            return self.call(st, expr, name, sides, post=post, kind=kind)
        new = self.guard_sides(expr)
        tr = lambda f: subst(f, name, expr)
        return (tr(post), kind,
                [replace(s, formula=tr(s.formula)) for s in sides] + new)

    def index_guard(self, st: S.ArrayAssign) -> S.Expr:
        arr = S.Var(name=st.name, pos=st.pos,
                    ty=next(t for n, t in self.all_vars() if n == st.name))
        length = S.LengthExpr(array=arr, pos=st.pos, ty=S.INT)
        return _and(_ge0(st.index),
                    S.Binary(op="<", left=st.index, right=length,
                             pos=st.pos, ty=S.BOOL))

    def all_vars(self):
        for n, t in self.method.params:
            yield n, t
        for node in S.walk(self.method.body):
            if isinstance(node, S.VarDecl):
                yield node.name, node.ty

    def merge_branches(self, cond, incoming, s1, s2):
        by_id1 = {s.sid: s for s in s1}
        by_id2 = {s.sid: s for s in s2}
        out = []
        seen = set()
        for s in incoming:
            a, b = by_id1[s.sid], by_id2[s.sid]
            seen.add(s.sid)
            if a.formula == b.formula:
                out.append(a)
            else:
                out.append(replace(s, formula=_and(_imp(cond, a.formula),
                                                   _imp(_not(cond), b.formula))))
        for s in s1:
            if s.sid not in seen:
                out.append(replace(s, formula=_imp(cond, s.formula)))
        for s in s2:
            if s.sid not in seen:
                out.append(replace(s, formula=_imp(_not(cond), s.formula)))
        return out

    def loop(self, w: S.While, origin_node, post, kind, sides):
        annot = w.annot
        if annot is None or annot.invariant is None:
            raise VcgenError(f"loop at line {w.pos[0]} has no invariant")
        line = origin_node.pos[0]
        loop_id = self.loops[id(w)]
        inv = lower(annot.invariant, loop_id)
        cond = w.cond
        assigned = sorted(assigned_vars(w.body))
        types = dict(self.all_vars())
        mapping = {}
        for name in assigned:
            ty = types.get(name)
            mapping[name] = S.FreshVar(name=f"{name}@L{loop_id}", base=name,
                                       loop_id=loop_id, ty=ty)
        hv = lambda f: havoc(f, mapping, _entry_tag(loop_id))

        out = []
        # pending goals from after the loop: I && !b ==> goal, havocked
        exit_ctx = lambda f: hv(_imp(_and(inv, _not(cond)), f))
        for s in sides:
            out.append(replace(s, formula=exit_ctx(s.formula)))

        # loop condition guards hold whenever the invariant does
        for g in self.guard_sides(cond):
            out.append(replace(g, formula=hv(_imp(inv, g.formula))))

        # invariant preservation
        p_body, _, body_sides = self.wp(w.body, inv, "invariant-preserve", [])
        body_ctx = lambda f: hv(_imp(_and(inv, cond), f))
        out.append(self.new_side("invariant-preserve", body_ctx(p_body), line))
        for s in body_sides:
            out.append(replace(s, formula=body_ctx(s.formula)))

        # variant obligations
        if annot.variant is not None:
            out.extend(self.variant_sides(w.annot, w.body, body_ctx, line,
                                          loop_id))

        # the main postcondition becomes the loop-exit side obligation
        out.append(self.new_side(kind, exit_ctx(post), line, detail="loop exit"))
        return inv, "invariant-init", out

    def variant_sides(self, annot, body, body_ctx, line, loop_id):
        """Non-negativity, plus the decrease claim threaded through the body.

        When the body contains loops, wp bottoms out at the first inner
        invariant and the decrease content continues through the inner
        loops' exit chains: those are the sides whose kind tag matches this
        run, and they belong to the obligation set (the rest of the run's
        sides duplicate the invariant pass and are dropped)."""
        v = annot.variant
        out = [self.new_side("variant-nonneg", body_ctx(_ge0(v)), line)]
        v_entry = S.AtLabel(operand=v, label=_entry_tag(loop_id),
                            pos=v.pos, ty=v.ty)
        dec_post = S.Binary(op="<", left=v, right=v_entry, pos=v.pos, ty=S.BOOL)
        p_dec, _, dec_sides = self.wp(body, dec_post, "variant-decrease", [])
        out.append(self.new_side("variant-decrease", body_ctx(p_dec), line))
        for s in dec_sides:
            if s.kind == "variant-decrease":
                out.append(self.new_side("variant-decrease",
                                         body_ctx(s.formula), s.line, s.detail))
        return out

    def do_loop(self, st: S.DoWhile, post, kind, sides):
        """do S while (b): the body runs once, then the loop rules apply with
        the invariant first checked at the head reached after that body. One
        wp pass over the body serves both the entry chain (pre) and the
        preservation chain, so each obligation carries at most one havoc
        generation per loop: trace instantiation then always corresponds to
        an actual execution step."""
        annot = st.annot
        if annot is None or annot.invariant is None:
            raise VcgenError(f"loop at line {st.pos[0]} has no invariant")
        line = st.pos[0]
        loop_id = self.loops[id(st)]
        inv = lower(annot.invariant, loop_id)
        cond = st.cond
        assigned = sorted(assigned_vars(st.body))
        types = dict(self.all_vars())
        mapping = {name: S.FreshVar(name=f"{name}@L{loop_id}", base=name,
                                    loop_id=loop_id, ty=types.get(name))
                   for name in assigned}
        hv = lambda f: havoc(f, mapping, _entry_tag(loop_id))
        exit_ctx = lambda f: hv(_imp(_and(inv, _not(cond)), f))
        body_ctx = lambda f: hv(_imp(_and(inv, cond), f))

        out = [replace(s, formula=exit_ctx(s.formula)) for s in sides]
        p_body, body_kind, body_sides = self.wp(st.body, inv, "invariant-init", [])
        # goals from inside the body: once for the unconditional first run...
        out.extend(body_sides)
        # ...and once under the loop context for every later iteration
        for g in self.guard_sides(cond):
            out.append(replace(g, formula=hv(_imp(inv, g.formula))))
        out.append(self.new_side("invariant-preserve", body_ctx(p_body), line))
        for s in body_sides:
            out.append(self.new_side(s.kind, body_ctx(s.formula), s.line, s.detail))
        if annot.variant is not None:
            out.extend(self.variant_sides(annot, st.body, body_ctx, line,
                                          loop_id))
        out.append(self.new_side(kind, exit_ctx(post), line, detail="loop exit"))
        return p_body, body_kind, out

    def reachable_callees(self, name, seen=None):
        if seen is None:
            seen = set()
        if name in seen:
            return seen
        seen.add(name)
        for node in S.walk(self.tunit.method(name).body):
            if isinstance(node, S.Call):
                self.reachable_callees(node.name, seen)
        return seen

    def call(self, st, call: S.Call, target: str | None, sides,
             post=None, kind=None):
        """x = f(args) or return f(args): modular contract reasoning."""
        callee = self.tunit.method(call.name)
        if self.method.name in self.reachable_callees(call.name):
            raise VcgenError(f"recursive call to {call.name!r} is not supported")
        new = []
        for a in call.args:
            new.extend(self.guard_sides(a))
        pairs = list(zip((n for n, _ in callee.params), call.args))

        def inst(f):
            f = unwrap_old(lower(f))
            for pname, actual in pairs:
                f = subst(f, pname, actual)
            return f

        req = inst(callee.spec.requires)
        new.append(self.new_side("call-requires", req, st.pos[0],
                                 detail=f"requires of {call.name}"))

        mutated = assigned_vars(callee.body) & {
            n.name for n in S.walk(callee.spec.ensures) if isinstance(n, S.Var)}
        mutated |= assigned_vars(callee.body) & {
            n.name for b in callee.spec.behaviours
            for n in S.walk(b.ensures) if isinstance(n, S.Var)}
        param_names = {n for n, _ in callee.params}
        bad = mutated & param_names
        if bad:
            raise VcgenError(
                f"contract of {call.name!r} mentions parameter(s) {sorted(bad)} "
                f"that its body reassigns; such calls are not supported")

        res = S.FreshVar(name=f"{call.name}@r{next(self.sid)}",
                         base=f"{call.name}.result", loop_id=-1,
                         ty=callee.return_type)
        ens_parts = [subst_result(inst(callee.spec.ensures), res)]
        for b in callee.spec.behaviours:
            ens_parts.append(_imp(inst(b.assumes),
                                  subst_result(inst(b.ensures), res)))
        assumption = S.conj(ens_parts)

        if target is None:
            cont = subst_result(self.exit_post, res)
            out_kind = self.exit_kind
        else:
            cont = subst(post, target, res)
            out_kind = kind
            sides = [replace(s, formula=subst(s.formula, target, res))
                     for s in sides]
        return _imp(assumption, cont), out_kind, sides + new


# ---------------------------------------------------------------------------
# obligation assembly

def free_symbols(f: S.Expr, bound=frozenset(), sorts=None, loop_ids=None):
    """Free Var/FreshVar symbols of a formula with their sorts, respecting
    quantifier scoping."""
    if sorts is None:
        sorts = {}
        loop_ids = set()
    if isinstance(f, S.Var):
        if f.name not in bound and f.ty is not None:
            sorts[f.name] = f.ty
        return sorts, loop_ids
    if isinstance(f, S.FreshVar):
        sorts[f.name] = f.ty
        if f.loop_id >= 0:
            loop_ids.add(f.loop_id)
        return sorts, loop_ids
    if isinstance(f, S.Forall):
        inner = bound | {n for n, _ in f.binders}
        free_symbols(f.body, inner, sorts, loop_ids)
        return sorts, loop_ids
    for name in getattr(f, "__dataclass_fields__", {}):
        v = getattr(f, name)
        if isinstance(v, S.Expr):
            free_symbols(v, bound, sorts, loop_ids)
        elif isinstance(v, list):
            for item in v:
                if isinstance(item, S.Expr):
                    free_symbols(item, bound, sorts, loop_ids)
    return sorts, loop_ids


def _closure_info(ob_formulas):
    sorts = {}
    loop_ids = set()
    for f in ob_formulas:
        free_symbols(f, frozenset(), sorts, loop_ids)
    return sorts, tuple(sorted(loop_ids))


_NAMES = {
    "ensures": "postcondition holds",
    "behaviour": "behaviour postcondition holds",
    "invariant-init": "loop invariant initially holds",
    "invariant-preserve": "loop invariant preserved",
    "variant-nonneg": "loop variant non-negative",
    "variant-decrease": "loop variant decreases",
    "assert": "assertion holds",
    "call-requires": "callee precondition holds",
    "division-guard": "divisor is non-zero",
    "bounds-guard": "array access within bounds",
    "lemma": "lemma",
}


def _make_obligation(method, seq, kind, line, detail, goal, hyps, hyp_sources):
    goal = unwrap_old(goal)
    for n in S.walk(goal):
        if isinstance(n, S.AtLabel):
            raise VcgenError("internal: LoopEntry label escaped obligation closure")
    sorts, loop_ids = _closure_info([goal] + hyps)
    name = _NAMES[kind]
    if detail:
        name = f"{name} ({detail})"
    return Obligation(
        id=f"{method}:{seq:03d}:{kind}",
        name=f"{name} [line {line}]",
        origin=Origin(method=method, line=line, kind=kind, detail=detail),
        hypotheses=hyps, hyp_sources=hyp_sources,
        goal=goal, var_sorts=sorts, loop_ids=loop_ids, detail=detail)


def generate_obligations(tunit: TypedUnit, method: str | None = None) -> ObligationSet:
    """Deterministic obligation set for one method (or all of them), with one
    obligation per unit lemma; lemmas also appear among every other
    obligation's hypotheses."""
    unit = tunit.unit
    obligations = []
    lemma_forms = []
    for lem in unit.lemmas:
        g = lower(lem.statement)
        lemma_forms.append(g)
        sorts, _ = _closure_info([g])
        obligations.append(Obligation(
            id=f"lemma:{lem.name}", name=f"lemma {lem.name}",
            origin=Origin(method="", line=lem.pos[0], kind="lemma", detail=lem.name),
            hypotheses=[], goal=g, var_sorts=sorts))

    if method is None:
        targets = [m.name for m in unit.methods]
    else:
        tunit.method(method)
        targets = [method]

    for mname in targets:
        obligations.extend(_method_obligations(tunit, mname, lemma_forms))
    return ObligationSet(unit=unit.name, unit_digest=unit_digest(tunit),
                         obligations=obligations, methods=tuple(targets))


def _method_obligations(tunit: TypedUnit, mname: str, lemma_forms) -> list:
    m = tunit.method(mname)
    requires = lower(m.spec.requires)
    base_hyps = list(lemma_forms) + [requires]
    base_sources = ["lemma"] * len(lemma_forms) + ["requires"]
    out = []
    seq = itertools.count()

    # main pass: the declared ensures, plus every post-independent obligation
    engine = _Wp(tunit, m, lower(m.spec.ensures), "ensures")
    pre, kind, sides = engine.wp(m.body, engine.exit_post, "ensures", [])
    out.append(_make_obligation(mname, next(seq), kind, m.pos[0], "",
                                pre, base_hyps, base_sources))
    for s in sides:
        out.append(_make_obligation(mname, next(seq), s.kind, s.line, s.detail,
                                    s.formula, base_hyps, base_sources))

    # behaviour passes contribute only their own postcondition chain
    for b in m.spec.behaviours:
        hyps = base_hyps + [lower(b.assumes)]
        sources = base_sources + ["assumes"]
        engine = _Wp(tunit, m, lower(b.ensures), "behaviour")
        pre, kind, sides = engine.wp(m.body, engine.exit_post, "behaviour", [])
        if kind == "behaviour":
            out.append(_make_obligation(mname, next(seq), "behaviour", m.pos[0],
                                        b.name, pre, hyps, sources))
        for s in sides:
            if s.kind == "behaviour":
                detail = b.name if not s.detail else f"{b.name}, {s.detail}"
                out.append(_make_obligation(mname, next(seq), "behaviour", s.line,
                                            detail, s.formula, hyps, sources))
    return out


# ---------------------------------------------------------------------------
# the wp operation of the public API (single statement, loop-free friendly)

def wp(tunit: TypedUnit, method: str, stmt: S.Stmt, post: S.Expr):
    """Weakest precondition of one typed statement: (pre, side obligations as
    (kind, formula) pairs). Statement and post must come from the typed unit's
    method scope."""
    m = tunit.method(method)
    engine = _Wp(tunit, m, lower(post), "ensures")
    pre, _, sides = engine.wp(stmt, lower(post), "ensures", [])
    return pre, [(s.kind, s.formula) for s in sides]


# ---------------------------------------------------------------------------
# trace validation

@dataclass
class ObligationTraceResult:
    id: str
    verdict: str        # 'pass' | 'fail' | 'not-instantiable'
    detail: str = ""
    witness: dict = field(default_factory=dict)


@dataclass
class TraceValidationReport:
    method: str
    results: list

    @property
    def passed(self):
        return [r for r in self.results if r.verdict == "pass"]

    @property
    def failed(self):
        return [r for r in self.results if r.verdict == "fail"]

    @property
    def not_instantiable(self):
        return [r for r in self.results if r.verdict == "not-instantiable"]

    @property
    def ok(self):
        return not self.failed


def instantiate_on_trace(obset: ObligationSet,
                         outcome: ExecutionOutcome) -> TraceValidationReport:
    """Substitute recorded states into each obligation and evaluate it.

    Havoc symbols take their values from recorded loop-head snapshots (every
    snapshot of the obligation's innermost loop, with enclosing loops taken
    from the nearest preceding snapshot); remaining free symbols take method
    entry values. Universally quantified lemma hypotheses are skipped: they
    are valid, so conditioning on them cannot change a verdict.
    """
    if outcome.status != "normal":
        raise VcgenError("trace validation needs an outcome with status 'normal'")
    if outcome.trace is None:
        raise VcgenError("outcome was produced without trace collection")
    if obset.unit_digest != outcome.unit_digest:
        raise VcgenError("unit mismatch between obligation set and outcome")

    results = []
    for ob in obset.obligations:
        results.append(_validate_one(ob, outcome))
    return TraceValidationReport(method=outcome.method, results=results)


def _segments(trace, method):
    """Contiguous per-invocation segments of the trace for `method`."""
    segs = []
    cur = None
    for snap in trace:
        if snap.method != method:
            continue
        if snap.kind == "entry":
            cur = [snap]
            segs.append(cur)
        elif cur is not None:
            cur.append(snap)
    return segs


def _validate_one(ob: Obligation, outcome) -> ObligationTraceResult:
    if ob.kind == "lemma":
        return ObligationTraceResult(ob.id, "not-instantiable", "no program point")
    segs = _segments(outcome.trace, ob.origin.method)
    if not segs:
        return ObligationTraceResult(ob.id, "not-instantiable",
                                     f"method {ob.origin.method} not in trace")
    hyps = [h for h, src in zip(ob.hypotheses, ob.hyp_sources) if src != "lemma"]
    test = ob.goal
    for h in reversed(hyps):
        test = _imp(h, test)

    fresh = {}
    result_syms = []
    for f in [ob.goal] + list(ob.hypotheses):
        for n in S.walk(f):
            if isinstance(n, S.FreshVar):
                if n.loop_id >= 0:
                    fresh.setdefault(n.loop_id, set()).add((n.name, n.base))
                elif n.base.endswith(".result"):
                    result_syms.append((n.name, n.base[:-len(".result")]))
    result_syms = sorted(set(result_syms))
    # a call-result symbol is universally quantified in the obligation, so any
    # recorded return value of the callee is a legitimate instantiation; the
    # assumed callee contract vacuously discharges mispaired ones
    result_choices = []
    for name, callee in result_syms:
        vals = [s.result for s in outcome.trace
                if s.kind == "exit" and s.method == callee]
        if not vals:
            return ObligationTraceResult(
                ob.id, "not-instantiable", f"no recorded call of {callee}")
        result_choices.append([(name, v) for v in vals])

    evaluated = 0
    for seg in segs:
        entry_env = dict(seg[0].state)
        combos = _combos(seg, fresh)
        for combo in combos:
            env = dict(entry_env)
            ok_combo = True
            for loop_id, snap in combo.items():
                for name, base in fresh[loop_id]:
                    if base not in snap.state:
                        ok_combo = False
                        break
                    env[name] = snap.state[base]
                if not ok_combo:
                    break
            if not ok_combo:
                continue
            for picks in itertools.product(*result_choices):
                env2 = dict(env)
                env2.update(picks)
                try:
                    holds = eval_formula(test, {"Here": env2, "Old": entry_env},
                                         outcome.mode)
                except EvalError as ex:
                    return ObligationTraceResult(ob.id, "not-instantiable", str(ex))
                evaluated += 1
                if not holds:
                    witness = {k: repr(v) for k, v in env2.items()}
                    return ObligationTraceResult(ob.id, "fail",
                                                 "falsified by recorded state",
                                                 witness)
    if evaluated == 0:
        return ObligationTraceResult(ob.id, "not-instantiable",
                                     "no matching snapshots in trace")
    return ObligationTraceResult(ob.id, "pass", f"{evaluated} instantiation(s)")


def _combos(seg, fresh):
    """Snapshot choices per loop: one combo per snapshot of the obligation's
    innermost loop, every other loop pinned to its nearest preceding
    snapshot. Each obligation carries at most one havoc generation per loop,
    so the preceding-snapshot rule reconstructs exactly the enclosing
    iteration the inner snapshot was recorded in: the instantiated formula
    then restates a check the runtime actually performed."""
    if not fresh:
        return [{}]
    inner = max(fresh)
    others = [l for l in fresh if l != inner]
    by_loop = {}
    for idx, snap in enumerate(seg):
        if snap.kind == "loop-head":
            by_loop.setdefault(snap.loop_id, []).append((idx, snap))
    combos = []
    for pos, snap in by_loop.get(inner, ()):
        combo = {inner: snap}
        ok = True
        for l in others:
            before = [s for i, s in by_loop.get(l, ()) if i <= pos]
            if not before:
                ok = False
                break
            combo[l] = before[-1]
        if ok:
            combos.append(combo)
    return combos
