"""Core term and formula representation.

Terms are Prolog-style: variables, constants, typed constants (``payee1#bt``),
compounds and lists.  Unique constants stand for bound variables that have been
opened up during translation; they are created through a Gen and can never be
written in source text.

Forms are the logical formulas the engine manipulates: atoms, the usual
connectives, typed quantifiers, three aggregate binders (cardinality, sum,
order), the meta operators kw and def, equality, truth constants, and the
mismatch marker produced when equality reduction meets two distinct ground
terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional


# ---------------------------------------------------------------------------
# Terms


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str

    def __repr__(self):
        return f"Var({self.name})"


@dataclass(frozen=True)
class Const(Term):
    """An atomic constant. value is a str for symbolic atoms, int/float for numbers."""

    value: object

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True)
class Typed(Term):
    """A typed constant such as payee1#bt: type name plus an identifier term."""

    type_name: str
    ident: Term

    def __repr__(self):
        return f"Typed({self.type_name}, {self.ident!r})"


@dataclass(frozen=True)
class Compound(Term):
    functor: str
    args: tuple

    def __repr__(self):
        return f"Compound({self.functor}, {self.args!r})"


# Lists are flat compounds under a reserved functor.
LIST_FUNCTOR = "$list"


def mklist(items: Iterable[Term]) -> Compound:
    return Compound(LIST_FUNCTOR, tuple(items))


def is_list(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor == LIST_FUNCTOR


@dataclass(frozen=True)
class Unique(Term):
    """A unique constant introduced for an opened bound variable.

    kind records the variable's name for readability, serial makes it globally
    fresh, marked says whether the existential-rule schema may consume it.
    """

    kind: str
    serial: int
    marked: bool = False

    def __repr__(self):
        star = "*" if self.marked else ""
        return f"Unique({self.kind}:{self.serial}{star})"


# ---------------------------------------------------------------------------
# Forms


class Form:
    __slots__ = ()


@dataclass(frozen=True)
class Atom(Form):
    pred: str
    args: tuple = ()

    def __repr__(self):
        return f"Atom({self.pred}/{len(self.args)})"

    @property
    def key(self):
        return (self.pred, len(self.args))


@dataclass(frozen=True)
class And(Form):
    left: Form
    right: Form


@dataclass(frozen=True)
class Or(Form):
    left: Form
    right: Form


@dataclass(frozen=True)
class Not(Form):
    body: Form


@dataclass(frozen=True)
class Impl(Form):
    lhs: Form
    rhs: Form


@dataclass(frozen=True)
class Equiv(Form):
    lhs: Form
    rhs: Form


@dataclass(frozen=True)
class Exists(Form):
    vars: tuple
    body: Form


@dataclass(frozen=True)
class Forall(Form):
    vars: tuple
    body: Form


@dataclass(frozen=True)
class Count(Form):
    """cardinality(N, X^P): N is the number of distinct X satisfying P."""

    result: Term
    var: Var
    body: Form


@dataclass(frozen=True)
class Sum(Form):
    result: Term
    var: Var
    body: Form


@dataclass(frozen=True)
class Order(Form):
    """order(Sel, X^D^P, Dir): Sel is the X whose D is extremal under Dir."""

    selected: Term
    var: Var
    degree: Var
    body: Form
    direction: Term


@dataclass(frozen=True)
class Kw(Form):
    body: Form


@dataclass(frozen=True)
class Def(Form):
    body: Form


@dataclass(frozen=True)
class Eq(Form):
    left: Term
    right: Term


@dataclass(frozen=True)
class Mismatch(Form):
    left: Term
    right: Term


@dataclass(frozen=True)
class TrueF(Form):
    pass


@dataclass(frozen=True)
class FalseF(Form):
    pass


TRUE = TrueF()
FALSE = FalseF()

BINDERS = (Exists, Forall, Count, Sum, Order)


# ---------------------------------------------------------------------------
# Fresh name generation


class Gen:
    """Session-wide source of fresh variables and unique constants."""

    def __init__(self):
        self._var = 0
        self._uniq = 0

    def var(self, hint: str = "G") -> Var:
        self._var += 1
        base = hint.lstrip("_") or "G"
        return Var(f"_{base}{self._var}")

    def unique(self, kind: str, marked: bool = False) -> Unique:
        self._uniq += 1
        return Unique(kind, self._uniq, marked)


# ---------------------------------------------------------------------------
# Structural helpers


def conjuncts(f: Form) -> list:
    """Flatten a conjunction tree into a list (left to right)."""
    out = []
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, And):
            stack.append(g.right)
            stack.append(g.left)
        else:
            out.append(g)
    return out


def mkand(fs: Iterable[Form]) -> Form:
    fs = [f for f in fs]
    if not fs:
        return TRUE
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def subforms(f: Form) -> Iterator[Form]:
    """All subformulas, preorder."""
    yield f
    if isinstance(f, (And, Or)):
        yield from subforms(f.left)
        yield from subforms(f.right)
    elif isinstance(f, (Impl, Equiv)):
        yield from subforms(f.lhs)
        yield from subforms(f.rhs)
    elif isinstance(f, (Not, Kw, Def)):
        yield from subforms(f.body)
    elif isinstance(f, (Exists, Forall, Count, Sum, Order)):
        yield from subforms(f.body)


def atoms_in(f: Form) -> Iterator[Atom]:
    for g in subforms(f):
        if isinstance(g, Atom):
            yield g


def term_vars(t: Term) -> set:
    out = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            out.add(x)
        elif isinstance(x, Compound):
            stack.extend(x.args)
        elif isinstance(x, Typed):
            stack.append(x.ident)
    return out


def term_uniques(t) -> set:
    out = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Unique):
            out.add(x)
        elif isinstance(x, Compound):
            stack.extend(x.args)
        elif isinstance(x, Typed):
            stack.append(x.ident)
        elif isinstance(x, Form):
            subs, terms = _parts(x)
            stack.extend(subs)
            stack.extend(terms)
    return out


def _parts(f: Form):
    """(subforms, terms) directly under a form node."""
    if isinstance(f, Atom):
        return (), f.args
    if isinstance(f, (And, Or)):
        return (f.left, f.right), ()
    if isinstance(f, (Impl, Equiv)):
        return (f.lhs, f.rhs), ()
    if isinstance(f, (Not, Kw, Def)):
        return (f.body,), ()
    if isinstance(f, (Exists, Forall)):
        return (f.body,), ()
    if isinstance(f, Count) or isinstance(f, Sum):
        return (f.body,), (f.result,)
    if isinstance(f, Order):
        return (f.body,), (f.selected, f.direction)
    if isinstance(f, (Eq, Mismatch)):
        return (), (f.left, f.right)
    return (), ()


def free_vars(f) -> set:
    if isinstance(f, Term):
        return term_vars(f)
    if isinstance(f, (Exists, Forall)):
        return free_vars(f.body) - set(f.vars)
    if isinstance(f, (Count, Sum)):
        return (free_vars(f.body) - {f.var}) | term_vars(f.result)
    if isinstance(f, Order):
        inner = free_vars(f.body) - {f.var, f.degree}
        return inner | term_vars(f.selected) | term_vars(f.direction)
    subs, terms = _parts(f)
    out = set()
    for s in subs:
        out |= free_vars(s)
    for t in terms:
        out |= term_vars(t)
    return out


def _binders(f: Form) -> tuple:
    if isinstance(f, (Exists, Forall)):
        return f.vars
    if isinstance(f, (Count, Sum)):
        return (f.var,)
    if isinstance(f, Order):
        return (f.var, f.degree)
    return ()


def all_vars(f) -> set:
    """Every variable occurring in f, binder positions included."""
    if isinstance(f, Term):
        return term_vars(f)
    subs, terms = _parts(f)
    out = set(_binders(f))
    for s in subs:
        out |= all_vars(s)
    for t in terms:
        out |= term_vars(t)
    return out


# ---------------------------------------------------------------------------
# Substitution

# A substitution maps Var -> Term.  Form substitution is capture avoiding:
# binders whose variables clash with the image are renamed on the fly.


def subst_term(t: Term, s: dict) -> Term:
    if isinstance(t, Var):
        got = s.get(t)
        return t if got is None else got
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(subst_term(a, s) for a in t.args))
    if isinstance(t, Typed):
        return Typed(t.type_name, subst_term(t.ident, s))
    return t


def _restrict(s: dict, shadowed: Iterable[Var]) -> dict:
    shadowed = set(shadowed)
    return {v: t for v, t in s.items() if v not in shadowed}


def _image_vars(s: dict) -> set:
    out = set()
    for t in s.values():
        out |= term_vars(t)
    return out


_rename_counter = [0]


def _fresh_like(v: Var) -> Var:
    _rename_counter[0] += 1
    return Var(f"{v.name}_r{_rename_counter[0]}")


def _avoid_capture(bound: tuple, body_s: dict, extra_bound_terms=()):
    """Rename bound vars that clash with the substitution image.

    Returns (new_bound_tuple, substitution_for_body).
    """
    danger = _image_vars(body_s)
    renames = {}
    newbound = []
    for v in bound:
        if v in danger:
            nv = _fresh_like(v)
            renames[v] = nv
            newbound.append(nv)
        else:
            newbound.append(v)
    if renames:
        body_s = dict(body_s)
        body_s.update(renames)
    return tuple(newbound), body_s


def subst(f, s: dict):
    """Apply substitution s to a form or term, avoiding variable capture."""
    if not s:
        return f
    if isinstance(f, Term):
        return subst_term(f, s)
    if isinstance(f, Atom):
        return Atom(f.pred, tuple(subst_term(a, s) for a in f.args))
    if isinstance(f, And):
        return And(subst(f.left, s), subst(f.right, s))
    if isinstance(f, Or):
        return Or(subst(f.left, s), subst(f.right, s))
    if isinstance(f, Not):
        return Not(subst(f.body, s))
    if isinstance(f, Impl):
        return Impl(subst(f.lhs, s), subst(f.rhs, s))
    if isinstance(f, Equiv):
        return Equiv(subst(f.lhs, s), subst(f.rhs, s))
    if isinstance(f, Kw):
        return Kw(subst(f.body, s))
    if isinstance(f, Def):
        return Def(subst(f.body, s))
    if isinstance(f, Eq):
        return Eq(subst_term(f.left, s), subst_term(f.right, s))
    if isinstance(f, Mismatch):
        return Mismatch(subst_term(f.left, s), subst_term(f.right, s))
    if isinstance(f, (TrueF, FalseF)):
        return f
    if isinstance(f, (Exists, Forall)):
        inner = _restrict(s, f.vars)
        if not inner:
            return f
        bound, inner = _avoid_capture(f.vars, inner)
        return type(f)(bound, subst(f.body, inner))
    if isinstance(f, (Count, Sum)):
        inner = _restrict(s, (f.var,))
        bound, inner = _avoid_capture((f.var,), inner)
        return type(f)(subst_term(f.result, s), bound[0], subst(f.body, inner))
    if isinstance(f, Order):
        inner = _restrict(s, (f.var, f.degree))
        bound, inner = _avoid_capture((f.var, f.degree), inner)
        return Order(
            subst_term(f.selected, s),
            bound[0],
            bound[1],
            subst(f.body, inner),
            subst_term(f.direction, s),
        )
    raise TypeError(f"cannot substitute in {f!r}")


def replace_terms(f, mapping: dict):
    """Replace exact term occurrences (typically Unique constants) everywhere.

    No scoping: callers only pass mappings whose keys cannot be captured
    (unique constants never appear in binder positions).
    """

    def rt(t):
        got = mapping.get(t)
        if got is not None:
            return got
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(rt(a) for a in t.args))
        if isinstance(t, Typed):
            return Typed(t.type_name, rt(t.ident))
        return t

    def rf(g):
        if isinstance(g, Atom):
            return Atom(g.pred, tuple(rt(a) for a in g.args))
        if isinstance(g, And):
            return And(rf(g.left), rf(g.right))
        if isinstance(g, Or):
            return Or(rf(g.left), rf(g.right))
        if isinstance(g, Not):
            return Not(rf(g.body))
        if isinstance(g, Impl):
            return Impl(rf(g.lhs), rf(g.rhs))
        if isinstance(g, Equiv):
            return Equiv(rf(g.lhs), rf(g.rhs))
        if isinstance(g, Kw):
            return Kw(rf(g.body))
        if isinstance(g, Def):
            return Def(rf(g.body))
        if isinstance(g, Eq):
            return Eq(rt(g.left), rt(g.right))
        if isinstance(g, Mismatch):
            return Mismatch(rt(g.left), rt(g.right))
        if isinstance(g, (TrueF, FalseF)):
            return g
        if isinstance(g, (Exists, Forall)):
            return type(g)(g.vars, rf(g.body))
        if isinstance(g, (Count, Sum)):
            return type(g)(rt(g.result), g.var, rf(g.body))
        if isinstance(g, Order):
            return Order(rt(g.selected), g.var, g.degree, rf(g.body), rt(g.direction))
        raise TypeError(f"cannot replace in {g!r}")

    if isinstance(f, Term):
        return rt(f)
    return rf(f)


def rename_vars(f, mapping: dict):
    """Rename variables uniformly, binder occurrences included.

    No scoping: the caller guarantees the new names are fresh, so the
    renaming cannot capture anything."""

    def rv(v):
        return mapping.get(v, v)

    def rt(t):
        if isinstance(t, Var):
            return rv(t)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(rt(a) for a in t.args))
        if isinstance(t, Typed):
            return Typed(t.type_name, rt(t.ident))
        return t

    def rf(g):
        if isinstance(g, Atom):
            return Atom(g.pred, tuple(rt(a) for a in g.args))
        if isinstance(g, And):
            return And(rf(g.left), rf(g.right))
        if isinstance(g, Or):
            return Or(rf(g.left), rf(g.right))
        if isinstance(g, Not):
            return Not(rf(g.body))
        if isinstance(g, Impl):
            return Impl(rf(g.lhs), rf(g.rhs))
        if isinstance(g, Equiv):
            return Equiv(rf(g.lhs), rf(g.rhs))
        if isinstance(g, Kw):
            return Kw(rf(g.body))
        if isinstance(g, Def):
            return Def(rf(g.body))
        if isinstance(g, Eq):
            return Eq(rt(g.left), rt(g.right))
        if isinstance(g, Mismatch):
            return Mismatch(rt(g.left), rt(g.right))
        if isinstance(g, (TrueF, FalseF)):
            return g
        if isinstance(g, (Exists, Forall)):
            return type(g)(tuple(rv(v) for v in g.vars), rf(g.body))
        if isinstance(g, (Count, Sum)):
            return type(g)(rt(g.result), rv(g.var), rf(g.body))
        if isinstance(g, Order):
            return Order(rt(g.selected), rv(g.var), rv(g.degree), rf(g.body),
                         rt(g.direction))
        raise TypeError(f"cannot rename in {g!r}")

    if isinstance(f, Term):
        return rt(f)
    return rf(f)


def _rebind(f: Form, pick) -> Form:
    """Rename every binder via pick(name); occurrences follow their binder."""

    def go(g, s):
        if isinstance(g, Term):
            return subst_term(g, s)
        if isinstance(g, Atom):
            return Atom(g.pred, tuple(subst_term(a, s) for a in g.args))
        if isinstance(g, And):
            return And(go(g.left, s), go(g.right, s))
        if isinstance(g, Or):
            return Or(go(g.left, s), go(g.right, s))
        if isinstance(g, Not):
            return Not(go(g.body, s))
        if isinstance(g, Impl):
            return Impl(go(g.lhs, s), go(g.rhs, s))
        if isinstance(g, Equiv):
            return Equiv(go(g.lhs, s), go(g.rhs, s))
        if isinstance(g, Kw):
            return Kw(go(g.body, s))
        if isinstance(g, Def):
            return Def(go(g.body, s))
        if isinstance(g, Eq):
            return Eq(subst_term(g.left, s), subst_term(g.right, s))
        if isinstance(g, Mismatch):
            return Mismatch(subst_term(g.left, s), subst_term(g.right, s))
        if isinstance(g, (TrueF, FalseF)):
            return g
        if isinstance(g, (Exists, Forall, Count, Sum, Order)):
            s2 = dict(s)
            fresh = []
            for v in _binders(g):
                nv = Var(pick(v.name))
                s2[v] = nv
                fresh.append(nv)
            if isinstance(g, (Exists, Forall)):
                return type(g)(tuple(fresh), go(g.body, s2))
            if isinstance(g, (Count, Sum)):
                return type(g)(subst_term(g.result, s), fresh[0], go(g.body, s2))
            return Order(subst_term(g.selected, s), fresh[0], fresh[1],
                         go(g.body, s2), subst_term(g.direction, s))
        raise TypeError(f"cannot rebind in {g!r}")

    return go(f, {})


def rename_apart(f: Form) -> Form:
    """Give every binder a name distinct from every other binder and from the
    free variables, so that no scope shadows another.  Later passes depend on
    this: equalities that relate an inner scope to an outer one would
    otherwise collapse when the two happen to use the same name."""
    used = {v.name for v in free_vars(f)}

    def pick(name):
        cand, k = name, 1
        while cand in used:
            k += 1
            cand = f"{name}{k}"
        used.add(cand)
        return cand

    return _rebind(f, pick)


_TIDY_SUFFIX = re.compile(r"(~.*|_[qr]\d+)$")


def tidy_names(f: Form) -> Form:
    """Undo the renaming suffixes accumulated during rewriting, keeping all
    binder names distinct.  Purely cosmetic; the result is alpha equal."""
    used = {v.name for v in free_vars(f)}

    def pick(name):
        base = _TIDY_SUFFIX.sub("", name) or name
        cand, k = base, 1
        while cand in used:
            k += 1
            cand = f"{base}{k}"
        used.add(cand)
        return cand

    return _rebind(f, pick)


# ---------------------------------------------------------------------------
# Unification (terms; occurs check always on)


def walk(t: Term, s: dict) -> Term:
    while isinstance(t, Var) and t in s:
        t = s[t]
    return t


def resolve(t, s: dict):
    """Fully apply a triangular substitution to a term or form."""
    if isinstance(t, Term):
        t = walk(t, s)
        if isinstance(t, Compound):
            return Compound(t.functor, tuple(resolve(a, s) for a in t.args))
        if isinstance(t, Typed):
            return Typed(t.type_name, resolve(t.ident, s))
        return t
    if isinstance(t, Atom):
        return Atom(t.pred, tuple(resolve(a, s) for a in t.args))
    # general forms: build a flat Var->Term map and use capture-avoiding subst
    flat = {}
    for v in free_vars(t):
        r = resolve(v, s)
        if r != v:
            flat[v] = r
    return subst(t, flat)


def occurs(v: Var, t: Term, s: dict) -> bool:
    t = walk(t, s)
    if t is v or t == v:
        return True
    if isinstance(t, Compound):
        return any(occurs(v, a, s) for a in t.args)
    if isinstance(t, Typed):
        return occurs(v, t.ident, s)
    return False


def unify(a: Term, b: Term, s: Optional[dict] = None) -> Optional[dict]:
    """Unify two terms; returns an extended substitution or None.

    The result shares structure with s (which is never mutated).
    """
    if s is None:
        s = {}
    pairs = [(a, b)]
    out = dict(s)
    while pairs:
        x, y = pairs.pop()
        x = walk(x, out)
        y = walk(y, out)
        if x == y:
            continue
        if isinstance(x, Var):
            if occurs(x, y, out):
                return None
            out[x] = y
        elif isinstance(y, Var):
            if occurs(y, x, out):
                return None
            out[y] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            pairs.extend(zip(x.args, y.args))
        elif isinstance(x, Typed) and isinstance(y, Typed):
            if x.type_name != y.type_name:
                return None
            pairs.append((x.ident, y.ident))
        else:
            return None
    return out


def unify_atoms(a: Atom, b: Atom, s: Optional[dict] = None) -> Optional[dict]:
    if a.pred != b.pred or len(a.args) != len(b.args):
        return None
    if s is None:
        s = {}
    out = s
    for x, y in zip(a.args, b.args):
        out = unify(x, y, out)
        if out is None:
            return None
    return out


def is_ground(t, treat_unique_as_ground: bool = True) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, Unique):
        return treat_unique_as_ground
    if isinstance(t, Compound):
        return all(is_ground(a, treat_unique_as_ground) for a in t.args)
    if isinstance(t, Typed):
        return is_ground(t.ident, treat_unique_as_ground)
    if isinstance(t, Atom):
        return all(is_ground(a, treat_unique_as_ground) for a in t.args)
    return True


# ---------------------------------------------------------------------------
# Alpha equivalence

# Bound variables correspond positionally; unique constants may differ in
# serial (and kind) as long as the correspondence is a bijection and marking
# agrees.  Conjunction is not treated as associative or commutative.


def alpha_equal(f1, f2) -> bool:
    return _alpha(f1, f2, {}, {}, {}, {})


def _alpha_term(t1, t2, env1, env2, u12, u21) -> bool:
    if isinstance(t1, Var) or isinstance(t2, Var):
        if not (isinstance(t1, Var) and isinstance(t2, Var)):
            return False
        r1 = env1.get(t1, t1)
        r2 = env2.get(t2, t2)
        return r1 == r2
    if isinstance(t1, Unique) or isinstance(t2, Unique):
        if not (isinstance(t1, Unique) and isinstance(t2, Unique)):
            return False
        if t1.marked != t2.marked:
            return False
        if t1 in u12:
            return u12[t1] == t2 and u21.get(t2) == t1
        if t2 in u21:
            return False
        u12[t1] = t2
        u21[t2] = t1
        return True
    if isinstance(t1, Compound) and isinstance(t2, Compound):
        return (
            t1.functor == t2.functor
            and len(t1.args) == len(t2.args)
            and all(_alpha_term(a, b, env1, env2, u12, u21) for a, b in zip(t1.args, t2.args))
        )
    if isinstance(t1, Typed) and isinstance(t2, Typed):
        return t1.type_name == t2.type_name and _alpha_term(t1.ident, t2.ident, env1, env2, u12, u21)
    return t1 == t2


def _bind(env, vs, tag):
    env = dict(env)
    for i, v in enumerate(vs):
        env[v] = (tag, i)
    return env


_alpha_tag = [0]


def _alpha(f1, f2, env1, env2, u12, u21) -> bool:
    if type(f1) is not type(f2):
        return False
    if isinstance(f1, Atom):
        return f1.pred == f2.pred and len(f1.args) == len(f2.args) and all(
            _alpha_term(a, b, env1, env2, u12, u21) for a, b in zip(f1.args, f2.args)
        )
    if isinstance(f1, (And, Or)):
        return _alpha(f1.left, f2.left, env1, env2, u12, u21) and _alpha(
            f1.right, f2.right, env1, env2, u12, u21
        )
    if isinstance(f1, (Impl, Equiv)):
        return _alpha(f1.lhs, f2.lhs, env1, env2, u12, u21) and _alpha(
            f1.rhs, f2.rhs, env1, env2, u12, u21
        )
    if isinstance(f1, (Not, Kw, Def)):
        return _alpha(f1.body, f2.body, env1, env2, u12, u21)
    if isinstance(f1, (Eq, Mismatch)):
        return _alpha_term(f1.left, f2.left, env1, env2, u12, u21) and _alpha_term(
            f1.right, f2.right, env1, env2, u12, u21
        )
    if isinstance(f1, (TrueF, FalseF)):
        return True
    if isinstance(f1, (Exists, Forall)):
        if len(f1.vars) != len(f2.vars):
            return False
        _alpha_tag[0] += 1
        tag = _alpha_tag[0]
        return _alpha(
            f1.body, f2.body, _bind(env1, f1.vars, tag), _bind(env2, f2.vars, tag), u12, u21
        )
    if isinstance(f1, (Count, Sum)):
        if not _alpha_term(f1.result, f2.result, env1, env2, u12, u21):
            return False
        _alpha_tag[0] += 1
        tag = _alpha_tag[0]
        return _alpha(
            f1.body, f2.body, _bind(env1, (f1.var,), tag), _bind(env2, (f2.var,), tag), u12, u21
        )
    if isinstance(f1, Order):
        if not _alpha_term(f1.selected, f2.selected, env1, env2, u12, u21):
            return False
        if not _alpha_term(f1.direction, f2.direction, env1, env2, u12, u21):
            return False
        _alpha_tag[0] += 1
        tag = _alpha_tag[0]
        return _alpha(
            f1.body,
            f2.body,
            _bind(env1, (f1.var, f1.degree), tag),
            _bind(env2, (f2.var, f2.degree), tag),
            u12,
            u21,
        )
    raise TypeError(f"cannot compare {f1!r}")


# ---------------------------------------------------------------------------
# Opening binders


def _occurrence_leaves(body: Form, v: Var):
    """Leaf formulas in which v occurs free, with a flag saying whether the
    path from the binder crosses only conjunctions and nested quantifier
    shells that do not rebind v.

    Opaque nodes (negation, disjunction, implication, universal shells seen
    from inside an existential, aggregates) end a path: if v occurs below one,
    the whole opaque node is the leaf and the path is not clean past it.
    """
    leaves = []

    def go(g, clean):
        if isinstance(g, And):
            go(g.left, clean)
            go(g.right, clean)
            return
        if isinstance(g, Exists):
            if v in g.vars:
                return
            go(g.body, clean)
            return
        if isinstance(g, (Atom, Eq, Mismatch)):
            if v in free_vars(g):
                leaves.append((g, clean))
            return
        # everything else is opaque for movement purposes
        if v in free_vars(g):
            leaves.append((g, False))

    go(body, True)
    return leaves


def marked_ok(body: Form, v: Var) -> bool:
    """True when the variable may be opened as a marked constant: it occurs
    in exactly one atom and only conjunctions separate that atom from the
    binder."""
    leaves = _occurrence_leaves(body, v)
    if len(leaves) != 1:
        return False
    leaf, clean = leaves[0]
    return clean and isinstance(leaf, Atom)


def replace_bound(form: Form, gen: Gen, kinds=("exists", "forall", "count", "sum", "order")):
    """Open every binder of the requested kinds, replacing bound variables by
    fresh unique constants.  Returns (opened form, marked constants, reverse
    mapping from constants to the variables they replaced).

    A constant is marked only when it replaces an existentially bound
    variable whose single occurrence is an atom reachable through
    conjunctions alone.
    """
    marked: set = set()
    reverse: dict = {}
    kindset = set(kinds)

    def go(f):
        if isinstance(f, Exists) and "exists" in kindset:
            s = {}
            for v in f.vars:
                m = marked_ok(f.body, v)
                c = gen.unique(v.name, marked=m)
                if m:
                    marked.add(c)
                reverse[c] = v
                s[v] = c
            return go(subst(f.body, s))
        if isinstance(f, Forall) and "forall" in kindset:
            s = {}
            for v in f.vars:
                c = gen.unique(v.name, marked=False)
                reverse[c] = v
                s[v] = c
            return go(subst(f.body, s))
        if isinstance(f, (Count, Sum)) and ("count" if isinstance(f, Count) else "sum") in kindset:
            c = gen.unique(f.var.name, marked=False)
            reverse[c] = f.var
            opened = go(subst(f.body, {f.var: c}))
            return type(f)(f.result, f.var, opened)
        if isinstance(f, Order) and "order" in kindset:
            c1 = gen.unique(f.var.name, marked=False)
            c2 = gen.unique(f.degree.name, marked=False)
            reverse[c1] = f.var
            reverse[c2] = f.degree
            opened = go(subst(f.body, {f.var: c1, f.degree: c2}))
            return Order(f.selected, f.var, f.degree, opened, f.direction)
        if isinstance(f, And):
            return And(go(f.left), go(f.right))
        if isinstance(f, Or):
            return Or(go(f.left), go(f.right))
        if isinstance(f, Not):
            return Not(go(f.body))
        if isinstance(f, Impl):
            return Impl(go(f.lhs), go(f.rhs))
        if isinstance(f, Equiv):
            return Equiv(go(f.lhs), go(f.rhs))
        if isinstance(f, Kw):
            return Kw(go(f.body))
        if isinstance(f, Def):
            return Def(go(f.body))
        return f

    return go(form), frozenset(marked), reverse
