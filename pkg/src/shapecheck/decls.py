"""Datatype declarations: parsing, normalization, and the unboxing check.

A declaration file is checked by unfolding each type into a formal sum of
components (boxed constructors, type parameters, primitive and abstract
applications). Unfolding is monitored with per-subterm traces exactly like
term reduction, so recursive definitions that would unfold forever are
rejected with a cycle report instead of looping. Accepted declarations get
a head shape plus, per unboxed constructor, the shape used to dispatch on
its argument during matching.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import calculus
from .calculus import App, Mode, Program, Definition, Term, Var
from .shapes import (
    EMPTY_SHAPE,
    TOP,
    TOP_SHAPE,
    Component,
    ConflictWitness,
    CtorComponent,
    HeadShape,
    OpaqueComponent,
    PrimComponent,
    PrimTable,
    ShapeContext,
    VarComponent,
    component_shape,
    default_prim_table,
    describe_component,
    shape_disjoint_union,
    shape_union,
)


class DeclError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class DeclSyntaxError(DeclError):
    pass


class DuplicateTypeNameError(DeclError):
    pass


class DuplicateCtorError(DeclError):
    pass


class UnboundTypeNameError(DeclError):
    pass


class ArityMismatchError(DeclError):
    pass


class UnknownCtorError(DeclError):
    pass


class DeclNotAcceptedError(DeclError):
    pass


# ---------------------------------------------------------------------------
# Type expressions and declarations


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TyApp:
    name: str
    args: tuple["TypeExpr", ...] = ()


@dataclass(frozen=True)
class PrimApp:
    name: str
    args: tuple["TypeExpr", ...] = ()


TypeExpr = TVar | TyApp | PrimApp


@dataclass(frozen=True)
class Ctor:
    name: str
    arg_types: tuple[TypeExpr, ...]
    unboxed: bool
    constant: bool
    index: int | None  # position among the boxed constant/non-constant ctors


@dataclass(frozen=True)
class VariantBody:
    ctors: tuple[Ctor, ...]


@dataclass(frozen=True)
class AbbrevBody:
    body: TypeExpr


@dataclass(frozen=True)
class AbstractBody:
    shape: HeadShape = TOP_SHAPE


DeclBody = VariantBody | AbbrevBody | AbstractBody


@dataclass(frozen=True)
class Decl:
    name: str
    params: tuple[str, ...]
    body: DeclBody


def make_variant(specs) -> VariantBody:
    """Build a variant body from (name, field_types, unboxed) triples,
    assigning constant and non-constant indices over the boxed
    constructors in source order."""
    ctors: list[Ctor] = []
    n_const = n_block = 0
    for name, fields, unboxed in specs:
        fields = tuple(fields)
        if unboxed:
            if len(fields) != 1:
                raise DeclSyntaxError(f"unboxed constructor {name!r} must take exactly one argument")
            ctors.append(Ctor(name, fields, True, False, None))
        elif not fields:
            ctors.append(Ctor(name, (), False, True, n_const))
            n_const += 1
        else:
            ctors.append(Ctor(name, fields, False, False, n_block))
            n_block += 1
    return VariantBody(tuple(ctors))


def render_type(ty: TypeExpr) -> str:
    if isinstance(ty, TVar):
        return f"'{ty.name}"
    if not ty.args:
        return ty.name
    if len(ty.args) == 1:
        return f"({render_type(ty.args[0])}) {ty.name}"
    return f"({', '.join(render_type(a) for a in ty.args)}) {ty.name}"


# ---------------------------------------------------------------------------
# Parsing


@dataclass(frozen=True)
class _RawRef:
    name: str
    args: tuple
    line: int
    col: int


@dataclass(frozen=True)
class _DTok:
    kind: str  # lident, uident, tyvar, int, punct, attr, eof
    text: str
    line: int
    col: int


_D_LIDENT = re.compile(r"[a-z_][a-zA-Z0-9_]*")
_D_UIDENT = re.compile(r"[A-Z][a-zA-Z0-9_]*")
_D_INT = re.compile(r"[0-9]+")


def _dtokenize(text: str) -> list[_DTok]:
    toks: list[_DTok] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if "#" in line:
            line = line[: line.index("#")]
        col = 0
        while col < len(line):
            ch = line[col]
            if ch.isspace():
                col += 1
                continue
            if line.startswith("[@", col):
                toks.append(_DTok("attr", "[@", lineno, col + 1))
                col += 2
                continue
            if ch == "'":
                m = _D_LIDENT.match(line, col + 1)
                if not m:
                    raise DeclSyntaxError("malformed type variable", lineno, col + 1)
                toks.append(_DTok("tyvar", m.group(0), lineno, col + 1))
                col = m.end()
                continue
            if ch in "(){}|=*;:,]":
                toks.append(_DTok("punct", ch, lineno, col + 1))
                col += 1
                continue
            m = _D_LIDENT.match(line, col)
            if m:
                toks.append(_DTok("lident", m.group(0), lineno, col + 1))
                col = m.end()
                continue
            m = _D_UIDENT.match(line, col)
            if m:
                toks.append(_DTok("uident", m.group(0), lineno, col + 1))
                col = m.end()
                continue
            m = _D_INT.match(line, col)
            if m:
                toks.append(_DTok("int", m.group(0), lineno, col + 1))
                col = m.end()
                continue
            raise DeclSyntaxError(f"unexpected character {ch!r}", lineno, col + 1)
    toks.append(_DTok("eof", "", len(text.split("\n")), 1))
    return toks


class _DeclParser:
    def __init__(self, toks: list[_DTok]):
        self.toks = toks
        self.pos = 0

    def peek(self) -> _DTok:
        return self.toks[self.pos]

    def next(self) -> _DTok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _DTok:
        t = self.next()
        if t.text != text:
            raise DeclSyntaxError(
                f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col
            )
        return t

    def lident(self, what: str = "a name") -> _DTok:
        t = self.next()
        if t.kind != "lident":
            raise DeclSyntaxError(
                f"expected {what}, found {t.text or 'end of input'!r}", t.line, t.col
            )
        return t

    # -- shape literals, parsed from the token stream

    def sub_shape(self):
        t = self.next()
        if t.text == "top":
            return None  # placeholder, mapped to TOP by caller
        if t.text != "{":
            raise DeclSyntaxError("expected 'top' or '{...}' in shape", t.line, t.col)
        values: set[int] = set()
        if self.peek().text != "}":
            while True:
                n = self.next()
                if n.kind != "int":
                    raise DeclSyntaxError("expected an integer in shape", n.line, n.col)
                values.add(int(n.text))
                if self.peek().text == ",":
                    self.next()
                    continue
                break
        self.expect("}")
        return frozenset(values)

    def shape_literal(self) -> HeadShape:
        self.expect("(")
        self.expect("imm")
        self.expect(":")
        imm = self.sub_shape()
        sep = self.next()
        if sep.text not in (";", ","):
            raise DeclSyntaxError("expected ';' between shape sides", sep.line, sep.col)
        self.expect("block")
        self.expect(":")
        block = self.sub_shape()
        self.expect(")")
        tok = self.toks[self.pos - 1]
        try:
            return HeadShape(TOP if imm is None else imm, TOP if block is None else block)
        except ValueError as e:
            raise DeclSyntaxError(str(e), tok.line, tok.col)

    def attrs(self) -> dict:
        out: dict = {}
        while self.peek().kind == "attr":
            self.next()
            name = self.lident("an attribute name")
            if name.text == "unboxed":
                out["unboxed"] = True
            elif name.text == "shape":
                out["shape"] = self.shape_literal()
            else:
                raise DeclSyntaxError(f"unknown attribute {name.text!r}", name.line, name.col)
            self.expect("]")
        return out

    # -- type expressions

    def type_atom(self):
        t = self.peek()
        if t.kind == "tyvar":
            self.next()
            return TVar(t.text), None
        if t.kind == "lident":
            self.next()
            return _RawRef(t.text, (), t.line, t.col), None
        if t.text == "(":
            self.next()
            first = self.type_expr(allow_star=True)
            if self.peek().text == ",":
                items = [first]
                while self.peek().text == ",":
                    self.next()
                    items.append(self.type_expr(allow_star=True))
                self.expect(")")
                return None, tuple(items)
            self.expect(")")
            return first, None
        raise DeclSyntaxError(
            f"expected a type, found {t.text or 'end of input'!r}", t.line, t.col
        )

    def type_expr(self, allow_star: bool = False) -> TypeExpr:
        node, pending = self.type_atom()
        if pending is not None:
            t = self.peek()
            if t.kind != "lident" or t.text in ("of", "type"):
                raise DeclSyntaxError(
                    "a parenthesized argument list must be followed by a type name",
                    t.line,
                    t.col,
                )
            self.next()
            node = _RawRef(t.text, pending, t.line, t.col)
        while self.peek().kind == "lident" and self.peek().text not in ("of", "type"):
            t = self.next()
            node = _RawRef(t.text, (node,), t.line, t.col)
        if allow_star and self.peek().text == "*":
            parts = [node]
            start = self.peek()
            while self.peek().text == "*":
                self.next()
                parts.append(self.type_expr(allow_star=False))
            node = _RawRef("tuple", tuple(parts), start.line, start.col)
        return node

    # -- constructors and declarations

    def record_fields(self) -> tuple:
        self.expect("{")
        fields = []
        while True:
            self.lident("a field name")
            self.expect(":")
            fields.append(self.type_expr(allow_star=False))
            if self.peek().text == ";":
                self.next()
                if self.peek().text == "}":
                    break
                continue
            break
        self.expect("}")
        return tuple(fields)

    def ctor(self):
        t = self.next()
        if t.kind != "uident":
            raise DeclSyntaxError(
                f"expected a constructor name, found {t.text!r}", t.line, t.col
            )
        fields: tuple = ()
        if self.peek().text == "of":
            self.next()
            if self.peek().text == "{":
                fields = self.record_fields()
            else:
                parts = [self.type_expr(allow_star=False)]
                while self.peek().text == "*":
                    self.next()
                    parts.append(self.type_expr(allow_star=False))
                fields = tuple(parts)
        attrs = self.attrs()
        unboxed = attrs.pop("unboxed", False)
        if attrs:
            raise DeclSyntaxError(f"unexpected attribute on constructor {t.text!r}", t.line, t.col)
        if unboxed and len(fields) != 1:
            raise DeclSyntaxError(
                f"unboxed constructor {t.text!r} must take exactly one argument", t.line, t.col
            )
        return t.text, fields, unboxed, t

    def declaration(self):
        self.expect("type")
        params: list[str] = []
        t = self.peek()
        if t.kind == "tyvar":
            self.next()
            params.append(t.text)
        elif t.text == "(" and self.toks[self.pos + 1].kind == "tyvar":
            self.next()
            while True:
                tv = self.next()
                if tv.kind != "tyvar":
                    raise DeclSyntaxError("expected a type variable", tv.line, tv.col)
                params.append(tv.text)
                if self.peek().text == ",":
                    self.next()
                    continue
                break
            self.expect(")")
        name = self.lident("a type name")
        attrs = self.attrs()
        shape = attrs.pop("shape", None)
        if attrs:
            raise DeclSyntaxError(f"unexpected attribute on type {name.text!r}", name.line, name.col)
        if len(set(params)) != len(params):
            raise DeclSyntaxError(f"duplicate type parameter on {name.text!r}", name.line, name.col)
        if self.peek().text != "=":
            return Decl(name.text, tuple(params), AbstractBody(shape or TOP_SHAPE)), name
        self.next()
        if shape is not None:
            raise DeclSyntaxError(
                "[@shape ...] is only allowed on abstract types", name.line, name.col
            )
        t = self.peek()
        if t.text == "|" or t.kind == "uident":
            raw_ctors = []
            if t.text == "|":
                self.next()
            if self.peek().kind == "uident":
                raw_ctors.append(self.ctor())
                while self.peek().text == "|":
                    self.next()
                    raw_ctors.append(self.ctor())
            return Decl(name.text, tuple(params), _RawVariant(tuple(raw_ctors))), name
        body = self.type_expr(allow_star=False)
        return Decl(name.text, tuple(params), AbbrevBody(body)), name


@dataclass(frozen=True)
class _RawVariant:
    ctors: tuple  # (name, fields, unboxed, token) before index assignment


def _resolve_type(ty, env: Mapping[str, Decl], prims: PrimTable, params: set[str]):
    if isinstance(ty, TVar):
        if ty.name not in params:
            raise UnboundTypeNameError(f"unbound type variable '{ty.name}")
        return ty
    if isinstance(ty, _RawRef):
        args = tuple(_resolve_type(a, env, prims, params) for a in ty.args)
        if ty.name in env:
            want = len(env[ty.name].params)
            if len(args) != want:
                raise ArityMismatchError(
                    f"type {ty.name!r} expects {want} argument(s), got {len(args)}",
                    ty.line,
                    ty.col,
                )
            return TyApp(ty.name, args)
        if ty.name in prims:
            return PrimApp(ty.name, args)
        raise UnboundTypeNameError(f"unbound type name {ty.name!r}", ty.line, ty.col)
    return ty


def parse_decls(text: str, prims: PrimTable | None = None) -> list[Decl]:
    """Parse a declaration file; mutual recursion is permitted file-wide."""
    if prims is None:
        prims = default_prim_table()
    p = _DeclParser(_dtokenize(text))
    raw: list[tuple[Decl, _DTok]] = []
    while p.peek().kind != "eof":
        raw.append(p.declaration())
    env: dict[str, Decl] = {}
    for d, tok in raw:
        if d.name in env:
            raise DuplicateTypeNameError(f"duplicate type name {d.name!r}", tok.line, tok.col)
        env[d.name] = d
    out: list[Decl] = []
    for d, _tok in raw:
        params = set(d.params)
        body: DeclBody
        if isinstance(d.body, _RawVariant):
            seen: set[str] = set()
            specs = []
            for cname, fields, unboxed, ctok in d.body.ctors:
                if cname in seen:
                    raise DuplicateCtorError(
                        f"duplicate constructor {cname!r} in type {d.name!r}", ctok.line, ctok.col
                    )
                seen.add(cname)
                rfields = tuple(_resolve_type(f, env, prims, params) for f in fields)
                specs.append((cname, rfields, unboxed))
            body = make_variant(specs)
        elif isinstance(d.body, AbbrevBody):
            body = AbbrevBody(_resolve_type(d.body.body, env, prims, params))
        else:
            body = d.body
        resolved = Decl(d.name, d.params, body)
        env[d.name] = resolved
        out.append(resolved)
    return out


# ---------------------------------------------------------------------------
# Sum normal forms with monitored unfolding


@dataclass(frozen=True)
class SumNF:
    components: tuple[Component, ...]


@dataclass(frozen=True)
class Cycle:
    name: str
    trace: tuple[str, ...]

    @property
    def path(self) -> tuple[str, ...]:
        return self.trace + (self.name,)


class _CycleSignal(Exception):
    def __init__(self, name: str, trace: tuple[str, ...]):
        self.name = name
        self.trace = trace
        super().__init__(name)


class _ConflictSignal(Exception):
    def __init__(self, witness: ConflictWitness):
        self.witness = witness
        super().__init__(witness)


@dataclass(frozen=True)
class _AVar:
    name: str


@dataclass(frozen=True)
class _AApp:
    name: str
    args: tuple
    trace: tuple[str, ...]


@dataclass(frozen=True)
class _APrim:
    name: str
    args: tuple  # plain, fully substituted type expressions


def _subst_type(ty: TypeExpr, sub: Mapping[str, TypeExpr]) -> TypeExpr:
    if isinstance(ty, TVar):
        return sub.get(ty.name, ty)
    args = tuple(_subst_type(a, sub) for a in ty.args)
    return type(ty)(ty.name, args)


def _erase_ann(aty) -> TypeExpr:
    if isinstance(aty, _AVar):
        return TVar(aty.name)
    if isinstance(aty, _APrim):
        return PrimApp(aty.name, aty.args)
    return TyApp(aty.name, tuple(_erase_ann(a) for a in aty.args))


def _ann_subst(ty: TypeExpr, sub_ann: Mapping, sub_plain: Mapping, trace: tuple):
    """Annotating substitution on type expressions: substituted arguments
    keep their own traces, nodes from `ty` get `trace`."""
    if isinstance(ty, TVar):
        return sub_ann.get(ty.name, _AVar(ty.name))
    if isinstance(ty, PrimApp):
        return _APrim(ty.name, tuple(_subst_type(a, sub_plain) for a in ty.args))
    return _AApp(ty.name, tuple(_ann_subst(a, sub_ann, sub_plain, trace) for a in ty.args), trace)


def _norm(aty, env: Mapping[str, Decl], via: tuple[str, ...]) -> list[Component]:
    if isinstance(aty, _AVar):
        return [VarComponent(aty.name, via)]
    if isinstance(aty, _APrim):
        return [PrimComponent(aty.name, aty.args, via)]
    decl = env[aty.name]
    if isinstance(decl.body, AbstractBody):
        return [OpaqueComponent(aty.name, tuple(_erase_ann(a) for a in aty.args), decl.body.shape, via)]
    if aty.name in aty.trace:
        raise _CycleSignal(aty.name, aty.trace)
    deeper = aty.trace + (aty.name,)
    sub_ann = dict(zip(decl.params, aty.args))
    sub_plain = {p: _erase_ann(a) for p, a in sub_ann.items()}
    if isinstance(decl.body, AbbrevBody):
        return _norm(_ann_subst(decl.body.body, sub_ann, sub_plain, deeper), env, via + (aty.name,))
    out: list[Component] = []
    for c in decl.body.ctors:
        if c.unboxed:
            arg = _ann_subst(c.arg_types[0], sub_ann, sub_plain, deeper)
            out.extend(_norm(arg, env, via + (c.name,)))
        else:
            fields = tuple(_subst_type(f, sub_plain) for f in c.arg_types)
            out.append(CtorComponent(c.name, fields, aty.name, c.constant, c.index, via))
    return out


def normalize_type(ty: TypeExpr, decls: Sequence[Decl], prims: PrimTable | None = None) -> SumNF | Cycle:
    """Unfold a type into its sum normal form, or report the blocking cycle."""
    env = {d.name: d for d in decls}
    try:
        return SumNF(tuple(_norm(_ann_subst(ty, {}, {}, ()), env, ())))
    except _CycleSignal as c:
        return Cycle(c.name, c.trace)


def shape_of_snf(snf: SumNF, ctx: ShapeContext) -> HeadShape | ConflictWitness:
    """Disjointly union the component shapes; a conflict is a value."""
    done: list[tuple[Component, HeadShape]] = []
    acc = EMPTY_SHAPE
    for comp in snf.components:
        s = component_shape(comp, ctx)
        for prev, prev_s in done:
            w = shape_disjoint_union(prev_s, s, describe_component(prev), describe_component(comp))
            if isinstance(w, ConflictWitness):
                return w
        done.append((comp, s))
        acc = shape_union(acc, s)
    return acc


def _shape_of_type(ty: TypeExpr, env: Mapping[str, Decl], prims: PrimTable,
                   seen: frozenset) -> HeadShape:
    if ty in seen:
        return TOP_SHAPE  # shape-level recursion through a lazy-like argument
    comps = SumNF(tuple(_norm(_ann_subst(ty, {}, {}, ()), env, ())))
    ctx = ShapeContext(prims, lambda t: _shape_of_type(t, env, prims, seen | {ty}))
    sw = shape_of_snf(comps, ctx)
    if isinstance(sw, ConflictWitness):
        raise _ConflictSignal(sw)
    return sw


def shape_of_type(ty: TypeExpr, decls: Sequence[Decl], prims: PrimTable | None = None) -> HeadShape | ConflictWitness | Cycle:
    env = {d.name: d for d in decls}
    if prims is None:
        prims = default_prim_table()
    try:
        return _shape_of_type(ty, env, prims, frozenset())
    except _CycleSignal as c:
        return Cycle(c.name, c.trace)
    except _ConflictSignal as cs:
        return cs.witness


# ---------------------------------------------------------------------------
# Checking


@dataclass(frozen=True)
class Accepted:
    decl: str
    shape: HeadShape
    unboxed_arg_shapes: tuple[tuple[str, HeadShape], ...]


@dataclass(frozen=True)
class RejectedConflict:
    decl: str
    witness: ConflictWitness


@dataclass(frozen=True)
class RejectedCycle:
    decl: str
    name: str
    trace: tuple[str, ...]
    path: tuple[str, ...]


CheckReport = Accepted | RejectedConflict | RejectedCycle


def self_application(decl: Decl) -> TyApp:
    return TyApp(decl.name, tuple(TVar(p) for p in decl.params))


def check_decls(decls: Sequence[Decl], prims: PrimTable | None = None) -> list[CheckReport]:
    """One verdict per declaration, in file order."""
    if prims is None:
        prims = default_prim_table()
    env = {d.name: d for d in decls}
    reports: list[CheckReport] = []
    for d in decls:
        reports.append(_check_one(d, env, prims))
    return reports


def _check_one(d: Decl, env: Mapping[str, Decl], prims: PrimTable) -> CheckReport:
    if isinstance(d.body, AbstractBody):
        return Accepted(d.name, d.body.shape, ())
    try:
        comps = SumNF(tuple(_norm(_ann_subst(self_application(d), {}, {}, ()), env, ())))
        ctx = ShapeContext(prims, lambda t: _shape_of_type(t, env, prims, frozenset()))
        sw = shape_of_snf(comps, ctx)
        if isinstance(sw, ConflictWitness):
            return RejectedConflict(d.name, sw)
        recorded: list[tuple[str, HeadShape]] = []
        if isinstance(d.body, VariantBody):
            for c in d.body.ctors:
                if c.unboxed:
                    recorded.append((c.name, _shape_of_type(c.arg_types[0], env, prims, frozenset())))
        return Accepted(d.name, sw, tuple(recorded))
    except _CycleSignal as c:
        return RejectedCycle(d.name, c.name, c.trace, c.trace + (c.name,))
    except _ConflictSignal as cs:
        return RejectedConflict(d.name, cs.witness)


def match_plan(decl: Decl, ctor_name: str, report: CheckReport) -> HeadShape:
    """Head set tested when dispatching on one of the declaration's
    constructors: the recorded argument shape for an unboxed constructor,
    the singleton head for a boxed one."""
    if not isinstance(report, Accepted) or report.decl != decl.name:
        raise DeclNotAcceptedError(f"declaration {decl.name!r} was not accepted")
    if not isinstance(decl.body, VariantBody):
        raise UnknownCtorError(f"type {decl.name!r} has no constructors")
    for c in decl.body.ctors:
        if c.name == ctor_name:
            if c.unboxed:
                return dict(report.unboxed_arg_shapes)[ctor_name]
            if c.constant:
                return HeadShape(frozenset({c.index}), frozenset())
            return HeadShape(frozenset(), frozenset({c.index}))
    raise UnknownCtorError(f"no constructor {ctor_name!r} in type {decl.name!r}")


# ---------------------------------------------------------------------------
# Encoding declarations as a recursive first-order program

_RESERVED_HEADS = ("sum", "box", "empty_sum")


def _encode_type(ty: TypeExpr, bound: bool = False) -> Term:
    # inside a definition body type variables are the formal parameters;
    # elsewhere they are free names, applied so that they carry a trace
    if isinstance(ty, TVar):
        return Var(ty.name) if bound else App(Var(ty.name), ())
    return App(Var(ty.name), tuple(_encode_type(a, bound) for a in ty.args))


def _encode_body(body: DeclBody) -> Term:
    if isinstance(body, AbbrevBody):
        return _encode_type(body.body, bound=True)
    cases: list[Term] = []
    for c in body.ctors:
        if c.unboxed:
            cases.append(_encode_type(c.arg_types[0], bound=True))
        else:
            cases.append(App(Var("box"), tuple(_encode_type(a, bound=True) for a in c.arg_types)))
    if not cases:
        return App(Var("empty_sum"), ())
    out = cases[-1]
    for case in reversed(cases[:-1]):
        out = App(Var("sum"), (case, out))
    return out


def translate_to_program(decls: Sequence[Decl], prims: PrimTable | None = None,
                         root: str | None = None) -> Program:
    """Encode the declarations as mutually recursive definitions over the
    free names `sum`, `box` and the primitive names; the root applies the
    chosen declaration to its own parameters as free names."""
    if prims is None:
        prims = default_prim_table()
    env = {d.name: d for d in decls}
    for d in decls:
        if d.name in _RESERVED_HEADS:
            raise ValueError(f"type name {d.name!r} collides with an encoding head")
        for p in d.params:
            if p in env:
                raise ValueError(f"type parameter '{p} of {d.name!r} collides with a type name")
    defs = tuple(
        Definition(d.name, d.params, _encode_body(d.body))
        for d in decls
        if not isinstance(d.body, AbstractBody)
    )
    root_decl = env[root] if root is not None else decls[0]
    root_term = App(Var(root_decl.name), tuple(App(Var(p), ()) for p in root_decl.params))
    return Program(defs, root_term, Mode.FIRST_ORDER)


def opaque_heads(decls: Sequence[Decl], prims: PrimTable | None = None) -> frozenset[str]:
    """Free names whose applications the encoded program must not reduce
    under: constructor boxes, primitives, abstract types."""
    if prims is None:
        prims = default_prim_table()
    names = {"box"} | set(prims)
    names.update(d.name for d in decls if isinstance(d.body, AbstractBody))
    return frozenset(names)


def _encode_component(comp: Component) -> Term:
    if isinstance(comp, VarComponent):
        return App(Var(comp.name), ())
    if isinstance(comp, CtorComponent):
        return App(Var("box"), tuple(_encode_type(a) for a in comp.arg_types))
    if isinstance(comp, PrimComponent):
        return App(Var(comp.prim), tuple(_encode_type(a) for a in comp.args))
    return App(Var(comp.name), tuple(_encode_type(a) for a in comp.args))


def _flatten_sum(term: Term) -> list[Term]:
    if isinstance(term, App) and isinstance(term.head, Var):
        if term.head.name == "sum" and len(term.args) == 2:
            return _flatten_sum(term.args[0]) + _flatten_sum(term.args[1])
        if term.head.name == "empty_sum" and not term.args:
            return []
    return [term]


@dataclass(frozen=True)
class AgreementResult:
    decl: str
    agrees: bool
    detail: str


def check_lambda_agreement(decls: Sequence[Decl], decl_name: str,
                           prims: PrimTable | None = None) -> AgreementResult:
    """Cross-check type normalization against the encoded program: both
    must agree on divergence, and on success the sum components must match
    the normal form read back from the program."""
    if prims is None:
        prims = default_prim_table()
    env = {d.name: d for d in decls}
    program = translate_to_program(decls, prims, root=decl_name)
    out = calculus.normalize(program, frozen=opaque_heads(decls, prims))
    tr = normalize_type(self_application(env[decl_name]), decls, prims)
    type_blocks = isinstance(tr, Cycle)
    term_blocks = isinstance(out, calculus.Diverges)
    if type_blocks != term_blocks:
        return AgreementResult(
            decl_name, False,
            f"type normalization {'blocks' if type_blocks else 'succeeds'} but "
            f"the encoded program {'diverges' if term_blocks else 'normalizes'}",
        )
    if type_blocks:
        return AgreementResult(decl_name, True, "both block")
    expected = sorted(calculus.render_term(_encode_component(c)) for c in tr.components)
    actual = sorted(calculus.render_term(t) for t in _flatten_sum(out.term))
    if expected != actual:
        return AgreementResult(decl_name, False, f"components {actual} != expected {expected}")
    return AgreementResult(decl_name, True, f"{len(expected)} component(s) match")
