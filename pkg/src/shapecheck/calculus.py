"""Recursive-function calculus with trace-monitored reduction.

Every function call carries a trace: the list of definitions whose expansion
produced it. A call whose own name already occurs in its trace is refused
(a "blocked redex"), which is what lets normalization report divergence in
finite time instead of looping. Terms and programs are immutable, so all
values here can be shared freely between threads.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, cmp_to_key
from typing import Callable, Mapping


class Mode(Enum):
    FIRST_ORDER = "first-order"
    CLOSED_HIGHER_ORDER = "closed-higher-order"


class Strategy(Enum):
    LEFTMOST_OUTERMOST = "outermost"
    LEFTMOST_INNERMOST = "innermost"


class LamError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class ParseError(LamError):
    pass


class DuplicateDefinitionError(LamError):
    pass


class ArityMismatchError(LamError):
    pass


class MalformedProgramError(LamError):
    pass


Trace = tuple[str, ...]
Path = tuple[int, ...]


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class App:
    head: "Term"
    args: tuple["Term", ...] = ()


Term = Var | App


@dataclass(frozen=True)
class AnnApp:
    """Application node annotated with the trace that produced it."""

    head: "AnnTerm"
    args: tuple["AnnTerm", ...]
    trace: Trace


AnnTerm = Var | AnnApp


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple[str, ...]
    body: Term


@dataclass(frozen=True)
class Program:
    defs: tuple[Definition, ...]
    root: Term
    mode: Mode = Mode.FIRST_ORDER

    def __post_init__(self) -> None:
        _validate(self)

    @cached_property
    def def_map(self) -> dict[str, Definition]:
        return {d.name: d for d in self.defs}


def _children(t: AnnApp | App) -> tuple:
    # child 0 is the head, arguments follow
    return (t.head,) + t.args


def _validate(program: Program) -> None:
    names: set[str] = set()
    for d in program.defs:
        if d.name in names:
            raise DuplicateDefinitionError(f"duplicate definition of {d.name!r}")
        names.add(d.name)
    for d in program.defs:
        if len(set(d.params)) != len(d.params):
            raise DuplicateDefinitionError(f"duplicate parameter in definition of {d.name!r}")
        shadowed = set(d.params) & names
        if shadowed:
            raise DuplicateDefinitionError(
                f"parameter {sorted(shadowed)[0]!r} of {d.name!r} shadows a definition"
            )
    arities = {d.name: len(d.params) for d in program.defs}
    for d in program.defs:
        _validate_term(d.body, arities, set(d.params), program.mode)
    _validate_term(program.root, arities, set(), program.mode)


def _postorder(term: Term) -> list[tuple[Term, bool]]:
    out: list[tuple[Term, bool]] = []
    stack: list[tuple[Term, bool, bool]] = [(term, False, False)]
    while stack:
        t, is_head, expanded = stack.pop()
        if expanded or isinstance(t, Var):
            out.append((t, is_head))
            continue
        stack.append((t, is_head, True))
        stack.append((t.head, True, False))
        for child in reversed(t.args):
            stack.append((child, False, False))
    return out


def _validate_term(term: Term, arities: Mapping[str, int], params: set[str], mode: Mode) -> None:
    first_order = mode is Mode.FIRST_ORDER
    for t, is_head in _postorder(term):
        if isinstance(t, Var):
            if first_order and not is_head and t.name in arities:
                raise ArityMismatchError(
                    f"{t.name!r} expects {arities[t.name]} argument(s), got a bare occurrence"
                )
            continue
        head = t.head
        if not isinstance(head, Var):
            if first_order:
                raise MalformedProgramError(
                    "application head must be a name in first-order mode"
                )
            continue
        if first_order and head.name in params:
            raise MalformedProgramError(
                f"parameter {head.name!r} cannot be applied in first-order mode"
            )
        if first_order and head.name in arities and len(t.args) != arities[head.name]:
            raise ArityMismatchError(
                f"{head.name!r} expects {arities[head.name]} argument(s), got {len(t.args)}"
            )


def annotate(term: Term, subst: Mapping[str, AnnTerm], trace: Trace) -> AnnTerm:
    """Annotating substitution.

    Replaces variables according to `subst` (their own annotations are kept
    untouched) and stamps every application node originating from `term`
    with `trace`.
    """
    if isinstance(term, Var):
        return subst.get(term.name, term)
    return AnnApp(
        annotate(term.head, subst, trace),
        tuple(annotate(a, subst, trace) for a in term.args),
        trace,
    )


def erase(term: AnnTerm) -> Term:
    """Strip all traces, preserving structure."""
    memo: dict[int, Term] = {}
    stack = [term]
    while stack:
        t = stack[-1]
        if id(t) in memo:
            stack.pop()
            continue
        if isinstance(t, Var):
            memo[id(t)] = t
            stack.pop()
            continue
        pending = [k for k in _children(t) if id(k) not in memo]
        if pending:
            stack.extend(pending)
            continue
        memo[id(t)] = App(memo[id(t.head)], tuple(memo[id(a)] for a in t.args))
        stack.pop()
    return memo[id(term)]


def subterm_at(term: AnnTerm, path: Path) -> AnnTerm:
    t = term
    for i in path:
        t = _children(t)[i]
    return t


def replace_at(term: AnnTerm, path: Path, sub: AnnTerm) -> AnnTerm:
    spine: list[AnnApp] = []
    t = term
    for i in path:
        spine.append(t)
        t = _children(t)[i]
    new = sub
    for node, i in zip(reversed(spine), reversed(path)):
        kids = list(_children(node))
        kids[i] = new
        new = AnnApp(kids[0], tuple(kids[1:]), node.trace)
    return new


@dataclass(frozen=True)
class RedexSite:
    path: Path
    name: str
    trace: Trace
    enabled: bool


def find_redexes(
    program: Program, term: AnnTerm, frozen: frozenset[str] = frozenset()
) -> list[RedexSite]:
    """All application positions headed by a defined name, in preorder.

    Positions are classified as enabled or blocked by trace membership.
    Subtrees of applications headed by a name in `frozen` (and not defined)
    are treated as opaque and not searched.
    """
    defs = program.def_map
    out: list[RedexSite] = []
    stack: list[tuple[Path, AnnTerm]] = [((), term)]
    while stack:
        path, t = stack.pop()
        if isinstance(t, Var):
            continue
        head = t.head
        if isinstance(head, Var):
            if head.name in frozen and head.name not in defs:
                continue
            d = defs.get(head.name)
            if d is not None and len(t.args) == len(d.params):
                out.append(RedexSite(path, head.name, t.trace, head.name not in t.trace))
        kids = _children(t)
        for i in range(len(kids) - 1, -1, -1):
            stack.append((path + (i,), kids[i]))
    return out


def _postorder_path_cmp(a: Path, b: Path) -> int:
    if a == b:
        return 0
    n = min(len(a), len(b))
    if a[:n] == b[:n]:
        return 1 if len(a) < len(b) else -1  # ancestors come after their subtrees
    i = next(k for k in range(n) if a[k] != b[k])
    return -1 if a[i] < b[i] else 1


def _ordered_sites(sites: list[RedexSite], strategy: Strategy) -> list[RedexSite]:
    if strategy is Strategy.LEFTMOST_OUTERMOST:
        return sites
    key = cmp_to_key(_postorder_path_cmp)
    return sorted(sites, key=lambda s: key(s.path))


@dataclass(frozen=True)
class Reduced:
    term: AnnTerm
    path: Path
    name: str


@dataclass(frozen=True)
class NormalForm:
    pass


@dataclass(frozen=True)
class Blocked:
    path: Path
    name: str
    trace: Trace


StepResult = Reduced | NormalForm | Blocked


def step(
    program: Program,
    term: AnnTerm,
    strategy: Strategy = Strategy.LEFTMOST_OUTERMOST,
    frozen: frozenset[str] = frozenset(),
) -> StepResult:
    """One monitored reduction step under the given strategy.

    The strategy alone chooses the position: the strategy-first redex is
    rewritten if its trace permits and reported as Blocked otherwise, so a
    monitored run that never blocks takes exactly the steps the
    unmonitored strategy would take.
    """
    sites = _ordered_sites(find_redexes(program, term, frozen), strategy)
    if not sites:
        return NormalForm()
    s = sites[0]
    if not s.enabled:
        return Blocked(s.path, s.name, s.trace)
    node = subterm_at(term, s.path)
    d = program.def_map[s.name]
    if len(node.args) != len(d.params):
        raise MalformedProgramError(
            f"{s.name!r} applied to {len(node.args)} argument(s), expects {len(d.params)}"
        )
    body = annotate(d.body, dict(zip(d.params, node.args)), node.trace + (s.name,))
    return Reduced(replace_at(term, s.path, body), s.path, s.name)


@dataclass(frozen=True)
class Normal:
    term: Term
    steps: int


@dataclass(frozen=True)
class Diverges:
    witness: Blocked
    steps: int


Outcome = Normal | Diverges

OnStep = Callable[[AnnTerm, AnnTerm, Reduced], None]


def normalize(
    program: Program,
    strategy: Strategy = Strategy.LEFTMOST_OUTERMOST,
    frozen: frozenset[str] = frozenset(),
    max_steps: int | None = None,
    on_step: OnStep | None = None,
) -> Outcome:
    """Monitored normalization from an all-empty-trace start.

    Always terminates: either with the erased normal form or with the
    blocked redex witnessing divergence. `max_steps` is a defensive bound
    only; `on_step` is invoked after each reduction with the terms before
    and after.
    """
    current: AnnTerm = annotate(program.root, {}, ())
    steps = 0
    while True:
        result = step(program, current, strategy, frozen)
        if isinstance(result, Reduced):
            steps += 1
            if max_steps is not None and steps > max_steps:
                raise MalformedProgramError(f"step limit {max_steps} exceeded")
            if on_step is not None:
                on_step(current, result.term, result)
            current = result.term
        elif isinstance(result, NormalForm):
            return Normal(erase(current), steps)
        else:
            return Diverges(result, steps)


# ---------------------------------------------------------------------------
# Concrete syntax


@dataclass(frozen=True)
class _Tok:
    kind: str  # "name", "punct", "eof"
    text: str
    line: int
    col: int


_NAME_RE = re.compile(r"[a-z_][a-zA-Z0-9_]*")
_KEYWORDS = frozenset({"let", "rec", "and", "in"})


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if "#" in line:
            line = line[: line.index("#")]
        col = 0
        while col < len(line):
            ch = line[col]
            if ch.isspace():
                col += 1
                continue
            if ch in "(),=":
                toks.append(_Tok("punct", ch, lineno, col + 1))
                col += 1
                continue
            m = _NAME_RE.match(line, col)
            if not m:
                raise ParseError(f"unexpected character {ch!r}", lineno, col + 1)
            toks.append(_Tok("name", m.group(0), lineno, col + 1))
            col = m.end()
    toks.append(_Tok("eof", "", len(text.split("\n")), 1))
    return toks


class _Parser:
    def __init__(self, toks: list[_Tok], mode: Mode):
        self.toks = toks
        self.pos = 0
        self.mode = mode

    def peek(self) -> _Tok:
        return self.toks[self.pos]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.next()
        if t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return t

    def name(self) -> _Tok:
        t = self.next()
        if t.kind != "name" or t.text in _KEYWORDS:
            raise ParseError(f"expected a name, found {t.text or 'end of input'!r}", t.line, t.col)
        return t

    def args(self, params: set[str]) -> tuple[Term, ...]:
        self.expect("(")
        if self.peek().text == ")":
            self.next()
            return ()
        out = [self.term(params)]
        while self.peek().text == ",":
            self.next()
            out.append(self.term(params))
        self.expect(")")
        return tuple(out)

    def term(self, params: set[str]) -> Term:
        t = self.name()
        node: Term
        if self.mode is Mode.CLOSED_HIGHER_ORDER:
            node = Var(t.text)
        elif self.peek().text == "(":
            node = App(Var(t.text), self.args(params))
        elif t.text in params:
            node = Var(t.text)
        else:
            # free names and nullary calls are applications so that they
            # carry a trace once annotated
            node = App(Var(t.text), ())
        while self.peek().text == "(":
            node = App(node, self.args(params))
        return node

    def definition(self) -> Definition:
        t = self.name()
        self.expect("(")
        params: list[str] = []
        if self.peek().text != ")":
            params.append(self.name().text)
            while self.peek().text == ",":
                self.next()
                params.append(self.name().text)
        self.expect(")")
        self.expect("=")
        body = self.term(set(params))
        return Definition(t.text, tuple(params), body)


def parse_program(text: str, mode: Mode = Mode.FIRST_ORDER) -> Program:
    """Parse `let rec f(x) = ... and ... in term` (or a bare term)."""
    p = _Parser(_tokenize(text), mode)
    defs: list[Definition] = []
    if p.peek().text == "let":
        p.expect("let")
        p.expect("rec")
        defs.append(p.definition())
        while p.peek().text == "and":
            p.next()
            defs.append(p.definition())
        p.expect("in")
    root = p.term(set())
    tail = p.peek()
    if tail.kind != "eof":
        raise ParseError(f"unexpected trailing input {tail.text!r}", tail.line, tail.col)
    return Program(tuple(defs), root, mode)


def render_term(term: Term, mode: Mode = Mode.FIRST_ORDER) -> str:
    if isinstance(term, Var):
        return term.name
    head = render_term(term.head, mode)
    if not term.args and mode is Mode.FIRST_ORDER:
        return head
    return f"{head}({', '.join(render_term(a, mode) for a in term.args)})"


def render_ann_term(term: AnnTerm, mode: Mode = Mode.FIRST_ORDER) -> str:
    if isinstance(term, Var):
        return term.name
    trace = f"[{','.join(term.trace)}]"
    args = ", ".join(render_ann_term(a, mode) for a in term.args)
    if mode is Mode.FIRST_ORDER:
        head = render_ann_term(term.head, mode)
        return f"{head}{trace}({args})" if term.args else f"{head}{trace}"
    head = render_ann_term(term.head, mode)
    return f"{head}({args}){trace}"


def render_program(program: Program) -> str:
    lines = []
    for i, d in enumerate(program.defs):
        kw = "let rec" if i == 0 else "and"
        lines.append(f"{kw} {d.name}({', '.join(d.params)}) = {render_term(d.body, program.mode)}")
    if program.defs:
        lines.append(f"in {render_term(program.root, program.mode)}")
    else:
        lines.append(render_term(program.root, program.mode))
    return "\n".join(lines) + "\n"
