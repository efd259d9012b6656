"""Canonical example inputs, shared by the self-test suite and the tests."""

ZARITH_DECL = """\
# arbitrary-size integers: machine ints on the fast path, foreign digits
# in a custom block otherwise
type gmp [@shape (imm: {}; block: {255})]
type zarith = Small of int [@unboxed] | Big of gmp [@unboxed]
"""

CLASH_DECL = """\
type clash = Int of int [@unboxed] | Also_int of int [@unboxed]
"""

LOOP_DECL = """\
type ('a) id = Id of 'a [@unboxed]
type loop = Loop of (loop) id [@unboxed]
"""

HARMFUL_DECL = """\
type harmful = A | Loop of harmful [@unboxed]
"""

HARMLESS_DECL = """\
type harmless = Loop of harmless [@unboxed]
"""

ROPE_DECL = """\
type rope =
  | Leaf of string [@unboxed]
  | Branch of { llen: int; l: rope; r: rope }
"""

HANDLE_DECL = """\
type ('a) id = 'a
type name = Name of string [@unboxed]
type handle =
  | By_number of (int) id [@unboxed]
  | By_name of name [@unboxed]
  | Opaque of string
"""

NUM_ID_DECL = """\
type num = int
type name = Name of string [@unboxed]
type id =
  | By_number of num [@unboxed]
  | By_name of name [@unboxed]
"""

OPTION_DECL = """\
type ('a) option2 = None2 | Some2 of 'a
"""

LIST_DECL = """\
type ('a) list2 = Nil | Cons of 'a * (('a) list2)
"""

DYN_DECL = """\
type custom_box [@shape (imm: {}; block: {255})]
type dyn =
  | Immediate of int [@unboxed]
  | Str of string [@unboxed]
  | Flt of float [@unboxed]
  | Custom of custom_box [@unboxed]
"""

CHECK_CORPUS = [
    ZARITH_DECL,
    LOOP_DECL,
    HARMFUL_DECL,
    HARMLESS_DECL,
    ROPE_DECL,
    HANDLE_DECL,
    NUM_ID_DECL,
    OPTION_DECL,
    LIST_DECL,
    DYN_DECL,
]

ID_LAM = """\
let rec id(a) = a in id(id(int))
"""

LOOP_LAM = """\
let rec loop(a) = loop(list(a)) in loop(int)
"""

NIL_LAM = """\
# the token-pasting-free core of the classic forwarding chain
let rec nil(x) = x
and g0(arg) = nil(g1)(arg)
and g1(arg) = nil(arg)
in g0(fortytwo)
"""

ACHAIN_LAM = """\
let rec a(x) = b
and b(x) = x
in a(a)(a)(a)
"""

DELTA_LAM = """\
let rec delta(x) = x(x) in delta(delta)
"""

FSTOP_LAM = """\
let rec f(p, q) = p(f(q, q))
and id(x) = x
and stop(x) = done
in f(id, stop)
"""

NIL_CPP = """\
#define NIL(xxx) xxx
#define G0(arg) NIL(G1)(arg)
#define G1(arg) NIL(arg)
G0(42)
"""

ACHAIN_CPP = """\
#define a(x) b
#define b(x) x
a(a)(a)(a)
"""

FSTOP_CPP = """\
#define f(p,q) p(f(q,q))
#define id(x) x
#define stop(x) done
f(id,stop)
"""

LOOP_CPP = """\
#define loop(a) loop(list(a))
loop(int)
"""

ID_CPP = """\
#define id(a) a
id(id(int))
"""
