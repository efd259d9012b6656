import pytest

from shapecheck import calculus as C
from shapecheck import decls as D
from shapecheck import fixtures as F
from shapecheck import oracle as O
from shapecheck import shapes as S


def shape(imm, block):
    return S.HeadShape(S.TOP if imm == "top" else frozenset(imm),
                       S.TOP if block == "top" else frozenset(block))


class TestParse:
    def test_zarith_file(self):
        ds = D.parse_decls(F.ZARITH_DECL)
        assert [d.name for d in ds] == ["gmp", "zarith"]
        gmp, zarith = ds
        assert gmp.body == D.AbstractBody(shape((), {255}))
        ctors = zarith.body.ctors
        assert [(c.name, c.unboxed) for c in ctors] == [("Small", True), ("Big", True)]
        assert ctors[0].arg_types == (D.PrimApp("int"),)
        assert ctors[1].arg_types == (D.TyApp("gmp"),)

    def test_parametric_unboxed(self):
        (d,) = D.parse_decls("type ('a) id = Id of 'a [@unboxed]")
        assert d.params == ("a",)
        assert d.body.ctors[0] == D.Ctor("Id", (D.TVar("a"),), True, False, None)

    def test_double_of_is_a_syntax_error(self):
        with pytest.raises(D.DeclSyntaxError):
            D.parse_decls("type t = Foo of int of int")

    def test_duplicate_type_name(self):
        with pytest.raises(D.DuplicateTypeNameError):
            D.parse_decls("type t = A\ntype t = B")

    def test_duplicate_ctor(self):
        with pytest.raises(D.DuplicateCtorError):
            D.parse_decls("type t = A | A of int")

    def test_unbound_type_name(self):
        with pytest.raises(D.UnboundTypeNameError):
            D.parse_decls("type t = A of nonexistent")

    def test_type_arity_mismatch(self):
        with pytest.raises(D.ArityMismatchError):
            D.parse_decls("type ('a) id = 'a\ntype t = A of id")

    def test_unboxed_needs_exactly_one_argument(self):
        with pytest.raises(D.DeclSyntaxError):
            D.parse_decls("type t = A of int * int [@unboxed]")

    def test_unbound_type_variable(self):
        with pytest.raises(D.UnboundTypeNameError):
            D.parse_decls("type t = A of 'a")

    def test_inline_record_becomes_positional_fields(self):
        (d,) = D.parse_decls("type t = A of { x: int; y: string }")
        assert d.body.ctors[0].arg_types == (D.PrimApp("int"), D.PrimApp("string"))

    def test_empty_variant(self):
        (d,) = D.parse_decls("type empty = |")
        assert d.body == D.VariantBody(())

    def test_star_inside_parens_is_a_tuple(self):
        (d,) = D.parse_decls("type t = A of (int * string) [@unboxed]")
        assert d.body.ctors[0].arg_types == (
            D.PrimApp("tuple", (D.PrimApp("int"), D.PrimApp("string"))),
        )

    def test_constructor_indices_skip_unboxed(self):
        (d,) = D.parse_decls(
            "type t = A | B of int [@unboxed] | C of int | D | E of string"
        )
        by_name = {c.name: c for c in d.body.ctors}
        assert (by_name["A"].constant, by_name["A"].index) == (True, 0)
        assert (by_name["D"].constant, by_name["D"].index) == (True, 1)
        assert (by_name["C"].constant, by_name["C"].index) == (False, 0)
        assert (by_name["E"].constant, by_name["E"].index) == (False, 1)
        assert by_name["B"].index is None

    def test_multi_parameter_application(self):
        ds = D.parse_decls("type ('a, 'b) pair = P of 'a * 'b\n"
                           "type t = A of ((int, string) pair)")
        assert ds[1].body.ctors[0].arg_types == (
            D.TyApp("pair", (D.PrimApp("int"), D.PrimApp("string"))),
        )


class TestNormalizeType:
    def test_type_variable_is_its_own_normal_form(self):
        nf = D.normalize_type(D.TVar("a"), [])
        assert nf == D.SumNF((S.VarComponent("a"),))

    def test_handle_components(self):
        ds = D.parse_decls(F.HANDLE_DECL)
        nf = D.normalize_type(D.TyApp("handle"), ds)
        kinds = [type(c).__name__ for c in nf.components]
        assert kinds == ["PrimComponent", "PrimComponent", "CtorComponent"]
        assert nf.components[0].prim == "int"
        assert nf.components[1].prim == "string"
        opaque_ctor = nf.components[2]
        assert (opaque_ctor.name, opaque_ctor.constant, opaque_ctor.index) == ("Opaque", False, 0)

    def test_loop_cycles(self):
        ds = D.parse_decls(F.LOOP_DECL)
        out = D.normalize_type(D.TyApp("loop"), ds)
        assert isinstance(out, D.Cycle)
        assert out.name == "loop" and "loop" in out.trace

    def test_substitution_reaches_boxed_arguments(self):
        ds = D.parse_decls("type ('a) box2 = B of 'a\ntype t = U of ((int) box2) [@unboxed]")
        nf = D.normalize_type(D.TyApp("t"), ds)
        (comp,) = nf.components
        assert comp.arg_types == (D.PrimApp("int"),)
        assert comp.via == ("U",)

    def test_abbreviations_unfold_transparently(self):
        ds = D.parse_decls(F.NUM_ID_DECL)
        nf = D.normalize_type(D.TyApp("id"), ds)
        assert [c.prim for c in nf.components] == ["int", "string"]


class TestShapeOfSnf:
    def ctx(self, ds):
        return S.ShapeContext(S.default_prim_table(), lambda ty: D.shape_of_type(ty, ds))

    def test_zarith(self):
        ds = D.parse_decls(F.ZARITH_DECL)
        nf = D.normalize_type(D.TyApp("zarith"), ds)
        assert D.shape_of_snf(nf, self.ctx(ds)) == shape("top", {255})

    def test_clash_witness(self):
        ds = D.parse_decls(F.CLASH_DECL)
        nf = D.normalize_type(D.TyApp("clash"), ds)
        w = D.shape_of_snf(nf, self.ctx(ds))
        assert isinstance(w, S.ConflictWitness)
        assert w.side == "imm" and w.value is None

    def test_empty_sum(self):
        assert D.shape_of_snf(D.SumNF(()), self.ctx([])) == S.EMPTY_SHAPE


class TestCheckDecls:
    def reports(self, text):
        ds = D.parse_decls(text)
        return ds, D.check_decls(ds)

    def test_zarith_accepted_with_ctor_shapes(self):
        _, (gmp, zarith) = self.reports(F.ZARITH_DECL)
        assert gmp == D.Accepted("gmp", shape((), {255}), ())
        assert zarith == D.Accepted(
            "zarith", shape("top", {255}),
            (("Small", shape("top", ())), ("Big", shape((), {255}))),
        )

    def test_clash_rejected(self):
        _, (report,) = self.reports(F.CLASH_DECL)
        assert isinstance(report, D.RejectedConflict)
        assert report.witness.side == "imm"

    def test_harmful_and_harmless_are_cycles(self):
        for text in (F.HARMFUL_DECL, F.HARMLESS_DECL):
            _, (report,) = self.reports(text)
            assert isinstance(report, D.RejectedCycle)

    def test_rope_accepted(self):
        _, (report,) = self.reports(F.ROPE_DECL)
        assert report.shape == shape((), {0, 252})
        assert report.unboxed_arg_shapes == (("Leaf", shape((), {252})),)

    def test_two_type_variables_conflict(self):
        _, (report,) = self.reports("type ('a, 'b) both = A of 'a [@unboxed] | B of 'b [@unboxed]")
        assert isinstance(report, D.RejectedConflict)

    def test_abstract_without_annotation_is_top(self):
        _, (report,) = self.reports("type t")
        assert report == D.Accepted("t", S.TOP_SHAPE, ())

    def test_recursion_hidden_behind_an_abstract_type_is_accepted(self):
        _, reports = self.reports("type ('a) foo\ntype weird = Loop of (weird) foo [@unboxed]")
        assert reports[1] == D.Accepted("weird", S.TOP_SHAPE, (("Loop", S.TOP_SHAPE),))

    def test_lazy_like_primitive_unions_its_argument(self):
        _, (report,) = self.reports("type t = L of ((int) lazy) [@unboxed] | Other of string")
        assert report.shape == shape("top", {0, 246, 250, 251})
        assert dict(report.unboxed_arg_shapes)["L"] == shape("top", {246, 250, 251})

    def test_lazy_like_self_recursion_falls_back_to_top(self):
        _, (report,) = self.reports("type w = W of ((w) lazy) [@unboxed]")
        assert report == D.Accepted("w", S.TOP_SHAPE, (("W", S.TOP_SHAPE),))

    def test_abbreviations_get_their_body_shape(self):
        _, (report,) = self.reports("type num = int")
        assert report == D.Accepted("num", shape("top", ()), ())

    def test_reports_are_deterministic(self):
        a = D.check_decls(D.parse_decls(F.ZARITH_DECL))
        b = D.check_decls(D.parse_decls(F.ZARITH_DECL))
        assert a == b


class TestMatchPlan:
    def test_zarith_dispatch(self):
        ds = D.parse_decls(F.ZARITH_DECL)
        report = D.check_decls(ds)[1]
        zarith = ds[1]
        assert D.match_plan(zarith, "Small", report) == shape("top", ())
        assert D.match_plan(zarith, "Big", report) == shape((), {255})

    def test_boxed_constructor_is_a_singleton_head(self):
        ds = D.parse_decls(F.OPTION_DECL)
        (report,) = D.check_decls(ds)
        assert D.match_plan(ds[0], "Some2", report) == shape((), {0})
        assert D.match_plan(ds[0], "None2", report) == shape({0}, ())

    def test_unknown_ctor(self):
        ds = D.parse_decls(F.OPTION_DECL)
        (report,) = D.check_decls(ds)
        with pytest.raises(D.UnknownCtorError):
            D.match_plan(ds[0], "Nope", report)

    def test_not_accepted(self):
        ds = D.parse_decls(F.CLASH_DECL)
        (report,) = D.check_decls(ds)
        with pytest.raises(D.DeclNotAcceptedError):
            D.match_plan(ds[0], "Int", report)

    def test_accepted_plans_are_pairwise_disjoint(self):
        for text in F.CHECK_CORPUS:
            ds = D.parse_decls(text)
            for d, report in zip(ds, D.check_decls(ds)):
                if not isinstance(report, D.Accepted) or not isinstance(d.body, D.VariantBody):
                    continue
                plans = [D.match_plan(d, c.name, report) for c in d.body.ctors]
                for i in range(len(plans)):
                    for j in range(i + 1, len(plans)):
                        assert isinstance(
                            S.shape_disjoint_union(plans[i], plans[j]), S.HeadShape
                        ), f"{d.name} plans overlap"


class TestTranslate:
    def test_handle_trio_matches_the_reference_encoding(self):
        ds = D.parse_decls(F.HANDLE_DECL)
        program = D.translate_to_program(ds, root="handle")
        assert C.render_program(program) == (
            "let rec id(a) = a\n"
            "and name() = string\n"
            "and handle() = sum(id(int), sum(name, box(string)))\n"
            "in handle\n"
        )

    def test_empty_variant_is_an_empty_sum(self):
        (d,) = D.parse_decls("type empty = |")
        program = D.translate_to_program([d])
        assert program.defs[0].body == C.App(C.Var("empty_sum"), ())

    def test_loop_translation_diverges(self):
        ds = D.parse_decls(F.LOOP_DECL)
        program = D.translate_to_program(ds, root="loop")
        out = C.normalize(program, frozen=D.opaque_heads(ds))
        assert isinstance(out, C.Diverges)

    def test_reserved_head_collision_rejected(self):
        with pytest.raises(ValueError):
            D.translate_to_program(D.parse_decls("type sum = A"))


class TestLambdaAgreement:
    def test_fixture_corpus_agrees(self):
        for text in F.CHECK_CORPUS:
            ds = D.parse_decls(text)
            for d in ds:
                r = D.check_lambda_agreement(ds, d.name)
                assert r.agrees, f"{d.name}: {r.detail}"

    def test_generated_corpus_agrees(self):
        result = O.run_decl_agreement_suite(123, 60)
        assert result.ok, result.failures[:3]
