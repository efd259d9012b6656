import json

import pytest

from shapecheck import cli
from shapecheck import fixtures as F


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, argv):
    code = cli.main(argv)
    return code, capsys.readouterr().out


class TestCheck:
    def test_zarith_accepted(self, tmp_path, capsys):
        path = write(tmp_path, "zarith.decl", F.ZARITH_DECL)
        code, out = run(capsys, ["check", path])
        assert code == 0
        assert out == (
            "gmp: accepted (imm: {}; block: {255})\n"
            "zarith: accepted (imm: top; block: {255})\n"
            "  Small: (imm: top; block: {})\n"
            "  Big: (imm: {}; block: {255})\n"
        )

    def test_clash_rejected_with_banner(self, tmp_path, capsys):
        path = write(tmp_path, "clash.decl", F.CLASH_DECL)
        code, out = run(capsys, ["check", path])
        assert code == 1
        assert "overlapping representations" in out

    def test_json_schema(self, tmp_path, capsys):
        path = write(tmp_path, "zarith.decl", F.ZARITH_DECL)
        code, out = run(capsys, ["check", "--json", path])
        doc = json.loads(out)
        assert code == 0
        assert doc["schema"] == 1
        assert doc["decls"][1]["verdict"] == "accepted"
        assert doc["decls"][1]["shape"] == "(imm: top; block: {255})"

    def test_json_cycle_fields(self, tmp_path, capsys):
        path = write(tmp_path, "loop.decl", F.LOOP_DECL)
        code, out = run(capsys, ["check", "--json", path])
        doc = json.loads(out)
        assert code == 1
        assert doc["decls"][1]["verdict"] == "rejected_cycle"
        assert doc["decls"][1]["cycle_path"] == ["loop", "loop"]

    def test_prims_override(self, tmp_path, capsys):
        prims = write(tmp_path, "prims.txt", "int = (imm: {0}; block: {})\n")
        path = write(tmp_path, "t.decl", "type t = A of int [@unboxed] | B\n")
        code, out = run(capsys, ["check", "--prims", prims, path])
        assert code == 1  # int is now {0}, clashing with the constant B
        assert "overlap" in out

    def test_missing_file_is_a_usage_error(self, capsys):
        assert cli.main(["check", "/nonexistent/x.decl"]) == 2

    def test_output_is_deterministic(self, tmp_path, capsys):
        path = write(tmp_path, "zarith.decl", F.ZARITH_DECL)
        _, first = run(capsys, ["check", path])
        _, second = run(capsys, ["check", path])
        assert first == second


class TestNorm:
    def test_normal_form(self, tmp_path, capsys):
        path = write(tmp_path, "id.lam", F.ID_LAM)
        code, out = run(capsys, ["norm", path])
        assert code == 0
        assert out == "normal form: int\nsteps: 2\n"

    def test_divergence_message_and_exit(self, tmp_path, capsys):
        path = write(tmp_path, "loop.lam", F.LOOP_LAM)
        code, out = run(capsys, ["norm", path])
        assert code == 1
        assert out == "diverges: loop blocked with trace [loop]\nsteps: 1\n"

    def test_trace_with_measure_check(self, tmp_path, capsys):
        path = write(tmp_path, "id.lam", F.ID_LAM)
        code, out = run(capsys, ["norm", "--trace", "--check-measure", path])
        assert code == 0
        assert out == (
            "start: id[](id[](int[]))\n"
            "  measure: {[{} {} {}], [{} {}], [{}]}\n"
            "step id: id[](int[])\n"
            "  measure: {[{} {}], [{}]}\n"
            "step id: int[]\n"
            "  measure: {[{}]}\n"
            "normal form: int\n"
            "steps: 2\n"
            "measure: ok\n"
        )

    def test_higher_order_flag(self, tmp_path, capsys):
        path = write(tmp_path, "nil.lam", F.NIL_LAM)
        code, out = run(capsys, ["norm", "--higher-order", path])
        assert code == 0
        assert out == "normal form: fortytwo\nsteps: 4\n"

    def test_first_order_rejects_higher_order_text(self, tmp_path, capsys):
        path = write(tmp_path, "nil.lam", F.ACHAIN_LAM)
        assert cli.main(["norm", path]) == 2

    def test_json_fields(self, tmp_path, capsys):
        path = write(tmp_path, "loop.lam", F.LOOP_LAM)
        code, out = run(capsys, ["norm", "--json", "--check-measure", path])
        doc = json.loads(out)
        assert code == 1
        assert doc["verdict"] == "diverges"
        assert doc["witness"] == {"name": "loop", "trace": ["loop"]}
        assert doc["steps"] == 1
        assert doc["measure_ok"] is True

    def test_max_steps_guard(self, tmp_path, capsys):
        path = write(tmp_path, "id.lam", F.ID_LAM)
        assert cli.main(["norm", "--max-steps", "1", path]) == 2

    def test_innermost_strategy(self, tmp_path, capsys):
        path = write(tmp_path, "id.lam", F.ID_LAM)
        code, out = run(capsys, ["norm", "--strategy", "innermost", path])
        assert (code, out) == (0, "normal form: int\nsteps: 2\n")

    def test_multiple_files_emitted_in_input_order(self, tmp_path, capsys):
        a = write(tmp_path, "id.lam", F.ID_LAM)
        b = write(tmp_path, "loop.lam", F.LOOP_LAM)
        code, out = run(capsys, ["norm", a, b])
        assert code == 1
        assert out == (
            f"# {a}\nnormal form: int\nsteps: 2\n"
            f"# {b}\ndiverges: loop blocked with trace [loop]\nsteps: 1\n"
        )


class TestCpp:
    def test_expansion_output(self, tmp_path, capsys):
        path = write(tmp_path, "nil.cpp", F.NIL_CPP)
        code, out = run(capsys, ["cpp", path])
        assert (code, out) == (0, "42\n")

    def test_show_hidesets(self, tmp_path, capsys):
        path = write(tmp_path, "f.cpp", F.FSTOP_CPP)
        code, out = run(capsys, ["cpp", "--show-hidesets", path])
        assert out == "f^{f,id} (^{f,id} stop^{f,id} , stop^{f,id} )^{f,id}\n"


class TestCompareCpp:
    def test_agreement_text(self, tmp_path, capsys):
        path = write(tmp_path, "id.cpp", F.ID_CPP)
        code, out = run(capsys, ["compare-cpp", path])
        assert code == 0
        assert out.startswith("agreement: yes (normalized)\n")

    def test_agreement_json(self, tmp_path, capsys):
        path = write(tmp_path, "loop.cpp", F.LOOP_CPP)
        code, out = run(capsys, ["compare-cpp", "--json", path])
        doc = json.loads(out)
        assert code == 0
        assert doc["agrees"] is True and doc["outcome"] == "blocked"

    def test_not_first_order_is_an_input_error(self, tmp_path, capsys):
        path = write(tmp_path, "nil.cpp", F.NIL_CPP)
        assert cli.main(["compare-cpp", path]) == 2


class TestSelftest:
    def test_small_run_passes(self, capsys):
        code = cli.main(["selftest", "--seed", "3", "--cases", "25"])
        out = capsys.readouterr().out
        assert code == 0
        assert "selftest: all suites passed" in out


def test_usage_error_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["norm", "--no-such-flag", "x"])
    assert exc.value.code == 2
