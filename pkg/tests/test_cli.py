import io
from fractions import Fraction as F
from pathlib import Path

import pytest

from lmu import cli, direct
from lmu.errors import InvariantViolation
from lmu.modal import parse_modal
from lmu.terms import parse_term

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def write(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p

    return _write


@pytest.mark.parametrize("backend", ["direct", "qe"])
@pytest.mark.parametrize("sample, expected", [("simple.term", "1"), ("nested.term", "1/5")])
def test_value_samples(sample, expected, backend):
    assert run("value", SAMPLES / sample, "--backend", backend) == (0, expected + "\n", "")


def test_value_approx(write):
    code, out, _ = run("value", write("t", "mu x. (1/2 * x (+) 1/3)"), "--approx", "4")
    assert code == 0 and out.splitlines() == ["2/3", "approx: 0.6667"]


@pytest.mark.parametrize("backend", ["direct", "qe"])
def test_eval_step(backend):
    assert run("eval", SAMPLES / "step.term", "--at", "x=0", "--backend", backend)[1] == "0\n"
    assert run("eval", SAMPLES / "step.term", "--at", "x=1/3", "--backend", backend)[1] == "1\n"


@pytest.mark.parametrize("backend", ["direct", "qe"])
def test_eval_piece(write, backend):
    code, out, _ = run("eval", write("t", "x \\/ 1/2"), "--at", "x=3/4", "--piece", "--backend", backend)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "3/4" and lines[1].endswith("|- x")


def test_system():
    code, out, _ = run("system", SAMPLES / "step.term")
    assert code == 0
    assert {line.rsplit("|- ", 1)[1] for line in out.splitlines()} == {"0", "1"}


def test_model_check_sample():
    code, out, _ = run("mc", SAMPLES / "walk.pnts", SAMPLES / "reach.modal", "--state", "s0", "--approx", "2")
    assert (code, out) == (0, "1\napprox: 1.00\n")


def test_pctl_sample():
    assert run("pctl", SAMPLES / "walk.pnts", SAMPLES / "reach.pctl", "--state", "s0") == (0, "true\n", "")
    code, out, _ = run("pctl", SAMPLES / "walk.pnts", SAMPLES / "reach.pctl", "--state", "sink")
    assert out == "false\n"


def test_encode_pctl_output_parses():
    code, out, _ = run("encode-pctl", SAMPLES / "reach.pctl")
    assert code == 0
    assert not parse_modal(out).fv


def test_reduce_output_is_closed_term():
    code, out, _ = run("reduce", SAMPLES / "walk.pnts", SAMPLES / "reach.modal", "--state", "s0")
    assert code == 0
    t = parse_term(out)
    assert not t.fv and direct.value(t) == 1


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["value"],
        ["value", "/nonexistent/file"],
        ["value", SAMPLES / "step.term"],
        ["eval", SAMPLES / "step.term"],
        ["eval", SAMPLES / "step.term", "--at", "x=2"],
        ["eval", SAMPLES / "step.term", "--at", "x=abc"],
        ["eval", SAMPLES / "step.term", "--at", "x=0,x=1"],
        ["value", SAMPLES / "simple.term", "--approx", "-1"],
        ["value", SAMPLES / "simple.term", "--backend", "magic"],
        ["mc", SAMPLES / "walk.pnts", SAMPLES / "reach.modal"],
    ],
)
def test_usage_errors(argv):
    code, out, err = run(*argv)
    assert code == 1 and out == "" and err


def test_parse_error(write):
    code, _, err = run("value", write("t", "mu x. (x"))
    assert code == 2 and "parse error" in err


def test_model_parse_error(write):
    code, _, _ = run("mc", write("m", "states: a\ntrans a a:1"), SAMPLES / "reach.modal", "--state", "a")
    assert code == 2


@pytest.mark.parametrize(
    "model, formula, state",
    [
        ("states: a\ntrans a -> a:1/2", "@p", "a"),
        ("states: a", "@p", "b"),
        ("states: a", "mu X. Y", "a"),
    ],
)
def test_validation_errors(write, model, formula, state):
    code, _, err = run("mc", write("m", model), write("f", formula), "--state", state)
    assert code == 3 and "validation error" in err


def test_pctl_rejects_fuzzy_model(write):
    code, _, _ = run("pctl", write("m", "states: a\nprop @p: a=1/2"), write("f", "@p"), "--state", "a")
    assert code == 3


def test_invariant_violation(monkeypatch):
    def broken(t):
        raise InvariantViolation("boom")

    monkeypatch.setattr(direct, "value", broken)
    code, _, err = run("value", SAMPLES / "simple.term")
    assert code == 4 and "boom" in err


@pytest.mark.parametrize("q, digits, expected", [(F(1, 3), 3, "0.333"), (F(1, 8), 2, "0.12"), (F(3, 8), 2, "0.38"), (F(1), 0, "1")])
def test_fmt_approx_rounds_half_even(q, digits, expected):
    assert cli.fmt_approx(q, digits) == expected


def test_main_entry_point(monkeypatch, capsys):
    monkeypatch.setattr("sys.argv", ["lmu", "value", str(SAMPLES / "nested.term")])
    with pytest.raises(SystemExit) as info:
        cli.main()
    assert info.value.code == 0 and capsys.readouterr().out == "1/5\n"
