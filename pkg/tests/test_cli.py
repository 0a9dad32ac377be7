import csv
import io
import json

import pytest

from limterp import cli
from limterp.cli import ConfigError, RunConfig, build_config, main, parse_config_text
from limterp.sv import LogGrid

THEOREM = ["theorem", "--id", "T1_7", "--q", "1", "--samples", "10", "--no-stability"]


def _args(argv):
    return cli.make_parser().parse_args(argv)


def test_help_lists_commands_and_ids(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for name in cli.COMMANDS:
        assert name in out
    for tid in ("T1_1", "C1_22", "D1_21", "R1_11", "T3_8"):
        assert tid in out


def test_q_range_message_and_exit(capsys):
    assert main(["theorem", "--id", "T1_3", "--q", "1"]) == 2
    assert "T1_3 needs 1<q<=inf" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["theorem", "--id", "T1_1", "--q", "2", "--w", "pow(ell"],
    ["theorem", "--id", "T1_1", "--q", "2", "--w", "one", "--samples", "4"],
    ["corollary", "--id", "C1_12", "--q", "2", "--couple", "nonsense"],
    ["norm", "--q", "2", "--w", "pow(ell,1)", "--method", "J", "--f", "1,2"],
    ["theorem", "--q", "2"],
])
def test_precondition_and_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err.startswith("limterp:")


def test_theorem_defaults(capsys):
    assert main(THEOREM) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["kind"] == "equivalence" and rep["pass"] is True
    assert rep["ppd"] == 32 and rep["seed"] == 0 and rep["bound"] == 100.0
    assert len(rep["samples"]) == 10


def test_failing_report_exits_1(capsys):
    # an impossible bound makes the run fail without any error
    assert main(THEOREM + ["--bound", "1.0"]) == 1
    assert json.loads(capsys.readouterr().out)["pass"] is False


def test_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(THEOREM + ["--out", str(a)]) == 0
    assert main(THEOREM + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_config_round_trip():
    cfg = RunConfig(command="theorem", id="T1_10", q="3/2", samples=7, stability=False, bound=12.5)
    back = RunConfig(**parse_config_text(cfg.to_text()))
    assert back == cfg


def test_config_diagnostics():
    with pytest.raises(ConfigError, match="x.cfg:2"):
        parse_config_text("ppd = 16\nnot a pair\n", "x.cfg")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("colour = red\n")
    with pytest.raises(ConfigError, match="ppd expects int"):
        parse_config_text("ppd = many\n")


def test_precedence(tmp_path):
    conf = tmp_path / "run.cfg"
    conf.write_text("ppd = 8\nseed = 5\nsamples = 20\ndecades = 30\n")
    env = {"LIMTERP_PPD": "16", "LIMTERP_DECADES": "20"}
    cfg = build_config(_args(["theorem", "--id", "T1_7", "--q", "1", "--config", str(conf), "--seed", "9"]), env)
    # flags beat the environment, which beats the file, which beats the defaults
    assert (cfg.seed, cfg.ppd, cfg.samples, cfg.decades, cfg.bound) == (9, 16, 20, 20, 100.0)
    cfg = build_config(_args(["theorem", "--id", "T1_7", "--q", "1", "--config", str(conf), "--ppd", "64"]), env)
    assert cfg.ppd == 64


def test_missing_config_file():
    with pytest.raises(ConfigError):
        build_config(_args(["theorem", "--id", "T1_7", "--q", "1", "--config", "/nonexistent.cfg"]), {})


def test_unwritable_output_dir():
    with pytest.raises(ConfigError):
        build_config(_args(THEOREM + ["--out", "/nonexistent/dir/r.json"]), {})


def test_identity_csv_column_is_one(capsys):
    assert main(["identity103", "--q", "2", "--format", "csv"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 9
    for r in rows:
        assert abs(float(r["value"]) - 1.0) <= 1e-6


def test_identity_from_a_q3(capsys):
    assert main(["identity103", "--q", "3", "--kind", "b_from_a"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["kind"] == "product-identity"
    assert rep["max_rel_error"] < 1e-6


def test_norm_of_zero(capsys):
    assert main(["norm", "--q", "2", "--w", "pow(ell,-1)", "--couple", "base:3:2", "--f", "0,0,0"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["rows"][0][-1] == 0.0


def test_norm_step_couple(capsys):
    f = json.dumps({"breaks": [0, 1], "values": [1]})
    assert main(["norm", "--q", "2", "--w", "pow(ell,-1)", "--couple", "step", "--f", f]) == 0
    assert json.loads(capsys.readouterr().out)["rows"][0][-1] > 0


def test_transform_and_sv_check(capsys):
    assert main(["transform", "--w", "broken(one,pow(ell,-1))", "--q", "2", "--decades", "10", "--ppd", "8"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert len(rep["rows"]) == LogGrid.centered(10, 8).t.size
    assert main(["sv-check", "--w", "pow(ell,-1)"]) == 0


def test_density_subcommand(capsys):
    assert main(["density", "--id", "D1_8", "--truncations", "8,16,64"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["truncations"] == [8, 16, 64]


def test_unknown_format_rejected_by_argparse():
    with pytest.raises(SystemExit):
        main(THEOREM + ["--format", "xml"])
