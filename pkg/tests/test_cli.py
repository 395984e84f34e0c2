import csv

import numpy as np
import pytest

from anisogl import cli
from anisogl.cli import ConfigError, main, parse_config
from anisogl.minimize import DivergenceError


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest(out):
    return dict(line.split("=", 1) for line in (out / "manifest.txt").read_text().splitlines())


def test_parse_lists_comments_and_discs():
    cfg = parse_config("kind = pohozaev_check  # trailing\n"
                       "delta = 0.2\n\n# full-line comment\n"
                       "discs = 0 0 0.4, 0.1 -0.1 0.3\n")
    assert cfg.kind == "pohozaev_check"
    assert cfg.get("delta") == [0.2]
    assert cfg.get("discs") == [(0.0, 0.0, 0.4), (0.1, -0.1, 0.3)]
    assert cfg.get("n") == [129]


@pytest.mark.parametrize("text, line, key", [
    ("kind = solve\nbogus = 1\n", 2, "bogus"),
    ("kind = solve\n\ndelta = abc\n", 3, "delta"),
    ("kind = solve\ndelta = 1.5\n", 2, "delta"),
    ("kind = solve\ndegrees = -1\n", 2, "degrees"),
    ("kind = sweep_eps\nschedule = 0.1, 0.2\n", 2, "schedule"),
    ("kind = solve\neps = 0.1\neps = 0.2\n", 3, "eps"),
    ("kind = cdelta_table\nt_list = 4\n", 2, "t_list"),
])
def test_config_errors_carry_line_and_key(text, line, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line and info.value.key == key
    assert f"line {line}" in str(info.value) and repr(key) in str(info.value)


def test_missing_equals_reports_line():
    with pytest.raises(ConfigError) as info:
        parse_config("kind = solve\njust words\n")
    assert info.value.line == 2


def test_kind_must_match_command():
    with pytest.raises(ConfigError):
        parse_config("kind = solve\n", "cdelta_table")
    assert parse_config("", "cdelta_table").kind == "cdelta_table"


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = write(tmp_path, "kind = cdelta_table\nwidth = 3\n")
    assert main(["cdelta", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "line 2" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path):
    assert main(["cdelta", "--config", str(tmp_path / "none.cfg")]) == 2


def test_divergence_exits_3(tmp_path, monkeypatch, capsys):
    def boom(cfg, w):
        raise DivergenceError("non-finite energy", None, eps=0.05)
    monkeypatch.setitem(cli._RUNNERS, "cdelta_table", boom)
    cfg = write(tmp_path, "kind = cdelta_table\n")
    assert main(["cdelta", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "eps=0.05" in capsys.readouterr().err


def test_cdelta_table_row(tmp_path):
    cfg = write(tmp_path, "kind = cdelta_table\ndelta = 0, 0.1, 0.2, 0.3\ndegrees = -2, -1, 1\n")
    out = tmp_path / "o"
    assert main(["cdelta", "--config", str(cfg), "--out", str(out)]) == 0
    header = (out / "cdelta_table.csv").read_text().splitlines()[0]
    assert header == "delta,d,method,value,err"
    rows = read_csv(out / "cdelta_table.csv")
    assert len(rows) == 12
    row = next(r for r in rows if float(r["delta"]) == 0 and r["d"] == "-1")
    assert row["method"] == "reduced_1d"
    assert float(row["value"]) == pytest.approx(np.pi, abs=1e-8)
    for r in rows:
        if r["d"] == "1":
            assert float(r["value"]) == pytest.approx((1 - float(r["delta"])) * np.pi, abs=1e-6)


def test_pohozaev_unit_fixture(tmp_path):
    cfg = write(tmp_path, "kind = pohozaev_check\nfixture = unit\nn = 65\ndelta = 0.3\neps = 0.2\n"
                          "discs = 0 0 0.4, 0.2 0.1 0.3, -0.3 -0.3 0.25\n")
    out = tmp_path / "o"
    assert main(["pohozaev", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "pohozaev.csv")
    assert list(rows[0]) == ["disc_cx", "disc_cy", "r", "residual_rel", "slack_an6"]
    assert len(rows) == 3
    assert all(float(r["residual_rel"]) <= 1e-10 for r in rows)


def test_pohozaev_bad_disc_exits_2(tmp_path):
    cfg = write(tmp_path, "kind = pohozaev_check\nfixture = unit\nn = 33\neps = 0.2\ndiscs = 0.5 0 0.49\n")
    assert main(["pohozaev", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2


def test_sweep_eps_single_vortex_rows(tmp_path):
    cfg = write(tmp_path, "kind = sweep_eps\ndelta = 0\nD = 1\nn = 65\nschedule = 0.2, 0.1\n")
    out = tmp_path / "o"
    assert main(["sweep-eps", "--config", str(cfg), "--out", str(out)]) == 0
    text = (out / "sweep_eps.csv").read_text().splitlines()
    assert text[0] == ("eps,ln_inv_eps,E_eps,E0,potential,G_eps,n_vortices,sum_degrees,"
                       "m_half_min_pair,min_boundary_dist")
    rows = read_csv(out / "sweep_eps.csv")
    assert [float(r["eps"]) for r in rows] == [0.2, 0.1]
    for r in rows:
        assert r["n_vortices"] == "1" and r["sum_degrees"] == "-1"
    assert (out / "field_final.txt").read_text().count("\n") == 65 * 65
    assert (out / "modulus_final.svg").read_text().startswith("<svg")


def test_manifest_lists_exactly_written_files(tmp_path):
    cfg = write(tmp_path, "kind = solve\nn = 33\neps = 0.2\nsvg = false\nalpha = 0.5\neta = 0.1\n")
    out = tmp_path / "o"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--seed", "7"]) == 0
    m = manifest(out)
    assert m["kind"] == "solve" and m["seed"] == "7" and m["config.n"] == "33"
    listed = set(m["files"].split(","))
    assert listed == {p.name for p in out.iterdir()}
    assert listed == {"solve.csv", "vortices.csv", "eta_scan.csv", "field_final.txt", "manifest.txt"}
    for name in listed:
        if name.endswith(".csv"):
            assert (out / name).read_text().splitlines()[0].count(",") >= 1


def test_floats_use_17_significant_digits():
    assert cli.fmt(np.pi) == "3.1415926535897931"
    assert float(cli.fmt(0.1)) == 0.1
    assert cli.fmt(True) == "1" and cli.fmt(None) == "nan"


def test_kpartition_and_annulus_runs(tmp_path):
    cfg = write(tmp_path, "kind = k_partition\ndelta = 0.1\nD = 2, 3\nn_theta = 64\n")
    out = tmp_path / "k"
    assert main(["kpartition", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "kpartition.csv")
    assert [r["multiset"] for r in rows] == ["-1 -1", "-1 -1 -1"]
    for r in rows:
        assert float(r["K"]) == pytest.approx(int(r["D"]) * float(r["c_minus1"]), rel=1e-12)
    cfg = write(tmp_path, "kind = annulus_slope\ndelta = 0\nn_theta = 64\nn_per_log = 8\n"
                          "t_list = 2, 4\n", "a.cfg")
    out = tmp_path / "a"
    assert main(["annulus", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "annulus_slope.csv")
    assert list(rows[0]) == ["delta", "d", "t", "value", "pairwise_slope"]
    assert rows[0]["pairwise_slope"] == "nan"
    assert float(rows[1]["pairwise_slope"]) == pytest.approx(np.pi, rel=0.05)


def test_rerun_is_bit_identical(tmp_path):
    cfg = write(tmp_path, "kind = solve\nn = 33\neps = 0.2\ndelta = 0.2\nD = 2\n")
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["solve", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("solve.csv", "vortices.csv", "field_final.txt"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
