import io
import json

import pandas as pd
import pytest
from click.testing import CliRunner

from manage import cli


@pytest.fixture()
def runner():
    return CliRunner(mix_stderr=False)


def test_validate_square(runner, schemes_dir):
    result = runner.invoke(cli, ["validate", str(schemes_dir / "square.json")])
    assert result.exit_code == 0
    assert "volume identity: exact pass" in result.stdout


def test_validate_failure_exits_one(runner, schemes_dir, tmp_path):
    document = json.loads((schemes_dir / "square.json").read_text())
    document["rules"][0]["children"].pop()
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps(document))
    result = runner.invoke(cli, ["validate", str(broken)])
    assert result.exit_code == 1
    assert "deficit 1/25" in result.stdout


def test_malformed_scheme_exits_one(runner, tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    result = runner.invoke(cli, ["validate", str(broken)])
    assert result.exit_code == 1
    assert "invalid JSON" in result.stderr


def test_graph_prints_verdict(runner, schemes_dir, tmp_path):
    dot = tmp_path / "square.dot"
    result = runner.invoke(cli, ["graph", str(schemes_dir / "square.json"), "--dot", str(dot)])
    assert result.exit_code == 0
    assert "incommensurable (witness: ln5, ln(5/3))" in result.stdout
    assert dot.read_text().count("->") == 17
    assert "minimal witnesses: 1" in result.stdout
    assert "  1->1 length ln5 (x16) & 1->1 length ln(5/3) (x1)" in result.stdout


def test_graph_window_gaps(runner, schemes_dir):
    result = runner.invoke(cli, ["graph", str(schemes_dir / "square.json"), "--window", "2"])
    assert result.exit_code == 0
    line = next(l for l in result.stdout.splitlines() if l.startswith("return-time gap at 1 in [1, 2]: "))
    assert float(line.rsplit(": ", 1)[1]) == pytest.approx(0.5108, abs=1e-4)


def test_stats_prints_phi(runner, schemes_dir):
    result = runner.invoke(
        cli, ["stats", str(schemes_dir / "triangles.json"), "--type", "1", "--interval", "3/5", "4/5"]
    )
    assert result.exit_code == 0
    assert "phi = (175/1152)/Z ≈ 0.29597" in result.stdout
    assert "relative fraction = 4375/57024" in result.stdout


def test_stats_json(runner, schemes_dir):
    result = runner.invoke(
        cli, ["stats", str(schemes_dir / "triangles.json"), "--type", "U", "--interval", "3/5", "4/5", "--json"]
    )
    document = json.loads(result.stdout)
    assert document["values"]["phi"]["exact"] == "(175/1152)/Z"


def test_stats_refuses_commensurable_scheme(runner, schemes_dir):
    result = runner.invoke(cli, ["stats", str(schemes_dir / "fixed-half.json"), "--type", "1"])
    assert result.exit_code == 1
    assert "commensurable" in result.stderr


def test_oracle(runner, schemes_dir):
    result = runner.invoke(cli, ["oracle", str(schemes_dir / "square.json"), "--time", "ln(5/3)"])
    assert result.exit_code == 0
    assert result.stdout.strip() == "17"


def test_oracle_reports_jump(runner, schemes_dir):
    result = runner.invoke(cli, ["oracle", str(schemes_dir / "kakutani-1-3.json"), "--time", "0", "--jump", "ln(3/2)"])
    assert result.exit_code == 0
    assert result.stdout.splitlines() == ["1", "jump: 1"]
    result = runner.invoke(cli, ["oracle", str(schemes_dir / "kakutani-1-3.json"), "--time", "0", "--jump", "0.4"])
    assert result.exit_code == 2


def test_bad_time_is_a_usage_error(runner, schemes_dir):
    result = runner.invoke(cli, ["oracle", str(schemes_dir / "square.json"), "--time", "ln(x)"])
    assert result.exit_code == 2


def test_budget_exceeded_exits_three(runner, schemes_dir):
    result = runner.invoke(cli, ["--budget", "5", "generate", str(schemes_dir / "square.json"), "--time", "ln5"])
    assert result.exit_code == 3
    assert "budget exceeded" in result.stderr


def test_generate_then_render(runner, schemes_dir, tmp_path):
    patch = tmp_path / "patch.bin"
    table = tmp_path / "patch.csv"
    result = runner.invoke(
        cli,
        ["generate", str(schemes_dir / "triangles.json"), "--time", "ln3", "--out", str(patch), "--csv", str(table)],
    )
    assert result.exit_code == 0
    tiles = int(result.stdout.splitlines()[0].split(": ")[1])
    assert result.stdout.splitlines()[1] == "legal scales: yes"
    assert len(pd.read_csv(table)) == tiles
    figure = tmp_path / "fig.svg"
    result = runner.invoke(cli, ["render", str(patch), "--style", "by-scale", "--out", str(figure)])
    assert result.exit_code == 0
    assert figure.read_text().count("<polygon") == tiles


def test_worker_count_does_not_change_output(runner, schemes_dir, tmp_path):
    square = str(schemes_dir / "square.json")
    patch = tmp_path / "patch.bin"
    commands = [
        ["generate", square, "--time", "ln8", "--out", str(patch)],
        ["stationary", square, "--k", "4", "--out", str(patch)],
        ["census", square, "--time", "ln25"],
        ["complexity", square, "--k-max", "6"],
    ]
    for command in commands:
        outputs = []
        for workers in ("1", "8"):
            result = runner.invoke(cli, ["--workers", workers, *command], env={"MULTITILE_BACKEND": "threading"})
            assert result.exit_code == 0
            written = patch.read_bytes() if "--out" in command else b""
            outputs.append((result.stdout, written))
        assert outputs[0] == outputs[1]


def test_complexity_csv(runner, schemes_dir):
    result = runner.invoke(cli, ["complexity", str(schemes_dir / "square.json"), "--k-max", "5"])
    assert result.exit_code == 0
    frame = pd.read_csv(io.StringIO(result.stdout))
    assert list(frame.columns) == ["k", "c_k"]
    assert frame["c_k"].tolist() == [1, 2, 3, 4, 5, 6]


def test_discrepancy_csv(runner, schemes_dir):
    result = runner.invoke(
        cli, ["discrepancy", str(schemes_dir / "square.json"), "--step", "ln(5/3)", "--count", "4"]
    )
    assert result.exit_code == 0
    frame = pd.read_csv(io.StringIO(result.stdout))
    assert list(frame.columns) == ["t_num", "t_den", "count", "expected", "discrepancy"]
    assert len(frame) == 4


def test_census_csv(runner, schemes_dir):
    result = runner.invoke(cli, ["census", str(schemes_dir / "square.json"), "--time", "ln(5/3)"])
    assert result.exit_code == 0
    frame = pd.read_csv(io.StringIO(result.stdout))
    assert frame["count"].tolist() == [17]


def test_stationary_and_occurrences(runner, schemes_dir, tmp_path):
    patch = tmp_path / "stationary.bin"
    result = runner.invoke(
        cli, ["stationary", str(schemes_dir / "square.json"), "--k", "3", "--supertiles", "1", "--out", str(patch)]
    )
    assert result.exit_code == 0
    assert "path 0 control point (1/2, 1/2)" in result.stdout
    assert "contains k=2: yes" in result.stdout
    result = runner.invoke(
        cli,
        [
            "occurrences",
            str(schemes_dir / "square.json"),
            str(patch),
            "--extract-box", "-1/2", "-1/2", "1/2", "1/2",
            "--dilation", "1/100", "1",
            "--region", "-5", "-5", "5", "5",
        ],
    )
    assert result.exit_code == 0
    assert "L = " in result.stdout and "N = " in result.stdout


def test_manifest_is_written(runner, schemes_dir, tmp_path):
    manifest = tmp_path / "run.json"
    result = runner.invoke(
        cli, ["--manifest", str(manifest), "--seed", "7", "oracle", str(schemes_dir / "kakutani-1-3.json"), "--time", "2ln(3/2)"]
    )
    assert result.exit_code == 0
    assert result.stdout.strip() == "3"
    document = json.loads(manifest.read_text())
    assert len(document["scheme_hash"]) == 64
    assert "stdout" in document["output_hashes"]
    assert document["budget"] == 10_000_000
