"""コマンドラインアプリケーションのテスト"""

import json

import pandas as pd
import pytest

from src.core.config import AppConfig
from src.data.analyzer import FIGURE_PRESETS, RunConfig
from src.main import build_parser, main, run_command


@pytest.fixture
def out_dir(tmp_path):
    """CSVの出力先"""
    return tmp_path / "out"


def _run(out_dir, *args):
    return main(["--out", str(out_dir), "--log-level", "WARNING", *args])


class TestExitCodes:
    """終了コードのテスト"""

    def test_link_success(self, out_dir, capsys):
        """成功時は0で CSV と要約を出す"""
        assert _run(out_dir, "link") == 0

        frame = pd.read_csv(out_dir / "link.csv")
        assert frame['snr'].iloc[0] == pytest.approx(2.30, rel=0.05)
        captured = capsys.readouterr()
        assert "MIリンクバジェット" in captured.out
        assert "link.csv\t1 rows" in captured.out

    def test_help(self, capsys):
        """--help は0"""
        assert main(["--help"]) == 0
        assert "link" in capsys.readouterr().out

    def test_subcommand_help_lists_columns(self, capsys):
        """サブコマンドのヘルプに CSV の列を表示"""
        assert main(["sweep", "--help"]) == 0
        assert "capacity_bps" in capsys.readouterr().out

    @pytest.mark.parametrize("args", [
        ["bogus"],
        ["sweep", "--axis", "distance"],
        ["sweep", "--axis", "distance", "--grid", "1,1"],
        ["--seed", "-1", "link"],
        ["--jobs", "0", "link"],
        ["fig", "range"],
    ])
    def test_usage_errors(self, out_dir, args, capsys):
        """使い方の誤りは1"""
        assert _run(out_dir, *args) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_scenario(self, out_dir, tmp_path):
        """存在しないシナリオは2"""
        assert _run(out_dir, "--scenario", str(tmp_path / "missing.json"), "link") == 2

    def test_invalid_scenario(self, out_dir, tmp_path, capsys):
        """定義域外のシナリオは2で位置を表示"""
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({'nodes': [{'id': 'a', 'position': [0, 0, 0], 'antenna': {'radius': -1}}]}),
                        encoding="utf-8")

        assert _run(out_dir, "--scenario", str(path), "link") == 2
        assert "nodes[0].antenna.radius" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path):
        """不正な設定ファイルは2"""
        path = tmp_path / "config.json"
        path.write_text('{"jobs": 0}', encoding="utf-8")

        assert main(["--config", str(path), "link"]) == 2

    def test_domain_error(self, out_dir):
        """定義域の誤りは3"""
        assert _run(out_dir, "link", "--source", "X") == 3

    def test_unexpected_error(self, out_dir, mocker):
        """予期しない例外も3"""
        mocker.patch("src.main.MicApp.run", side_effect=RuntimeError("boom"))

        assert _run(out_dir, "link") == 3


class TestCommands:
    """サブコマンドのテスト"""

    def test_sweep(self, out_dir):
        """掃引の CSV"""
        assert _run(out_dir, "sweep", "--axis", "distance", "--grid", "20:60:3") == 0

        frame = pd.read_csv(out_dir / "sweep_distance.csv")
        assert frame['distance_m'].tolist() == [20.0, 40.0, 60.0]

    def test_fading_reproducible(self, tmp_path):
        """同じシードの2回の実行は同じバイト列"""
        args = ["--seed", "99", "--mc-samples", "5000", "fading", "--sigma-d", "0.6", "--sigma-s", "0.4"]
        assert _run(tmp_path / "a", *args) == 0
        assert _run(tmp_path / "b", *args) == 0

        assert (tmp_path / "a" / "fading.csv").read_bytes() == (tmp_path / "b" / "fading.csv").read_bytes()

    def test_relay(self, out_dir):
        """AFリレーの CSV"""
        assert _run(out_dir, "relay", "--relay", "30,0,2") == 0

        frame = pd.read_csv(out_dir / "relay.csv")
        assert frame['relay_x_m'].iloc[0] == 30.0
        assert frame['cmg'].iloc[0] > 0

    def test_waveguide(self, out_dir):
        """導波路の閉形式と KVL が一致"""
        assert _run(out_dir, "waveguide", "--max-relays", "2") == 0

        frame = pd.read_csv(out_dir / "waveguide.csv")
        assert len(frame) == 3
        assert frame['gain'].tolist() == pytest.approx(frame['gain_kvl'].tolist(), rel=1e-9)

    def test_crosstalk(self, out_dir):
        """クロストークの CSV"""
        assert _run(out_dir, "crosstalk", "--distance", "10,50", "--frequency", "1e4") == 0

        assert len(pd.read_csv(out_dir / "crosstalk.csv")) == 2

    def test_network(self, out_dir):
        """経路・電力配分・リレー配置"""
        assert _run(out_dir, "network", "--weight", "200", "--sink", "S") == 0

        path = pd.read_csv(out_dir / "network_path.csv")
        assert path['from'].tolist() == ["S"]
        assert (out_dir / "power_allocation.csv").exists()
        assert len(pd.read_csv(out_dir / "relay_plan.csv")) == 2

    def test_fig(self, out_dir):
        """図の再現プリセット"""
        assert _run(out_dir, "fig", "ej") == 0

        assert len(pd.read_csv(out_dir / "fig_ej.csv")) == 200

    @pytest.mark.parametrize("preset", FIGURE_PRESETS)
    def test_fig_reproducible(self, tmp_path, preset):
        """全プリセットで同じシードなら並列数によらず同じバイト列"""
        extra = {'range': ["--threshold", "1.0"], 'fading': ["--varsigma", "0.8"]}.get(preset, [])
        args = ["--seed", "7", "--mc-samples", "500", "fig", preset, *extra]
        assert _run(tmp_path / "a", "--jobs", "1", *args) == 0
        assert _run(tmp_path / "b", "--jobs", "2", *args) == 0

        first = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
        assert first
        assert first == sorted(p.name for p in (tmp_path / "b").glob("*.csv"))
        for name in first:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parser_requires_command(self):
        """サブコマンドは必須"""
        parser = build_parser()

        assert parser.parse_args(["link"]).command == "link"


class TestRunCommand:
    """run_command関数のテスト"""

    def test_link_without_parser(self, out_dir):
        """パーサーを通さずに実行して CSV のパスを返す"""
        config = AppConfig(out_dir=str(out_dir))

        paths = run_command(RunConfig(command="link", out_dir=str(out_dir)), config)

        assert [p.name for p in paths] == ["link.csv"]
        assert pd.read_csv(paths[0])['snr'].iloc[0] == pytest.approx(2.30, rel=0.05)

    def test_scenario_file(self, out_dir, tmp_path):
        """シナリオファイルの距離を使う"""
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({'nodes': [
            {'id': 'S', 'position': [0, 0, 0], 'destination': 'D'},
            {'id': 'D', 'position': [30, 0, 0]},
        ]}), encoding="utf-8")
        config = AppConfig(out_dir=str(out_dir))

        paths = run_command(RunConfig(command="link", scenario_path=str(path)), config)

        assert pd.read_csv(paths[0])['distance_m'].iloc[0] == pytest.approx(30.0)
