"""MI地中通信シミュレータのメインエントリーポイント"""

import argparse
import math
import sys
from dataclasses import replace
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from src.channel.antennas import CoilSpec, Pose
from src.channel.constants import RX_COIL_RADIUS, RX_COIL_TURNS
from src.core.config import AppConfig
from src.core.errors import MicError, UsageError
from src.core.logger import get_logger, setup_logger
from src.data.analyzer import FIGURE_PRESETS, SWEEP_AXES, FigureAnalyzer, RunConfig, parse_grid
from src.data.scenario import load_scenario, scenario_link
from src.data.storage import ResultWriter
from src.fading.metrics import ergodic_ber, ergodic_capacity, outage_probability, q_function
from src.fading.models import BcsSpec, FadingModel
from src.link.metrics import (
    bandwidth_numeric,
    capacity,
    gain_response,
    link_bandwidth_coupling,
    mic_range,
    snr,
)
from src.network.graph import best_path, isolation_probability, plan_waveguide_relays
from src.network.models import Scenario
from src.network.power import power_allocation_br
from src.relay.cooperative import cmic_af
from src.relay.crosstalk import crosstalk_impedances, relay_path
from src.relay.kvl import kvl_solve, link_power_gain, relay_system
from src.relay.waveguide import waveguide_gain_at_spacing, waveguide_system

logger = get_logger(__name__)

# サブコマンドごとの CSV の列 (--help に表示)
CSV_COLUMNS = {
    "link": "link.csv: distance_m, frequency_hz, gain, snr, snr_db, bandwidth_numeric_hz, "
            "bandwidth_coupling_hz, capacity_flat_bps, capacity_integral_bps, range_m, range_capped",
    "sweep": "sweep_<axis>.csv: <distance_m|frequency_hz|sigma_s_per_m>, bandwidth_hz, snr, snr_db, capacity_bps",
    "fading": "fading.csv: model, sigma_d, sigma_s, varsigma, mean_snr, ergodic_capacity_bps_hz, "
              "ergodic_capacity_std, capacity_no_fading_bps_hz, outage_probability, ber, ber_no_fading",
    "relay": "relay.csv: relay_x_m, relay_y_m, relay_z_m, snr_af, snr_direct, bandwidth_af_hz, "
             "bandwidth_dmi_hz, capacity_af_bps, capacity_dmi_bps, cmg",
    "waveguide": "waveguide.csv: relays, spacing_m, frequency_hz, gain, gain_db, gain_kvl, gain_direct",
    "crosstalk": "crosstalk.csv: frequency_hz, distance_m, height_m, z_pa1_real, z_pa1_imag, "
                 "z_pa2_real, z_pa2_imag, ratio, classification",
    "network": "network_path.csv: hop, from, to, frequency_hz, capacity_bps / "
               "power_allocation.csv: node, power_w, utility / power_trace.csv / isolation.csv / relay_plan.csv",
    "fig": "fig_<preset>.csv (列はプリセットごとに固定)",
}


class UsageErrorParser(argparse.ArgumentParser):
    """使い方の誤りを UsageError として送出するパーサー"""

    def error(self, message: str):
        raise UsageError(message)


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"64ビット符号なし整数が必要です: {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"1以上の整数が必要です: {text}")
    return value


def _vector(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"x,y,z の形式が必要です: {text}")
    return tuple(float(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    """コマンドラインパーサーを作成"""
    parser = UsageErrorParser(prog="mic", description="MI地中通信のリンク・フェージング・リレー・ネットワーク計算")
    parser.add_argument("--config", help="アプリケーション設定 (JSON)")
    parser.add_argument("--scenario", help="シナリオファイル (JSON)")
    parser.add_argument("--seed", type=_u64, help="マスターシード")
    parser.add_argument("--jobs", type=_positive_int, help="並列ワーカー数")
    parser.add_argument("--out", help="CSVの出力ディレクトリ")
    parser.add_argument("--mc-samples", type=_positive_int, help="モンテカルロのサンプル数")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"])
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, epilog=CSV_COLUMNS[name])

    link = command("link", "リンクバジェット")
    link.add_argument("--source")
    link.add_argument("--destination")
    link.add_argument("--threshold", type=float, help="通信距離のSNRしきい値")

    sweep = command("sweep", "主リンクの1軸掃引")
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True)
    sweep.add_argument("--grid", required=True, help="start:stop:num[:log] または a,b,c")

    fading = command("fading", "フェージング環境の性能指標")
    fading.add_argument("--model", choices=["bcs", "uniform"], default="bcs")
    fading.add_argument("--sigma-d", type=float, default=0.6, help="受信端の振動強度")
    fading.add_argument("--sigma-s", type=float, help="送信端の振動強度")
    fading.add_argument("--varsigma", type=float, default=0.8)
    fading.add_argument("--mode", choices=["exact", "geometric"], default="exact")
    fading.add_argument("--snr", type=float, default=10.0, help="フェージングなしの平均SNR")
    fading.add_argument("--threshold", type=float, default=1.0, help="アウテージのSNRしきい値")
    fading.add_argument("--ebn0-db", type=float, default=10.0)

    relay = command("relay", "AFリレーによる協調リンク")
    relay.add_argument("--relay", type=_vector, required=True, help="リレー位置 x,y,z (m)")
    relay.add_argument("--relay-axis", type=_vector, default=(1.0, 0.0, 0.0))

    waveguide = command("waveguide", "MI導波路の利得")
    waveguide.add_argument("--max-relays", type=int, default=10)
    waveguide.add_argument("--spacing", type=float, default=5.0)
    waveguide.add_argument("--frequency", type=float)

    crosstalk = command("crosstalk", "受動リレーのクロストーク")
    crosstalk.add_argument("--distance", default="2:60:30", help="S–D 距離のグリッド")
    crosstalk.add_argument("--height", type=float, default=1.5)
    crosstalk.add_argument("--frequency", default="1e4,1e6", help="周波数のグリッド")

    network = command("network", "経路・電力配分・孤立確率")
    network.add_argument("--source")
    network.add_argument("--destination")
    network.add_argument("--weight", type=float, help="電力コストの重み (指定時に電力配分を実行)")
    network.add_argument("--fading-aware", action="store_true")
    network.add_argument("--max-iters", type=_positive_int, default=100)
    network.add_argument("--density", type=float, help="ノード密度 (指定時に孤立確率を推定)")
    network.add_argument("--side", type=float, default=100.0)
    network.add_argument("--trials", type=_positive_int, default=200)
    network.add_argument("--orientation", choices=["random", "coaxial", "fixed"], default="random")
    network.add_argument("--sink", help="導波路リレー配置のシンク (指定時に配置計画)")
    network.add_argument("--plan-spacing", type=float, default=5.0)

    fig = command("fig", "図の再現プリセット")
    fig.add_argument("preset", choices=FIGURE_PRESETS)
    fig.add_argument("--threshold", type=float, help="range に必須")
    fig.add_argument("--varsigma", type=float, help="fading に必須")
    fig.add_argument("--rx-theta-deg", type=float)
    return parser


class MicApp:
    """シナリオに対してサブコマンドを実行するアプリケーション"""

    def __init__(self, config: Optional[AppConfig] = None, scenario: Optional[Scenario] = None):
        """
        Args:
            config: アプリケーション設定
            scenario: シナリオ
        """
        self.config = config or AppConfig()
        self.scenario = scenario or Scenario.default()
        self.analyzer = FigureAnalyzer(
            self.scenario, seed=self.config.seed, jobs=self.config.jobs, mc_samples=self.config.mc_samples,
            kappa=self.config.near_field_kappa, skin_mode=self.config.skin_depth_mode,
        )
        self.writer = ResultWriter(self.config.out_dir)

    def run(self, run_config: RunConfig) -> List:
        """
        サブコマンドを実行して CSV を書き出す

        Args:
            run_config: 実行設定

        Returns:
            書き出したファイルのパス
        """
        handlers = {
            "link": self.cmd_link,
            "sweep": self.cmd_sweep,
            "fading": self.cmd_fading,
            "relay": self.cmd_relay,
            "waveguide": self.cmd_waveguide,
            "crosstalk": self.cmd_crosstalk,
            "network": self.cmd_network,
            "fig": self.cmd_fig,
        }
        if run_config.command not in handlers:
            raise UsageError(f"未知のコマンドです: {run_config.command}")
        tables = handlers[run_config.command](run_config)
        paths = self.writer.write_all(tables)
        print(self.writer.summary())
        return paths

    def cmd_link(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        link = scenario_link(self.scenario, options.get("source"), options.get("destination"))
        threshold = options.get("threshold")
        print(self.analyzer.export_report(link, threshold))

        numeric = bandwidth_numeric(link, self.config.skin_depth_mode)
        value = snr(link, skin_mode=self.config.skin_depth_mode)
        row = {
            'distance_m': link.distance,
            'frequency_hz': link.frequency,
            'gain': gain_response(link, link.frequency, self.config.skin_depth_mode),
            'snr': value,
            'snr_db': 10 * math.log10(value) if value > 0 else -math.inf,
            'bandwidth_numeric_hz': numeric.value,
            'bandwidth_coupling_hz': link_bandwidth_coupling(link).value if isinstance(link.tx, CoilSpec) else math.nan,
            'capacity_flat_bps': capacity(link, "flat"),
            'capacity_integral_bps': capacity(link, "integral"),
            'range_m': math.nan,
            'range_capped': False,
        }
        try:
            result = mic_range(link, threshold if threshold is not None else self.scenario.snr_threshold,
                               self.config.skin_depth_mode)
            row['range_m'] = result.distance
            row['range_capped'] = result.capped
        except MicError as e:
            logger.warning(f"通信距離を求められませんでした: {e}")
        return {'link': pd.DataFrame([row])}

    def cmd_sweep(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        axis = run_config.options["axis"]
        return {f'sweep_{axis}': self.analyzer.sweep(axis, run_config.grids[axis])}

    def cmd_fading(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        if options["model"] == "uniform":
            model = FadingModel.uniform()
        else:
            tx = BcsSpec(options["sigma_s"], options["varsigma"]) if options.get("sigma_s") else None
            model = FadingModel.bcs(rx=BcsSpec(options["sigma_d"], options["varsigma"]), tx=tx, mode=options["mode"])
        mean_snr = options["snr"]
        ebn0 = 10 ** (options["ebn0_db"] / 10)
        rng = np.random.default_rng(run_config.seed)
        samples = run_config.mc_samples

        ec = ergodic_capacity(model, mean_snr, rng=rng, samples=samples)
        reference = math.log2(1 + mean_snr)
        row = {
            'model': model.kind.value,
            'sigma_d': options["sigma_d"] if options["model"] == "bcs" else math.nan,
            'sigma_s': options.get("sigma_s") or math.nan,
            'varsigma': options["varsigma"] if options["model"] == "bcs" else math.nan,
            'mean_snr': mean_snr,
            'ergodic_capacity_bps_hz': ec.value,
            'ergodic_capacity_std': ec.std,
            'capacity_no_fading_bps_hz': reference,
            'outage_probability': outage_probability(model, mean_snr, options["threshold"], rng=rng,
                                                     samples=samples).value,
            'ber': ergodic_ber(model, 2 * ebn0, rng=rng, samples=samples).value,
            'ber_no_fading': q_function(math.sqrt(2 * ebn0)),
        }
        print(f"エルゴード容量: {ec.value:.4f} bit/s/Hz ({ec.method}, フェージングなし: {reference:.4f})")
        return {'fading': pd.DataFrame([row])}

    def cmd_relay(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        link = scenario_link(self.scenario)
        position = options["relay"]
        result = cmic_af(link, Pose.normalized(position, options["relay_axis"]))
        print(f"CMG: {result.cmg:.4f} (B_AF={result.bandwidth_af:.4g} Hz, B_DMI={result.bandwidth_dmi:.4g} Hz)")
        row = {'relay_x_m': position[0], 'relay_y_m': position[1], 'relay_z_m': position[2], **result.to_dict()}
        return {'relay': pd.DataFrame([row])}

    def cmd_waveguide(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        if options["max_relays"] < 0:
            raise UsageError(f"--max-relays は0以上が必要です (値: {options['max_relays']})")
        f = options.get("frequency") or self.scenario.frequency_set[0]
        spacing = options["spacing"]
        coil = CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS).retuned(f)
        medium = self.scenario.medium
        axis = (1.0, 0.0, 0.0)
        rows = []
        for n in range(options["max_relays"] + 1):
            gain = waveguide_gain_at_spacing(coil, n, spacing, f, medium)
            chain = waveguide_system(coil, n, spacing, f, medium)
            direct = relay_system(coil, coil, coil, Pose(position=(0.0, 0.0, 0.0), axis=axis),
                                  Pose(position=((n + 1) * spacing, 0.0, 0.0), axis=axis), [], f, medium)
            rows.append({
                'relays': n,
                'spacing_m': spacing,
                'frequency_hz': f,
                'gain': gain,
                'gain_db': 10 * math.log10(gain) if gain > 0 else -math.inf,
                'gain_kvl': link_power_gain(chain, kvl_solve(chain)),
                'gain_direct': link_power_gain(direct, kvl_solve(direct)),
            })
        return {'waveguide': pd.DataFrame(rows)}

    def cmd_crosstalk(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        coil = CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS)
        rows = []
        for f in run_config.grids["frequency"]:
            for d in run_config.grids["distance"]:
                pose_s, pose_d, pose_r = relay_path(d, options["height"])
                report = crosstalk_impedances(coil.retuned(f), pose_s, pose_d, pose_r, f, self.scenario.medium)
                rows.append({'frequency_hz': f, 'distance_m': d, 'height_m': options["height"], **report.to_dict()})
        return {'crosstalk': pd.DataFrame(rows)}

    def cmd_network(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        scenario = self.scenario
        source = options.get("source")
        destination = options.get("destination")
        if source is None:
            senders = [node for node in scenario.nodes if node.destination is not None]
            source = senders[0].id if senders else scenario.nodes[0].id
            destination = destination or (senders[0].destination if senders else scenario.nodes[-1].id)
        if destination is None:
            destination = scenario.node(source).destination or scenario.nodes[-1].id

        path = best_path(scenario, source, destination)
        print(f"経路 {source} → {destination}: ボトルネック {path.bottleneck:.6g} bit/s")
        tables = {
            'network_path': pd.DataFrame(path.to_rows(), columns=['hop', 'from', 'to', 'frequency_hz', 'capacity_bps'])
        }
        if options.get("weight") is not None:
            result = power_allocation_br(scenario, options["weight"], max_iters=options["max_iters"],
                                         fading_aware=options["fading_aware"])
            print(f"電力配分: {result.status} ({result.iterations} 回)")
            tables['power_allocation'] = pd.DataFrame(
                {'node': result.node_ids, 'power_w': result.powers, 'utility': result.utilities}
            )
            tables['power_trace'] = pd.DataFrame(result.trace)
        if options.get("density") is not None:
            isolation = isolation_probability(scenario, options["density"], options["side"], options["trials"],
                                              run_config.seed, orientation=options["orientation"])
            tables['isolation'] = pd.DataFrame([isolation.to_dict()])
        if options.get("sink") is not None:
            positions = {node.id: node.pose.position for node in scenario.nodes}
            plan = plan_waveguide_relays(positions, options["sink"], options["plan_spacing"])
            print(f"導波路リレー: 最小全域木 {plan.tree_relays} 個 / 星形 {plan.star_relays} 個")
            tables['relay_plan'] = pd.DataFrame(
                [{'layout': 'tree', 'relays': plan.tree_relays, 'length_m': plan.tree_length},
                 {'layout': 'star', 'relays': plan.star_relays, 'length_m': plan.star_length}]
            )
        return tables

    def cmd_fig(self, run_config: RunConfig) -> Dict[str, pd.DataFrame]:
        options = run_config.options
        return self.analyzer.figure(
            options["preset"],
            threshold=options.get("threshold"),
            varsigma=options.get("varsigma"),
            rx_theta_deg=options.get("rx_theta_deg"),
        )


def run_command(run_config: RunConfig, config: Optional[AppConfig] = None) -> List:
    """
    実行設定のシナリオを読み込んでサブコマンドを実行する

    Args:
        run_config: 実行設定
        config: アプリケーション設定 (Noneの場合は既定値)

    Returns:
        書き出したファイルのパス
    """
    scenario = load_scenario(run_config.scenario_path)
    return MicApp(config, scenario).run(run_config)


def _run_config(args: argparse.Namespace, config: AppConfig) -> RunConfig:
    """パース結果から実行設定を作る"""
    global_keys = {"config", "scenario", "seed", "jobs", "out", "mc_samples", "log_level", "command"}
    options = {k: v for k, v in vars(args).items() if k not in global_keys}
    grids = {}
    if args.command == "sweep":
        grids[args.axis] = parse_grid(args.grid, args.axis)
    elif args.command == "crosstalk":
        grids["distance"] = parse_grid(args.distance, "distance")
        grids["frequency"] = parse_grid(args.frequency, "frequency")
    return RunConfig(
        command=args.command,
        scenario_path=args.scenario,
        grids=grids,
        out_dir=config.out_dir,
        seed=config.seed,
        mc_samples=config.mc_samples,
        jobs=config.jobs,
        options=options,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """
    メイン関数

    Args:
        argv: コマンドライン引数 (Noneの場合は sys.argv)

    Returns:
        終了コード (0 成功, 1 使い方の誤り, 2 設定の誤り, 3 数値計算・定義域の誤り)
    """
    try:
        args = build_parser().parse_args(argv)
        config = AppConfig.from_file(args.config)
        overrides = {
            'seed': args.seed,
            'jobs': args.jobs,
            'out_dir': args.out,
            'mc_samples': args.mc_samples,
            'log_level': args.log_level,
        }
        config = replace(config, **{k: v for k, v in overrides.items() if v is not None})
        setup_logger(config.log_level, config.log_format)

        run_command(_run_config(args, config), config)
        return 0
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except MicError as e:
        print(f"error: {e}", file=sys.stderr)
        logger.debug(f"{type(e).__name__} により終了します (終了コード {e.exit_code})")
        return e.exit_code
    except Exception as e:
        logger.exception(f"予期しないエラー: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        pass
