"""掃引・図の再現プリセット・リンクバジェットのレポート"""

import logging
import math
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.channel.antennas import CoilSpec, Pose
from src.channel.constants import RX_COIL_RADIUS, RX_COIL_TURNS
from src.channel.medium import Medium, near_field_boundary, skin_depth
from src.channel.gain import channel_gain, mixed_field_gain
from src.core.config import DEFAULT_SEED
from src.core.errors import MicError, NumericError, UsageError
from src.fading.distributions import bcs_expectation
from src.fading.metrics import ergodic_ber, ergodic_capacity, outage_probability, q_function, simulate_bpsk_ber
from src.fading.models import BcsSpec, FadingModel
from src.link.metrics import (
    bandwidth_dipole_closed,
    bandwidth_numeric,
    capacity,
    circuit_bandwidth,
    link_bandwidth_coupling,
    log_snr,
    mic_range,
    resolve_tx_psd,
    snr,
    uncoded_ber_curve,
)
from src.link.models import LinkSpec
from src.network.models import Scenario
from src.relay.cooperative import cmic_af_bandwidth_comparison, relay_area_map
from src.relay.crosstalk import crosstalk_impedances, relay_path
from .scenario import scenario_link

logger = logging.getLogger(__name__)

SWEEP_AXES = ("distance", "frequency", "sigma")

FIGURE_PRESETS = ("capacity", "range", "fading", "ber", "crosstalk", "cmi-bw", "cmg", "ej", "nearfield")


def parse_grid(text: str, name: str = "grid") -> Tuple[float, ...]:
    """
    グリッド指定を解析

    "start:stop:num" (線形)、"start:stop:num:log" (対数)、"a,b,c" (列挙) を受け付ける。

    Args:
        text: グリッド指定
        name: エラーメッセージ用の名前

    Returns:
        狭義単調なグリッド
    """
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
                raise ValueError(text)
            start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
            if num < 1:
                raise ValueError(text)
            space = np.geomspace if len(parts) == 4 else np.linspace
            values = tuple(float(v) for v in space(start, stop, num))
        else:
            values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as e:
        raise UsageError(f"{name}: グリッドの形式が不正です ({text!r})") from e
    return check_grid(values, name)


def check_grid(values: Sequence[float], name: str = "grid") -> Tuple[float, ...]:
    """空でなく狭義単調であることを確認"""
    values = tuple(float(v) for v in values)
    if not values:
        raise UsageError(f"{name}: グリッドが空です")
    steps = np.diff(values)
    if len(values) > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise UsageError(f"{name}: グリッドは狭義単調である必要があります")
    return values


@dataclass
class RunConfig:
    """1回の実行の設定"""

    command: str
    scenario_path: Optional[str] = None
    grids: Dict[str, Tuple[float, ...]] = field(default_factory=dict)  # 掃引軸 → グリッド
    out_dir: str = "out"
    seed: int = DEFAULT_SEED
    mc_samples: int = 100_000
    jobs: int = 1
    options: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        """初期化後の検証"""
        for name, values in self.grids.items():
            self.grids[name] = check_grid(values, name)
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError(f"seed: 64ビット符号なし整数が必要です (値: {self.seed})")
        if self.jobs < 1:
            raise UsageError(f"jobs: 1以上が必要です (値: {self.jobs})")
        if self.mc_samples < 1:
            raise UsageError(f"mc_samples: 1以上が必要です (値: {self.mc_samples})")


def run_cells(func: Callable, cells: Sequence[tuple], jobs: int = 1) -> List[Dict]:
    """
    掃引セルを並列に評価して行を連結

    結果はセルの順に並ぶため、ワーカー数によらず同じ表になる。

    Args:
        func: セルごとに行のリストを返す関数 (トップレベル関数)
        cells: func に渡す引数の組
        jobs: ワーカー数

    Returns:
        行のリスト
    """
    if jobs > 1 and len(cells) > 1:
        with Pool(processes=min(jobs, len(cells))) as pool:
            results = pool.starmap(func, cells)
    else:
        results = [func(*cell) for cell in cells]
    return [row for rows in results for row in rows]


def cell_rng(seed: int, cell: int) -> np.random.Generator:
    """セルごとの独立な乱数生成器"""
    return np.random.default_rng([seed, cell])


def flat_point(link: LinkSpec) -> Dict:
    """
    3dB帯域幅で P_S を割った送信PSDでの SNR と容量

    帯域幅は capacity() と同じ bandwidth_numeric を使う。遠距離で渦電流損が利得の山を f0 から
    大きくずらし、探索範囲に半値点がない場合だけ回路利得のみの帯域幅に切り替える。
    SNR は対数のまま合成するため、遠距離で 0 に丸まっても容量は 0 になるだけで失敗しない。
    """
    try:
        bandwidth = bandwidth_numeric(link).value
    except NumericError as e:
        logger.debug(f"d={link.distance:.6g} m: {e}。回路利得の帯域幅を使います")
        bandwidth = circuit_bandwidth(link.tx, link.rx).value
    value = log_snr(replace(link, tx_psd=link.tx_power / bandwidth))
    return {
        'bandwidth_hz': bandwidth,
        'snr': float(np.exp(value)),
        'snr_db': 10 * value / math.log(10),
        'capacity_bps': bandwidth * float(np.logaddexp(0.0, value)) / math.log(2),
    }


# ---------------------------------------------------------------------------
# セル関数 (プロセスプールに渡すためトップレベルに置く)
# ---------------------------------------------------------------------------

def _sweep_cell(link: LinkSpec, axis: str, value: float) -> List[Dict]:
    if axis == "distance":
        point = link.with_distance(value)
        key = 'distance_m'
    elif axis == "frequency":
        point = link.with_frequency(value)
        key = 'frequency_hz'
    else:
        point = link.with_medium(link.medium.with_sigma(value))
        key = 'sigma_s_per_m'
    return [{key: value, **flat_point(point)}]


def _capacity_cell(link: LinkSpec, medium: Medium, f: float, distances: Tuple[float, ...]) -> List[Dict]:
    base = link.with_frequency(f).with_medium(medium)
    return [
        {'medium': medium.name, 'sigma_s_per_m': medium.sigma, 'frequency_hz': f, 'distance_m': d,
         **flat_point(base.with_distance(d))}
        for d in distances
    ]


def _range_cell(link: LinkSpec, medium: Medium, f: float, threshold: float) -> List[Dict]:
    result = mic_range(link.with_frequency(f).with_medium(medium), threshold)
    return [{'medium': medium.name, 'frequency_hz': f, 'threshold': threshold,
             'range_m': result.distance, 'capped': result.capped}]


def _fading_cell(sigma_d: float, varsigma: float, mean_snr: float, threshold: float, ebn0: float) -> List[Dict]:
    spec = BcsSpec(sigma=sigma_d, varsigma=varsigma)
    model = FadingModel.bcs(rx=spec)
    expected = bcs_expectation(spec)
    return [{
        'sigma_d': sigma_d,
        'varsigma': varsigma,
        'expected_j': expected,
        'ergodic_capacity_bps_hz': ergodic_capacity(model, mean_snr).value,
        'outage_probability': outage_probability(model, mean_snr, threshold).value,
        'ber': ergodic_ber(model, ebn0).value,
        'ber_lower_bound': q_function(math.sqrt(ebn0 * expected)),
    }]


def _ber_cell(sigma_d: float, varsigma: float, ebn0_db: Tuple[float, ...], seed: int, cell: int,
              n_bits: int) -> List[Dict]:
    model = FadingModel.bcs(rx=BcsSpec(sigma=sigma_d, varsigma=varsigma))
    link = replace(LinkSpec.default(), fading=model)
    rng = cell_rng(seed, cell)
    curve = uncoded_ber_curve(link, ebn0_db)
    rows = []
    for row in curve.to_dict("records"):
        simulated = simulate_bpsk_ber(rng, model, 10 ** (row['ebn0_db'] / 10), n_bits)
        rows.append({'sigma_d': sigma_d, 'varsigma': varsigma, **row,
                     'ber_simulated': simulated.value, 'ber_simulated_std': simulated.std})
    return rows


def _crosstalk_cell(coil: CoilSpec, medium: Medium, f: float, distance: float, height: float) -> List[Dict]:
    pose_s, pose_d, pose_r = relay_path(distance, height)
    report = crosstalk_impedances(coil.retuned(f), pose_s, pose_d, pose_r, f, medium)
    return [{'frequency_hz': f, 'distance_m': distance, 'height_m': height,
             'ratio': report.ratio, 'classification': report.classification}]


def _cmi_bw_cell(link: LinkSpec, distance: float, height: float) -> List[Dict]:
    direct = link.with_distance(distance)
    relay = Pose(position=(distance / 2, 0.0, height), axis=(1.0, 0.0, 0.0))
    comparison = cmic_af_bandwidth_comparison(direct, relay)
    return [{'distance_m': distance, 'bandwidth_af_hz': comparison.bandwidth_af,
             'bandwidth_dmi_hz': comparison.bandwidth_dmi}]


def _cmg_cell(link: LinkSpec, xs: Tuple[float, ...], z: float) -> List[Dict]:
    return relay_area_map(link, xs, [z]).to_frame().to_dict("records")


def _nearfield_cell(medium: Medium, f: float, kappa: float, distance: float) -> List[Dict]:
    tx = CoilSpec().retuned(f)
    rx = CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS).retuned(f)
    pose_tx = Pose(position=(0.0, 0.0, 0.0), axis=(1.0, 0.0, 0.0))
    pose_rx = Pose(position=(distance, 0.0, 0.0), axis=(1.0, 0.0, 0.0))
    near = channel_gain(tx, rx, pose_tx, pose_rx, medium, f, kappa=kappa).total
    mixed = mixed_field_gain(tx, rx, pose_tx, pose_rx, medium, f)
    return [{
        'medium': medium.name,
        'frequency_hz': f,
        'boundary_m': near_field_boundary(f, medium, kappa),
        'skin_depth_m': skin_depth(f, medium),
        'distance_m': distance,
        'gain_near_field': near,
        'gain_mixed_field': mixed,
    }]


class FigureAnalyzer:
    """シナリオに対する掃引と図の再現プリセット"""

    def __init__(self, scenario: Optional[Scenario] = None, seed: int = DEFAULT_SEED,
                 jobs: int = 1, mc_samples: int = 100_000, kappa: float = 1.0, skin_mode: str = "exact"):
        """
        Args:
            scenario: シナリオ (省略時は既定シナリオ)
            seed: マスターシード
            jobs: ワーカー数
            mc_samples: モンテカルロのサンプル数
            kappa: 近傍界境界のしきい値
            skin_mode: 表皮深さの計算モード ("exact" / "vlf")
        """
        self.scenario = scenario or Scenario.default()
        self.seed = seed
        self.jobs = jobs
        self.mc_samples = mc_samples
        self.kappa = kappa
        self.skin_mode = skin_mode

    @property
    def link(self) -> LinkSpec:
        """シナリオの主リンク"""
        return scenario_link(self.scenario)

    def sweep(self, axis: str, grid: Sequence[float]) -> pd.DataFrame:
        """
        主リンクの SNR・容量を1軸で掃引

        Args:
            axis: "distance" / "frequency" / "sigma"
            grid: 掃引値

        Returns:
            表 (軸の列, bandwidth_hz, snr, snr_db, capacity_bps)
        """
        if axis not in SWEEP_AXES:
            raise UsageError(f"未知の掃引軸です: {axis} ({', '.join(SWEEP_AXES)})")
        grid = check_grid(grid, axis)
        link = self.link
        rows = run_cells(_sweep_cell, [(link, axis, value) for value in grid], self.jobs)
        logger.info(f"掃引完了: {axis} × {len(grid)} 点")
        return pd.DataFrame(rows)

    def figure(self, name: str, **options) -> Dict[str, pd.DataFrame]:
        """
        図の再現プリセットを実行

        Args:
            name: プリセット名 (FIGURE_PRESETS)
            **options: プリセット固有の値 (threshold, varsigma など)

        Returns:
            表の名前 → 表
        """
        presets = {
            "capacity": self.fig_capacity,
            "range": self.fig_range,
            "fading": self.fig_fading,
            "ber": self.fig_ber,
            "crosstalk": self.fig_crosstalk,
            "cmi-bw": self.fig_cmi_bw,
            "cmg": self.fig_cmg,
            "ej": self.fig_ej,
            "nearfield": self.fig_nearfield,
        }
        if name not in presets:
            raise UsageError(f"未知のプリセットです: {name} ({', '.join(FIGURE_PRESETS)})")
        options = {k: v for k, v in options.items() if v is not None}
        logger.info(f"プリセット {name} を実行します")
        return presets[name](**options)

    def fig_capacity(self, distances: Sequence[float] = tuple(np.linspace(5.0, 200.0, 40)),
                     frequencies: Sequence[float] = (1e3, 1e4, 1e6), **_) -> Dict[str, pd.DataFrame]:
        """媒質 {空気, σ=0.01, σ=4.8} × 周波数ごとの容量-距離曲線"""
        distances = check_grid(distances, "distances")
        media = [Medium.air(), self.scenario.medium.with_sigma(0.01), self.scenario.medium.with_sigma(4.8)]
        cells = [(self.link, medium, f, distances) for medium in media for f in check_grid(frequencies, "frequencies")]
        return {'fig_capacity': pd.DataFrame(run_cells(_capacity_cell, cells, self.jobs))}

    def fig_range(self, threshold: Optional[float] = None,
                  frequencies: Sequence[float] = (1e3, 5e3, 1e4, 5e4, 1e5), **_) -> Dict[str, pd.DataFrame]:
        """乾燥・湿潤土壌での通信距離-周波数 (しきい値の指定が必須)"""
        if threshold is None:
            raise UsageError("range プリセットには --threshold が必要です")
        media = [Medium.dry_soil(), Medium.wet_soil()]
        cells = [(self.link, medium, f, float(threshold))
                 for medium in media for f in check_grid(frequencies, "frequencies")]
        return {'fig_range': pd.DataFrame(run_cells(_range_cell, cells, self.jobs))}

    def fig_fading(self, varsigma: Optional[float] = None,
                   sigmas: Sequence[float] = tuple(np.linspace(0.05, 1.0, 20)),
                   snr: float = 10.0, outage_threshold: float = 1.0, ebn0: float = 10.0,
                   **_) -> Dict[str, pd.DataFrame]:
        """振動強度 σ_D に対する E[J]・エルゴード容量・アウテージ・BER (ς の指定が必須)"""
        if varsigma is None:
            raise UsageError("fading プリセットには --varsigma が必要です")
        cells = [(s, float(varsigma), snr, outage_threshold, ebn0) for s in check_grid(sigmas, "sigmas")]
        return {'fig_fading': pd.DataFrame(run_cells(_fading_cell, cells, self.jobs))}

    def fig_ber(self, varsigma: float = 0.8, sigmas: Sequence[float] = (0.2, 0.6, 1.0),
                ebn0_db: Sequence[float] = tuple(np.arange(0.0, 13.0, 1.0)), **_) -> Dict[str, pd.DataFrame]:
        """BPSK の BER 曲線 (解析とビット単位シミュレーション)"""
        ebn0_db = check_grid(ebn0_db, "ebn0_db")
        cells = [(s, varsigma, ebn0_db, self.seed, i, self.mc_samples)
                 for i, s in enumerate(check_grid(sigmas, "sigmas"))]
        return {'fig_ber': pd.DataFrame(run_cells(_ber_cell, cells, self.jobs))}

    def fig_crosstalk(self, distances: Sequence[float] = tuple(np.linspace(2.0, 60.0, 30)),
                      height: float = 1.5, frequencies: Sequence[float] = (1e4, 1e6),
                      **_) -> Dict[str, pd.DataFrame]:
        """リレー経路上の受動リレーによる利得比"""
        coil = CoilSpec(radius=RX_COIL_RADIUS, turns=RX_COIL_TURNS)
        cells = [(coil, self.scenario.medium, f, d, height)
                 for f in check_grid(frequencies, "frequencies") for d in check_grid(distances, "distances")]
        return {'fig_crosstalk': pd.DataFrame(run_cells(_crosstalk_cell, cells, self.jobs))}

    def fig_cmi_bw(self, distances: Sequence[float] = tuple(np.linspace(10.0, 100.0, 10)),
                   height: float = 2.0, **_) -> Dict[str, pd.DataFrame]:
        """中点上方のリレーを使う協調リンクと直接リンクの帯域幅"""
        cells = [(self.link, d, height) for d in check_grid(distances, "distances")]
        return {'fig_cmi_bw': pd.DataFrame(run_cells(_cmi_bw_cell, cells, self.jobs))}

    def fig_cmg(self, xs: Sequence[float] = tuple(np.linspace(-20.0, 80.0, 26)),
                zs: Sequence[float] = tuple(np.linspace(-30.0, 30.0, 16)),
                rx_theta_deg: float = 30.0, **_) -> Dict[str, pd.DataFrame]:
        """リレー位置ごとの CMG マップ"""
        link = self.link.with_rx_theta(math.radians(rx_theta_deg))
        xs = check_grid(xs, "xs")
        cells = [(link, xs, z) for z in check_grid(zs, "zs")]
        return {'fig_cmg': pd.DataFrame(run_cells(_cmg_cell, cells, self.jobs))}

    def fig_ej(self, sigmas: Sequence[float] = tuple(np.linspace(0.05, 1.0, 20)),
               varsigmas: Sequence[float] = tuple(np.linspace(0.1, 1.0, 10)), **_) -> Dict[str, pd.DataFrame]:
        """(σ, ς) 平面での E[J] (積分と閉形式)"""
        rows = []
        for s in check_grid(sigmas, "sigmas"):
            for v in check_grid(varsigmas, "varsigmas"):
                spec = BcsSpec(sigma=s, varsigma=v)
                rows.append({
                    'sigma': s,
                    'varsigma': v,
                    'expected_j': bcs_expectation(spec, "integral"),
                    'expected_j_closed_form': bcs_expectation(spec, "closed_form"),
                })
        return {'fig_ej': pd.DataFrame(rows)}

    def fig_nearfield(self, frequencies: Sequence[float] = tuple(np.geomspace(1e2, 1e7, 26)),
                      distance: float = 10.0, kappa: Optional[float] = None, **_) -> Dict[str, pd.DataFrame]:
        """媒質ごとの近傍界境界と、近傍界近似・全磁界の利得"""
        kappa = kappa if kappa is not None else self.kappa
        media = [Medium.air(), Medium.dry_soil(), Medium.wet_soil(), Medium.sea_water()]
        cells = [(medium, f, kappa, distance) for medium in media for f in check_grid(frequencies, "frequencies")]
        return {'fig_nearfield': pd.DataFrame(run_cells(_nearfield_cell, cells, self.jobs))}

    def export_report(self, link: Optional[LinkSpec] = None, threshold: Optional[float] = None) -> str:
        """
        リンクバジェットをテキスト形式でエクスポート

        Args:
            link: リンク (省略時は主リンク)
            threshold: 通信距離を求めるSNRしきい値 (省略時はシナリオの値)

        Returns:
            レポートテキスト
        """
        link = link or self.link
        threshold = threshold if threshold is not None else self.scenario.snr_threshold
        f0 = link.frequency
        gain = channel_gain(link.tx, link.rx, link.pose_tx, link.pose_rx, link.medium, f0,
                            kappa=self.kappa, skin_mode=self.skin_mode)
        numeric = bandwidth_numeric(link, self.skin_mode)
        value = snr(link, skin_mode=self.skin_mode)

        report_lines = [
            "=" * 50,
            "MIリンクバジェット",
            "=" * 50,
            "",
            "【リンク諸元】",
            f"  距離: {link.distance:.6g} m",
            f"  周波数: {f0:.6g} Hz",
            f"  媒質: {link.medium.name or '-'} (σ={link.medium.sigma:.6g} S/m)",
            f"  送信電力: {link.tx_power:.6g} W",
            "",
            "【利得の内訳】",
            f"  回路利得 𝒞: {gain.circuit:.6g}",
            f"  空間利得 𝒮: {gain.space:.6g}",
            f"  渦電流利得 ℰ: {gain.eddy:.6g}",
            f"  偏波利得 J: {gain.polarization:.6g}",
            f"  合計 G: {gain.total:.6g} ({10 * math.log10(gain.total) if gain.total > 0 else -math.inf:.2f} dB)",
            f"  近傍界: {'OK' if gain.near_field_valid else '範囲外'} / 弱結合: "
            f"{'OK' if gain.weak_coupling_valid else '満たさない'}",
            "",
            "【帯域幅】",
            f"  数値 (半値点): {numeric.value:.6g} Hz [{numeric.f_lo:.6g}, {numeric.f_hi:.6g}]",
        ]
        for label, estimate in (("閉形式", bandwidth_dipole_closed), ("Q値", link_bandwidth_coupling)):
            try:
                report_lines.append(f"  {label}: {estimate(link).value:.6g} Hz")
            except MicError as e:
                report_lines.append(f"  {label}: - ({e})")

        report_lines += [
            "",
            "【SNR・容量】",
            f"  送信PSD: {resolve_tx_psd(link):.6g} W/Hz",
            f"  SNR: {value:.6g} ({10 * math.log10(value) if value > 0 else -math.inf:.2f} dB)",
            f"  容量 (平坦): {capacity(link, 'flat'):.6g} bit/s",
            f"  容量 (積分): {capacity(link, 'integral'):.6g} bit/s",
            "",
            "【通信距離】",
        ]
        try:
            result = mic_range(link, threshold, self.skin_mode)
            suffix = " (探索上限)" if result.capped else ""
            report_lines.append(f"  Υ_th={threshold:.6g}: {result.distance:.6g} m{suffix}")
        except MicError as e:
            report_lines.append(f"  Υ_th={threshold:.6g}: - ({e})")

        report_lines.append("")
        report_lines.append("=" * 50)
        return "\n".join(report_lines)
