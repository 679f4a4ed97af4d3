"""周波数ごとの接続グラフ・周波数切り替え経路・孤立確率・導波路リレー配置"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from src.channel.antennas import CoilSpec, Pose
from src.core.errors import DomainError
from src.link.metrics import circuit_bandwidth, gain_response
from src.link.models import LinkSpec
from .models import IsolationResult, Node, PathResult, Scenario

logger = logging.getLogger(__name__)


def _retuned(antenna, f: float):
    return antenna.retuned(f) if isinstance(antenna, CoilSpec) else antenna


def _oriented_poses(mode: str, tx: Node, rx: Node) -> Tuple[Pose, Pose]:
    """向きのモードに応じた送受信の姿勢"""
    if mode in ("fixed", "random"):
        return tx.pose, rx.pose
    delta = rx.pose.position_array - tx.pose.position_array
    r_hat = delta / np.linalg.norm(delta)
    if mode == "coaxial":
        return Pose.normalized(tx.pose.position, r_hat), Pose.normalized(rx.pose.position, r_hat)
    # optimal_rx: 受信軸を送信磁界の向きにそろえる (J = 1 + 3cos²θ)
    n_s = tx.pose.axis_array
    field = 3 * r_hat * (n_s @ r_hat) - n_s
    return tx.pose, Pose.normalized(rx.pose.position, field)


def pair_link(scenario: Scenario, tx: Node, rx: Node, f: float) -> LinkSpec:
    """
    2ノード間のリンク (送信PSDは回路利得の3dB帯域幅で P_S を割った値)

    Args:
        scenario: シナリオ
        tx: 送信ノード
        rx: 受信ノード (コイル)
        f: 周波数 (Hz)

    Returns:
        リンク
    """
    if not rx.can_receive:
        raise DomainError(f"ノード {rx.id} は受信できません")
    tx_antenna = _retuned(tx.antenna, f)
    rx_antenna = rx.antenna.retuned(f)
    pose_tx, pose_rx = _oriented_poses(scenario.orientation_mode, tx, rx)
    bandwidth = circuit_bandwidth(tx_antenna, rx_antenna).value
    return LinkSpec(
        tx=tx_antenna, rx=rx_antenna, pose_tx=pose_tx, pose_rx=pose_rx,
        medium=scenario.medium, tx_power=tx.tx_power, noise_psd=rx.noise_psd,
        tx_psd=tx.tx_power / bandwidth, fading=scenario.fading,
    )


def link_graph(scenario: Scenario, f: float) -> nx.DiGraph:
    """
    周波数 f での接続グラフ

    SNR が Υ_th 以上の有向辺に容量 B·log2(1 + SNR) を付ける。

    Args:
        scenario: シナリオ
        f: 周波数 (Hz)

    Returns:
        有向グラフ (辺属性 snr, capacity, bandwidth, frequency)
    """
    graph = nx.DiGraph(frequency=f)
    graph.add_nodes_from(scenario.node_ids)
    for tx in scenario.nodes:
        for rx in scenario.nodes:
            if tx.id == rx.id or not rx.can_receive:
                continue
            link = pair_link(scenario, tx, rx, f)
            value = link.tx_psd * gain_response(link, f) / link.noise_psd
            if value >= scenario.snr_threshold:
                bandwidth = link.tx_power / link.tx_psd
                graph.add_edge(
                    tx.id, rx.id, snr=value, bandwidth=bandwidth,
                    capacity=bandwidth * math.log2(1 + value), frequency=f,
                )
    logger.debug(f"接続グラフ: f={f:.6g} Hz, 辺 {graph.number_of_edges()} 本")
    return graph


def best_hop_graph(scenario: Scenario) -> nx.DiGraph:
    """各ホップで容量が最大の周波数を選んだ合成グラフ (同容量なら低い周波数)"""
    combined = nx.DiGraph()
    combined.add_nodes_from(scenario.node_ids)
    for f in sorted(scenario.frequency_set):
        for u, v, data in link_graph(scenario, f).edges(data=True):
            if not combined.has_edge(u, v) or data['capacity'] > combined[u][v]['capacity']:
                combined.add_edge(u, v, capacity=data['capacity'], frequency=f)
    return combined


def best_path(scenario: Scenario, src: str, dst: str) -> PathResult:
    """
    ボトルネック容量が最大の経路 (各ホップで周波数を独立に選ぶ)

    同じボトルネックの経路の中ではホップ数が少なく、id の並びが辞書順で小さいものを選ぶ。

    Args:
        scenario: シナリオ
        src: 始点の id
        dst: 終点の id

    Returns:
        経路 (到達不能なら reachable=False)
    """
    scenario.node(src)
    scenario.node(dst)
    if src == dst:
        return PathResult(source=src, destination=dst, nodes=(src,))

    combined = best_hop_graph(scenario)
    capacities = sorted({data['capacity'] for _, _, data in combined.edges(data=True)}, reverse=True)
    for level in capacities:
        usable = nx.DiGraph()
        usable.add_nodes_from(combined.nodes)
        usable.add_edges_from(
            (u, v) for u, v, data in combined.edges(data=True) if data['capacity'] >= level
        )
        if nx.has_path(usable, src, dst):
            nodes = min(nx.all_shortest_paths(usable, src, dst))
            hops = list(zip(nodes[:-1], nodes[1:]))
            result = PathResult(
                source=src, destination=dst, nodes=tuple(nodes),
                frequencies=tuple(combined[u][v]['frequency'] for u, v in hops),
                capacities=tuple(combined[u][v]['capacity'] for u, v in hops),
            )
            logger.info(f"経路 {' → '.join(nodes)}: ボトルネック {result.bottleneck:.4g} bit/s")
            return result

    logger.info(f"{src} から {dst} への経路はありません")
    return PathResult(source=src, destination=dst, reachable=False)


def _random_axis(rng: np.random.Generator) -> np.ndarray:
    vec = rng.normal(size=3)
    return vec / np.linalg.norm(vec)


def _placed(template: Node, node_id: str, position, axis) -> Node:
    return replace(template, id=node_id, destination=None, pose=Pose.normalized(tuple(position), axis))


def isolation_probability(
    scenario: Scenario,
    density: float,
    side: float,
    trials: int,
    seed: int,
    orientation: str = "random",
    frequency: Optional[float] = None
) -> IsolationResult:
    """
    中心ノードが孤立する確率のモンテカルロ推定

    一辺 side の立方体にポアソン点過程でノードを置き、中心ノードに出入りする辺が
    1本もなければ孤立とみなす。到着は累積の指数分布間隔で生成するため、同じ seed なら
    密度の高い試行は低い試行のノードを含む。

    Args:
        scenario: 雛形 (先頭ノードのアンテナ・電力・雑音、媒質、しきい値を使う)
        density: ノード密度 (個/m³)
        side: 立方体の一辺 (m)
        trials: 試行回数
        seed: 乱数シード
        orientation: "random" (一様な向き) / "coaxial" (常に同軸) / "fixed" (雛形の向き)
        frequency: 周波数 (省略時は frequency_set の先頭)

    Returns:
        孤立確率と標準誤差
    """
    if trials < 1:
        raise DomainError(f"trials は1以上が必要です (値: {trials})")
    if density < 0:
        raise DomainError(f"density は0以上が必要です (値: {density})")
    if not side > 0:
        raise DomainError(f"side は正の値が必要です (値: {side})")
    if orientation not in ("random", "coaxial", "fixed"):
        raise DomainError(f"未知の向きモデルです: {orientation}")

    template = scenario.nodes[0]
    f = frequency if frequency is not None else scenario.frequency_set[0]
    mode = "coaxial" if orientation == "coaxial" else "fixed"
    expected = density * side ** 3
    center = np.full(3, side / 2)

    isolated = 0
    for trial in range(trials):
        rng = np.random.default_rng([seed, trial])
        center_axis = _random_axis(rng)
        if orientation != "random":
            center_axis = template.pose.axis_array
        nodes = [_placed(template, "center", center, center_axis)]
        arrival = rng.exponential()
        while arrival <= expected:
            position = rng.uniform(0.0, side, size=3)
            axis = _random_axis(rng)
            if orientation != "random":
                axis = template.pose.axis_array
            nodes.append(_placed(template, f"n{len(nodes)}", position, axis))
            arrival += rng.exponential()
        trial_scenario = replace(scenario, nodes=tuple(nodes), orientation_mode=mode)
        if not _has_incident_edge(trial_scenario, nodes[0], f):
            isolated += 1

    p = isolated / trials
    std = math.sqrt(p * (1 - p) / trials)
    logger.info(f"孤立確率: {p:.4g} ± {std:.2g} (密度 {density:g} /m³, {trials} 試行)")
    return IsolationResult(probability=p, std=std, trials=trials, density=density)


def _has_incident_edge(scenario: Scenario, center: Node, f: float) -> bool:
    for other in scenario.nodes[1:]:
        if np.allclose(other.pose.position_array, center.pose.position_array):
            continue
        for tx, rx in ((center, other), (other, center)):
            link = pair_link(scenario, tx, rx, f)
            if link.tx_psd * gain_response(link, f) / link.noise_psd >= scenario.snr_threshold:
                return True
    return False


@dataclass(frozen=True)
class RelayPlan:
    """導波路リレーの配置計画"""

    tree_edges: List[Tuple[str, str, float]]  # 最小全域木の辺 (u, v, 長さ m)
    tree_relays: int  # 最小全域木に沿って必要なリレー数
    tree_length: float  # 最小全域木の総延長 (m)
    star_relays: int  # シンクへの星形配置で必要なリレー数
    star_length: float  # 星形配置の総延長 (m)


def _relays_for(length: float, spacing: float) -> int:
    return max(math.ceil(length / spacing) - 1, 0)


def plan_waveguide_relays(positions: Dict[str, Sequence[float]], sink: str, spacing: float) -> RelayPlan:
    """
    センサ位置を最小全域木で結び、辺ごとに ⌈長さ/間隔⌉ − 1 個のリレーを置く

    Args:
        positions: ノード id → 位置 (m)
        sink: シンクの id (星形配置の比較用)
        spacing: リレー間隔 (m)

    Returns:
        配置計画
    """
    if sink not in positions:
        raise DomainError(f"未知のシンクです: {sink}")
    if not spacing > 0:
        raise DomainError(f"spacing は正の値が必要です (値: {spacing})")
    complete = nx.Graph()
    ids = sorted(positions)
    complete.add_nodes_from(ids)
    for i, u in enumerate(ids):
        for v in ids[i + 1:]:
            length = float(np.linalg.norm(np.subtract(positions[u], positions[v])))
            complete.add_edge(u, v, weight=length)

    tree = nx.minimum_spanning_tree(complete)
    edges = sorted((min(u, v), max(u, v), data['weight']) for u, v, data in tree.edges(data=True))
    star = [complete[sink][v]['weight'] for v in ids if v != sink]
    plan = RelayPlan(
        tree_edges=edges,
        tree_relays=sum(_relays_for(length, spacing) for _, _, length in edges),
        tree_length=sum(length for _, _, length in edges),
        star_relays=sum(_relays_for(length, spacing) for length in star),
        star_length=sum(star),
    )
    logger.info(f"リレー数: 最小全域木 {plan.tree_relays} 個, 星形 {plan.star_relays} 個")
    return plan
