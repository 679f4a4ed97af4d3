"""ネットワーク層 (接続グラフ・経路・孤立確率・リレー配置・電力配分) のテスト"""

import math
from dataclasses import replace

import networkx as nx
import numpy as np
import pytest
from scipy import optimize

from src.channel.antennas import CoilSpec, Pose, RpmaSpec
from src.channel.medium import Medium
from src.core.errors import DomainError
from src.link.metrics import gain_response
from src.network.graph import (
    best_hop_graph,
    best_path,
    isolation_probability,
    link_graph,
    pair_link,
    plan_waveguide_relays,
)
from src.network.models import Node, PathResult, Scenario
from src.network.power import power_allocation_br


def _coil_node(node_id: str, position, axis=(1.0, 0.0, 0.0), destination=None) -> Node:
    return Node(
        id=node_id,
        antenna=CoilSpec(radius=0.4, turns=30),
        pose=Pose.normalized(position, axis),
        destination=destination,
    )


def _random_scenario(rng: np.random.Generator, count: int = 6) -> Scenario:
    nodes = [
        _coil_node(f"n{k}", tuple(rng.uniform(0.0, 60.0, size=3)), tuple(rng.normal(size=3)))
        for k in range(count)
    ]
    return Scenario(nodes=tuple(nodes), frequency_set=(1e3, 1e4), snr_threshold=1.0)


def _exhaustive_bottleneck(scenario: Scenario, src: str, dst: str) -> float:
    """全経路 × 全周波数割り当てを列挙したボトルネック容量の最大値"""
    graphs = [link_graph(scenario, f) for f in scenario.frequency_set]
    complete = nx.complete_graph(scenario.node_ids, create_using=nx.DiGraph)
    best = 0.0
    for path in nx.all_simple_paths(complete, src, dst):
        hops = []
        for u, v in zip(path[:-1], path[1:]):
            options = [g[u][v]['capacity'] for g in graphs if g.has_edge(u, v)]
            if not options:
                break
            hops.append(max(options))
        else:
            best = max(best, min(hops))
    return best


class TestScenario:
    """Scenarioクラスのテスト"""

    def test_default(self):
        """既定シナリオは S→D の2ノード"""
        scenario = Scenario.default()

        assert scenario.node_ids == ["S", "D"]
        assert scenario.node("S").destination == "D"

    def test_duplicate_ids(self):
        """id の重複はエラー"""
        node = _coil_node("a", (0.0, 0.0, 0.0))
        with pytest.raises(DomainError, match="重複"):
            Scenario(nodes=(node, replace(node, pose=Pose((1.0, 0.0, 0.0)))))

    def test_unknown_destination(self):
        """未知の destination はエラー"""
        with pytest.raises(DomainError, match="destination"):
            Scenario(nodes=(_coil_node("a", (0.0, 0.0, 0.0), destination="z"),))

    def test_invalid_orientation(self):
        """未知の向きモードはエラー"""
        with pytest.raises(DomainError, match="orientation_mode"):
            replace(Scenario.default(), orientation_mode="spin")

    def test_rpma_cannot_receive(self):
        """RPMAのノードは受信できない"""
        rpma = Node(id="r", antenna=RpmaSpec(), pose=Pose())
        scenario = Scenario(nodes=(_coil_node("a", (5.0, 0.0, 0.0)), rpma))

        assert not rpma.can_receive
        with pytest.raises(DomainError):
            pair_link(scenario, scenario.node("a"), rpma, 1e3)


class TestLinkGraph:
    """接続グラフのテスト"""

    def test_edge_attributes(self):
        """辺の容量は B·log2(1 + SNR)"""
        scenario = Scenario.default()
        graph = link_graph(scenario, 1e4)
        data = graph["S"]["D"]

        assert data['capacity'] == pytest.approx(data['bandwidth'] * math.log2(1 + data['snr']))
        assert data['snr'] >= scenario.snr_threshold

    def test_threshold(self):
        """しきい値を下回る辺は作らない"""
        scenario = replace(Scenario.default(), snr_threshold=1e6)

        assert link_graph(scenario, 1e4).number_of_edges() == 0

    def test_optimal_rx_improves(self):
        """optimal_rx では受信軸を磁界にそろえるため SNR が下がらない"""
        scenario = Scenario(nodes=(
            _coil_node("a", (0.0, 0.0, 0.0), axis=(1.0, 1.0, 0.0)),
            _coil_node("b", (20.0, 0.0, 0.0), axis=(0.0, 1.0, 1.0)),
        ), snr_threshold=1e-30)
        fixed = link_graph(scenario, 1e4)["a"]["b"]['snr']
        optimal = link_graph(replace(scenario, orientation_mode="optimal_rx"), 1e4)["a"]["b"]['snr']

        assert optimal > fixed

    def test_best_hop_graph(self):
        """各ホップで容量が最大の周波数を選ぶ"""
        scenario = replace(Scenario.default(), frequency_set=(1e3, 1e4), snr_threshold=1e-6)
        combined = best_hop_graph(scenario)
        capacities = {f: link_graph(scenario, f)["S"]["D"]['capacity'] for f in (1e3, 1e4)}

        assert combined["S"]["D"]['capacity'] == max(capacities.values())
        assert combined["S"]["D"]['frequency'] == max(capacities, key=capacities.get)


class TestBestPath:
    """周波数切り替え経路のテスト"""

    def test_frequency_switching(self):
        """短いホップは高い周波数、長いホップは低い周波数を使う"""
        scenario = Scenario(nodes=(
            _coil_node("S", (0.0, 0.0, 0.0)),
            _coil_node("A", (5.0, 0.0, 0.0)),
            _coil_node("D", (65.0, 0.0, 0.0)),
        ), frequency_set=(1e4, 1e5), snr_threshold=0.1)
        result = best_path(scenario, "S", "D")

        assert result.nodes == ("S", "A", "D")
        assert result.frequencies == (1e5, 1e4)
        assert result.bottleneck == pytest.approx(_exhaustive_bottleneck(scenario, "S", "D"))

    @pytest.mark.parametrize("case", range(50))
    def test_matches_exhaustive(self, case):
        """ランダムな6ノードで全列挙と一致"""
        scenario = _random_scenario(np.random.default_rng([7, case]))
        result = best_path(scenario, "n0", "n5")
        expected = _exhaustive_bottleneck(scenario, "n0", "n5")

        if expected == 0.0:
            assert not result.reachable
        else:
            assert result.reachable
            assert result.bottleneck == pytest.approx(expected)

    def test_same_node(self):
        """始点と終点が同じなら容量は無限大"""
        result = best_path(Scenario.default(), "S", "S")

        assert result.nodes == ("S",)
        assert result.bottleneck == math.inf

    def test_unreachable(self):
        """辺がなければ到達不能"""
        scenario = replace(Scenario.default(), snr_threshold=1e9)
        result = best_path(scenario, "S", "D")

        assert not result.reachable
        assert result.bottleneck == 0.0

    def test_unknown_node(self):
        """未知のノードはエラー"""
        with pytest.raises(DomainError):
            best_path(Scenario.default(), "S", "X")

    def test_rows(self):
        """ホップごとの行"""
        result = PathResult(source="a", destination="c", nodes=("a", "b", "c"),
                            frequencies=(1e3, 1e4), capacities=(10.0, 20.0))

        assert result.hop_count == 2
        assert result.to_rows()[1] == {'hop': 1, 'from': 'b', 'to': 'c', 'frequency_hz': 1e4, 'capacity_bps': 20.0}


class TestIsolation:
    """孤立確率のテスト"""

    def test_empty(self):
        """密度0では必ず孤立"""
        result = isolation_probability(Scenario.default(), 0.0, 100.0, 5, seed=1)

        assert result.probability == 1.0
        assert result.std == 0.0

    def test_decreases_with_density(self):
        """同じシードでは密度が高いほど孤立しにくい"""
        scenario = Scenario.default()
        sparse = isolation_probability(scenario, 2e-6, 100.0, 20, seed=3, orientation="coaxial")
        dense = isolation_probability(scenario, 2e-5, 100.0, 20, seed=3, orientation="coaxial")

        assert dense.probability <= sparse.probability

    def test_reproducible(self):
        """同じシードなら同じ推定値"""
        scenario = Scenario.default()
        first = isolation_probability(scenario, 5e-6, 100.0, 10, seed=11)
        second = isolation_probability(scenario, 5e-6, 100.0, 10, seed=11)

        assert first == second

    def test_invalid(self):
        """引数の検証"""
        with pytest.raises(DomainError):
            isolation_probability(Scenario.default(), 1e-5, 100.0, 0, seed=1)
        with pytest.raises(DomainError):
            isolation_probability(Scenario.default(), 1e-5, 100.0, 5, seed=1, orientation="spin")


class TestRelayPlan:
    """導波路リレー配置のテスト"""

    def test_tree_and_star(self):
        """最小全域木は星形より少ないリレーで済む"""
        positions = {"A": (0.0, 0.0, 0.0), "B": (10.0, 0.0, 0.0), "C": (10.0, 10.0, 0.0)}
        plan = plan_waveguide_relays(positions, "A", 3.0)

        assert plan.tree_edges == [("A", "B", 10.0), ("B", "C", 10.0)]
        assert plan.tree_relays == 6
        assert plan.tree_length == pytest.approx(20.0)
        assert plan.star_relays == 7
        assert plan.star_length == pytest.approx(10.0 + math.sqrt(200.0))

    def test_unknown_sink(self):
        """未知のシンクはエラー"""
        with pytest.raises(DomainError):
            plan_waveguide_relays({"A": (0.0, 0.0, 0.0)}, "Z", 3.0)


class TestPowerAllocation:
    """最適応答による電力配分のテスト"""

    def test_single_transmitter_optimum(self):
        """送信者1人では効用のスカラー最大化と一致"""
        scenario = Scenario.default()
        weight = 200.0
        result = power_allocation_br(scenario, weight, max_iters=200, tol=1e-12)

        source, destination = scenario.node("S"), scenario.node("D")
        link = pair_link(scenario, source, destination, 1e4)
        gain = gain_response(link, 1e4)
        bandwidth = link.tx_power / link.tx_psd
        noise = destination.noise_psd * bandwidth

        def negative_utility(p):
            return -(bandwidth * math.log2(1 + p * gain / noise) - weight * p)

        oracle = optimize.minimize_scalar(negative_utility, bounds=(0.0, source.tx_power), method="bounded",
                                          options={'xatol': 1e-12})

        assert result.converged
        assert 0 < result.power_of("S") < source.tx_power
        assert result.power_of("S") == pytest.approx(oracle.x, rel=1e-6)

    def test_zero_weight(self):
        """重み0では最大電力"""
        result = power_allocation_br(Scenario.default(), 0.0)

        assert result.powers == [Scenario.default().node("S").tx_power]

    def test_trace_improves(self):
        """各ノードの更新は自分の効用を下げない"""
        scenario = Scenario(nodes=(
            _coil_node("S1", (0.0, 0.0, 0.0), destination="D1"),
            _coil_node("D1", (30.0, 0.0, 0.0)),
            _coil_node("S2", (0.0, 20.0, 0.0), destination="D2"),
            _coil_node("D2", (30.0, 20.0, 0.0)),
        ))
        result = power_allocation_br(scenario, 50.0)

        assert result.node_ids == ["S1", "S2"]
        for row in result.trace:
            assert row['utility_after'] >= row['utility_before'] - 1e-9 * abs(row['utility_before'])

    def test_fading_aware(self):
        """フェージングを考慮した配分も上限内に収まる"""
        from src.fading.models import BcsSpec, FadingModel

        scenario = replace(Scenario.default(), fading=FadingModel.bcs(rx=BcsSpec(sigma=0.5)))
        result = power_allocation_br(scenario, 200.0, max_iters=30, tol=1e-6, fading_aware=True)

        assert 0 <= result.power_of("S") <= scenario.node("S").tx_power

    def test_invalid(self):
        """重みと送信者の検証"""
        with pytest.raises(DomainError):
            power_allocation_br(Scenario.default(), -1.0)
        receivers = Scenario(nodes=(_coil_node("a", (0.0, 0.0, 0.0)),), medium=Medium.default())
        with pytest.raises(DomainError):
            power_allocation_br(receivers, 1.0)
