"""非協力ゲームによる送信電力配分 (最適応答の反復)"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import optimize

from src.channel.antennas import CoilSpec
from src.core.errors import DomainError
from src.fading.metrics import ergodic_capacity
from src.fading.models import FadingKind
from src.link.metrics import gain_response
from .graph import pair_link
from .models import Node, PowerAllocationResult, Scenario

logger = logging.getLogger(__name__)

# 同期 (ヤコビ) 反復の減衰係数
DAMPING = 0.5


@dataclass
class _Game:
    """送受信ペアごとの利得・帯域幅"""

    transmitters: List[Node]
    gains: np.ndarray  # gains[j, i]: 送信 j から受信 dest(i) への電力利得
    bandwidths: np.ndarray  # 受信側の3dB帯域幅 (Hz)
    noise: np.ndarray  # 受信側の雑音電力密度 (W/Hz)

    def interference(self, powers: np.ndarray, i: int) -> float:
        """受信 dest(i) での雑音+干渉電力 N_of·B + Σ_{j≠i} p_j G_ji"""
        others = sum(powers[j] * self.gains[j, i] for j in range(len(powers)) if j != i)
        return self.noise[i] * self.bandwidths[i] + others

    def sinr(self, powers: np.ndarray, i: int) -> float:
        return powers[i] * self.gains[i, i] / self.interference(powers, i)


def _frequency_of(node: Node, scenario: Scenario) -> float:
    if isinstance(node.antenna, CoilSpec):
        return node.antenna.tuned_frequency
    return scenario.frequency_set[0]


def _build_game(scenario: Scenario) -> _Game:
    transmitters = [node for node in scenario.nodes if node.destination is not None]
    if not transmitters:
        raise DomainError("destination を持つ送信ノードがありません")
    n = len(transmitters)
    gains = np.zeros((n, n))
    bandwidths = np.zeros(n)
    noise = np.zeros(n)
    for i, owner in enumerate(transmitters):
        receiver = scenario.node(owner.destination)
        f = _frequency_of(owner, scenario)
        for j, tx in enumerate(transmitters):
            if tx.id == receiver.id:
                continue
            gains[j, i] = gain_response(pair_link(scenario, tx, receiver, f), f)
        own = pair_link(scenario, owner, receiver, f)
        bandwidths[i] = own.tx_power / own.tx_psd
        noise[i] = receiver.noise_psd
    return _Game(transmitters=transmitters, gains=gains, bandwidths=bandwidths, noise=noise)


def _utility(game: _Game, powers: np.ndarray, i: int, weight: float) -> float:
    """u_i = B·log2(1 + SINR_i) − w·p_i"""
    return game.bandwidths[i] * math.log2(1 + game.sinr(powers, i)) - weight * powers[i]


def _best_response(game: _Game, powers: np.ndarray, i: int, weight: float, p_max: float) -> float:
    """準静的な効用の最適応答 clamp(B/(w ln2) − I/G_ii, 0, p_max)"""
    if weight == 0:
        return p_max
    level = game.bandwidths[i] / (weight * math.log(2)) - game.interference(powers, i) / game.gains[i, i]
    return min(max(level, 0.0), p_max)


def _expected_utility(game: _Game, scenario: Scenario, powers: np.ndarray, i: int, weight: float) -> float:
    """フェージング平均した効用 B·E[log2(1 + SINR·X)] − w·p_i"""
    mean = game.sinr(powers, i)
    if mean == 0:
        return 0.0 - weight * powers[i]
    capacity = ergodic_capacity(scenario.fading, mean).value
    return game.bandwidths[i] * capacity - weight * powers[i]


def _fading_best_response(
    game: _Game,
    scenario: Scenario,
    powers: np.ndarray,
    i: int,
    weight: float,
    p_max: float
) -> float:
    def negative(p: float) -> float:
        trial = powers.copy()
        trial[i] = p
        return -_expected_utility(game, scenario, trial, i, weight)

    result = optimize.minimize_scalar(negative, bounds=(0.0, p_max), method="bounded",
                                      options={'xatol': 1e-10 * max(p_max, 1.0)})
    return float(result.x)


def power_allocation_br(
    scenario: Scenario,
    weight: float,
    max_iters: int = 100,
    tol: float = 1e-9,
    p_max: Optional[float] = None,
    fading_aware: bool = False
) -> PowerAllocationResult:
    """
    最適応答の同期反復による電力配分

    各送信ノード i の効用 u_i = B_i·log2(1 + SINR_i) − w·p_i を、他ノードの電力を固定して
    最大化する。更新は減衰係数 0.5 で最適応答に近づける。fading_aware=True では
    シナリオのフェージングモデルで平均した容量を有界スカラー探索で最大化する。

    Args:
        scenario: destination を持つノードが送信者となるシナリオ
        weight: 電力コストの重み w
        max_iters: 最大反復回数
        tol: 収束判定 (電力変化の最大値, W)
        p_max: 電力上限 (省略時は各ノードの tx_power)
        fading_aware: フェージング平均の効用を使う

    Returns:
        電力・効用・反復記録・収束状態
    """
    if weight < 0:
        raise DomainError(f"weight は0以上が必要です (値: {weight})")
    if max_iters < 1:
        raise DomainError(f"max_iters は1以上が必要です (値: {max_iters})")
    game = _build_game(scenario)
    n = len(game.transmitters)
    limits = np.array([p_max if p_max is not None else node.tx_power for node in game.transmitters])
    powers = limits.copy()
    use_fading = fading_aware and scenario.fading.kind is not FadingKind.NONE

    def utility(p: np.ndarray, i: int) -> float:
        if use_fading:
            return _expected_utility(game, scenario, p, i, weight)
        return _utility(game, p, i, weight)

    trace = []
    status = "max_iters"
    iteration = 0
    for iteration in range(1, max_iters + 1):
        updated = powers.copy()
        for i in range(n):
            if use_fading:
                target = _fading_best_response(game, scenario, powers, i, weight, limits[i])
            else:
                target = _best_response(game, powers, i, weight, limits[i])
            updated[i] = powers[i] + DAMPING * (target - powers[i])
            unilateral = powers.copy()
            unilateral[i] = updated[i]
            trace.append({
                'iteration': iteration,
                'node': game.transmitters[i].id,
                'power_before': float(powers[i]),
                'power_after': float(updated[i]),
                'utility_before': utility(powers, i),
                'utility_after': utility(unilateral, i),
            })
        change = float(np.max(np.abs(updated - powers)))
        powers = updated
        if change < tol:
            status = "converged"
            break

    if status == "converged":
        logger.info(f"最適応答が収束しました ({iteration} 回)")
    else:
        logger.warning(f"最適応答が {max_iters} 回で収束しませんでした")
    return PowerAllocationResult(
        node_ids=[node.id for node in game.transmitters],
        powers=[float(p) for p in powers],
        utilities=[utility(powers, i) for i in range(n)],
        trace=trace,
        status=status,
        iterations=iteration,
    )
