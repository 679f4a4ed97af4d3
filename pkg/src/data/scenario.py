"""シナリオファイル (JSON) の読み込みと書き出し"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from src.channel.antennas import CoilSpec, Pose, RpmaSpec
from src.channel.constants import RX_COIL_RADIUS, RX_COIL_TURNS, TX_COIL_RADIUS, TX_COIL_TURNS
from src.channel.medium import Medium
from src.core.errors import ConfigError, DomainError
from src.fading.models import BcsSpec, FadingKind, FadingModel
from src.link.models import LinkSpec
from src.network.models import SCHEMA_VERSION, Node, Scenario

logger = logging.getLogger(__name__)

_TOP_KEYS = ('schema_version', 'medium', 'nodes', 'frequency_set', 'snr_threshold', 'orientation_mode', 'fading')
_MEDIUM_KEYS = ('preset', 'mu', 'epsilon', 'sigma', 'name')
_NODE_KEYS = ('id', 'antenna', 'position', 'axis', 'tx_power', 'noise_psd', 'destination')
_COIL_KEYS = ('type', 'radius', 'turns', 'wire_resistance_per_m', 'wire_radius', 'load_resistance', 'tuned_frequency')
_RPMA_KEYS = (
    'type', 'remanence', 'volume', 'efficiency', 'friction_torque',
    'moment_of_inertia', 'ramp_time', 'friction_corner',
)
_FADING_KEYS = ('model', 'mode', 'tx', 'rx')
_BCS_KEYS = ('sigma', 'varsigma')


def _check_keys(data: Any, allowed: Sequence[str], path: str) -> Dict:
    if not isinstance(data, dict):
        raise ConfigError("オブジェクトが必要です", field=path or None)
    for key in data:
        if key not in allowed:
            raise ConfigError("未知のキーです", field=f"{path}.{key}" if path else key)
    return data


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"数値が必要です (値: {value!r})", field=path)
    return float(value)


def _vector(value: Any, path: str) -> tuple:
    if not isinstance(value, list) or len(value) != 3:
        raise ConfigError(f"長さ3の配列が必要です (値: {value!r})", field=path)
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(value))


def _located(error: DomainError, path: str, keys: Sequence[str]) -> ConfigError:
    """DomainError の "フィールド: 理由" を位置付きの ConfigError に変換"""
    message = str(error)
    head, sep, rest = message.partition(": ")
    if sep and head in keys:
        return ConfigError(rest, field=f"{path}.{head}" if path else head)
    return ConfigError(message, field=path or None)


def _build(factory, kwargs: Dict, path: str, keys: Sequence[str]):
    try:
        return factory(**kwargs)
    except DomainError as e:
        raise _located(e, path, keys) from e


def _numbers(data: Dict, keys: Sequence[str], path: str, integer: Sequence[str] = ()) -> Dict:
    values = {}
    for key in keys:
        if key not in data or key == 'type':
            continue
        value = _number(data[key], f"{path}.{key}")
        if key in integer:
            if not value.is_integer():
                raise ConfigError(f"整数が必要です (値: {data[key]!r})", field=f"{path}.{key}")
            value = int(value)
        values[key] = value
    return values


def _parse_medium(data: Any, path: str = "medium") -> Medium:
    data = _check_keys(data, _MEDIUM_KEYS, path)
    base = Medium.default()
    if 'preset' in data:
        try:
            base = Medium.preset(data['preset'])
        except DomainError as e:
            raise ConfigError(str(e), field=f"{path}.preset") from e
    values = base.to_dict()
    values.update(_numbers(data, ('mu', 'epsilon', 'sigma'), path))
    if 'name' in data:
        values['name'] = str(data['name'])
    return _build(Medium, values, path, _MEDIUM_KEYS)


def _parse_antenna(data: Any, path: str, transmitter: bool) -> Union[CoilSpec, RpmaSpec]:
    if data is None:
        data = {}
    kind = data.get('type', 'coil') if isinstance(data, dict) else None
    if kind == 'rpma':
        data = _check_keys(data, _RPMA_KEYS, path)
        return _build(RpmaSpec, _numbers(data, _RPMA_KEYS, path), path, _RPMA_KEYS)
    if kind != 'coil':
        raise ConfigError(f"'coil' または 'rpma' を指定してください (値: {kind!r})", field=f"{path}.type")
    data = _check_keys(data, _COIL_KEYS, path)
    values = {
        'radius': TX_COIL_RADIUS if transmitter else RX_COIL_RADIUS,
        'turns': TX_COIL_TURNS if transmitter else RX_COIL_TURNS,
    }
    values.update(_numbers(data, _COIL_KEYS, path, integer=('turns',)))
    return _build(CoilSpec, values, path, _COIL_KEYS)


def _parse_node(data: Any, index: int) -> Node:
    path = f"nodes[{index}]"
    data = _check_keys(data, _NODE_KEYS, path)
    for key in ('id', 'position'):
        if key not in data:
            raise ConfigError("必須のキーがありません", field=f"{path}.{key}")
    if not isinstance(data['id'], str):
        raise ConfigError(f"文字列が必要です (値: {data['id']!r})", field=f"{path}.id")
    destination = data.get('destination')
    if destination is not None and not isinstance(destination, str):
        raise ConfigError(f"文字列が必要です (値: {destination!r})", field=f"{path}.destination")

    antenna = _parse_antenna(data.get('antenna'), f"{path}.antenna", transmitter=index == 0)
    position = _vector(data['position'], f"{path}.position")
    axis = _vector(data.get('axis', [1.0, 0.0, 0.0]), f"{path}.axis")
    try:
        pose = Pose(position=position, axis=axis)
    except DomainError as e:
        raise _located(e, path, ('position', 'axis')) from e
    values = {'id': data['id'], 'antenna': antenna, 'pose': pose, 'destination': destination}
    values.update(_numbers(data, ('tx_power', 'noise_psd'), path))
    return _build(Node, values, path, _NODE_KEYS)


def _parse_bcs(data: Any, path: str) -> Optional[BcsSpec]:
    if data is None:
        return None
    data = _check_keys(data, _BCS_KEYS, path)
    if 'sigma' not in data:
        raise ConfigError("必須のキーがありません", field=f"{path}.sigma")
    return _build(BcsSpec, _numbers(data, _BCS_KEYS, path), path, _BCS_KEYS)


def _parse_fading(data: Any, path: str = "fading") -> FadingModel:
    data = _check_keys(data, _FADING_KEYS, path)
    try:
        kind = FadingKind(data.get('model', 'none'))
    except ValueError as e:
        names = ", ".join(k.value for k in FadingKind)
        raise ConfigError(f"{names} のいずれかを指定してください", field=f"{path}.model") from e
    values = {'kind': kind, 'mode': data.get('mode', 'exact')}
    if kind is FadingKind.BCS:
        values['tx'] = _parse_bcs(data.get('tx'), f"{path}.tx")
        values['rx'] = _parse_bcs(data.get('rx'), f"{path}.rx")
    return _build(FadingModel, values, path, _FADING_KEYS)


def scenario_from_dict(data: Any) -> Scenario:
    """
    辞書からシナリオを生成

    省略されたフィールドには既定値を使う。未知のキーや定義域外の値は
    位置 (例: "nodes[1].antenna.radius") 付きの ConfigError になる。

    Args:
        data: JSON から読み込んだ辞書

    Returns:
        シナリオ
    """
    data = _check_keys(data, _TOP_KEYS, "")
    version = data.get('schema_version', SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"未対応のバージョンです (値: {version!r}, 対応: {SCHEMA_VERSION})", field="schema_version")

    default = Scenario.default()
    values: Dict[str, Any] = {'nodes': default.nodes}
    if 'medium' in data:
        values['medium'] = _parse_medium(data['medium'])
    if 'nodes' in data:
        if not isinstance(data['nodes'], list):
            raise ConfigError("配列が必要です", field="nodes")
        values['nodes'] = tuple(_parse_node(node, i) for i, node in enumerate(data['nodes']))
    if 'frequency_set' in data:
        if not isinstance(data['frequency_set'], list):
            raise ConfigError("配列が必要です", field="frequency_set")
        values['frequency_set'] = tuple(
            _number(f, f"frequency_set[{i}]") for i, f in enumerate(data['frequency_set'])
        )
    if 'snr_threshold' in data:
        values['snr_threshold'] = _number(data['snr_threshold'], "snr_threshold")
    if 'orientation_mode' in data:
        values['orientation_mode'] = data['orientation_mode']
    if 'fading' in data:
        values['fading'] = _parse_fading(data['fading'])
    return _build(Scenario, values, "", _TOP_KEYS)


def parse_scenario(text: str) -> Scenario:
    """
    シナリオファイルの内容を解析

    空文字列 (空白のみを含む) は既定シナリオになる。

    Args:
        text: JSON テキスト

    Returns:
        シナリオ
    """
    if not text.strip():
        logger.debug("空のシナリオのため既定値を使います")
        return Scenario.default()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"JSONの解析に失敗しました: {e.msg} (行 {e.lineno}, 列 {e.colno})") from e
    return scenario_from_dict(data)


def load_scenario(path: Optional[Path]) -> Scenario:
    """
    シナリオファイルを読み込み

    Args:
        path: ファイルのパス (Noneの場合は既定シナリオ)

    Returns:
        シナリオ
    """
    if path is None:
        return Scenario.default()
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise ConfigError(f"シナリオファイルが見つかりません: {path}") from e
    scenario = parse_scenario(text)
    logger.info(f"シナリオを読み込みました: {path} (ノード {len(scenario.nodes)} 個)")
    return scenario


def emit_scenario(scenario: Scenario) -> Dict:
    """
    シナリオを全フィールド明示の辞書に変換

    Returns:
        schema_version を含む辞書
    """
    return {
        'schema_version': SCHEMA_VERSION,
        'medium': scenario.medium.to_dict(),
        'nodes': [node.to_dict() for node in scenario.nodes],
        'frequency_set': list(scenario.frequency_set),
        'snr_threshold': scenario.snr_threshold,
        'orientation_mode': scenario.orientation_mode,
        'fading': scenario.fading.to_dict(),
    }


def dump_scenario(scenario: Scenario, path: Optional[Path] = None) -> str:
    """シナリオを JSON テキストにする (path を渡すとファイルにも書き出す)"""
    text = json.dumps(emit_scenario(scenario), indent=2, ensure_ascii=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
        logger.info(f"シナリオを書き出しました: {path}")
    return text


def scenario_link(scenario: Scenario, source: Optional[str] = None, destination: Optional[str] = None) -> LinkSpec:
    """
    シナリオの2ノードからリンクを作る

    省略時は destination を持つ最初のノードとその相手 (なければ先頭2ノード) を使う。
    送信PSDは数値計算の3dB帯域幅から求める。

    Args:
        scenario: シナリオ
        source: 送信ノードの id
        destination: 受信ノードの id

    Returns:
        リンク
    """
    if source is None:
        senders = [node for node in scenario.nodes if node.destination is not None]
        if senders:
            source = senders[0].id
            destination = destination or senders[0].destination
        elif len(scenario.nodes) >= 2:
            source = scenario.nodes[0].id
        else:
            raise DomainError("リンクには2つ以上のノードが必要です")
    tx = scenario.node(source)
    if destination is None:
        destination = tx.destination or next(n.id for n in scenario.nodes if n.id != source)
    rx = scenario.node(destination)
    if not rx.can_receive:
        raise DomainError(f"ノード {rx.id} は受信できません")
    return LinkSpec(
        tx=tx.antenna, rx=rx.antenna, pose_tx=tx.pose, pose_rx=rx.pose,
        medium=scenario.medium, tx_power=tx.tx_power, noise_psd=rx.noise_psd,
        fading=scenario.fading,
    )

