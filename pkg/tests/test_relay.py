"""受動リレー (KVL・導波路・クロストーク) のテスト"""

import math

import numpy as np
import pytest

from src.channel.antennas import CoilSpec, Pose, coil_impedance
from src.channel.medium import Medium
from src.core.errors import DomainError, SingularSystemError
from src.link.metrics import gain_response
from src.link.models import LinkSpec
from src.relay.crosstalk import (
    classify_ratio,
    crosstalk_current,
    crosstalk_impedances,
    relay_path,
)
from src.relay.kvl import KvlSystem, hexagonal_array, kvl_solve, link_power_gain, relay_system
from src.relay.waveguide import (
    fn_recurrence,
    waveguide_gain,
    waveguide_gain_at_spacing,
    waveguide_system,
)


@pytest.fixture
def coil():
    """リレーと同じ寸法のコイル (a=0.4 m, N=30)"""
    return CoilSpec(radius=0.4, turns=30)


def _random_geometry(rng: np.random.Generator):
    """互いに1 m 以上離れた3つの姿勢"""
    while True:
        positions = rng.uniform(-10.0, 10.0, size=(3, 3))
        gaps = [np.linalg.norm(positions[a] - positions[b]) for a, b in ((0, 1), (0, 2), (1, 2))]
        if min(gaps) > 1.0:
            break
    return [Pose.normalized(tuple(p), rng.normal(size=3)) for p in positions]


class TestKvlSystem:
    """KvlSystemクラスのテスト"""

    def test_requires_two_coils(self, coil):
        """コイルは2個以上"""
        with pytest.raises(DomainError):
            KvlSystem(coils=[coil], poses=[Pose()], voltages=[1.0], frequency=1e4)

    def test_requires_drive(self, coil):
        """駆動電圧がすべて0ならエラー"""
        poses = [Pose(), Pose(position=(5.0, 0.0, 0.0))]
        with pytest.raises(DomainError):
            KvlSystem(coils=[coil, coil], poses=poses, voltages=[0.0, 0.0], frequency=1e4)

    def test_mask_shape(self, coil):
        """coupling_mask は n×n"""
        poses = [Pose(), Pose(position=(5.0, 0.0, 0.0))]
        with pytest.raises(DomainError, match="coupling_mask"):
            KvlSystem(coils=[coil, coil], poses=poses, voltages=[1.0, 0.0], frequency=1e4,
                      coupling_mask=np.ones((3, 3)))

    def test_impedance_matrix(self, coil):
        """対角は R_L 込みの自己インピーダンス、非対角は純虚数"""
        poses = [Pose(), Pose(position=(5.0, 0.0, 0.0))]
        system = KvlSystem(coils=[coil, coil], poses=poses, voltages=[1.0, 0.0], frequency=1e4)
        z = system.impedance_matrix()

        assert z[0, 0] == coil_impedance(coil, 1e4)
        assert z[1, 1] == z[0, 0]
        assert z[0, 1] == z[1, 0]
        assert z[0, 1].real == 0.0


class TestKvlSolve:
    """KVLの解のテスト"""

    def test_two_coil_matches_gain(self):
        """弱結合の2コイル系は4因子分解の利得と5%以内で一致"""
        link = LinkSpec.default()
        system = relay_system(link.tx, link.rx, link.rx, link.pose_tx, link.pose_rx, [],
                              link.frequency, link.medium)
        gain = link_power_gain(system, kvl_solve(system))

        assert gain == pytest.approx(gain_response(link, link.frequency), rel=0.05)

    def test_three_coil_closed_form(self, coil):
        """3コイル系の閉形式が 3×3 のKVLの解と一致"""
        rng = np.random.default_rng(2024)
        medium = Medium.default()
        for _ in range(1000):
            pose_s, pose_d, pose_r = _random_geometry(rng)
            f = float(rng.uniform(8e3, 12e3))
            closed = crosstalk_current(coil, pose_s, pose_d, pose_r, f, medium)
            system = KvlSystem(coils=[coil] * 3, poses=[pose_s, pose_d, pose_r],
                               voltages=[1.0, 0.0, 0.0], frequency=f, medium=medium)
            currents = kvl_solve(system)

            assert abs(closed.source - currents[0]) <= 1e-10 * abs(currents[0])
            assert abs(closed.destination - currents[1]) <= 1e-10 * abs(currents[1])

    def test_singular(self, coil):
        """自己インピーダンスがほぼ0のコイルを含む系は特異"""
        ideal = CoilSpec(radius=0.4, turns=30, wire_resistance_per_m=0.0, load_resistance=1e-13)
        poses = [Pose(), Pose(position=(5.0, 0.0, 0.0))]
        system = KvlSystem(coils=[coil, ideal], poses=poses, voltages=[1.0, 0.0],
                           frequency=ideal.tuned_frequency, coupling_mask=np.eye(2, dtype=bool))

        with pytest.raises(SingularSystemError) as excinfo:
            kvl_solve(system)
        assert excinfo.value.pair == (0, 1)

    def test_undriven_tx(self, coil):
        """駆動されていないコイルからの利得はエラー"""
        poses = [Pose(), Pose(position=(5.0, 0.0, 0.0))]
        system = KvlSystem(coils=[coil, coil], poses=poses, voltages=[0.0, 1.0], frequency=1e4)

        with pytest.raises(DomainError):
            link_power_gain(system, kvl_solve(system), tx=0, rx=1)

    def test_relay_system_layout(self, coil):
        """[送信, リレー..., 受信] の順で、リレーも含め全コイルが R_L 込み"""
        relays = [Pose(position=(x, 0.0, 0.0)) for x in (5.0, 10.0)]
        system = relay_system(coil, coil, coil, Pose(), Pose(position=(15.0, 0.0, 0.0)), relays, 1e4,
                              Medium.default())

        assert system.size == 4
        assert list(np.diag(system.impedance_matrix())) == pytest.approx([coil_impedance(coil, 1e4)] * 4)
        assert list(system.voltages) == [1.0, 0.0, 0.0, 0.0]

    def test_hexagonal_array(self):
        """中心と6頂点が軸に直交する面内に並ぶ"""
        poses = hexagonal_array((0.0, 0.0, 5.0), 2.0)

        assert len(poses) == 7
        for pose in poses[1:]:
            offset = pose.position_array - poses[0].position_array
            assert np.linalg.norm(offset) == pytest.approx(2.0)
            assert offset @ poses[0].axis_array == pytest.approx(0.0, abs=1e-12)


class TestWaveguide:
    """MI導波路のテスト"""

    def test_recurrence(self):
        """F(−1)=0, F(0)=1, F(1)=Z_M, F(2)=Z_M²−1"""
        z = 3.0 + 2.0j

        assert fn_recurrence(z, -1) == 0
        assert fn_recurrence(z, 0) == 1
        assert fn_recurrence(z, 1) == z
        assert fn_recurrence(z, 2) == pytest.approx(z * z - 1)

    def test_recurrence_invalid(self):
        """次数は −1 以上"""
        with pytest.raises(DomainError):
            fn_recurrence(2.0, -2)

    @pytest.mark.parametrize("n", list(range(11)))
    def test_matches_masked_kvl(self, coil, n):
        """閉形式の利得が隣接結合だけのKVLと一致"""
        medium = Medium.default()
        system = waveguide_system(coil, n, 5.0, 1e4, medium)
        expected = link_power_gain(system, kvl_solve(system))

        assert waveguide_gain_at_spacing(coil, n, 5.0, 1e4, medium) == pytest.approx(expected, rel=1e-9)

    def test_gain_decreases_with_relays(self, coil):
        """間隔一定ではリレーを増やすほど利得が下がる"""
        gains = [waveguide_gain_at_spacing(coil, n, 5.0, 1e4, Medium.default()) for n in range(5)]

        assert all(a > b for a, b in zip(gains, gains[1:]))

    def test_invalid_arguments(self, coil):
        """リレー数と相互インダクタンスの検証"""
        with pytest.raises(DomainError):
            waveguide_gain(coil, -1, 1e-6, 1e4)
        with pytest.raises(DomainError):
            waveguide_gain(coil, 2, 0.0, 1e4)

    def test_full_coupling_system(self, coil):
        """nearest_only=False では全ての組が結合する"""
        system = waveguide_system(coil, 2, 5.0, 1e4, Medium.default(), nearest_only=False)

        assert system.coupling_mask is None
        assert system.mutual_matrix()[0, 3] != 0.0


class TestCrosstalk:
    """クロストークのテスト"""

    def test_relay_path(self):
        """R は S–D の中点の真上"""
        pose_s, pose_d, pose_r = relay_path(40.0, 3.0)

        assert pose_d.position == (40.0, 0.0, 0.0)
        assert pose_r.position == (20.0, 0.0, 3.0)

    def test_relay_path_invalid(self):
        """距離は正の値"""
        with pytest.raises(DomainError):
            relay_path(0.0, 1.0)

    def test_ratio_matches_kvl(self, coil):
        """利得比が3コイル/2コイルのKVLの比と一致"""
        medium = Medium.default()
        pose_s, pose_d, pose_r = relay_path(6.0, 1.0)
        report = crosstalk_impedances(coil, pose_s, pose_d, pose_r, 1e4, medium)

        three = KvlSystem(coils=[coil] * 3, poses=[pose_s, pose_d, pose_r],
                          voltages=[1.0, 0.0, 0.0], frequency=1e4, medium=medium)
        two = KvlSystem(coils=[coil] * 2, poses=[pose_s, pose_d], voltages=[1.0, 0.0],
                        frequency=1e4, medium=medium)
        expected = (
            link_power_gain(three, kvl_solve(three), rx=1) / link_power_gain(two, kvl_solve(two), rx=1)
        )

        assert report.ratio == pytest.approx(expected, rel=1e-9)

    def test_relay_models_agree(self, coil):
        """導波路・汎用リレー系・クロストークの閉形式は同じ負荷付きリレーを扱う"""
        medium = Medium.default()
        spacing, f = 4.0, 1e4
        chain = waveguide_system(coil, 1, spacing, f, medium, nearest_only=False)
        pose_s, pose_r, pose_d = chain.poses
        general = relay_system(coil, coil, coil, pose_s, pose_d, [pose_r], f, medium)
        closed = crosstalk_current(coil, pose_s, pose_d, pose_r, f, medium)

        expected = abs(closed.destination) ** 2 * coil.load_resistance / abs(closed.source)
        assert link_power_gain(chain, kvl_solve(chain)) == pytest.approx(expected, rel=1e-9)
        assert link_power_gain(general, kvl_solve(general)) == pytest.approx(expected, rel=1e-9)

    def test_converges_with_distance(self, coil):
        """距離が長いとリレーの影響は1%未満"""
        pose_s, pose_d, pose_r = relay_path(50.0, 1.0)
        report = crosstalk_impedances(coil, pose_s, pose_d, pose_r, 1e4, Medium.default())

        assert abs(report.ratio - 1) < 0.01
        assert report.classification == "negligible"

    def test_high_frequency_stronger(self, coil):
        """近距離では 1 MHz の方がクロストークが大きい"""
        poses = relay_path(2.0, 0.5)
        medium = Medium.default()
        low = crosstalk_impedances(coil.retuned(1e4), *poses, 1e4, medium)
        high = crosstalk_impedances(coil.retuned(1e6), *poses, 1e6, medium)

        assert abs(high.ratio - 1) > abs(low.ratio - 1)

    def test_classify(self):
        """正/負/無視できるの分類"""
        assert classify_ratio(1.005) == "negligible"
        assert classify_ratio(1.2) == "positive"
        assert classify_ratio(0.5) == "negative"

    def test_coincident_positions(self, coil):
        """S・D・R の位置が重なるとエラー"""
        pose = Pose()
        with pytest.raises(DomainError):
            crosstalk_impedances(coil, pose, Pose(position=(5.0, 0.0, 0.0)), pose, 1e4, Medium.default())

    def test_report_dict(self, coil):
        """辞書形式は実部と虚部に分ける"""
        report = crosstalk_impedances(coil, *relay_path(10.0, 1.0), 1e4, Medium.default())
        data = report.to_dict()

        assert data['z_pa1_real'] == report.z_pa1.real
        assert data['classification'] in ("positive", "negative", "negligible")
        assert math.isfinite(data['ratio'])
