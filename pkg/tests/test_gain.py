"""チャネル電力利得の分解と双極子磁界のテスト"""

import math

import numpy as np
import pytest

from src.channel.antennas import CoilSpec, Pose, RpmaSpec, coil_impedance, coil_resistance, mutual_inductance
from src.channel.gain import (
    channel_gain,
    circuit_gain,
    circuit_gain_coil,
    circuit_gain_rpma,
    dipole_field,
    eddy_gain,
    link_geometry,
    mixed_field_gain,
    polarization_factor,
    rpma_friction_factor,
    space_gain,
)
from src.channel.medium import Medium
from src.core.errors import DomainError


@pytest.fixture
def coils():
    """既定の送受信コイル"""
    return CoilSpec(radius=0.6, turns=15), CoilSpec(radius=0.4, turns=30)


@pytest.fixture
def coaxial_poses():
    """60 m 離れて向き合う同軸配置"""
    return Pose.in_plane((0.0, 0.0, 0.0), 0.0), Pose.in_plane((60.0, 0.0, 0.0), math.pi, mirrored=True)


class TestPolarization:
    """偏波係数のテスト"""

    def test_coaxial(self, coaxial_poses):
        """同軸配置で |𝒥| = 2"""
        assert abs(polarization_factor(*coaxial_poses)) == pytest.approx(2.0)

    def test_coplanar(self):
        """横並び (両軸が視線に直交) で 𝒥 = −1"""
        pose_tx = Pose((0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
        pose_rx = Pose((10.0, 0.0, 0.0), (0.0, 0.0, 1.0))

        assert polarization_factor(pose_tx, pose_rx) == pytest.approx(-1.0)

    def test_orthogonal(self):
        """直交配置で 𝒥 = 0"""
        pose_tx = Pose((0.0, 0.0, 0.0), (1.0, 0.0, 0.0))
        pose_rx = Pose((10.0, 0.0, 0.0), (0.0, 1.0, 0.0))

        assert polarization_factor(pose_tx, pose_rx) == pytest.approx(0.0, abs=1e-15)

    def test_in_plane_formula(self):
        """同一平面では 𝒥 = 2cosθ_S cosθ_D + sinθ_S sinθ_D"""
        theta_s, theta_d = 0.4, 1.1
        pose_tx = Pose.in_plane((0.0, 0.0, 0.0), theta_s)
        pose_rx = Pose.in_plane((20.0, 0.0, 0.0), theta_d, mirrored=True)
        expected = 2 * math.cos(theta_s) * math.cos(theta_d) + math.sin(theta_s) * math.sin(theta_d)

        assert polarization_factor(pose_tx, pose_rx) == pytest.approx(expected)

    def test_geometry_angles(self):
        """同一平面の軸角度を復元"""
        pose_tx = Pose.in_plane((0.0, 0.0, 0.0), 0.4)
        pose_rx = Pose.in_plane((20.0, 0.0, 0.0), 1.1, mirrored=True)
        geometry = link_geometry(pose_tx, pose_rx)

        assert geometry.distance == pytest.approx(20.0)
        assert geometry.theta_tx == pytest.approx(0.4)
        assert geometry.theta_rx == pytest.approx(1.1)
        assert geometry.polarization == pytest.approx(geometry.signed_polarization ** 2)

    def test_same_position(self):
        """位置が一致するとエラー"""
        pose = Pose((1.0, 1.0, 1.0), (1.0, 0.0, 0.0))

        with pytest.raises(DomainError):
            polarization_factor(pose, pose)


class TestGainFactors:
    """利得の各因子のテスト"""

    def test_space_gain(self):
        """𝒮 = μ²/d⁶"""
        assert space_gain(60.0, Medium.default()) == pytest.approx(3.385e-23, rel=1e-3)

    def test_eddy_gain_range(self):
        """ℰ ∈ (0, 1] で距離とともに減少"""
        values = eddy_gain(np.array([0.0, 10.0, 60.0, 200.0]), 1e4, Medium.default())

        assert values[0] == 1.0
        assert np.all(np.diff(values) < 0)
        assert np.all(values > 0)

    def test_eddy_gain_air(self):
        """損失のない媒質では ℰ = 1"""
        assert eddy_gain(500.0, 1e4, Medium.air()) == pytest.approx(1.0)

    def test_eddy_gain_negative_distance(self):
        """負の距離はエラー"""
        with pytest.raises(DomainError):
            eddy_gain(-1.0, 1e4, Medium.default())

    def test_circuit_gain_coil(self, coils):
        """既定コイルの回路利得は約4.88e8"""
        assert circuit_gain_coil(*coils, 1e4) == pytest.approx(4.884e8, rel=1e-3)

    def test_circuit_gain_at_resonance(self, coils):
        """共振時は (πa_S²a_D²N_SN_D)²/16 · ω0² R_L/((R_cS+R_L)(R_cD+R_L)²)"""
        tx, rx = coils
        f0 = tx.tuned_frequency
        omega0 = 2 * math.pi * f0
        r_s = coil_resistance(tx) + tx.load_resistance
        r_d = coil_resistance(rx) + rx.load_resistance
        area_product = math.pi * 0.6 ** 2 * 0.4 ** 2 * 15 * 30
        expected = area_product ** 2 / 16 * omega0 ** 2 * rx.load_resistance / (r_s * r_d ** 2)

        assert circuit_gain_coil(tx, rx, f0) == pytest.approx(expected, rel=1e-12)

    def test_circuit_gain_consistent_with_mutual_inductance(self, coils, coaxial_poses):
        """𝒞·𝒮·J = ω²M²R_L/(|Z_S||Z_D|²) (空気中)"""
        tx, rx = coils
        f = 1.2e4
        medium = Medium.air()
        m = mutual_inductance(tx, rx, *coaxial_poses, medium, f).value
        omega = 2 * math.pi * f
        expected = omega ** 2 * m ** 2 * rx.load_resistance / (
            abs(coil_impedance(tx, f)) * abs(coil_impedance(rx, f)) ** 2
        )
        value = circuit_gain_coil(tx, rx, f) * space_gain(60.0, medium) * polarization_factor(*coaxial_poses) ** 2

        assert value == pytest.approx(expected, rel=1e-9)

    def test_circuit_gain_dispatch(self, coils):
        """送信アンテナの種類で回路利得を切り替える"""
        rpma = RpmaSpec()
        rx = coils[1]

        assert circuit_gain(coils[0], rx, 1e4) == circuit_gain_coil(coils[0], rx, 1e4)
        assert circuit_gain(rpma, rx, 500.0) == circuit_gain_rpma(rpma, rx, 500.0)

    def test_rpma_ideal_friction(self, coils):
        """ℵ_S ≡ 1 とすると摩擦係数の分だけ大きい"""
        rpma = RpmaSpec()
        rx = coils[1]
        ratio = circuit_gain_rpma(rpma, rx, 500.0, ideal_friction=True) / circuit_gain_rpma(rpma, rx, 500.0)

        assert ratio == pytest.approx(1 / rpma_friction_factor(rpma, 500.0))

    def test_rpma_friction_decreases(self):
        """摩擦係数は周波数とともに減少"""
        values = rpma_friction_factor(RpmaSpec(), np.array([10.0, 100.0, 1000.0]))

        assert np.all(np.diff(values) < 0)


class TestChannelGain:
    """チャネル利得のテスト"""

    def test_default_link(self, coils, coaxial_poses):
        """既定リンク (60 m, 10 kHz) の利得は約6.1e-15"""
        result = channel_gain(*coils, *coaxial_poses, Medium.default(), 1e4)

        assert result.polarization == pytest.approx(4.0)
        assert result.total == pytest.approx(6.09e-15, rel=2e-2)
        assert result.weak_coupling_valid
        assert not result.near_field_valid

    def test_total_is_product(self, coils, coaxial_poses):
        """G = 𝒞·𝒮·ℰ·J"""
        result = channel_gain(*coils, *coaxial_poses, Medium.wet_soil(), 5e3)

        assert result.total == pytest.approx(result.circuit * result.space * result.eddy * result.polarization)

    def test_near_field_in_air(self, coils, coaxial_poses):
        """空気中の10 kHz では60 mは近傍界"""
        result = channel_gain(*coils, *coaxial_poses, Medium.air(), 1e4)

        assert result.near_field_valid
        assert result.eddy == pytest.approx(1.0)

    def test_matches_mutual_inductance(self, coils, coaxial_poses):
        """ω²M²R_L/(|Z_S||Z_D|²) と一致"""
        tx, rx = coils
        medium = Medium.default()
        f = 1e4
        m = mutual_inductance(tx, rx, *coaxial_poses, medium, f).value
        omega = 2 * math.pi * f
        expected = (
            omega ** 2 * m ** 2 * rx.load_resistance
            / (abs(coil_impedance(tx, f)) * abs(coil_impedance(rx, f)) ** 2)
        )

        assert channel_gain(tx, rx, *coaxial_poses, medium, f).total == pytest.approx(expected, rel=1e-9)

    def test_to_dict(self, coils, coaxial_poses):
        """辞書形式に total を含む"""
        data = channel_gain(*coils, *coaxial_poses, Medium.default(), 1e4).to_dict()

        assert set(data) >= {'circuit', 'space', 'eddy', 'polarization', 'total'}


class TestDipoleField:
    """双極子磁界のテスト"""

    def test_quasi_static_limit(self):
        """低周波の空気中では準静的な双極子磁界に一致"""
        moment = np.array([1.0, 0.0, 0.0])
        r = 5.0
        field = dipole_field(moment, (r, 0.0, 0.0), 10.0, Medium.air())

        assert field[0].real == pytest.approx(2 / (4 * math.pi * r ** 3), rel=1e-9)
        assert abs(field[1]) == pytest.approx(0.0, abs=1e-15)

    def test_decays_in_conductor(self):
        """導電性媒質では磁界がさらに減衰する"""
        moment = np.array([1.0, 0.0, 0.0])
        lossless = abs(dipole_field(moment, (100.0, 0.0, 0.0), 1e4, Medium(sigma=0.0))[0])
        lossy = abs(dipole_field(moment, (100.0, 0.0, 0.0), 1e4, Medium.default())[0])

        assert lossy < lossless

    def test_origin(self):
        """双極子の位置ではエラー"""
        with pytest.raises(DomainError):
            dipole_field((1.0, 0.0, 0.0), (0.0, 0.0, 0.0), 1e4, Medium.air())

    def test_mixed_field_gain_matches_near_field(self, coils):
        """空気中の近傍界では4因子分解の利得と一致"""
        tx, rx = coils
        pose_tx = Pose.in_plane((0.0, 0.0, 0.0), 0.0)
        pose_rx = Pose.in_plane((10.0, 0.0, 0.0), math.pi, mirrored=True)
        medium = Medium.air()

        expected = channel_gain(tx, rx, pose_tx, pose_rx, medium, 1e3).total
        assert mixed_field_gain(tx, rx, pose_tx, pose_rx, medium, 1e3) == pytest.approx(expected, rel=1e-6)

    def test_moment_scaling(self):
        """磁界はモーメントに比例"""
        field1 = dipole_field((1.0, 0.0, 0.0), (3.0, 4.0, 0.0), 1e3, Medium.air())
        field2 = dipole_field((2.0, 0.0, 0.0), (3.0, 4.0, 0.0), 1e3, Medium.air())

        assert np.allclose(field2, 2 * field1)
