"""媒質・波数・表皮深さのテスト"""

import math

import numpy as np
import pytest

from src.channel.constants import EPS0, MU0
from src.channel.medium import Medium, near_field_boundary, skin_depth, wavenumber
from src.core.errors import DomainError


class TestMedium:
    """Mediumクラスのテスト"""

    def test_default_parameters(self):
        """既定の媒質パラメータ"""
        medium = Medium.default()

        assert medium.mu == MU0
        assert medium.sigma == 0.01
        assert medium.epsilon == pytest.approx(6.978e-11)

    def test_presets(self):
        """プリセットの導電率と誘電率"""
        assert Medium.preset("air").sigma == 0.0
        assert Medium.preset("dry_soil").epsilon == pytest.approx(7 * EPS0)
        assert Medium.preset("wet_soil").sigma == 0.077
        assert Medium.preset("sea_water").sigma == 4.8

    def test_unknown_preset(self):
        """未知のプリセット名はエラー"""
        with pytest.raises(DomainError):
            Medium.preset("mars")

    def test_invalid_values(self):
        """定義域外の値はエラー"""
        with pytest.raises(DomainError, match="mu"):
            Medium(mu=-1.0)
        with pytest.raises(DomainError, match="sigma"):
            Medium(sigma=-0.1)

    def test_with_sigma(self):
        """導電率だけを変更"""
        medium = Medium.default().with_sigma(4.8)

        assert medium.sigma == 4.8
        assert medium.mu == MU0

    def test_dict_round_trip(self):
        """辞書形式への変換と復元"""
        medium = Medium.wet_soil()

        assert Medium.from_dict(medium.to_dict()) == medium


class TestSkinDepth:
    """表皮深さのテスト"""

    def test_vlf_value(self):
        """10 kHz, σ=0.01 S/m での表皮深さは約50 m"""
        delta = skin_depth(1e4, Medium.default(), mode="vlf")

        assert delta == pytest.approx(1 / math.sqrt(math.pi * 1e4 * MU0 * 0.01))
        assert delta == pytest.approx(50.33, rel=1e-3)

    def test_exact_matches_vlf_for_good_conductor(self):
        """σ >> ωε では完全な式と近似式が一致"""
        medium = Medium.default()

        assert skin_depth(1e3, medium) == pytest.approx(skin_depth(1e3, medium, mode="vlf"), rel=1e-3)

    def test_decreases_with_frequency(self):
        """周波数が高いほど表皮深さは小さい"""
        deltas = skin_depth(np.array([1e3, 1e4, 1e5, 1e6]), Medium.default())

        assert np.all(np.diff(deltas) < 0)

    def test_lossless_medium(self):
        """σ=0 では無限大"""
        assert math.isinf(skin_depth(1e4, Medium.air()))

    def test_invalid_frequency(self):
        """周波数は正の値が必要"""
        with pytest.raises(DomainError):
            skin_depth(0.0, Medium.default())

    def test_unknown_mode(self):
        """未知のモードはエラー"""
        with pytest.raises(DomainError):
            skin_depth(1e4, Medium.default(), mode="approx")


class TestWavenumber:
    """波数と近傍界境界のテスト"""

    def test_imaginary_part_non_negative(self):
        """Im(k0) >= 0"""
        k = wavenumber(np.geomspace(1e2, 1e7, 20), Medium.sea_water())

        assert np.all(k.imag >= 0)

    def test_air_wavenumber(self):
        """空気中では k0 = ω/c"""
        k = wavenumber(1e6, Medium.air())

        assert k.real == pytest.approx(2 * math.pi * 1e6 * math.sqrt(MU0 * EPS0))
        assert k.imag == pytest.approx(0.0, abs=1e-15)

    def test_near_field_boundary(self):
        """境界距離で |k0 d| が kappa に一致"""
        medium = Medium.default()
        boundary = near_field_boundary(1e4, medium, kappa=0.5)

        assert abs(wavenumber(1e4, medium)) * boundary == pytest.approx(0.5)

    def test_invalid_kappa(self):
        """kappa は正の値が必要"""
        with pytest.raises(DomainError):
            near_field_boundary(1e4, Medium.default(), kappa=0.0)
