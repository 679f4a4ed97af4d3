"""物理定数と既定パラメータ"""

import math

# 物理定数
MU0 = 4 * math.pi * 1e-7  # 真空の透磁率 (H/m)
EPS0 = 8.854187817e-12  # 真空の誘電率 (F/m)
COPPER_RESISTIVITY = 1.68e-8  # 銅の抵抗率 (Ω·m)

# 媒質 (既定値)
DEFAULT_SIGMA = 0.01  # 導電率 (S/m)
DEFAULT_EPSILON = 6.978e-11  # 誘電率 (F/m)
DEFAULT_MU = MU0  # 透磁率 (H/m)

# 媒質プリセット (誘電率は比誘電率, 導電率はS/m)
DRY_SOIL_REL_EPSILON = 7.0
DRY_SOIL_SIGMA = 0.01
WET_SOIL_REL_EPSILON = 29.0
WET_SOIL_SIGMA = 0.077
SEA_WATER_REL_EPSILON = 81.0
SEA_WATER_SIGMA = 4.8

# コイル (送信側 S / 受信側 D)
TX_COIL_RADIUS = 0.6  # 送信コイル半径 (m)
RX_COIL_RADIUS = 0.4  # 受信コイル半径 (m)
TX_COIL_TURNS = 15  # 送信コイル巻数
RX_COIL_TURNS = 30  # 受信コイル巻数
WIRE_RESISTANCE_PER_M = 0.166  # 導線の単位長抵抗 (Ω/m)
# 単位長抵抗と銅の抵抗率から逆算した導線半径 (約0.18 mm)
WIRE_RADIUS = math.sqrt(COPPER_RESISTIVITY / (math.pi * WIRE_RESISTANCE_PER_M))
LOAD_RESISTANCE = 0.5  # 負荷抵抗 (Ω)
RESONANCE_FREQUENCY = 10e3  # 共振周波数 f0 (Hz)

# 姿勢 (視線方向に対する軸の角度, rad)
TX_THETA = 0.0
RX_THETA = math.pi

# 送信電力・雑音
TX_POWER = 5.0  # 送信電力 (W)
NOISE_POWER_DBM = -103.0  # 雑音電力 (dBm)
NOISE_REFERENCE_BANDWIDTH = 2e3  # 雑音電力の基準帯域 (Hz)
NOISE_PSD = 10 ** (NOISE_POWER_DBM / 10) * 1e-3 / NOISE_REFERENCE_BANDWIDTH  # 約2.506e-17 W/Hz

# リンク
LINK_DISTANCE = 60.0  # 送受信間距離 (m)

# RPMA (回転永久磁石アンテナ)
RPMA_REMANENCE = 1.2  # 残留磁束密度 (T)
RPMA_VOLUME = 1e-4  # 磁石体積 (m^3)
RPMA_EFFICIENCY = 0.8  # エネルギー変換効率
RPMA_FRICTION_TORQUE = 0.01  # 摩擦トルク (N·m)
RPMA_MOMENT_OF_INERTIA = 3.75e-4  # 慣性モーメント (kg·m^2)
RPMA_RATED_ACCELERATION = 539.0  # 定格の回転周波数加速度 (Hz/s)
RPMA_RAMP_STEP = 539.0  # 立ち上がりで加速する周波数幅 (Hz)
RPMA_FRICTION_CORNER = 1e3  # 摩擦損失係数のコーナー周波数 (Hz)

# 数値計算
BANDWIDTH_SEARCH_SPAN = 100.0  # 半値点探索範囲 [f0/100, 100 f0]
BANDWIDTH_SCAN_POINTS = 801  # 半値点の交差検出に使う片側のグリッド点数
RANGE_MIN_DISTANCE = 0.1  # 通信距離探索の下限 (m)
RANGE_MAX_DISTANCE = 1e4  # 通信距離探索の上限 (m)
KVL_CONDITION_LIMIT = 1e12  # KVL行列の条件数の上限
CROSSTALK_NEGLIGIBLE_BAND = 0.01  # クロストーク比 |ratio-1| がこれ未満なら無視できる
