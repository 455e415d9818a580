"""
隊列全体の閉ループシミュレーションと評価指標の計算

1ステップの処理:
    1. 仮想先導車 (i=0) を ε_0(k) で更新
    2. 各リンクで u_{i-1}(k) を冗長チャネルで送信
    3. 融合で û_{i-1}(k) を推定
    4. 検知・分離(評価用、制御には使わない)
    5. 追従車 i を [ω_d, v_{i-1}+ω_v, û_{i-1}] で更新
入力は全車両とも時刻 k の状態から計算し、その後に全車両を一斉に更新する。
"""

from __future__ import annotations

import logging as L
from dataclasses import dataclass, field

import numpy as np
from tqdm import tqdm

from platoon_shield.attack_monitor import MonitorThresholds, monitor_frame
from platoon_shield.common import rng as rng_streams
from platoon_shield.common.errors import DivergenceError
from platoon_shield.common.types import ChannelSet, FloatArray
from platoon_shield.control_design import (
    NormKind,
    Signal,
    StringStabilityReport,
    string_stability_check,
)
from platoon_shield.fusion import ERROR_BOUND_FACTOR, fuse, noise_bound_inf
from platoon_shield.platoon_model import (
    STATE_DIM,
    DiscretePlant,
    follower_plant,
    leader_plant,
)
from platoon_shield.scenario_config import (
    LinkConfig,
    ScenarioConfig,
    leader_profile_value,
)
from platoon_shield.v2v_link import transmit

__all__ = [
    "LinkMetrics",
    "LinkTrace",
    "Metrics",
    "ScenarioConfig",
    "SimTrace",
    "compute_metrics",
    "leader_profile_value",
    "run_scenario",
]

STATE_E, STATE_V, STATE_A, STATE_U = range(STATE_DIM)


@dataclass
class LinkTrace:
    """
    リンク i (車両 i-1 -> i) のステップ毎の記録

    true_command と true_support は真値。
    """

    link: int
    n_channels: int
    q: int
    error_bound: float
    values: FloatArray
    true_command: FloatArray
    u_hat: FloatArray
    pi_sigma: FloatArray
    detected: np.ndarray
    sigma: list[ChannelSet] = field(default_factory=list)
    flagged: list[ChannelSet] = field(default_factory=list)
    isolated: list[ChannelSet] = field(default_factory=list)
    reference: list[int] = field(default_factory=list)
    true_support: list[ChannelSet] = field(default_factory=list)

    @classmethod
    def allocate(cls, link: int, cfg: LinkConfig, steps: int) -> "LinkTrace":
        n = len(cfg.channels)
        return cls(
            link=link,
            n_channels=n,
            q=cfg.q,
            error_bound=ERROR_BOUND_FACTOR * noise_bound_inf(cfg.channels),
            values=np.zeros((steps, n)),
            true_command=np.zeros(steps),
            u_hat=np.zeros(steps),
            pi_sigma=np.zeros(steps),
            detected=np.zeros(steps, dtype=bool),
        )

    @property
    def fusion_error(self) -> FloatArray:
        """e_σ(k) = û(k) - u(k)"""
        return self.u_hat - self.true_command


@dataclass
class SimTrace:
    """
    シミュレーション結果

    Attributes
    ----------
    states : FloatArray
        (K, m+1, 4)。states[k, 0] が仮想先導車、states[k, i] が車両 i の x(k)
    leader_input : FloatArray
        (K,) ε_0(k)
    u_hat : FloatArray
        (K, m+1)。車両 i が使った û_{i-1}(k) (リンクが無い車両1は u_0)
    links : dict[int, LinkTrace]
        受信側の車両番号 -> 記録
    """

    config: ScenarioConfig
    seed: int
    time: FloatArray
    states: FloatArray
    leader_input: FloatArray
    u_hat: FloatArray
    links: dict[int, LinkTrace]

    @property
    def steps(self) -> int:
        return len(self.time)

    @property
    def vehicle_count(self) -> int:
        return self.states.shape[1] - 1


@dataclass(frozen=True)
class LinkMetrics:
    """
    リンク単位の指標

    攻撃ステップが無い場合、率は None (該当なし)。
    """

    link: int
    attacked_steps: int
    max_fusion_error: float
    error_bound: float
    detection_rate: float | None
    isolation_exact_rate: float | None
    isolation_precision: float | None
    isolation_recall: float | None


@dataclass(frozen=True)
class Metrics:
    scenario_id: str
    seed: int
    steps: int
    links: tuple[LinkMetrics, ...]
    string_stability: tuple[StringStabilityReport, ...]
    max_state_norm: float
    state_ceiling: float

    @property
    def bounded(self) -> bool:
        return self.max_state_norm < self.state_ceiling

    def link(self, i: int) -> LinkMetrics:
        for lm in self.links:
            if lm.link == i:
                return lm
        raise KeyError(i)

    def as_items(self) -> list[tuple[str, str]]:
        """metrics.txt 用の (key, value) 列"""

        def fmt(x: float | None) -> str:
            return "na" if x is None else f"{x:.9g}"

        items = [
            ("scenario_id", self.scenario_id),
            ("seed", str(self.seed)),
            ("steps", str(self.steps)),
            ("max_state_norm", fmt(self.max_state_norm)),
            ("bounded", str(self.bounded).lower()),
        ]
        for lm in self.links:
            p = f"link{lm.link}"
            items += [
                (f"{p}.attacked_steps", str(lm.attacked_steps)),
                (f"{p}.max_fusion_error", fmt(lm.max_fusion_error)),
                (f"{p}.error_bound", fmt(lm.error_bound)),
                (f"{p}.detection_rate", fmt(lm.detection_rate)),
                (f"{p}.isolation_exact_rate", fmt(lm.isolation_exact_rate)),
                (f"{p}.isolation_precision", fmt(lm.isolation_precision)),
                (f"{p}.isolation_recall", fmt(lm.isolation_recall)),
            ]
        for r in self.string_stability:
            p = f"string_stability.{r.signal.value}.{r.p.value}"
            items += [
                (f"{p}.monotone", str(r.monotone).lower()),
                (f"{p}.worst_ratio", fmt(r.worst_ratio)),
            ]
        return items


def _sensor_noise(rng: np.random.Generator, bound: float) -> float:
    if bound == 0.0:
        return 0.0
    return float(rng.uniform(-bound, bound))


def run_scenario(config: ScenarioConfig, progress: bool = False) -> SimTrace:
    """
    シナリオを最初から最後まで実行する

    Args:
        config: 検証済みの設定
        progress: True ならステップの進捗バーを出す

    Raises:
        ReconstructibilityError: 2q >= N (falsification タグ無し)
        DivergenceError: 状態が非有限値になった
    """
    config.validate()
    m = config.vehicle_count
    steps = config.step_count
    ts = config.ts
    seed, sid = config.master_seed, config.scenario_id
    L.info(f"run_scenario: id={sid} seed={seed} vehicles={m} steps={steps}")

    plants: list[DiscretePlant] = [leader_plant(config.leader, ts)]
    plants += [follower_plant(vc.params, vc.gains, ts) for vc in config.vehicles]

    link_rng = {i: rng_streams.stream(seed, sid, "link", i) for i in config.links}
    iso_rng = {i: rng_streams.stream(seed, sid, "isolate", i) for i in config.links}
    sensor_rng = [rng_streams.stream(seed, sid, "sensor", i) for i in range(1, m + 1)]
    thresholds = {i: MonitorThresholds.from_channels(lc.channels) for i, lc in config.links.items()}
    noise_bounds = {i: noise_bound_inf(lc.channels) for i, lc in config.links.items()}
    enforce = not config.falsification

    time = np.arange(steps) * ts
    states = np.zeros((steps, m + 1, STATE_DIM))
    leader_input = np.zeros(steps)
    u_hat_used = np.zeros((steps, m + 1))
    links = {i: LinkTrace.allocate(i, lc, steps) for i, lc in sorted(config.links.items())}

    x = np.zeros((m + 1, STATE_DIM))
    x[:, STATE_V] = config.initial_velocity

    eps = np.zeros(3)
    for k in tqdm(range(steps), desc=sid, disable=not progress):
        states[k] = x
        eps0 = leader_profile_value(config.leader_profile, time[k])
        leader_input[k] = eps0
        x_next = np.empty_like(x)
        x_next[0] = plants[0].Ad @ x[0] + plants[0].Bd[:, 0] * eps0

        for i in range(1, m + 1):
            u_prev = float(x[i - 1, STATE_U])
            link = config.links.get(i)
            if link is None:
                u_hat = u_prev
            else:
                frame = transmit(u_prev, link.channels, link.policy, k, link_rng[i])
                outcome = fuse(frame.values, link.q, noise_bounds[i], enforce_reconstructibility=enforce)
                verdict = monitor_frame(
                    frame.values, outcome, link.channels, thresholds[i], link.isolation_rule, iso_rng[i]
                )
                u_hat = outcome.u_hat
                lt = links[i]
                lt.values[k] = frame.values
                lt.true_command[k] = frame.true_command
                lt.u_hat[k] = u_hat
                lt.pi_sigma[k] = outcome.pi_sigma
                lt.detected[k] = verdict.detected
                lt.sigma.append(outcome.sigma)
                lt.flagged.append(verdict.flagged_by_detection)
                lt.isolated.append(verdict.isolated)
                lt.reference.append(verdict.reference_channel)
                lt.true_support.append(frame.true_attack_support)
            u_hat_used[k, i] = u_hat

            vc = config.vehicles[i - 1]
            eps[0] = _sensor_noise(sensor_rng[i - 1], vc.sensor_noise_d)
            eps[1] = x[i - 1, STATE_V] + _sensor_noise(sensor_rng[i - 1], vc.sensor_noise_v)
            eps[2] = u_hat
            x_next[i] = plants[i].Ad @ x[i] + plants[i].Bd @ eps

        if not np.all(np.isfinite(x_next)):
            bad = int(np.flatnonzero(~np.all(np.isfinite(x_next), axis=1))[0])
            raise DivergenceError(k + 1, bad)
        x = x_next

    return SimTrace(
        config=config,
        seed=seed,
        time=time,
        states=states,
        leader_input=leader_input,
        u_hat=u_hat_used,
        links=links,
    )


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def _link_metrics(lt: LinkTrace, detection_window: int | None, isolation_window: int | None) -> LinkMetrics:
    steps = len(lt.true_support)
    attacked = np.array([len(s) > 0 for s in lt.true_support], dtype=bool)

    kd = steps if detection_window is None else min(detection_window, steps)
    det_den = int(np.count_nonzero(attacked[:kd]))
    det_num = int(np.count_nonzero(attacked[:kd] & lt.detected[:kd]))

    ki = steps if isolation_window is None else min(isolation_window, steps)
    exact = tp = fp = fn = iso_den = 0
    for k in range(ki):
        truth, got = set(lt.true_support[k]), set(lt.isolated[k])
        tp += len(truth & got)
        fp += len(got - truth)
        fn += len(truth - got)
        if truth:
            iso_den += 1
            exact += int(truth == got)

    err = np.abs(lt.fusion_error)
    return LinkMetrics(
        link=lt.link,
        attacked_steps=int(np.count_nonzero(attacked)),
        max_fusion_error=float(err.max()) if err.size else 0.0,
        error_bound=lt.error_bound,
        detection_rate=_ratio(det_num, det_den),
        isolation_exact_rate=_ratio(exact, iso_den),
        isolation_precision=_ratio(tp, tp + fp),
        isolation_recall=_ratio(tp, tp + fn),
    )


def string_stability_reports(trace: SimTrace, slack: float) -> tuple[StringStabilityReport, ...]:
    """
    車両1..mについて {e, v, a} x {2, inf} のストリング安定性を評価する
    速度は初期速度からの偏差で評価する
    """
    followers = trace.states[:, 1:, :]
    signals = {
        Signal.E: followers[:, :, STATE_E],
        Signal.V: followers[:, :, STATE_V] - trace.config.initial_velocity,
        Signal.A: followers[:, :, STATE_A],
    }
    reports = []
    for sig, z in signals.items():
        for p in (NormKind.L2, NormKind.LINF):
            reports.append(string_stability_check(z.T, sig, p, trace.config.ts, slack))
    return tuple(reports)


def compute_metrics(trace: SimTrace) -> Metrics:
    """真の攻撃集合・真の送信値と比較して指標を計算する"""
    cfg = trace.config
    links = tuple(
        _link_metrics(lt, cfg.detection_window, cfg.isolation_window)
        for _, lt in sorted(trace.links.items())
    )
    max_norm = float(np.max(np.abs(trace.states))) if trace.states.size else 0.0
    metrics = Metrics(
        scenario_id=cfg.scenario_id,
        seed=trace.seed,
        steps=trace.steps,
        links=links,
        string_stability=string_stability_reports(trace, cfg.string_stability_slack),
        max_state_norm=max_norm,
        state_ceiling=cfg.state_ceiling,
    )
    if not metrics.bounded:
        L.warning(f"state norm {max_norm:.3g} exceeded ceiling {cfg.state_ceiling:.3g}")
    return metrics
