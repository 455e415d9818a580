"""
シナリオ設定ファイルの読み書き

書式:
    # コメント
    [platoon]
    vehicles = 2
    [vehicle.*]          # 全車両の既定値
    h = 0.5
    [vehicle.2]          # 個別の上書き
    kp = 5.002
    [link.*] / [link.i]  # 車両 i が先行車 i-1 から受信する通信路
    bounds = 0.01 0.02 0.03
    [leader_profile]
    0 5 -10              # t_start t_end value ([t_start, t_end) で解釈)
    [sim]
    ts = 0.01

チャネル番号はファイル上では1始まり、内部では0始まり。
"""

from __future__ import annotations

import dataclasses
import logging as L
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, TypeVar

import numpy as np

from platoon_shield.attack_monitor import ReferenceRule
from platoon_shield.common.errors import (
    ConfigParseError,
    ConfigValidationError,
    ReconstructibilityError,
)
from platoon_shield.common.types import ChannelSet
from platoon_shield.control_design import DEFAULT_STRING_SLACK
from platoon_shield.fusion import is_reconstructible
from platoon_shield.platoon_model import ControllerGains, VehicleParams
from platoon_shield.v2v_link import (
    AttackKind,
    AttackMagnitude,
    AttackPolicy,
    ChannelModel,
    MagnitudeKind,
    NoiseKind,
)

FALSIFICATION_TAG = "falsification"
DEFAULT_STATE_CEILING = 1e4

_SECTION_RE = re.compile(r"^\[(?P<name>[A-Za-z_]+)(?:\.(?P<index>\*|\d+))?\]$")

E = TypeVar("E", bound=Enum)
T = TypeVar("T")


@dataclass(frozen=True)
class ProfileRow:
    """[t_start, t_end) の間、先導車の要求加速度を value とする"""

    t_start: float
    t_end: float
    value: float


@dataclass(frozen=True)
class VehicleConfig:
    params: VehicleParams
    gains: ControllerGains
    sensor_noise_d: float = 0.0
    sensor_noise_v: float = 0.0


@dataclass(frozen=True)
class LinkConfig:
    channels: tuple[ChannelModel, ...]
    policy: AttackPolicy
    isolation_rule: ReferenceRule = ReferenceRule.SMALLEST

    @property
    def q(self) -> int:
        return self.policy.q


@dataclass(frozen=True)
class ScenarioConfig:
    """
    シナリオ設定

    vehicles[i-1] が車両 i (1..m)。links のキーは受信側の車両番号。
    車両1のリンクは任意で、無い場合は仮想先導車の u_0 をそのまま使う。
    """

    scenario_id: str
    vehicles: tuple[VehicleConfig, ...]
    leader: VehicleParams
    links: Mapping[int, LinkConfig]
    leader_profile: tuple[ProfileRow, ...]
    ts: float
    horizon: float
    master_seed: int = 0
    initial_velocity: float = 0.0
    detection_window: int | None = None
    isolation_window: int | None = None
    state_ceiling: float = DEFAULT_STATE_CEILING
    string_stability_slack: float = DEFAULT_STRING_SLACK
    tag: str | None = None

    @property
    def vehicle_count(self) -> int:
        return len(self.vehicles)

    @property
    def falsification(self) -> bool:
        return self.tag == FALSIFICATION_TAG

    @property
    def step_count(self) -> int:
        # 20/0.01 が 1999.999... になるのを避ける
        return int(np.floor(self.horizon / self.ts + 1e-9))

    def with_seed(self, seed: int) -> "ScenarioConfig":
        return dataclasses.replace(self, master_seed=seed)

    def validate(self) -> None:
        """
        Raises:
            ConfigValidationError: 値の不変条件違反
            GainValidationError: ゲイン条件違反
            ReconstructibilityError: 2q >= N (falsification タグ付きなら許容)
        """
        if self.vehicle_count < 1:
            raise ConfigValidationError("m >= 1", f"m={self.vehicle_count}")
        if not (np.isfinite(self.ts) and self.ts > 0.0):
            raise ConfigValidationError("Ts > 0", f"Ts={self.ts}")
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ConfigValidationError("horizon > 0", f"horizon={self.horizon}")
        if self.step_count < 1:
            raise ConfigValidationError("horizon >= Ts", f"horizon={self.horizon}, Ts={self.ts}")
        if not self.state_ceiling > 0.0:
            raise ConfigValidationError("state_ceiling > 0", f"{self.state_ceiling}")
        for w_name in ("detection_window", "isolation_window"):
            w = getattr(self, w_name)
            if w is not None and w < 1:
                raise ConfigValidationError(f"{w_name} >= 1", f"{w}")
        for i, vc in enumerate(self.vehicles, start=1):
            vc.gains.require_valid_for(vc.params.tau)
            if vc.sensor_noise_d < 0.0 or vc.sensor_noise_v < 0.0:
                raise ConfigValidationError("sensor noise bounds >= 0", f"vehicle {i}")
        for i in range(2, self.vehicle_count + 1):
            if i not in self.links:
                raise ConfigValidationError(f"link for vehicle {i} defined")
        for i, link in self.links.items():
            if not 1 <= i <= self.vehicle_count:
                raise ConfigValidationError("link index within 1..m", f"link.{i}")
            n = len(link.channels)
            if n < 1:
                raise ConfigValidationError("N >= 1", f"link.{i}")
            link.policy.validate(n)
            if link.q >= n:
                raise ConfigValidationError("q < N", f"link.{i}: q={link.q}, N={n}")
            if not is_reconstructible(n, link.q):
                if not self.falsification:
                    raise ReconstructibilityError(n, link.q)
                L.warning(f"link.{i}: q={link.q}, N={n} は復元不能 (falsification)")
        prev_end = -np.inf
        for row in self.leader_profile:
            if not row.t_start < row.t_end:
                raise ConfigValidationError("t_start < t_end", f"{row}")
            if row.t_start < prev_end:
                raise ConfigValidationError("profile rows sorted and disjoint", f"{row}")
            prev_end = row.t_end


def leader_profile_value(table: tuple[ProfileRow, ...], t: float) -> float:
    """
    区分定数の要求加速度 ε_0(t)

    各行は [t_start, t_end) として扱う。表の後ろ(や行の隙間)では直前の行の値を保持し、
    最初の行より前は 0 とする。
    """
    value = 0.0
    for row in table:
        if t < row.t_start:
            break
        value = row.value
        if t < row.t_end:
            break
    return value


# ---- 読み込み ----
@dataclass
class _Entry:
    line: int
    value: str


@dataclass
class _Section:
    line: int
    entries: dict[str, _Entry] = field(default_factory=dict)
    rows: list[tuple[int, list[str]]] = field(default_factory=list)


class _Reader:
    """セクション単位に分割した設定と、エラー位置の情報を持つ"""

    def __init__(self, text: str, source: str):
        self.source = source
        self.sections: dict[str, _Section] = {}
        self._split(text)

    def error(self, line: int | None, fld: str | None, reason: str) -> ConfigParseError:
        return ConfigParseError(self.source, line, fld, reason)

    def _split(self, text: str) -> None:
        current: _Section | None = None
        current_name = ""
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                m = _SECTION_RE.match(line)
                if m is None:
                    raise self.error(lineno, None, f"malformed section header '{line}'")
                current_name = line[1:-1].lower()
                if current_name in self.sections:
                    raise self.error(lineno, None, f"duplicate section [{current_name}]")
                current = self.sections[current_name] = _Section(lineno)
                continue
            if current is None:
                raise self.error(lineno, None, "content before the first section")
            if current_name == "leader_profile":
                current.rows.append((lineno, line.split()))
                continue
            if "=" not in line:
                raise self.error(lineno, None, f"expected 'key = value', got '{line}'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lower()
            if key in current.entries:
                raise self.error(lineno, key, "duplicate key")
            current.entries[key] = _Entry(lineno, value)

    def indexed(self, prefix: str) -> dict[int, _Section]:
        out: dict[int, _Section] = {}
        for name, sec in self.sections.items():
            if name.startswith(prefix + ".") and name != prefix + ".*":
                out[int(name.split(".", 1)[1])] = sec
        return out


class _Fields:
    """既定値セクションと個別セクションを重ねた1オブジェクト分のキー"""

    def __init__(self, reader: _Reader, name: str, layers: list[_Section | None], allowed: set[str]):
        self.reader = reader
        self.name = name
        self.entries: dict[str, _Entry] = {}
        for sec in layers:
            if sec is None:
                continue
            for k, e in sec.entries.items():
                if k not in allowed:
                    raise reader.error(e.line, k, f"unknown key in [{name}]")
                self.entries[k] = e

    def has(self, key: str) -> bool:
        return key in self.entries

    def get(self, key: str, conv: Callable[[str], T], default: T | None = None) -> T:
        e = self.entries.get(key)
        if e is None:
            if default is None:
                raise self.reader.error(None, key, f"missing required key in [{self.name}]")
            return default
        try:
            return conv(e.value)
        except (ValueError, KeyError) as ex:
            raise self.reader.error(e.line, key, f"invalid value '{e.value}': {ex}") from ex

    def optional(self, key: str, conv: Callable[[str], T]) -> T | None:
        if key not in self.entries:
            return None
        return self.get(key, conv)


def _finite(s: str) -> float:
    x = float(s)
    if not np.isfinite(x):
        raise ValueError("must be finite")
    return x


def _float_list(s: str) -> tuple[float, ...]:
    vals = tuple(_finite(t) for t in re.split(r"[\s,]+", s.strip()) if t)
    if not vals:
        raise ValueError("empty list")
    return vals


def parse_channel_set(s: str) -> ChannelSet:
    """'1|2' や '1 2' (1始まり) を0始まりのタプルにする。'-' は空集合"""
    s = s.strip()
    if s in ("", "-"):
        return ()
    idx = sorted({int(t) - 1 for t in re.split(r"[\s,|]+", s) if t})
    if any(j < 0 for j in idx):
        raise ValueError("channel indices start at 1")
    return tuple(idx)


def format_channel_set(s: ChannelSet) -> str:
    return "|".join(str(j + 1) for j in s) if s else "-"


def _schedule(s: str) -> dict[int, ChannelSet]:
    """'0:1|2 5:3' -> {0: (0, 1), 5: (2,)}"""
    out: dict[int, ChannelSet] = {}
    for item in s.split():
        k, _, chans = item.partition(":")
        if not _:
            raise ValueError(f"expected 'step:channels', got '{item}'")
        out[int(k)] = parse_channel_set(chans)
    return out


def _enum(kind: type[E]) -> Callable[[str], E]:
    def conv(s: str) -> E:
        return kind(s.strip().lower())

    return conv


_PLATOON_KEYS = {"vehicles", "scenario_id", "tag", "leader_h", "leader_tau"}
_VEHICLE_KEYS = {"h", "tau", "r", "l", "kp", "kd", "sensor_noise_d", "sensor_noise_v"}
_LINK_KEYS = {
    "bounds",
    "noise",
    "attack",
    "q",
    "attack_channels",
    "attack_distribution",
    "attack_mean",
    "attack_std",
    "attack_low",
    "attack_high",
    "schedule",
    "decoy_offset",
    "isolation_rule",
}
_SIM_KEYS = {
    "ts",
    "horizon",
    "seed",
    "initial_velocity",
    "detection_window",
    "isolation_window",
    "state_ceiling",
    "string_stability_slack",
}


def _parse_vehicle(reader: _Reader, i: int) -> VehicleConfig:
    f = _Fields(
        reader,
        f"vehicle.{i}",
        [reader.sections.get("vehicle.*"), reader.sections.get(f"vehicle.{i}")],
        _VEHICLE_KEYS,
    )
    try:
        params = VehicleParams(
            h=f.get("h", _finite),
            tau=f.get("tau", _finite),
            r=f.get("r", _finite, 0.0),
            L=f.get("l", _finite, 0.0),
        )
    except ConfigValidationError as e:
        raise reader.error(None, f"vehicle.{i}", str(e)) from e
    return VehicleConfig(
        params=params,
        gains=ControllerGains(kp=f.get("kp", _finite), kd=f.get("kd", _finite)),
        sensor_noise_d=f.get("sensor_noise_d", _finite, 0.0),
        sensor_noise_v=f.get("sensor_noise_v", _finite, 0.0),
    )


def _parse_link(reader: _Reader, i: int) -> LinkConfig:
    f = _Fields(
        reader,
        f"link.{i}",
        [reader.sections.get("link.*"), reader.sections.get(f"link.{i}")],
        _LINK_KEYS,
    )
    bounds = f.get("bounds", _float_list)
    noise = f.get("noise", _enum(NoiseKind), NoiseKind.UNIFORM)
    try:
        channels = tuple(ChannelModel(b, noise) for b in bounds)
    except ConfigValidationError as e:
        raise reader.error(f.entries["bounds"].line, "bounds", str(e)) from e
    magnitude = AttackMagnitude(
        kind=f.get("attack_distribution", _enum(MagnitudeKind), MagnitudeKind.GAUSSIAN),
        mean=f.get("attack_mean", _finite, 0.0),
        std=f.get("attack_std", _finite, 5.0),
        low=f.get("attack_low", _finite, -5.0),
        high=f.get("attack_high", _finite, 5.0),
    )
    policy = AttackPolicy(
        kind=f.get("attack", _enum(AttackKind), AttackKind.NONE),
        q=f.get("q", int, (len(channels) - 1) // 2),
        magnitude=magnitude,
        channels=f.get("attack_channels", parse_channel_set, ()),
        schedule=f.get("schedule", _schedule, {}),
        decoy_offset=f.get("decoy_offset", _finite, 0.0),
    )
    return LinkConfig(
        channels=channels,
        policy=policy,
        isolation_rule=f.get("isolation_rule", _enum(ReferenceRule), ReferenceRule.SMALLEST),
    )


def _parse_profile(reader: _Reader) -> tuple[ProfileRow, ...]:
    sec = reader.sections.get("leader_profile")
    if sec is None:
        return ()
    rows: list[ProfileRow] = []
    for lineno, tokens in sec.rows:
        if len(tokens) != 3:
            raise reader.error(lineno, "leader_profile", "expected 't_start t_end value'")
        try:
            rows.append(ProfileRow(*(_finite(t) for t in tokens)))
        except ValueError as e:
            raise reader.error(lineno, "leader_profile", str(e)) from e
    return tuple(rows)


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """
    設定テキストを読み込み、検証済みの ScenarioConfig を返す

    Raises:
        ConfigParseError: 構文・値の誤り(行番号とフィールド名付き)
        ConfigValidationError / ReconstructibilityError: 検証エラー
    """
    reader = _Reader(text, source)
    for name, sec in reader.sections.items():
        head = name.split(".", 1)[0]
        if head not in ("platoon", "vehicle", "link", "leader_profile", "sim"):
            raise reader.error(sec.line, None, f"unknown section [{name}]")
    for required in ("platoon", "sim"):
        if required not in reader.sections:
            raise reader.error(None, None, f"missing section [{required}]")

    platoon = _Fields(reader, "platoon", [reader.sections["platoon"]], _PLATOON_KEYS)
    m = platoon.get("vehicles", int)
    if m < 1:
        raise reader.error(platoon.entries["vehicles"].line, "vehicles", "must be >= 1")
    for kind in ("vehicle", "link"):
        for i, sec in reader.indexed(kind).items():
            if not 1 <= i <= m:
                raise reader.error(sec.line, None, f"[{kind}.{i}] outside 1..{m}")

    vehicles = tuple(_parse_vehicle(reader, i) for i in range(1, m + 1))
    link_ids = set(reader.indexed("link"))
    if "link.*" in reader.sections:
        link_ids |= set(range(2, m + 1))
    links = {i: _parse_link(reader, i) for i in sorted(link_ids)}

    first = vehicles[0].params
    try:
        leader = VehicleParams(
            h=platoon.get("leader_h", _finite, first.h),
            tau=platoon.get("leader_tau", _finite, first.tau),
        )
    except ConfigValidationError as e:
        raise reader.error(None, "leader", str(e)) from e

    sim = _Fields(reader, "sim", [reader.sections["sim"]], _SIM_KEYS)
    default_id = Path(source).stem if source != "<string>" else "scenario"
    config = ScenarioConfig(
        scenario_id=platoon.get("scenario_id", str, default_id),
        vehicles=vehicles,
        leader=leader,
        links=links,
        leader_profile=_parse_profile(reader),
        ts=sim.get("ts", _finite),
        horizon=sim.get("horizon", _finite),
        master_seed=sim.get("seed", int, 0),
        initial_velocity=sim.get("initial_velocity", _finite, 0.0),
        detection_window=sim.optional("detection_window", int),
        isolation_window=sim.optional("isolation_window", int),
        state_ceiling=sim.get("state_ceiling", _finite, DEFAULT_STATE_CEILING),
        string_stability_slack=sim.get("string_stability_slack", _finite, DEFAULT_STRING_SLACK),
        tag=platoon.optional("tag", str),
    )
    config.validate()
    return config


def load_scenario(path: Path) -> ScenarioConfig:
    """
    Raises:
        ConfigParseError: ファイルが読めない、または構文エラー
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(str(path), None, None, f"cannot read scenario: {e.strerror}") from e
    return parse_scenario(text, str(path))


# ---- 書き出し ----
def _fmt(x: float) -> str:
    return repr(float(x))


def dump_scenario(config: ScenarioConfig) -> str:
    """parse_scenario で同じ設定に戻るテキストへ変換する"""
    out: list[str] = [
        "[platoon]",
        f"vehicles = {config.vehicle_count}",
        f"scenario_id = {config.scenario_id}",
        f"leader_h = {_fmt(config.leader.h)}",
        f"leader_tau = {_fmt(config.leader.tau)}",
    ]
    if config.tag is not None:
        out.append(f"tag = {config.tag}")

    for i, vc in enumerate(config.vehicles, start=1):
        p, g = vc.params, vc.gains
        out += [
            "",
            f"[vehicle.{i}]",
            f"h = {_fmt(p.h)}",
            f"tau = {_fmt(p.tau)}",
            f"r = {_fmt(p.r)}",
            f"L = {_fmt(p.L)}",
            f"kp = {_fmt(g.kp)}",
            f"kd = {_fmt(g.kd)}",
            f"sensor_noise_d = {_fmt(vc.sensor_noise_d)}",
            f"sensor_noise_v = {_fmt(vc.sensor_noise_v)}",
        ]

    for i, link in sorted(config.links.items()):
        pol, mag = link.policy, link.policy.magnitude
        out += [
            "",
            f"[link.{i}]",
            "bounds = " + " ".join(_fmt(c.noise_bound) for c in link.channels),
            f"noise = {link.channels[0].noise.value}",
            f"attack = {pol.kind.value}",
            f"q = {pol.q}",
            f"attack_channels = {format_channel_set(pol.channels)}",
            f"attack_distribution = {mag.kind.value}",
            f"attack_mean = {_fmt(mag.mean)}",
            f"attack_std = {_fmt(mag.std)}",
            f"attack_low = {_fmt(mag.low)}",
            f"attack_high = {_fmt(mag.high)}",
            f"decoy_offset = {_fmt(pol.decoy_offset)}",
            f"isolation_rule = {link.isolation_rule.value}",
        ]
        if pol.schedule:
            out.append(
                "schedule = "
                + " ".join(f"{k}:{format_channel_set(s)}" for k, s in sorted(pol.schedule.items()))
            )

    if config.leader_profile:
        out += ["", "[leader_profile]"]
        out += [f"{_fmt(r.t_start)} {_fmt(r.t_end)} {_fmt(r.value)}" for r in config.leader_profile]

    out += [
        "",
        "[sim]",
        f"ts = {_fmt(config.ts)}",
        f"horizon = {_fmt(config.horizon)}",
        f"seed = {config.master_seed}",
        f"initial_velocity = {_fmt(config.initial_velocity)}",
        f"state_ceiling = {_fmt(config.state_ceiling)}",
        f"string_stability_slack = {_fmt(config.string_stability_slack)}",
    ]
    if config.detection_window is not None:
        out.append(f"detection_window = {config.detection_window}")
    if config.isolation_window is not None:
        out.append(f"isolation_window = {config.isolation_window}")
    return "\n".join(out) + "\n"
