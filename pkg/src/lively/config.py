"""Engine configuration: one JSON file aggregating every layer's settings.

Keys starting with "_" are ignored everywhere (used for notes inside the
shipped JSON files, since JSON has no comments).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .actuation import PlatformDescriptor, PriorityTable
from .blink import BlinkModelConfig, CommunicativeBehaviorKind
from .core import FacialExpression, OutputChannel, ValidationResult, canonical_json
from .falling import FallConfig
from .gestures import GestureConfig, GestureSpec, Keyframe
from .social import IdleMotion, IdleMotionSet, ReactionPair, ReactionRepertoire


def _default_idle() -> IdleMotionSet:
    return IdleMotionSet(
        motions=[
            IdleMotion("breathing", frozenset({OutputChannel.TORSO}), 20),
            IdleMotion("gaze_shift", frozenset({OutputChannel.EYES}), 4),
        ]
    )


@dataclass
class SocialConfig:
    repertoire: ReactionRepertoire = field(default_factory=ReactionRepertoire)
    idle: IdleMotionSet = field(default_factory=_default_idle)
    expression_duration_ticks: int = 12

    def validate(self) -> ValidationResult:
        v = []
        v.extend(self.repertoire.validate().violations)
        v.extend(self.idle.validate().violations)
        if self.expression_duration_ticks < 1:
            v.append("expression_duration_ticks must be positive")
        return ValidationResult.from_violations(v)


@dataclass
class EngineConfig:
    tick_duration_ms: int = 100
    speech_chars_per_tick: float = 1.2
    priorities: PriorityTable = field(default_factory=PriorityTable)
    falling: FallConfig = field(default_factory=FallConfig)
    social: SocialConfig = field(default_factory=SocialConfig)
    gestures: GestureConfig = field(default_factory=GestureConfig)
    blink: BlinkModelConfig = field(default_factory=BlinkModelConfig)

    def validate(self) -> ValidationResult:
        v = []
        if self.tick_duration_ms <= 0:
            v.append("tick_duration_ms must be positive")
        if self.speech_chars_per_tick <= 0:
            v.append("speech_chars_per_tick must be positive")
        for section in (self.priorities, self.falling, self.social, self.gestures, self.blink):
            v.extend(section.validate().violations)
        return ValidationResult.from_violations(v)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(config_to_dict(self)).encode()).hexdigest()[:16]


def _strip_notes(obj):
    if isinstance(obj, dict):
        return {k: _strip_notes(v) for k, v in obj.items() if not k.startswith("_")}
    if isinstance(obj, list):
        return [_strip_notes(x) for x in obj]
    return obj


def _pair_from_dict(d: dict) -> ReactionPair:
    e = d["expression"]
    return ReactionPair(
        expression=FacialExpression(label=e["label"], valence=e["valence"]),
        speech=d.get("speech"),
    )


def _pair_to_dict(p: ReactionPair) -> dict:
    d = {"expression": {"label": p.expression.label, "valence": p.expression.valence}}
    if p.speech is not None:
        d["speech"] = p.speech
    return d


def _gesture_from_dict(d: dict) -> GestureSpec:
    return GestureSpec(
        gesture_id=d["gesture_id"],
        family=d["family"],
        channels=frozenset(OutputChannel(c) for c in d["channels"]),
        keyframes=tuple(
            Keyframe(fraction=k["fraction"], targets=dict(k["targets"])) for k in d["keyframes"]
        ),
        duration_ticks=d["duration_ticks"],
    )


def _gesture_to_dict(s: GestureSpec) -> dict:
    return {
        "gesture_id": s.gesture_id,
        "family": s.family,
        "channels": sorted(c.value for c in s.channels),
        "keyframes": [{"fraction": k.fraction, "targets": k.targets} for k in s.keyframes],
        "duration_ticks": s.duration_ticks,
    }


def config_from_dict(raw: dict) -> EngineConfig:
    d = _strip_notes(raw)
    social_d = d.get("social", {})
    rep_d = social_d.get("repertoire", {})
    repertoire = ReactionRepertoire(
        emotion_displayed=[_pair_from_dict(p) for p in rep_d.get("emotion_displayed", [])],
        contact_positive=[_pair_from_dict(p) for p in rep_d.get("contact_positive", [])],
        contact_negative=[_pair_from_dict(p) for p in rep_d.get("contact_negative", [])],
        allow_negative_displays=social_d.get("allow_negative_displays", False),
    )
    idle_d = social_d.get("idle", {})
    idle = IdleMotionSet(
        motions=[
            IdleMotion(
                motion_id=m["id"],
                channels=frozenset(OutputChannel(c) for c in m["channels"]),
                duration_ticks=m["duration_ticks"],
            )
            for m in idle_d.get("motions", [])
        ],
        k_gaze=idle_d.get("k_gaze", 0.8),
        small_motion_rate=idle_d.get("small_motion_rate", 0.05),
    )
    blink_d = d.get("blink", {})
    p_blink = {
        CommunicativeBehaviorKind(k): v for k, v in blink_d.get("p_blink", {}).items()
    }
    gestures_d = d.get("gestures", {})
    falling_d = d.get("falling", {})
    return EngineConfig(
        tick_duration_ms=d.get("tick_duration_ms", 100),
        speech_chars_per_tick=d.get("speech_chars_per_tick", 1.2),
        priorities=PriorityTable(**d.get("priorities", {})),
        falling=FallConfig(**falling_d),
        social=SocialConfig(
            repertoire=repertoire,
            idle=idle,
            expression_duration_ticks=social_d.get("expression_duration_ticks", 12),
        ),
        gestures=GestureConfig(
            p_gesture=gestures_d.get("p_gesture", 0.7),
            min_gap_ticks=gestures_d.get("min_gap_ticks", 5),
            library=[_gesture_from_dict(g) for g in gestures_d.get("library", [])],
        ),
        blink=BlinkModelConfig(
            p_blink=p_blink,
            passive_mean_interval_ticks=blink_d.get("passive_mean_interval_ticks", 40.0),
            refractory_ticks=blink_d.get("refractory_ticks", 3),
            p_multiple=blink_d.get("p_multiple", 0.1),
            p_half=blink_d.get("p_half", 0.2),
            duration_ms_range=tuple(blink_d.get("duration_ms_range", (100, 400))),
        ),
    )


def config_to_dict(cfg: EngineConfig) -> dict:
    return {
        "tick_duration_ms": cfg.tick_duration_ms,
        "speech_chars_per_tick": cfg.speech_chars_per_tick,
        "priorities": {
            "falling_reaction": cfg.priorities.falling_reaction,
            "social_reaction": cfg.priorities.social_reaction,
            "conversational_gestures": cfg.priorities.conversational_gestures,
            "eye_blink": cfg.priorities.eye_blink,
        },
        "falling": {
            "tilt_unstable_deg": cfg.falling.tilt_unstable_deg,
            "tilt_falling_deg": cfg.falling.tilt_falling_deg,
            "rate_falling_deg_s": cfg.falling.rate_falling_deg_s,
            "stiffness_fall_level": cfg.falling.stiffness_fall_level,
            "recover_duration_ticks": cfg.falling.recover_duration_ticks,
            "mitigation_utterances": list(cfg.falling.mitigation_utterances),
            "apology_utterances": list(cfg.falling.apology_utterances),
        },
        "social": {
            "allow_negative_displays": cfg.social.repertoire.allow_negative_displays,
            "expression_duration_ticks": cfg.social.expression_duration_ticks,
            "repertoire": {
                "emotion_displayed": [_pair_to_dict(p) for p in cfg.social.repertoire.emotion_displayed],
                "contact_positive": [_pair_to_dict(p) for p in cfg.social.repertoire.contact_positive],
                "contact_negative": [_pair_to_dict(p) for p in cfg.social.repertoire.contact_negative],
            },
            "idle": {
                "motions": [
                    {
                        "id": m.motion_id,
                        "channels": sorted(c.value for c in m.channels),
                        "duration_ticks": m.duration_ticks,
                    }
                    for m in cfg.social.idle.motions
                ],
                "k_gaze": cfg.social.idle.k_gaze,
                "small_motion_rate": cfg.social.idle.small_motion_rate,
            },
        },
        "gestures": {
            "p_gesture": cfg.gestures.p_gesture,
            "min_gap_ticks": cfg.gestures.min_gap_ticks,
            "library": [_gesture_to_dict(g) for g in cfg.gestures.library],
        },
        "blink": {
            "p_blink": {k.value: v for k, v in sorted(cfg.blink.p_blink.items())},
            "passive_mean_interval_ticks": cfg.blink.passive_mean_interval_ticks,
            "refractory_ticks": cfg.blink.refractory_ticks,
            "p_multiple": cfg.blink.p_multiple,
            "p_half": cfg.blink.p_half,
            "duration_ms_range": list(cfg.blink.duration_ms_range),
        },
    }


def load_config(path) -> EngineConfig:
    with open(path) as f:
        return config_from_dict(json.load(f))


def load_platform(path) -> PlatformDescriptor:
    with open(path) as f:
        return PlatformDescriptor.from_dict(_strip_notes(json.load(f)))


def data_path(name: str):
    """Path to a packaged data file (configs, platforms, scenarios)."""
    from importlib.resources import files

    return files("lively").joinpath("data", name)


def default_config() -> EngineConfig:
    return load_config(data_path("default_config.json"))


def default_platform(name: str = "platform_humanoid.json") -> PlatformDescriptor:
    return load_platform(data_path(name))
