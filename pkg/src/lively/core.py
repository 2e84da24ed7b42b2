"""Shared vocabulary: ticks, sensory events, action requests, channels.

Every other module consumes these types. All of them are plain frozen
dataclasses with a canonical JSON encoding (snake_case field names) so that
scenario files, session logs and the supervisory wire protocol share one
representation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Optional, Union


class OutputChannel(str, Enum):
    """Abstract actuator groups decoupling layers from robot morphology."""

    HEAD = "head"
    EYES = "eyes"
    EYELIDS = "eyelids"
    FACE = "face"
    VOICE = "voice"
    LEFT_ARM = "left_arm"
    RIGHT_ARM = "right_arm"
    TORSO = "torso"
    LEGS = "legs"
    STIFFNESS_BUS = "stiffness_bus"


# Channels a falling posture protects; no non-falling command may appear on
# these while the engine is interrupted.
BODY_CHANNELS = frozenset(
    {
        OutputChannel.HEAD,
        OutputChannel.LEFT_ARM,
        OutputChannel.RIGHT_ARM,
        OutputChannel.TORSO,
        OutputChannel.LEGS,
    }
)

_CHANNEL_ORDER = {ch: i for i, ch in enumerate(OutputChannel)}


def sorted_channels(channels) -> list[OutputChannel]:
    return sorted(channels, key=_CHANNEL_ORDER.__getitem__)


class LayerId(str, Enum):
    """The four reactive layers. Fixed set."""

    FALLING_REACTION = "falling_reaction"
    SOCIAL_REACTION = "social_reaction"
    CONVERSATIONAL_GESTURES = "conversational_gestures"
    EYE_BLINK = "eye_blink"


# Tie-break order for arbitration: earlier in this list wins.
LAYER_PRECEDENCE = [
    LayerId.FALLING_REACTION,
    LayerId.SOCIAL_REACTION,
    LayerId.CONVERSATIONAL_GESTURES,
    LayerId.EYE_BLINK,
]


class EngineSignal(str, Enum):
    INTERRUPT = "interrupt"
    RESTORE = "restore"


class ContactKind(str, Enum):
    AFFECTIVE_TOUCH = "affective_touch"
    HIT = "hit"
    PUSH = "push"
    UNEXPECTED_TOUCH = "unexpected_touch"


NEGATIVE_CONTACT_KINDS = frozenset(
    {ContactKind.HIT, ContactKind.PUSH, ContactKind.UNEXPECTED_TOUCH}
)


@dataclass(frozen=True)
class Tick:
    """One discrete engine control period."""

    index: int
    tick_duration_ms: int = 100


# ---------------------------------------------------------------------------
# Sensory event kinds (pre-classified; perception is out of scope)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EmotionDisplay:
    valence: float
    arousal: float
    label: str

    TYPE = "emotion_display"


@dataclass(frozen=True)
class PhysicalContact:
    contact_kind: ContactKind
    intensity: float

    TYPE = "physical_contact"


@dataclass(frozen=True)
class SoundSource:
    azimuth_deg: float

    TYPE = "sound_source"


@dataclass(frozen=True)
class FaceDetected:
    x: float
    y: float

    TYPE = "face_detected"


@dataclass(frozen=True)
class BalanceReading:
    tilt_deg: float
    tilt_rate_deg_s: float

    TYPE = "balance_reading"


EventKind = Union[EmotionDisplay, PhysicalContact, SoundSource, FaceDetected, BalanceReading]

EVENT_KIND_CLASSES = {
    cls.TYPE: cls
    for cls in (EmotionDisplay, PhysicalContact, SoundSource, FaceDetected, BalanceReading)
}


@dataclass(frozen=True)
class SensoryEvent:
    """Classified child/environment input for one tick."""

    tick: Tick
    kind: EventKind


# ---------------------------------------------------------------------------
# Deliberative inputs (the Deliberative system itself is stubbed)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpeechActRequest:
    speech_id: str
    utterance: str
    duration_ticks: int

    TYPE = "speech_act_request"


@dataclass(frozen=True)
class SpeechActEnd:
    speech_id: str

    TYPE = "speech_act_end"


DeliberativeKind = Union[SpeechActRequest, SpeechActEnd]

DELIBERATIVE_KIND_CLASSES = {cls.TYPE: cls for cls in (SpeechActRequest, SpeechActEnd)}


@dataclass(frozen=True)
class DeliberativeInput:
    kind: DeliberativeKind


# ---------------------------------------------------------------------------
# Action request payloads
# ---------------------------------------------------------------------------


class BlinkAmplitude(str, Enum):
    FULL = "full"
    HALF = "half"


@dataclass(frozen=True)
class BlinkMorphology:
    """Shape of one blink: single/multiple, full/half, duration."""

    count: int
    amplitude: BlinkAmplitude
    duration_ms: int

    def __post_init__(self):
        if self.count not in (1, 2, 3):
            raise ValueError(f"blink count must be 1, 2 or 3, got {self.count}")
        if self.duration_ms <= 0:
            raise ValueError("blink duration_ms must be positive")


@dataclass(frozen=True)
class FacialExpression:
    label: str
    valence: float

    TYPE = "facial_expression"


@dataclass(frozen=True)
class Speech:
    utterance: str

    TYPE = "speech"


@dataclass(frozen=True)
class Gesture:
    gesture_id: str
    duration_ticks: int

    TYPE = "gesture"


@dataclass(frozen=True)
class GazeShift:
    """Gaze target, either angular (azimuth/elevation) or normalized xy offset."""

    azimuth_deg: Optional[float] = None
    elevation_deg: Optional[float] = None
    x: Optional[float] = None
    y: Optional[float] = None

    TYPE = "gaze_shift"

    def __post_init__(self):
        angular = self.azimuth_deg is not None or self.elevation_deg is not None
        normalized = self.x is not None or self.y is not None
        if angular == normalized:
            raise ValueError("gaze target must be angular or normalized xy, not both/neither")


@dataclass(frozen=True)
class Posture:
    posture_id: str

    TYPE = "posture"


@dataclass(frozen=True)
class SetStiffness:
    level: float

    TYPE = "set_stiffness"

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValueError(f"stiffness level must be in [0,1], got {self.level}")


@dataclass(frozen=True)
class Blink:
    morphology: BlinkMorphology

    TYPE = "blink"


@dataclass(frozen=True)
class SmallMotion:
    motion_id: str

    TYPE = "small_motion"


Payload = Union[
    FacialExpression, Speech, Gesture, GazeShift, Posture, SetStiffness, Blink, SmallMotion
]

PAYLOAD_CLASSES = {
    cls.TYPE: cls
    for cls in (
        FacialExpression,
        Speech,
        Gesture,
        GazeShift,
        Posture,
        SetStiffness,
        Blink,
        SmallMotion,
    )
}

# payload type -> (allowed channel set, must claim exactly this set)
_ARM_TORSO = frozenset({OutputChannel.LEFT_ARM, OutputChannel.RIGHT_ARM, OutputChannel.TORSO})
_PAYLOAD_CHANNEL_RULES = {
    FacialExpression: (frozenset({OutputChannel.FACE}), True),
    Speech: (frozenset({OutputChannel.VOICE}), True),
    Gesture: (_ARM_TORSO, False),
    GazeShift: (frozenset({OutputChannel.HEAD, OutputChannel.EYES}), False),
    Posture: (BODY_CHANNELS, False),
    SetStiffness: (frozenset({OutputChannel.STIFFNESS_BUS}), True),
    Blink: (frozenset({OutputChannel.EYELIDS}), True),
    SmallMotion: (BODY_CHANNELS | {OutputChannel.EYES}, False),
}


@dataclass(frozen=True)
class ActionRequest:
    """Abstract layer output, before arbitration and morphology mapping.

    Channel/payload consistency is checked here, at construction; nothing
    downstream ever sees an inconsistent request.
    """

    source: LayerId
    priority: int
    channels: frozenset
    payload: Payload
    interruptible: bool = True
    duration_ticks: int = 1

    def __post_init__(self):
        object.__setattr__(self, "channels", frozenset(self.channels))
        if self.priority < 0:
            raise ValueError("priority must be non-negative")
        if self.duration_ticks < 1:
            raise ValueError("duration_ticks must be positive")
        if not self.channels:
            raise ValueError("request must target at least one channel")
        allowed, exact = _PAYLOAD_CHANNEL_RULES[type(self.payload)]
        if exact and self.channels != allowed:
            raise ValueError(
                f"{type(self.payload).__name__} must target exactly "
                f"{sorted(c.value for c in allowed)}"
            )
        if not self.channels <= allowed:
            bad = sorted(c.value for c in self.channels - allowed)
            raise ValueError(f"{type(self.payload).__name__} cannot target {bad}")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass
class ValidationResult:
    ok: bool
    violations: list = field(default_factory=list)

    @classmethod
    def from_violations(cls, violations) -> "ValidationResult":
        violations = list(violations)
        return cls(ok=not violations, violations=violations)


def validate_event(event: SensoryEvent) -> ValidationResult:
    """Check every field invariant of a sensory event. Total function."""
    v = []
    if event.tick.index < 0:
        v.append("tick index must be non-negative")
    if event.tick.tick_duration_ms <= 0:
        v.append("tick_duration_ms must be positive")
    k = event.kind
    if isinstance(k, EmotionDisplay):
        if not -1.0 <= k.valence <= 1.0:
            v.append("valence out of [-1,1]")
        if not 0.0 <= k.arousal <= 1.0:
            v.append("arousal out of [0,1]")
    elif isinstance(k, PhysicalContact):
        if not isinstance(k.contact_kind, ContactKind):
            v.append(f"unknown contact_kind {k.contact_kind!r}")
        if not 0.0 <= k.intensity <= 1.0:
            v.append("intensity out of [0,1]")
    elif isinstance(k, SoundSource):
        if not -180.0 <= k.azimuth_deg <= 180.0:
            v.append("azimuth_deg out of [-180,180]")
    elif isinstance(k, FaceDetected):
        if not 0.0 <= k.x <= 1.0:
            v.append("x out of [0,1]")
        if not 0.0 <= k.y <= 1.0:
            v.append("y out of [0,1]")
    elif isinstance(k, BalanceReading):
        if k.tilt_deg < 0.0:
            v.append("tilt_deg must be >= 0")
    else:
        v.append(f"unknown event kind {type(k).__name__}")
    return ValidationResult.from_violations(v)


def validate_deliberative(inp: DeliberativeInput) -> ValidationResult:
    v = []
    k = inp.kind
    if isinstance(k, SpeechActRequest):
        if not k.speech_id:
            v.append("speech_id must be non-empty")
        if k.duration_ticks < 1:
            v.append("speech duration_ticks must be positive")
    elif isinstance(k, SpeechActEnd):
        if not k.speech_id:
            v.append("speech_id must be non-empty")
    else:
        v.append(f"unknown deliberative kind {type(k).__name__}")
    return ValidationResult.from_violations(v)


def validate_frame(events) -> ValidationResult:
    """Validate one tick's worth of events together (at most one balance reading)."""
    v = []
    balance = 0
    for ev in events:
        r = validate_event(ev)
        v.extend(r.violations)
        if isinstance(ev.kind, BalanceReading):
            balance += 1
    if balance > 1:
        v.append("at most one balance_reading per tick")
    return ValidationResult.from_violations(v)


# ---------------------------------------------------------------------------
# Canonical JSON encoding
# ---------------------------------------------------------------------------


def canonical_json(obj) -> str:
    """Stable serialization used for logs and determinism checks."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def tick_to_dict(t: Tick) -> dict:
    return {"index": t.index, "tick_duration_ms": t.tick_duration_ms}


def tick_from_dict(d: dict) -> Tick:
    return Tick(index=d["index"], tick_duration_ms=d["tick_duration_ms"])


def _variant_to_dict(obj) -> dict:
    d = {"type": obj.TYPE}
    for f in fields(obj):
        val = getattr(obj, f.name)
        if val is None:
            continue
        if isinstance(val, Enum):
            val = val.value
        elif isinstance(val, BlinkMorphology):
            val = morphology_to_dict(val)
        d[f.name] = val
    return d


def morphology_to_dict(m: BlinkMorphology) -> dict:
    return {"count": m.count, "amplitude": m.amplitude.value, "duration_ms": m.duration_ms}


def morphology_from_dict(d: dict) -> BlinkMorphology:
    return BlinkMorphology(
        count=d["count"],
        amplitude=BlinkAmplitude(d["amplitude"]),
        duration_ms=d["duration_ms"],
    )


def event_to_dict(ev: SensoryEvent) -> dict:
    return {"tick": tick_to_dict(ev.tick), "kind": _variant_to_dict(ev.kind)}


def event_from_dict(d: dict) -> SensoryEvent:
    return SensoryEvent(tick=tick_from_dict(d["tick"]), kind=event_kind_from_dict(d["kind"]))


def event_kind_from_dict(d: dict) -> EventKind:
    cls = EVENT_KIND_CLASSES.get(d.get("type"))
    if cls is None:
        raise ValueError(f"unknown event type {d.get('type')!r}")
    kwargs = {k: v for k, v in d.items() if k != "type"}
    if cls is PhysicalContact:
        kwargs["contact_kind"] = ContactKind(kwargs["contact_kind"])
    return cls(**kwargs)


def deliberative_to_dict(inp: DeliberativeInput) -> dict:
    return {"kind": _variant_to_dict(inp.kind)}


def deliberative_from_dict(d: dict) -> DeliberativeInput:
    return DeliberativeInput(kind=deliberative_kind_from_dict(d["kind"]))


def deliberative_kind_from_dict(d: dict) -> DeliberativeKind:
    cls = DELIBERATIVE_KIND_CLASSES.get(d.get("type"))
    if cls is None:
        raise ValueError(f"unknown deliberative type {d.get('type')!r}")
    return cls(**{k: v for k, v in d.items() if k != "type"})


def payload_to_dict(p: Payload) -> dict:
    if isinstance(p, Blink):
        return {"type": p.TYPE, "morphology": morphology_to_dict(p.morphology)}
    return _variant_to_dict(p)


def payload_from_dict(d: dict) -> Payload:
    cls = PAYLOAD_CLASSES.get(d.get("type"))
    if cls is None:
        raise ValueError(f"unknown payload type {d.get('type')!r}")
    kwargs = {k: v for k, v in d.items() if k != "type"}
    if cls is Blink:
        kwargs["morphology"] = morphology_from_dict(kwargs["morphology"])
    return cls(**kwargs)


def request_to_dict(r: ActionRequest) -> dict:
    return {
        "source": r.source.value,
        "priority": r.priority,
        "channels": [c.value for c in sorted_channels(r.channels)],
        "payload": payload_to_dict(r.payload),
        "interruptible": r.interruptible,
        "duration_ticks": r.duration_ticks,
    }


def request_from_dict(d: dict) -> ActionRequest:
    return ActionRequest(
        source=LayerId(d["source"]),
        priority=d["priority"],
        channels=frozenset(OutputChannel(c) for c in d["channels"]),
        payload=payload_from_dict(d["payload"]),
        interruptible=d["interruptible"],
        duration_ticks=d["duration_ticks"],
    )


def speech_duration_ticks(utterance: str, chars_per_tick: float, minimum: int = 5) -> int:
    """Rough open-loop speech duration estimate used when no TTS is attached."""
    return max(minimum, round(len(utterance) / chars_per_tick))
