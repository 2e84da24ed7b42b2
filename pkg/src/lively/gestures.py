"""Conversational gestures: open-palm-up co-verbal gestures scheduled during speech.

Only the palm-up family ("offering/giving" gestures) is admissible; palm-down
shapes read as negative and are rejected at library validation. With
probability p_gesture a speech act is accompanied by one gesture drawn
uniformly from the library, placed uniformly inside the speech interval.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    ActionRequest,
    Gesture,
    LayerId,
    OutputChannel,
    SpeechActRequest,
    ValidationResult,
)

OPEN_HAND_SUPINE = "open_hand_supine"

GESTURE_CHANNELS = frozenset(
    {OutputChannel.LEFT_ARM, OutputChannel.RIGHT_ARM, OutputChannel.TORSO}
)


@dataclass(frozen=True)
class Keyframe:
    """Normalized pose sample: fraction of the gesture's duration plus
    per-channel joint target vectors in [0,1] (morphology-free; resampled
    onto the platform's actual joint count at actuation time)."""

    fraction: float
    targets: dict  # channel value (str) -> list of floats in [0,1]


@dataclass(frozen=True)
class GestureSpec:
    gesture_id: str
    family: str
    channels: frozenset
    keyframes: tuple
    duration_ticks: int


def validate_spec(spec: GestureSpec) -> list:
    v = []
    ident = spec.gesture_id or "<unnamed>"
    if spec.family != OPEN_HAND_SUPINE:
        v.append(f"{ident}: family must be {OPEN_HAND_SUPINE!r}, got {spec.family!r}")
    if not spec.channels:
        v.append(f"{ident}: must claim at least one channel")
    if not set(spec.channels) <= GESTURE_CHANNELS:
        v.append(f"{ident}: channels limited to arms/torso")
    if spec.duration_ticks < 1:
        v.append(f"{ident}: duration_ticks must be positive")
    if not spec.keyframes:
        v.append(f"{ident}: needs at least one keyframe")
    else:
        fractions = [k.fraction for k in spec.keyframes]
        if fractions[0] != 0.0:
            v.append(f"{ident}: first keyframe fraction must be 0")
        if fractions[-1] != 1.0:
            v.append(f"{ident}: last keyframe fraction must be 1")
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            v.append(f"{ident}: keyframe fractions must be strictly increasing")
        for kf in spec.keyframes:
            for ch, vec in kf.targets.items():
                if any(not 0.0 <= t <= 1.0 for t in vec):
                    v.append(f"{ident}: keyframe targets out of [0,1] on {ch}")
    return v


def validate_library(specs: list) -> ValidationResult:
    violations = []
    for spec in specs:
        violations.extend(validate_spec(spec))
    ids = [s.gesture_id for s in specs]
    for dup in {i for i in ids if ids.count(i) > 1}:
        violations.append(f"duplicate gesture_id {dup!r}")
    return ValidationResult.from_violations(violations)


@dataclass
class GestureConfig:
    p_gesture: float = 0.7
    min_gap_ticks: int = 5
    library: list = field(default_factory=list)

    def validate(self) -> ValidationResult:
        v = []
        if not 0.0 <= self.p_gesture <= 1.0:
            v.append("p_gesture out of [0,1]")
        if self.min_gap_ticks < 0:
            v.append("min_gap_ticks must be non-negative")
        r = validate_library(self.library)
        v.extend(r.violations)
        return ValidationResult.from_violations(v)


@dataclass(frozen=True)
class PlannedGesture:
    """A gesture committed to start at a specific future tick, bound to the
    speech act it accompanies."""

    start_tick: int
    speech_id: str
    spec_id: str
    request: ActionRequest


def on_speech(
    speech: SpeechActRequest,
    cfg: GestureConfig,
    rng: random.Random,
    speech_start_tick: int,
    last_gesture_end_tick: int = -(10**9),
    priority: int = 40,
) -> Optional[PlannedGesture]:
    """Decide whether (and where) this speech act gets a gesture.

    The start offset is uniform over [0, speech_duration - gesture_duration],
    shrunk from below so the gesture starts at least min_gap_ticks after the
    previous gesture ended. Gestures never outlast their speech act.
    """
    if not cfg.library:
        return None
    if rng.random() >= cfg.p_gesture:
        return None

    spec = rng.choice(cfg.library)
    duration = min(spec.duration_ticks, speech.duration_ticks)
    hi = max(0, speech.duration_ticks - duration)
    lo = max(0, last_gesture_end_tick + cfg.min_gap_ticks - speech_start_tick)
    if lo > hi:
        return None
    offset = rng.randint(lo, hi)
    request = ActionRequest(
        source=LayerId.CONVERSATIONAL_GESTURES,
        priority=priority,
        channels=spec.channels,
        payload=Gesture(gesture_id=spec.gesture_id, duration_ticks=duration),
        duration_ticks=duration,
    )
    return PlannedGesture(
        start_tick=speech_start_tick + offset,
        speech_id=speech.speech_id,
        spec_id=spec.gesture_id,
        request=request,
    )
