"""Social reaction layer: compatible emotional mirroring plus idle life-like behavior.

When the child displays an emotion the robot answers with a facial
expression (and optionally speech) whose valence sign matches. Physical
contact takes precedence over displayed emotions. With nothing going on the
layer keeps the robot alive: face/sound tracking gaze shifts and occasional
small motions such as breathing.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .core import (
    ActionRequest,
    ContactKind,
    EmotionDisplay,
    FaceDetected,
    FacialExpression,
    GazeShift,
    LayerId,
    NEGATIVE_CONTACT_KINDS,
    OutputChannel,
    PhysicalContact,
    SensoryEvent,
    SmallMotion,
    SoundSource,
    Speech,
    ValidationResult,
    speech_duration_ticks,
)

NEUTRAL_EXPRESSION = FacialExpression(label="neutral", valence=0.0)

BREATHING_MOTION = "breathing"
GAZE_SHIFT_MOTION = "gaze_shift"


class SituationKind(str, Enum):
    EMOTION_DISPLAYED = "emotion_displayed"
    CONTACT_POSITIVE = "contact_positive"
    CONTACT_NEGATIVE = "contact_negative"
    NO_INTERACTION = "no_interaction"


@dataclass(frozen=True)
class SocialSituation:
    kind: SituationKind
    valence: Optional[float] = None
    arousal: Optional[float] = None
    label: Optional[str] = None
    intensity: Optional[float] = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        for name in ("valence", "arousal", "label", "intensity"):
            val = getattr(self, name)
            if val is not None:
                d[name] = val
        return d


NO_INTERACTION = SocialSituation(kind=SituationKind.NO_INTERACTION)


@dataclass(frozen=True)
class ReactionPair:
    expression: FacialExpression
    speech: Optional[str] = None


@dataclass
class ReactionRepertoire:
    """Per-situation lists of (expression, optional speech) to randomize among."""

    emotion_displayed: list = field(default_factory=list)
    contact_positive: list = field(default_factory=list)
    contact_negative: list = field(default_factory=list)
    allow_negative_displays: bool = False

    def pairs_for(self, kind: SituationKind) -> list:
        return {
            SituationKind.EMOTION_DISPLAYED: self.emotion_displayed,
            SituationKind.CONTACT_POSITIVE: self.contact_positive,
            SituationKind.CONTACT_NEGATIVE: self.contact_negative,
        }.get(kind, [])

    def validate(self) -> ValidationResult:
        v = []
        for name in ("emotion_displayed", "contact_positive", "contact_negative"):
            pairs = getattr(self, name)
            if not pairs:
                v.append(f"repertoire list {name} must be non-empty")
            if not self.allow_negative_displays:
                for p in pairs:
                    if p.expression.valence < 0:
                        v.append(
                            f"negative-valence pair {p.expression.label!r} in {name} "
                            "while allow_negative_displays is false"
                        )
        return ValidationResult.from_violations(v)


@dataclass(frozen=True)
class IdleMotion:
    motion_id: str
    channels: frozenset
    duration_ticks: int


@dataclass
class IdleMotionSet:
    motions: list
    k_gaze: float = 0.8
    small_motion_rate: float = 0.05  # per-tick start probability while idle

    def validate(self) -> ValidationResult:
        v = []
        ids = {m.motion_id for m in self.motions}
        if not self.motions:
            v.append("idle motion set must be non-empty")
        for required in (BREATHING_MOTION, GAZE_SHIFT_MOTION):
            if required not in ids:
                v.append(f"idle motion set must include {required!r}")
        if not 0.0 < self.k_gaze <= 1.0:
            v.append("k_gaze out of (0,1]")
        if not 0.0 <= self.small_motion_rate <= 1.0:
            v.append("small_motion_rate out of [0,1]")
        return ValidationResult.from_violations(v)


def classify_situation(events: list) -> SocialSituation:
    """Collapse one tick's events into a single situation.

    Precedence: contact > emotion > none; among simultaneous contacts a
    negative one dominates (safety-relevant), intensity is the max over the
    winning polarity.
    """
    contacts = [ev.kind for ev in events if isinstance(ev.kind, PhysicalContact)]
    if contacts:
        negative = [c for c in contacts if c.contact_kind in NEGATIVE_CONTACT_KINDS]
        if negative:
            return SocialSituation(
                kind=SituationKind.CONTACT_NEGATIVE,
                intensity=max(c.intensity for c in negative),
            )
        return SocialSituation(
            kind=SituationKind.CONTACT_POSITIVE,
            intensity=max(c.intensity for c in contacts),
        )
    for ev in events:
        if isinstance(ev.kind, EmotionDisplay):
            k = ev.kind
            return SocialSituation(
                kind=SituationKind.EMOTION_DISPLAYED,
                valence=k.valence,
                arousal=k.arousal,
                label=k.label,
            )
    return NO_INTERACTION


def _sign(x: float) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def compatible_pairs(situation: SocialSituation, rep: ReactionRepertoire) -> list:
    """The subset of the repertoire admissible for this situation."""
    pairs = rep.pairs_for(situation.kind)
    if situation.kind == SituationKind.EMOTION_DISPLAYED:
        want = _sign(situation.valence)
        pairs = [p for p in pairs if _sign(p.expression.valence) == want]
    if not rep.allow_negative_displays:
        pairs = [p for p in pairs if p.expression.valence >= 0]
    return pairs


def select_reaction(
    situation: SocialSituation,
    rep: ReactionRepertoire,
    rng: random.Random,
    priority: int = 60,
    expression_ticks: int = 12,
    chars_per_tick: float = 1.2,
):
    """Choose a reaction uniformly among the compatible repertoire subset.

    Returns (requests, diagnostics). NoInteraction yields no requests (idle
    behavior is a separate path). An empty compatible subset falls back to a
    neutral expression and reports the configuration gap.
    """
    if situation.kind == SituationKind.NO_INTERACTION:
        return [], []

    diagnostics = []
    pairs = compatible_pairs(situation, rep)
    if pairs:
        pair = rng.choice(pairs)
    else:
        diagnostics.append(
            f"no compatible reaction configured for {situation.kind.value}; using neutral"
        )
        pair = ReactionPair(expression=NEUTRAL_EXPRESSION)

    requests = [
        ActionRequest(
            source=LayerId.SOCIAL_REACTION,
            priority=priority,
            channels=frozenset({OutputChannel.FACE}),
            payload=pair.expression,
            duration_ticks=expression_ticks,
        )
    ]
    if pair.speech:
        requests.append(
            ActionRequest(
                source=LayerId.SOCIAL_REACTION,
                priority=priority,
                channels=frozenset({OutputChannel.VOICE}),
                payload=Speech(utterance=pair.speech),
                duration_ticks=speech_duration_ticks(pair.speech, chars_per_tick),
            )
        )
    return requests, diagnostics


def idle_behavior(
    events: list,
    idle: IdleMotionSet,
    rng: random.Random,
    tick,
    priority: int = 60,
    motion_allowed: bool = True,
):
    """Life-like behavior for ticks with no interaction.

    Face tracking beats sound tracking beats random small motions. Gaze
    targets are proportional: the offset toward the stimulus is scaled by
    k_gaze. A centered face therefore yields a zero offset.
    """
    face = next((ev.kind for ev in events if isinstance(ev.kind, FaceDetected)), None)
    sound = next((ev.kind for ev in events if isinstance(ev.kind, SoundSource)), None)

    requests = []
    if face is not None:
        requests.append(
            ActionRequest(
                source=LayerId.SOCIAL_REACTION,
                priority=priority,
                channels=frozenset({OutputChannel.HEAD, OutputChannel.EYES}),
                payload=GazeShift(
                    x=(face.x - 0.5) * idle.k_gaze,
                    y=(face.y - 0.5) * idle.k_gaze,
                ),
                duration_ticks=1,
            )
        )
    elif sound is not None:
        requests.append(
            ActionRequest(
                source=LayerId.SOCIAL_REACTION,
                priority=priority,
                channels=frozenset({OutputChannel.HEAD, OutputChannel.EYES}),
                payload=GazeShift(azimuth_deg=sound.azimuth_deg * idle.k_gaze, elevation_deg=0.0),
                duration_ticks=1,
            )
        )
    elif motion_allowed and rng.random() < idle.small_motion_rate:
        motion = rng.choice(idle.motions)
        requests.append(
            ActionRequest(
                source=LayerId.SOCIAL_REACTION,
                priority=priority,
                channels=motion.channels,
                payload=SmallMotion(motion_id=motion.motion_id),
                duration_ticks=motion.duration_ticks,
            )
        )
    return requests
