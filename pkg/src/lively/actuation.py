"""Actuation stage: priority arbitration, morphology mapping, execution tracking.

Per tick, all layers' requests are merged winner-take-all per output channel
(a request must win every channel it claims or it is dropped whole). Winners
are translated into motor commands through a PlatformDescriptor, the only
place that knows the robot's actual joints; behaviors themselves stay
morphology-free.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import (
    ActionRequest,
    Blink,
    FacialExpression,
    GazeShift,
    Gesture,
    LAYER_PRECEDENCE,
    LayerId,
    OutputChannel,
    Posture,
    SetStiffness,
    SmallMotion,
    Speech,
    ValidationResult,
    sorted_channels,
)

log = logging.getLogger(__name__)

_LAYER_RANK = {layer: i for i, layer in enumerate(LAYER_PRECEDENCE)}

# Payloads that are meaningless when split across channels: all claimed
# channels must exist on the platform or the substitution table applies.
_ATOMIC_KINDS = {Gesture.TYPE, Posture.TYPE, Blink.TYPE}

DROP = "drop"


@dataclass
class PriorityTable:
    falling_reaction: int = 100
    social_reaction: int = 60
    conversational_gestures: int = 40
    eye_blink: int = 20

    def for_layer(self, layer: LayerId) -> int:
        return getattr(self, layer.value)

    def validate(self) -> ValidationResult:
        v = []
        others = (self.social_reaction, self.conversational_gestures, self.eye_blink)
        if any(p < 0 for p in (self.falling_reaction, *others)):
            v.append("priorities must be non-negative")
        if self.falling_reaction <= max(others):
            v.append("falling_reaction priority must be strictly maximal")
        return ValidationResult.from_violations(v)


# ---------------------------------------------------------------------------
# Arbitration
# ---------------------------------------------------------------------------


def _strength(req: ActionRequest, arrival: int):
    """Sort key: higher wins. Priority, then layer precedence, then arrival."""
    return (req.priority, -_LAYER_RANK[req.source], -arrival)


def arbitrate_detailed(requests: list):
    """Winner-take-all per channel; losing any claimed channel drops the
    whole request. Returns (winners, dropped) with dropped carrying reasons;
    both preserve arrival order."""
    best = {}
    for i, req in enumerate(requests):
        s = _strength(req, i)
        for ch in req.channels:
            if ch not in best or s > best[ch][0]:
                best[ch] = (s, req)

    winners, dropped = [], []
    for i, req in enumerate(requests):
        lost = [ch for ch in req.channels if best[ch][1] is not req]
        if lost:
            blockers = sorted({best[ch][1].source.value for ch in lost})
            dropped.append(
                (req, f"lost {','.join(c.value for c in sorted_channels(lost))} to {','.join(blockers)}")
            )
        else:
            winners.append(req)
    return winners, dropped


def arbitrate(requests: list) -> list:
    """Surviving requests for this tick (see arbitrate_detailed)."""
    winners, _ = arbitrate_detailed(requests)
    return winners


# ---------------------------------------------------------------------------
# Platform descriptor
# ---------------------------------------------------------------------------


@dataclass
class PlatformDescriptor:
    """Declared robot morphology: which channels exist, their joints, and the
    platform-specific tables translating abstract payloads to joint targets."""

    name: str
    channels: dict = field(default_factory=dict)  # OutputChannel -> [joint names]
    capabilities: dict = field(default_factory=dict)
    expression_table: dict = field(default_factory=dict)  # label -> {joint: pos}
    posture_table: dict = field(default_factory=dict)  # id -> {channel: {joint: pos}}
    small_motion_table: dict = field(default_factory=dict)
    substitutions: dict = field(default_factory=dict)  # payload kind -> kind | "drop"

    def has_channel(self, ch: OutputChannel) -> bool:
        return bool(self.channels.get(ch))

    def joints(self, ch: OutputChannel) -> list:
        return self.channels.get(ch, [])

    def validate(self) -> ValidationResult:
        v = []
        seen = {}
        for ch, joints in self.channels.items():
            for j in joints:
                if j in seen:
                    v.append(f"joint {j!r} appears in both {seen[j].value} and {ch.value}")
                seen[j] = ch
        face = set(self.joints(OutputChannel.FACE))
        for label, targets in self.expression_table.items():
            for j in targets:
                if j not in face:
                    v.append(f"expression {label!r} references unknown face joint {j!r}")
        for table_name in ("posture_table", "small_motion_table"):
            for entry, per_channel in getattr(self, table_name).items():
                for ch_name, targets in per_channel.items():
                    try:
                        joints = set(self.joints(OutputChannel(ch_name)))
                    except ValueError:
                        v.append(f"{table_name}[{entry!r}] names unknown channel {ch_name!r}")
                        continue
                    for j in targets:
                        if j not in joints:
                            v.append(f"{table_name}[{entry!r}] references unknown joint {j!r}")
        known = set(ActionRequestKinds)
        for kind, target in self.substitutions.items():
            if kind not in known:
                v.append(f"substitution for unknown payload kind {kind!r}")
            if target != DROP and target not in known:
                v.append(f"substitution target {target!r} is not a payload kind or 'drop'")
        # acyclic: follow chains, bounded by table size
        for kind in self.substitutions:
            hops, cur = 0, kind
            while cur in self.substitutions and self.substitutions[cur] != DROP:
                cur = self.substitutions[cur]
                hops += 1
                if hops > len(self.substitutions):
                    v.append(f"substitution cycle involving {kind!r}")
                    break
        return ValidationResult.from_violations(v)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "channels": {ch.value: list(j) for ch, j in self.channels.items()},
            "capabilities": dict(self.capabilities),
            "expression_table": self.expression_table,
            "posture_table": self.posture_table,
            "small_motion_table": self.small_motion_table,
            "substitutions": dict(self.substitutions),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlatformDescriptor":
        return cls(
            name=d["name"],
            channels={OutputChannel(ch): list(j) for ch, j in d.get("channels", {}).items()},
            capabilities=dict(d.get("capabilities", {})),
            expression_table=d.get("expression_table", {}),
            posture_table=d.get("posture_table", {}),
            small_motion_table=d.get("small_motion_table", {}),
            substitutions=dict(d.get("substitutions", {})),
        )


ActionRequestKinds = (
    FacialExpression.TYPE,
    Speech.TYPE,
    Gesture.TYPE,
    GazeShift.TYPE,
    Posture.TYPE,
    SetStiffness.TYPE,
    Blink.TYPE,
    SmallMotion.TYPE,
)


# ---------------------------------------------------------------------------
# Motor mapping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MotorCommand:
    channel: OutputChannel
    joint_targets: dict  # joint name -> normalized position in [0,1]
    duration_ticks: int
    source: LayerId
    start_offset_ticks: int = 0
    annotation: str = ""

    def to_dict(self) -> dict:
        return {
            "channel": self.channel.value,
            "joint_targets": dict(self.joint_targets),
            "duration_ticks": self.duration_ticks,
            "source": self.source.value,
            "start_offset_ticks": self.start_offset_ticks,
            "annotation": self.annotation,
        }


def resample_targets(values: list, joint_count: int) -> list:
    """Fit a normalized target vector onto however many joints the platform has."""
    if joint_count == 0:
        return []
    vec = np.asarray(values, dtype=float)
    if len(vec) == joint_count:
        return [float(x) for x in vec]
    if len(vec) == 1:
        return [float(vec[0])] * joint_count
    xs = np.linspace(0.0, 1.0, joint_count)
    xp = np.linspace(0.0, 1.0, len(vec))
    return [float(x) for x in np.interp(xs, xp, vec)]


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _gaze_vector(payload: GazeShift) -> list:
    if payload.azimuth_deg is not None:
        yaw = 0.5 + payload.azimuth_deg / 360.0
        pitch = 0.5 + (payload.elevation_deg or 0.0) / 180.0
    else:
        yaw = 0.5 + (payload.x or 0.0)
        pitch = 0.5 + (payload.y or 0.0)
    return [_clamp01(yaw), _clamp01(pitch)]


def map_to_motor(
    request: ActionRequest,
    platform: PlatformDescriptor,
    gesture_library: dict | None = None,
    diagnostics: list | None = None,
) -> list:
    """Translate one surviving request into platform motor commands.

    Atomic payloads (gesture/posture/blink) need every claimed channel on the
    platform, otherwise the substitution table decides a fallback payload or
    a silent (logged) drop. Divisible payloads map onto whichever claimed
    channels exist.
    """
    diags = diagnostics if diagnostics is not None else []
    payload = request.payload
    kind = payload.TYPE

    if kind in _ATOMIC_KINDS and not all(platform.has_channel(c) for c in request.channels):
        return _substitute(request, platform, gesture_library, diags)

    present = [c for c in sorted_channels(request.channels) if platform.has_channel(c)]
    if not present:
        diags.append(f"{kind} dropped: no claimed channel on platform {platform.name}")
        return []

    commands: list[MotorCommand] = []

    if isinstance(payload, FacialExpression):
        targets = platform.expression_table.get(payload.label)
        if targets is None:
            diags.append(f"expression label {payload.label!r} not mapped on {platform.name}; using neutral")
            targets = platform.expression_table.get("neutral", {})
        commands.append(
            MotorCommand(
                channel=OutputChannel.FACE,
                joint_targets=dict(targets),
                duration_ticks=request.duration_ticks,
                source=request.source,
                annotation=payload.label,
            )
        )

    elif isinstance(payload, Speech):
        joints = platform.joints(OutputChannel.VOICE)
        commands.append(
            MotorCommand(
                channel=OutputChannel.VOICE,
                joint_targets={j: 1.0 for j in joints},
                duration_ticks=request.duration_ticks,
                source=request.source,
                annotation=payload.utterance,
            )
        )

    elif isinstance(payload, Gesture):
        spec = (gesture_library or {}).get(payload.gesture_id)
        if spec is None:
            diags.append(f"gesture {payload.gesture_id!r} not in library; dropped")
            return []
        duration = request.duration_ticks
        offsets = {}
        for kf in spec.keyframes:
            offset = min(duration - 1, round(kf.fraction * duration))
            offsets[offset] = kf  # same-tick collision: later keyframe wins
        ordered = sorted(offsets)
        for idx, offset in enumerate(ordered):
            kf = offsets[offset]
            until = ordered[idx + 1] if idx + 1 < len(ordered) else duration
            for ch in present:
                vec = kf.targets.get(ch.value)
                if vec is None:
                    continue
                commands.append(
                    MotorCommand(
                        channel=ch,
                        joint_targets=dict(
                            zip(platform.joints(ch), resample_targets(vec, len(platform.joints(ch))))
                        ),
                        duration_ticks=max(1, until - offset),
                        source=request.source,
                        start_offset_ticks=offset,
                        annotation=payload.gesture_id,
                    )
                )

    elif isinstance(payload, GazeShift):
        vec = _gaze_vector(payload)
        for ch in present:
            joints = platform.joints(ch)
            commands.append(
                MotorCommand(
                    channel=ch,
                    joint_targets=dict(zip(joints, resample_targets(vec, len(joints)))),
                    duration_ticks=request.duration_ticks,
                    source=request.source,
                    annotation="gaze",
                )
            )

    elif isinstance(payload, Posture):
        table = platform.posture_table.get(payload.posture_id)
        if table is None:
            diags.append(f"posture {payload.posture_id!r} not mapped on {platform.name}; dropped")
            return []
        for ch in present:
            targets = table.get(ch.value)
            if targets is None:
                continue
            commands.append(
                MotorCommand(
                    channel=ch,
                    joint_targets=dict(targets),
                    duration_ticks=request.duration_ticks,
                    source=request.source,
                    annotation=payload.posture_id,
                )
            )

    elif isinstance(payload, SetStiffness):
        joints = platform.joints(OutputChannel.STIFFNESS_BUS)
        commands.append(
            MotorCommand(
                channel=OutputChannel.STIFFNESS_BUS,
                joint_targets={j: payload.level for j in joints},
                duration_ticks=request.duration_ticks,
                source=request.source,
                annotation=f"stiffness={payload.level}",
            )
        )

    elif isinstance(payload, Blink):
        m = payload.morphology
        closed = 0.5 if m.amplitude.value == "half" else 1.0
        joints = platform.joints(OutputChannel.EYELIDS)
        commands.append(
            MotorCommand(
                channel=OutputChannel.EYELIDS,
                joint_targets={j: closed for j in joints},
                duration_ticks=request.duration_ticks,
                source=request.source,
                annotation=f"blink x{m.count} {m.amplitude.value} {m.duration_ms}ms",
            )
        )

    elif isinstance(payload, SmallMotion):
        table = platform.small_motion_table.get(payload.motion_id, {})
        for ch in present:
            targets = table.get(ch.value)
            if targets is None:
                targets = {j: 0.55 for j in platform.joints(ch)}
            commands.append(
                MotorCommand(
                    channel=ch,
                    joint_targets=dict(targets),
                    duration_ticks=request.duration_ticks,
                    source=request.source,
                    annotation=payload.motion_id,
                )
            )

    for cmd in commands:
        for j in cmd.joint_targets:
            if j not in platform.joints(cmd.channel):
                raise ValueError(
                    f"command references joint {j!r} absent from channel {cmd.channel.value}"
                )
    return commands


def _substitute(request, platform, gesture_library, diags) -> list:
    kind = request.payload.TYPE
    target = platform.substitutions.get(kind, DROP)
    if target == DROP:
        diags.append(f"{kind} unsupported on {platform.name}: dropped per substitution table")
        return []
    if target == FacialExpression.TYPE:
        sub = ActionRequest(
            source=request.source,
            priority=request.priority,
            channels=frozenset({OutputChannel.FACE}),
            payload=FacialExpression(label=kind, valence=0.0),
            interruptible=request.interruptible,
            duration_ticks=request.duration_ticks,
        )
        diags.append(f"{kind} substituted with facial_expression on {platform.name}")
        return map_to_motor(sub, platform, gesture_library, diags)
    diags.append(f"{kind} substitution to {target!r} not realizable: dropped")
    return []


# ---------------------------------------------------------------------------
# Execution tracking and feedback
# ---------------------------------------------------------------------------


class FeedbackKind(str, Enum):
    STARTED = "started"
    COMPLETED = "completed"
    PREEMPTED = "preempted"


@dataclass(frozen=True)
class FeedbackEvent:
    kind: FeedbackKind
    tick: int
    request_id: str
    source: LayerId
    channels: tuple
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "tick": self.tick,
            "request_id": self.request_id,
            "source": self.source.value,
            "channels": [c.value for c in self.channels],
            "reason": self.reason,
        }


@dataclass
class Program:
    """One surviving request being executed over multiple ticks."""

    request_id: str
    source: LayerId
    priority: int
    channels: frozenset
    start_tick: int
    duration_ticks: int
    by_offset: dict  # offset -> [MotorCommand]
    tag: str = ""  # payload kind
    interruptible: bool = True
    speech_id: str = ""  # ties gestures to the speech act they accompany


class Executor:
    """Tracks in-flight programs, resolves occupancy conflicts, emits
    Started/Completed/Preempted feedback to the owning layers."""

    def __init__(self):
        self.programs: list[Program] = []

    def occupied(self, ch: OutputChannel):
        for p in self.programs:
            if ch in p.channels:
                return p
        return None

    def admit(self, program: Program, tick: int, feedback: list, dropped: list) -> bool:
        """Start a program unless a stronger in-flight one holds a channel.

        A new winner preempts in-flight programs of lower-or-equal priority;
        a higher-priority in-flight program blocks the newcomer instead.
        """
        holders = {id(p): p for ch in program.channels for p in [self.occupied(ch)] if p}
        for holder in holders.values():
            if program.priority < holder.priority:
                dropped.append((program.request_id, f"channel_busy:{holder.request_id}"))
                return False
        for holder in holders.values():
            self._preempt(holder, tick, feedback, reason=f"preempted_by:{program.request_id}")
        self.programs.append(program)
        feedback.append(
            FeedbackEvent(
                kind=FeedbackKind.STARTED,
                tick=tick,
                request_id=program.request_id,
                source=program.source,
                channels=tuple(sorted_channels(program.channels)),
            )
        )
        return True

    def _preempt(self, program: Program, tick: int, feedback: list, reason: str):
        self.programs.remove(program)
        feedback.append(
            FeedbackEvent(
                kind=FeedbackKind.PREEMPTED,
                tick=tick,
                request_id=program.request_id,
                source=program.source,
                channels=tuple(sorted_channels(program.channels)),
                reason=reason,
            )
        )

    def cancel(self, tick: int, feedback: list, *, source=None, keep_source=None, reason: str):
        """Cancel in-flight programs by owner (or all except keep_source)."""
        for p in list(self.programs):
            if source is not None and p.source != source:
                continue
            if keep_source is not None and p.source == keep_source:
                continue
            self._preempt(p, tick, feedback, reason=reason)

    def cancel_speech(self, speech_id: str, tick: int, feedback: list):
        for p in list(self.programs):
            if p.speech_id == speech_id:
                self._preempt(p, tick, feedback, reason=f"speech_ended:{speech_id}")

    def complete_due(self, tick: int, feedback: list):
        """Retire programs whose duration elapsed (frees their channels)."""
        for p in list(self.programs):
            if tick - p.start_tick >= p.duration_ticks:
                self.programs.remove(p)
                feedback.append(
                    FeedbackEvent(
                        kind=FeedbackKind.COMPLETED,
                        tick=tick,
                        request_id=p.request_id,
                        source=p.source,
                        channels=tuple(sorted_channels(p.channels)),
                    )
                )

    def emit_due(self, tick: int) -> list:
        commands = []
        for p in self.programs:
            commands.extend(p.by_offset.get(tick - p.start_tick, []))
        return commands

    def has_tag(self, source: LayerId, tag: str) -> bool:
        return any(p.source == source and p.tag == tag for p in self.programs)

    def speech_playing(self) -> bool:
        return any(p.tag == "speech" for p in self.programs)
