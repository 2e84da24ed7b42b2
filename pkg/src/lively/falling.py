"""Falling reaction layer: balance monitoring and the fall state machine.

The cycle is Monitoring -> FallingResponse -> Fallen -> Recovering ->
Reengaging -> Monitoring. Detection of a fall interrupts everything else,
triggers a damage-avoidance posture, drops joint stiffness and emits a
mitigating speech act; after getting up the robot apologizes and the layer
signals the rest of the engine to restore normal operation.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .core import (
    ActionRequest,
    BalanceReading,
    BODY_CHANNELS,
    EngineSignal,
    LayerId,
    OutputChannel,
    Posture,
    SetStiffness,
    Speech,
    ValidationResult,
    speech_duration_ticks,
)

DAMAGE_AVOIDANCE_POSTURE = "damage_avoidance"
GET_UP_POSTURE = "get_up"

# Ticks spent lying still before attempting to get up. Deliberately a module
# constant, not config: the liveness bound (recover + speech durations + 3)
# must hold for every configuration.
FALLEN_ASSESS_TICKS = 2


class BalanceStatus(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    FALLING = "falling"


class FallPhase(str, Enum):
    MONITORING = "monitoring"
    FALLING_RESPONSE = "falling_response"
    FALLEN = "fallen"
    RECOVERING = "recovering"
    REENGAGING = "reengaging"


@dataclass(frozen=True)
class FallState:
    phase: FallPhase = FallPhase.MONITORING
    ticks_in_state: int = 0
    dwell_ticks: int = 0  # how long the current phase lasts (0 = until trigger)

    def to_dict(self) -> dict:
        return {
            "phase": self.phase.value,
            "ticks_in_state": self.ticks_in_state,
            "dwell_ticks": self.dwell_ticks,
        }


@dataclass
class FallConfig:
    tilt_unstable_deg: float = 20.0
    tilt_falling_deg: float = 45.0
    rate_falling_deg_s: float = 120.0
    stiffness_fall_level: float = 0.1
    recover_duration_ticks: int = 30
    mitigation_utterances: list = field(
        default_factory=lambda: [
            "Oops, I am a little clumsy today!",
            "Whoa! I think I am a bit tired.",
        ]
    )
    apology_utterances: list = field(
        default_factory=lambda: [
            "Sorry about that, shall we continue?",
            "I am fine! Where were we?",
        ]
    )

    def validate(self) -> ValidationResult:
        v = []
        if not 0 < self.tilt_unstable_deg < self.tilt_falling_deg:
            v.append("require 0 < tilt_unstable_deg < tilt_falling_deg")
        if self.rate_falling_deg_s <= 0:
            v.append("rate_falling_deg_s must be positive")
        if not 0.0 <= self.stiffness_fall_level <= 1.0:
            v.append("stiffness_fall_level out of [0,1]")
        if self.recover_duration_ticks < 1:
            v.append("recover_duration_ticks must be positive")
        if not self.mitigation_utterances:
            v.append("mitigation_utterances must be non-empty")
        if not self.apology_utterances:
            v.append("apology_utterances must be non-empty")
        return ValidationResult.from_violations(v)


def classify_balance(reading: BalanceReading, cfg: FallConfig) -> BalanceStatus:
    """Pure threshold classification of one balance reading."""
    if reading.tilt_deg >= cfg.tilt_falling_deg or reading.tilt_rate_deg_s >= cfg.rate_falling_deg_s:
        return BalanceStatus.FALLING
    if reading.tilt_deg >= cfg.tilt_unstable_deg:
        return BalanceStatus.UNSTABLE
    return BalanceStatus.STABLE


def _speech_request(utterance: str, priority: int, chars_per_tick: float) -> ActionRequest:
    return ActionRequest(
        source=LayerId.FALLING_REACTION,
        priority=priority,
        channels=frozenset({OutputChannel.VOICE}),
        payload=Speech(utterance=utterance),
        interruptible=False,
        duration_ticks=speech_duration_ticks(utterance, chars_per_tick),
    )


def step_fall_fsm(
    state: FallState,
    status: BalanceStatus,
    cfg: FallConfig,
    rng: random.Random,
    priority: int = 100,
    chars_per_tick: float = 1.2,
):
    """Advance the fall FSM by one tick.

    Returns (new_state, requests, signals). Safety property: the tick that
    sees Falling while Monitoring emits Interrupt + damage-avoidance posture
    + SetStiffness in that same return value (zero-tick latency).
    """
    requests: list[ActionRequest] = []
    signals: list[EngineSignal] = []

    if state.phase == FallPhase.MONITORING:
        if status == BalanceStatus.FALLING:
            utterance = rng.choice(cfg.mitigation_utterances)
            mitigation = _speech_request(utterance, priority, chars_per_tick)
            dwell = mitigation.duration_ticks
            requests.append(
                ActionRequest(
                    source=LayerId.FALLING_REACTION,
                    priority=priority,
                    channels=BODY_CHANNELS,
                    payload=Posture(posture_id=DAMAGE_AVOIDANCE_POSTURE),
                    interruptible=False,
                    duration_ticks=dwell + FALLEN_ASSESS_TICKS,
                )
            )
            requests.append(
                ActionRequest(
                    source=LayerId.FALLING_REACTION,
                    priority=priority,
                    channels=frozenset({OutputChannel.STIFFNESS_BUS}),
                    payload=SetStiffness(level=cfg.stiffness_fall_level),
                    interruptible=False,
                )
            )
            requests.append(mitigation)
            signals.append(EngineSignal.INTERRUPT)
            return FallState(FallPhase.FALLING_RESPONSE, 0, dwell), requests, signals
        return replace(state, ticks_in_state=state.ticks_in_state + 1), requests, signals

    next_ticks = state.ticks_in_state + 1
    if next_ticks < state.dwell_ticks:
        return replace(state, ticks_in_state=next_ticks), requests, signals

    # Dwell complete: advance along the fixed cycle.
    if state.phase == FallPhase.FALLING_RESPONSE:
        return FallState(FallPhase.FALLEN, 0, FALLEN_ASSESS_TICKS), requests, signals

    if state.phase == FallPhase.FALLEN:
        requests.append(
            ActionRequest(
                source=LayerId.FALLING_REACTION,
                priority=priority,
                channels=BODY_CHANNELS,
                payload=Posture(posture_id=GET_UP_POSTURE),
                interruptible=False,
                duration_ticks=cfg.recover_duration_ticks,
            )
        )
        return (
            FallState(FallPhase.RECOVERING, 0, cfg.recover_duration_ticks),
            requests,
            signals,
        )

    if state.phase == FallPhase.RECOVERING:
        utterance = rng.choice(cfg.apology_utterances)
        apology = _speech_request(utterance, priority, chars_per_tick)
        return FallState(FallPhase.REENGAGING, 0, apology.duration_ticks), [apology], signals

    # REENGAGING: apology finished, hand the session back.
    signals.append(EngineSignal.RESTORE)
    return FallState(FallPhase.MONITORING, 0, 0), requests, signals


def restore_tick_budget(cfg: FallConfig, mitigation: str, apology: str, chars_per_tick: float = 1.2) -> int:
    """Upper bound on ticks from fall detection to the Restore signal."""
    return (
        cfg.recover_duration_ticks
        + speech_duration_ticks(mitigation, chars_per_tick)
        + speech_duration_ticks(apology, chars_per_tick)
        + 3
    )
