"""Eye blink layer: probabilistic blinks on communicative behaviors plus a
passive maintenance blink process.

Each communicative facial behavior (gaze shift start, speech boundaries,
expression change, head turn start) carries its own blink probability. A
separate passive process with exponentially distributed inter-blink
intervals keeps the eyes from "staring" during long uneventful stretches; a
due passive blink is suppressed and rescheduled when a triggered blink
happened recently (refractory window).

The shipped probability table is a placeholder configuration, not a
reproduction of published human blinking statistics.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from .core import BlinkAmplitude, BlinkMorphology, ValidationResult


class CommunicativeBehaviorKind(str, Enum):
    GAZE_SHIFT_START = "gaze_shift_start"
    SPEECH_START = "speech_start"
    SPEECH_END = "speech_end"
    EXPRESSION_CHANGE = "expression_change"
    HEAD_TURN_START = "head_turn_start"


DEFAULT_P_BLINK = {
    CommunicativeBehaviorKind.GAZE_SHIFT_START: 0.5,
    CommunicativeBehaviorKind.SPEECH_START: 0.4,
    CommunicativeBehaviorKind.SPEECH_END: 0.4,
    CommunicativeBehaviorKind.EXPRESSION_CHANGE: 0.3,
    CommunicativeBehaviorKind.HEAD_TURN_START: 0.5,
}


@dataclass
class BlinkModelConfig:
    p_blink: dict = field(default_factory=lambda: dict(DEFAULT_P_BLINK))
    passive_mean_interval_ticks: float = 40.0
    refractory_ticks: int = 3
    p_multiple: float = 0.1
    p_half: float = 0.2
    duration_ms_range: tuple = (100, 400)

    def validate(self) -> ValidationResult:
        v = []
        for kind in CommunicativeBehaviorKind:
            p = self.p_blink.get(kind)
            if p is None:
                v.append(f"p_blink missing entry for {kind.value}")
            elif not 0.0 <= p <= 1.0:
                v.append(f"p_blink[{kind.value}] out of [0,1]")
        for extra in set(self.p_blink) - set(CommunicativeBehaviorKind):
            v.append(f"p_blink has unknown behavior kind {extra!r}")
        if self.passive_mean_interval_ticks <= 0:
            v.append("passive_mean_interval_ticks must be positive")
        if self.refractory_ticks < 0:
            v.append("refractory_ticks must be non-negative")
        if not 0.0 <= self.p_multiple <= 1.0:
            v.append("p_multiple out of [0,1]")
        if not 0.0 <= self.p_half <= 1.0:
            v.append("p_half out of [0,1]")
        lo, hi = self.duration_ms_range
        if not (0 < lo <= hi):
            v.append("duration_ms_range must satisfy 0 < min <= max")
        return ValidationResult.from_violations(v)


def sample_morphology(cfg: BlinkModelConfig, rng: random.Random) -> BlinkMorphology:
    """Draw a blink shape: single unless p_multiple fires (then 2 or 3
    equiprobably), half amplitude with probability p_half, duration uniform
    over the configured millisecond range."""
    count = 1
    if rng.random() < cfg.p_multiple:
        count = rng.choice([2, 3])
    amplitude = BlinkAmplitude.HALF if rng.random() < cfg.p_half else BlinkAmplitude.FULL
    lo, hi = cfg.duration_ms_range
    duration_ms = rng.randint(int(lo), int(hi))
    return BlinkMorphology(count=count, amplitude=amplitude, duration_ms=duration_ms)


def on_communicative_behavior(
    kind: CommunicativeBehaviorKind, cfg: BlinkModelConfig, rng: random.Random
) -> Optional[BlinkMorphology]:
    """Roll the per-kind blink probability; sample a morphology on success."""
    if rng.random() < cfg.p_blink[kind]:
        return sample_morphology(cfg, rng)
    return None


@dataclass(frozen=True)
class PassiveBlinkState:
    next_due: float  # tick index (fractional accumulator keeps the mean exact)
    last_triggered_tick: Optional[int] = None

    def to_dict(self) -> dict:
        return {"next_due": self.next_due, "last_triggered_tick": self.last_triggered_tick}


def initial_passive_state(cfg: BlinkModelConfig, rng: random.Random) -> PassiveBlinkState:
    return PassiveBlinkState(next_due=rng.expovariate(1.0 / cfg.passive_mean_interval_ticks))


def passive_step(
    tick,
    state: PassiveBlinkState,
    cfg: BlinkModelConfig,
    rng: random.Random,
):
    """Advance the passive blink process by one tick.

    Returns (state, morphology or None). Intervals accumulate fractionally so
    the observed mean inter-blink interval converges to the configured mean.
    A due blink inside the refractory window after a triggered blink is
    suppressed and rescheduled from now.
    """
    index = tick.index
    if index < state.next_due:
        return state, None
    if (
        state.last_triggered_tick is not None
        and index - state.last_triggered_tick < cfg.refractory_ticks
    ):
        due = index + rng.expovariate(1.0 / cfg.passive_mean_interval_ticks)
        return replace(state, next_due=due), None
    due = state.next_due + rng.expovariate(1.0 / cfg.passive_mean_interval_ticks)
    if due <= index:
        due = index + rng.expovariate(1.0 / cfg.passive_mean_interval_ticks)
    return replace(state, next_due=due), sample_morphology(cfg, rng)


def note_triggered_blink(state: PassiveBlinkState, tick_index: int) -> PassiveBlinkState:
    return replace(state, last_triggered_tick=tick_index)
