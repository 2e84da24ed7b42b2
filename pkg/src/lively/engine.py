"""Tick scheduler: distributes inputs to enabled layers, relays interrupt and
restore signals, arbitrates the collected requests and drives actuation.

Layer invocation order is fixed (falling, social, gestures, blink) so a fall
interrupt raised this tick silences the other layers before they run. Every
layer draws from its own seeded RNG stream, so toggling one layer never
perturbs another layer's random sequence.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field

from . import blink as blinkmod
from . import falling as fallmod
from . import gestures as gestmod
from . import social as socmod
from .actuation import (
    Executor,
    Program,
    arbitrate_detailed,
    map_to_motor,
)
from .config import EngineConfig
from .core import (
    ActionRequest,
    BalanceReading,
    Blink,
    DeliberativeInput,
    EngineSignal,
    GazeShift,
    LayerId,
    OutputChannel,
    SensoryEvent,
    Speech,
    SpeechActEnd,
    SpeechActRequest,
    Tick,
    event_to_dict,
    deliberative_to_dict,
    request_to_dict,
    validate_deliberative,
    validate_frame,
)

# Fixed order in which communicative behaviors are checked for blink triggers.
_BEHAVIOR_ORDER = [
    blinkmod.CommunicativeBehaviorKind.SPEECH_START,
    blinkmod.CommunicativeBehaviorKind.SPEECH_END,
    blinkmod.CommunicativeBehaviorKind.HEAD_TURN_START,
    blinkmod.CommunicativeBehaviorKind.GAZE_SHIFT_START,
    blinkmod.CommunicativeBehaviorKind.EXPRESSION_CHANGE,
]


def layer_seed(master_seed: int, layer: LayerId) -> int:
    """Stable per-layer substream seed derived from the session seed."""
    digest = hashlib.sha256(f"{master_seed}:{layer.value}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _rng_digest(rng: random.Random) -> str:
    return hashlib.sha256(repr(rng.getstate()).encode()).hexdigest()[:12]


@dataclass
class ActiveSpeech:
    speech_id: str
    utterance: str
    start_tick: int
    end_tick: int  # exclusive


@dataclass
class TickRecord:
    """Everything that happened in one tick; serializes into the session log."""

    tick: int
    events: list = field(default_factory=list)
    deliberative: list = field(default_factory=list)
    supervisory: list = field(default_factory=list)
    enabled: dict = field(default_factory=dict)
    interrupt: bool = False
    fall_state: dict = field(default_factory=dict)
    situation: dict | None = None
    requests: list = field(default_factory=list)
    signals: list = field(default_factory=list)
    arbitration: dict = field(default_factory=dict)
    admission_dropped: list = field(default_factory=list)
    unrealized: list = field(default_factory=list)
    commands: list = field(default_factory=list)
    feedback: list = field(default_factory=list)
    blink: dict = field(default_factory=dict)
    speech_active: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tick": self.tick,
            "events": self.events,
            "deliberative": self.deliberative,
            "supervisory": self.supervisory,
            "enabled": self.enabled,
            "interrupt": self.interrupt,
            "fall_state": self.fall_state,
            "situation": self.situation,
            "requests": self.requests,
            "signals": self.signals,
            "arbitration": self.arbitration,
            "admission_dropped": self.admission_dropped,
            "unrealized": self.unrealized,
            "commands": self.commands,
            "feedback": self.feedback,
            "blink": self.blink,
            "speech_active": self.speech_active,
            "diagnostics": self.diagnostics,
        }


class Engine:
    """One session's reactive engine. Single-threaded; step() is the only
    way time advances. Supervisory mutations (layer toggles, interrupts)
    queue up and take effect at the start of the next step."""

    def __init__(self, config: EngineConfig, platform, seed: int):
        result = config.validate()
        if not result.ok:
            raise ValueError("invalid config: " + "; ".join(result.violations))
        result = platform.validate()
        if not result.ok:
            raise ValueError("invalid platform: " + "; ".join(result.violations))

        self.config = config
        self.platform = platform
        self.seed = seed
        self.tick_index = 0

        self.enabled = {layer: True for layer in LayerId}
        self._pending_toggles: list = []
        self._pending_interrupt = False
        self.interrupt_flag = False

        self.rng = {layer: random.Random(layer_seed(seed, layer)) for layer in LayerId}

        # Layer states
        self.fall_state = fallmod.FallState()
        self.prev_situation = socmod.NO_INTERACTION
        self.passive_blink = blinkmod.initial_passive_state(
            config.blink, self.rng[LayerId.EYE_BLINK]
        )
        self.pending_gestures: list = []
        self.last_gesture_end = -(10**9)

        # Cross-tick trackers feeding the blink trigger extraction
        self.active_speeches: dict[str, ActiveSpeech] = {}
        self.prev_voice_active = False
        self.prev_gaze_active = False
        self.displayed_label = "neutral"

        self.executor = Executor()
        self.gesture_library = {g.gesture_id: g for g in config.gestures.library}
        if not self.gesture_library:
            self._startup_diagnostics = ["gesture library is empty; speech acts get no gestures"]
        else:
            self._startup_diagnostics = []

    # -- supervisory surface -------------------------------------------------

    def set_layer_enabled(self, layer, on: bool):
        """Queue a layer toggle; effective from the next step."""
        if not isinstance(layer, LayerId):
            layer = LayerId(layer)  # raises ValueError for unknown ids
        self._pending_toggles.append((layer, bool(on)))

    def broadcast_interrupt(self):
        """Cancel every layer's in-flight behavior at the next step and hold
        the engine interrupted until restore."""
        self._pending_interrupt = True

    def restore(self):
        self.interrupt_flag = False

    def state_snapshot(self) -> dict:
        """Serializable engine state; equal snapshots <=> equal future behavior."""
        return {
            "tick": self.tick_index,
            "rng_seed": self.seed,
            "interrupt_flag": self.interrupt_flag,
            "enabled": {layer.value: self.enabled[layer] for layer in LayerId},
            "layer_states": {
                "falling": self.fall_state.to_dict(),
                "social": {"prev_situation": self.prev_situation.to_dict()},
                "gestures": {
                    "last_gesture_end": self.last_gesture_end,
                    "pending": [
                        {"start": p.start_tick, "speech_id": p.speech_id, "spec": p.spec_id}
                        for p in self.pending_gestures
                    ],
                },
                "blink": self.passive_blink.to_dict(),
            },
            "rng_digest": {layer.value: _rng_digest(self.rng[layer]) for layer in LayerId},
        }

    # -- helpers ---------------------------------------------------------------

    def _apply_pending(self, record: TickRecord, feedback: list):
        t = self.tick_index
        for layer, on in self._pending_toggles:
            was = self.enabled[layer]
            self.enabled[layer] = on
            record.supervisory.append({"type": "set_layer", "layer": layer.value, "enabled": on})
            if was and not on:
                self.executor.cancel(t, feedback, source=layer, reason="layer_disabled")
                self._reset_layer(layer, record)
        self._pending_toggles.clear()

        if self._pending_interrupt:
            self._pending_interrupt = False
            record.supervisory.append({"type": "broadcast_interrupt"})
            if not self.interrupt_flag:
                self.interrupt_flag = True
            self.executor.cancel(t, feedback, reason="broadcast_interrupt")
            self._cancel_transients()

    def _reset_layer(self, layer: LayerId, record: TickRecord):
        if layer == LayerId.FALLING_REACTION:
            mid_fall = self.fall_state.phase != fallmod.FallPhase.MONITORING
            self.fall_state = fallmod.FallState()
            if mid_fall and self.interrupt_flag:
                self.interrupt_flag = False
                record.signals.append(EngineSignal.RESTORE.value)
        elif layer == LayerId.SOCIAL_REACTION:
            self.prev_situation = socmod.NO_INTERACTION
        elif layer == LayerId.CONVERSATIONAL_GESTURES:
            self.pending_gestures.clear()
        # Blink keeps its passive schedule: it is a timer, not an in-flight behavior.

    def _cancel_transients(self):
        """Drop multi-tick intentions that an interrupt invalidates."""
        self.pending_gestures.clear()
        self.active_speeches.clear()
        self.prev_situation = socmod.NO_INTERACTION

    def _voice_active(self, winners) -> bool:
        if self.active_speeches:
            return True
        if self.executor.speech_playing():
            return True
        return any(isinstance(w.payload, Speech) for w in winners)

    # -- the tick --------------------------------------------------------------

    def step(self, events: list = (), deliberative: list = ()) -> TickRecord:
        events = list(events)
        deliberative = list(deliberative)
        frame = validate_frame(events)
        if not frame.ok:
            raise ValueError("invalid events: " + "; ".join(frame.violations))
        for ev in events:
            if ev.tick.index != self.tick_index:
                raise ValueError(
                    f"event stamped for tick {ev.tick.index} fed into tick {self.tick_index}"
                )
        for inp in deliberative:
            r = validate_deliberative(inp)
            if not r.ok:
                raise ValueError("invalid deliberative input: " + "; ".join(r.violations))

        t = self.tick_index
        tick = Tick(index=t, tick_duration_ms=self.config.tick_duration_ms)
        record = TickRecord(tick=t)
        record.diagnostics.extend(self._startup_diagnostics)
        self._startup_diagnostics = []
        feedback: list = []

        self._apply_pending(record, feedback)
        record.enabled = {layer.value: self.enabled[layer] for layer in LayerId}
        record.events = [event_to_dict(ev) for ev in events]
        record.deliberative = [deliberative_to_dict(d) for d in deliberative]

        self.executor.complete_due(t, feedback)
        self._expire_speeches(t)

        requests: list[ActionRequest] = []
        signals: list[EngineSignal] = []
        planned_meta: dict[int, gestmod.PlannedGesture] = {}

        # 1. Falling reaction: must run first so its interrupt silences the rest.
        if self.enabled[LayerId.FALLING_REACTION]:
            reading = next(
                (ev.kind for ev in events if isinstance(ev.kind, BalanceReading)), None
            )
            status = (
                fallmod.classify_balance(reading, self.config.falling)
                if reading is not None
                else fallmod.BalanceStatus.STABLE
            )
            self.fall_state, fall_requests, fall_signals = fallmod.step_fall_fsm(
                self.fall_state,
                status,
                self.config.falling,
                self.rng[LayerId.FALLING_REACTION],
                priority=self.config.priorities.falling_reaction,
                chars_per_tick=self.config.speech_chars_per_tick,
            )
            requests.extend(fall_requests)
            signals.extend(fall_signals)
            if EngineSignal.INTERRUPT in fall_signals:
                self.interrupt_flag = True
                self.executor.cancel(
                    t, feedback, keep_source=LayerId.FALLING_REACTION, reason="fall_interrupt"
                )
                self._cancel_transients()
            if EngineSignal.RESTORE in fall_signals:
                self.interrupt_flag = False
        record.fall_state = self.fall_state.to_dict()

        situation = None
        if not self.interrupt_flag:
            # 2. Social reaction
            if self.enabled[LayerId.SOCIAL_REACTION]:
                situation = socmod.classify_situation(events)
                if situation.kind != socmod.SituationKind.NO_INTERACTION:
                    if situation != self.prev_situation:
                        reacts, diags = socmod.select_reaction(
                            situation,
                            self.config.social.repertoire,
                            self.rng[LayerId.SOCIAL_REACTION],
                            priority=self.config.priorities.social_reaction,
                            expression_ticks=self.config.social.expression_duration_ticks,
                            chars_per_tick=self.config.speech_chars_per_tick,
                        )
                        requests.extend(reacts)
                        record.diagnostics.extend(diags)
                else:
                    motion_allowed = not self.executor.has_tag(
                        LayerId.SOCIAL_REACTION, "small_motion"
                    )
                    requests.extend(
                        socmod.idle_behavior(
                            events,
                            self.config.social.idle,
                            self.rng[LayerId.SOCIAL_REACTION],
                            tick,
                            priority=self.config.priorities.social_reaction,
                            motion_allowed=motion_allowed,
                        )
                    )
                self.prev_situation = situation
            else:
                self.prev_situation = socmod.NO_INTERACTION

            # 3. Conversational gestures
            self._ingest_deliberative(deliberative, t, record, feedback)
            if self.enabled[LayerId.CONVERSATIONAL_GESTURES]:
                due = [p for p in self.pending_gestures if p.start_tick == t]
                self.pending_gestures = [p for p in self.pending_gestures if p.start_tick > t]
                for planned in due:
                    planned_meta[len(requests)] = planned
                    requests.append(planned.request)
        else:
            self._drop_deliberative_while_interrupted(deliberative, record)
        record.situation = situation.to_dict() if situation is not None else None

        # Arbitration of everything produced so far; blink only ever adds an
        # eyelid request, which no other layer can claim, so the final outcome
        # is this plus at most one blink winner.
        ids = {}
        for i, req in enumerate(requests):
            ids[i] = f"t{t}:{req.source.value}:{i}"
        winners, dropped = arbitrate_detailed(requests)

        # 4. Eye blink, driven by this tick's arbitrated outputs
        blink_record: dict = {}
        if not self.interrupt_flag and self.enabled[LayerId.EYE_BLINK]:
            blink_req, blink_record = self._blink_step(tick, winners)
            if blink_req is not None:
                ids[len(requests)] = f"t{t}:{blink_req.source.value}:{len(requests)}"
                requests.append(blink_req)
                winners, dropped = arbitrate_detailed(requests)
        record.blink = blink_record

        id_of = {id(req): ids[i] for i, req in enumerate(requests)}
        record.requests = [dict(request_to_dict(r), id=ids[i]) for i, r in enumerate(requests)]
        for i, planned in planned_meta.items():
            record.requests[i]["speech_id"] = planned.speech_id
        record.signals.extend(s.value for s in signals)
        record.arbitration = {
            "winners": [id_of[id(w)] for w in winners],
            "dropped": [{"id": id_of[id(r)], "reason": reason} for r, reason in dropped],
        }

        # 5. Actuation: map winners, admit against in-flight programs, execute.
        admission_dropped: list = []
        for i, req in enumerate(requests):
            if not any(w is req for w in winners):
                continue
            rid = id_of[id(req)]
            diags: list = []
            commands = map_to_motor(req, self.platform, self.gesture_library, diags)
            record.diagnostics.extend(diags)
            if not commands:
                record.unrealized.append(
                    {"id": rid, "reason": diags[-1] if diags else "no commands"}
                )
                continue
            by_offset: dict = {}
            for cmd in commands:
                by_offset.setdefault(cmd.start_offset_ticks, []).append(cmd)
            speech_id = ""
            if i in planned_meta:
                speech_id = planned_meta[i].speech_id
            program = Program(
                request_id=rid,
                source=req.source,
                priority=req.priority,
                channels=req.channels,
                start_tick=t,
                duration_ticks=req.duration_ticks,
                by_offset=by_offset,
                tag=req.payload.TYPE,
                interruptible=req.interruptible,
                speech_id=speech_id,
            )
            self.executor.admit(program, t, feedback, admission_dropped)

        record.admission_dropped = [{"id": rid, "reason": r} for rid, r in admission_dropped]
        record.commands = [c.to_dict() for c in self.executor.emit_due(t)]
        record.feedback = [f.to_dict() for f in feedback]
        record.interrupt = self.interrupt_flag
        record.speech_active = sorted(self.active_speeches)

        # Trackers for next tick's edge detection
        self.prev_voice_active = self._voice_active(winners)
        self.prev_gaze_active = any(isinstance(w.payload, GazeShift) for w in winners)
        for w in winners:
            if w.payload.TYPE == "facial_expression":
                self.displayed_label = w.payload.label

        self.tick_index += 1
        return record

    # -- per-layer plumbing ------------------------------------------------------

    def _expire_speeches(self, t: int):
        for sid in [s for s, sp in self.active_speeches.items() if sp.end_tick <= t]:
            del self.active_speeches[sid]

    def _ingest_deliberative(self, deliberative, t: int, record: TickRecord, feedback: list):
        for inp in deliberative:
            k = inp.kind
            if isinstance(k, SpeechActRequest):
                if k.speech_id in self.active_speeches:
                    record.diagnostics.append(f"duplicate speech_id {k.speech_id!r} ignored")
                    continue
                self.active_speeches[k.speech_id] = ActiveSpeech(
                    speech_id=k.speech_id,
                    utterance=k.utterance,
                    start_tick=t,
                    end_tick=t + k.duration_ticks,
                )
                if self.enabled[LayerId.CONVERSATIONAL_GESTURES]:
                    if self.gesture_library:
                        planned = gestmod.on_speech(
                            k,
                            self.config.gestures,
                            self.rng[LayerId.CONVERSATIONAL_GESTURES],
                            speech_start_tick=t,
                            last_gesture_end_tick=self.last_gesture_end,
                            priority=self.config.priorities.conversational_gestures,
                        )
                        if planned is not None:
                            self.pending_gestures.append(planned)
                            self.last_gesture_end = (
                                planned.start_tick + planned.request.duration_ticks
                            )
            elif isinstance(k, SpeechActEnd):
                sp = self.active_speeches.pop(k.speech_id, None)
                if sp is None:
                    record.diagnostics.append(
                        f"speech_act_end for unknown speech_id {k.speech_id!r}"
                    )
                    continue
                # Gestures bound to a speech act never outlast it.
                self.pending_gestures = [
                    p for p in self.pending_gestures if p.speech_id != k.speech_id
                ]
                self.executor.cancel_speech(k.speech_id, t, feedback)

    def _drop_deliberative_while_interrupted(self, deliberative, record: TickRecord):
        for inp in deliberative:
            record.diagnostics.append(
                f"deliberative input dropped during fall interrupt: {inp.kind.TYPE}"
            )

    def _blink_step(self, tick: Tick, winners):
        """Extract communicative behaviors from this tick's winners, roll the
        per-kind blink probabilities, then advance the passive process."""
        cfg = self.config.blink
        rng = self.rng[LayerId.EYE_BLINK]
        t = tick.index

        voice_now = self._voice_active(winners)
        gaze_winner = next((w for w in winners if isinstance(w.payload, GazeShift)), None)
        expr_winner = next(
            (w for w in winners if w.payload.TYPE == "facial_expression"), None
        )

        behaviors = []
        if voice_now and not self.prev_voice_active:
            behaviors.append(blinkmod.CommunicativeBehaviorKind.SPEECH_START)
        if self.prev_voice_active and not voice_now:
            behaviors.append(blinkmod.CommunicativeBehaviorKind.SPEECH_END)
        if gaze_winner is not None and not self.prev_gaze_active:
            if OutputChannel.HEAD in gaze_winner.channels:
                behaviors.append(blinkmod.CommunicativeBehaviorKind.HEAD_TURN_START)
            else:
                behaviors.append(blinkmod.CommunicativeBehaviorKind.GAZE_SHIFT_START)
        if expr_winner is not None and expr_winner.payload.label != self.displayed_label:
            behaviors.append(blinkmod.CommunicativeBehaviorKind.EXPRESSION_CHANGE)
        behaviors.sort(key=_BEHAVIOR_ORDER.index)

        decisions = []
        triggered = None
        for kind in behaviors:
            morph = blinkmod.on_communicative_behavior(kind, cfg, rng)
            decisions.append({"kind": kind.value, "blinked": morph is not None})
            if morph is not None and triggered is None:
                triggered = morph
        if triggered is not None:
            self.passive_blink = blinkmod.note_triggered_blink(self.passive_blink, t)

        self.passive_blink, passive = blinkmod.passive_step(tick, self.passive_blink, cfg, rng)
        passive_due_handled = passive is not None

        morph = triggered if triggered is not None else passive
        emitted = None
        if triggered is not None:
            emitted = "triggered"
        elif passive is not None:
            emitted = "passive"

        blink_record = {
            "decisions": decisions,
            "passive_fired": passive_due_handled,
            "emitted": emitted,
        }
        if morph is None:
            return None, blink_record
        duration_ticks = max(
            1, round(morph.count * morph.duration_ms / self.config.tick_duration_ms)
        )
        req = ActionRequest(
            source=LayerId.EYE_BLINK,
            priority=self.config.priorities.eye_blink,
            channels=frozenset({OutputChannel.EYELIDS}),
            payload=Blink(morphology=morph),
            duration_ticks=duration_ticks,
        )
        return req, blink_record
