"""Scenario-driven simulation: scripted sessions, replayable logs, statistics.

Scenarios are data files, not code: a timeline of classified child/environment
events, deliberative speech acts and supervisory commands. Running one yields
a SessionLog, a line-delimited record of everything the engine decided per
tick; feeding the same scenario (same seed, same config) reproduces the log
byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import EngineConfig
from .core import (
    BalanceReading,
    LayerId,
    SensoryEvent,
    Tick,
    ValidationResult,
    canonical_json,
    deliberative_from_dict,
    deliberative_kind_from_dict,
    DeliberativeInput,
    event_kind_from_dict,
    validate_deliberative,
    validate_event,
)
from .engine import Engine

LOG_FORMAT = "lively-session-log/v1"


@dataclass(frozen=True)
class TimelineEntry:
    tick: int
    event: dict | None = None  # sensory event kind dict
    deliberative: dict | None = None
    command: dict | None = None


@dataclass
class Scenario:
    name: str
    seed: int
    duration_ticks: int
    timeline: list = field(default_factory=list)
    description: str = ""

    def validate(self, config: EngineConfig | None = None) -> ValidationResult:
        v = []
        if self.duration_ticks < 1:
            v.append("duration_ticks must be positive")
        last = -1
        balance_ticks = set()
        for i, entry in enumerate(self.timeline):
            where = f"timeline[{i}]"
            if entry.tick < last:
                v.append(f"{where}: timeline not sorted by tick")
            last = entry.tick
            if not 0 <= entry.tick < self.duration_ticks:
                v.append(f"{where}: tick {entry.tick} outside [0,{self.duration_ticks})")
            slots = [entry.event, entry.deliberative, entry.command]
            if sum(s is not None for s in slots) != 1:
                v.append(f"{where}: exactly one of event/deliberative/command required")
                continue
            if entry.event is not None:
                try:
                    kind = event_kind_from_dict(entry.event)
                except (ValueError, TypeError, KeyError) as e:
                    v.append(f"{where}: {e}")
                    continue
                r = validate_event(SensoryEvent(tick=Tick(max(entry.tick, 0)), kind=kind))
                v.extend(f"{where}: {x}" for x in r.violations)
                if isinstance(kind, BalanceReading):
                    if entry.tick in balance_ticks:
                        v.append(f"{where}: second balance_reading at tick {entry.tick}")
                    balance_ticks.add(entry.tick)
            elif entry.deliberative is not None:
                try:
                    kind = deliberative_kind_from_dict(entry.deliberative)
                except (ValueError, TypeError, KeyError) as e:
                    v.append(f"{where}: {e}")
                    continue
                r = validate_deliberative(DeliberativeInput(kind=kind))
                v.extend(f"{where}: {x}" for x in r.violations)
            else:
                cmd = entry.command
                ctype = cmd.get("type")
                if ctype == "set_layer":
                    try:
                        LayerId(cmd.get("layer"))
                    except ValueError:
                        v.append(f"{where}: unknown layer {cmd.get('layer')!r}")
                    if not isinstance(cmd.get("enabled"), bool):
                        v.append(f"{where}: set_layer needs boolean 'enabled'")
                elif ctype not in ("broadcast_interrupt", "restore"):
                    v.append(f"{where}: unknown command type {ctype!r}")
        return ValidationResult.from_violations(v)

    def to_dict(self) -> dict:
        entries = []
        for e in self.timeline:
            d = {"tick": e.tick}
            if e.event is not None:
                d["event"] = e.event
            if e.deliberative is not None:
                d["deliberative"] = e.deliberative
            if e.command is not None:
                d["command"] = e.command
            entries.append(d)
        return {
            "name": self.name,
            "seed": self.seed,
            "duration_ticks": self.duration_ticks,
            "description": self.description,
            "timeline": entries,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(
            name=d["name"],
            seed=d["seed"],
            duration_ticks=d["duration_ticks"],
            description=d.get("description", ""),
            timeline=[
                TimelineEntry(
                    tick=e["tick"],
                    event=e.get("event"),
                    deliberative=e.get("deliberative"),
                    command=e.get("command"),
                )
                for e in d.get("timeline", [])
            ],
        )


def load_scenario(path) -> Scenario:
    with open(path) as f:
        return Scenario.from_dict(json.load(f))


@dataclass
class SessionLog:
    meta: dict
    records: list

    def to_jsonl(self) -> str:
        lines = [canonical_json({"meta": self.meta})]
        lines.extend(canonical_json(r) for r in self.records)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "SessionLog":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        meta = json.loads(lines[0])["meta"]
        return cls(meta=meta, records=[json.loads(ln) for ln in lines[1:]])

    def save(self, path):
        with open(path, "w") as f:
            f.write(self.to_jsonl())

    @classmethod
    def load(cls, path) -> "SessionLog":
        with open(path) as f:
            return cls.from_jsonl(f.read())


def _apply_command(engine: Engine, cmd: dict):
    ctype = cmd.get("type")
    if ctype == "set_layer":
        engine.set_layer_enabled(cmd["layer"], cmd["enabled"])
    elif ctype == "broadcast_interrupt":
        engine.broadcast_interrupt()
    elif ctype == "restore":
        engine.restore()


def run(scenario: Scenario, config: EngineConfig, platform, seed_override=None) -> SessionLog:
    """Execute a scenario tick by tick. Deterministic in (seed, config, platform)."""
    result = scenario.validate(config)
    if not result.ok:
        raise ValueError("invalid scenario: " + "; ".join(result.violations))
    seed = scenario.seed if seed_override is None else seed_override
    engine = Engine(config, platform, seed)

    by_tick: dict[int, list] = {}
    for entry in scenario.timeline:
        by_tick.setdefault(entry.tick, []).append(entry)

    records = []
    for t in range(scenario.duration_ticks):
        events, deliberative = [], []
        for entry in by_tick.get(t, ()):
            if entry.command is not None:
                _apply_command(engine, entry.command)
            elif entry.event is not None:
                events.append(
                    SensoryEvent(
                        tick=Tick(index=t, tick_duration_ms=config.tick_duration_ms),
                        kind=event_kind_from_dict(entry.event),
                    )
                )
            else:
                deliberative.append(deliberative_from_dict({"kind": entry.deliberative}))
        records.append(engine.step(events, deliberative).to_dict())

    meta = {
        "format": LOG_FORMAT,
        "scenario": scenario.name,
        "seed": seed,
        "duration_ticks": scenario.duration_ticks,
        "config_digest": config.digest(),
        "platform": platform.name,
    }
    return SessionLog(meta=meta, records=records)


def replay(log: SessionLog, config: EngineConfig, platform) -> SessionLog:
    """Re-run a logged session (scripted or interactive) from its own records."""
    engine = Engine(config, platform, log.meta["seed"])
    records = []
    for rec in log.records:
        for cmd in rec.get("supervisory", []):
            _apply_command(engine, cmd)
        events = [
            SensoryEvent(
                tick=Tick(**ev["tick"]),
                kind=event_kind_from_dict(ev["kind"]),
            )
            for ev in rec.get("events", [])
        ]
        deliberative = [deliberative_from_dict(d) for d in rec.get("deliberative", [])]
        records.append(engine.step(events, deliberative).to_dict())
    return SessionLog(meta=dict(log.meta), records=records)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def stats(log: SessionLog) -> dict:
    """Summary statistics of one session log.

    The report is the main check surface for the statistical behavior
    contracts: blink rates per communicative behavior, passive blink
    intervals, gesture accompaniment, reaction latencies, fall recovery.
    """
    records = log.records

    requests_by_layer = {layer.value: 0 for layer in LayerId}
    dropped_by_reason: dict[str, int] = {}
    blink_occ: dict[str, int] = {}
    blink_hits: dict[str, int] = {}
    blink_counts = {"triggered": 0, "passive": 0}
    passive_ticks = []
    gesture_by_speech: dict[str, int] = {}
    speech_acts = 0
    falls = []  # (interrupt_tick, restore_tick|None)
    latencies = []
    pending_onsets = []

    prev_situation_kind = "no_interaction"
    for rec in records:
        t = rec["tick"]
        for req in rec["requests"]:
            requests_by_layer[req["source"]] += 1
            if req["payload"]["type"] == "gesture" and "speech_id" in req:
                gesture_by_speech[req["speech_id"]] = gesture_by_speech.get(req["speech_id"], 0) + 1
        for d in rec["arbitration"]["dropped"]:
            key = "arbitration:" + d["reason"].split(" to ")[-1]
            dropped_by_reason[key] = dropped_by_reason.get(key, 0) + 1
        for d in rec["admission_dropped"]:
            dropped_by_reason["channel_busy"] = dropped_by_reason.get("channel_busy", 0) + 1
        for d in rec.get("unrealized", []):
            dropped_by_reason["platform"] = dropped_by_reason.get("platform", 0) + 1

        blink = rec.get("blink") or {}
        for dec in blink.get("decisions", []):
            blink_occ[dec["kind"]] = blink_occ.get(dec["kind"], 0) + 1
            if dec["blinked"]:
                blink_hits[dec["kind"]] = blink_hits.get(dec["kind"], 0) + 1
        if blink.get("emitted") == "triggered":
            blink_counts["triggered"] += 1
        elif blink.get("emitted") == "passive":
            blink_counts["passive"] += 1
            passive_ticks.append(t)

        for d in rec.get("deliberative", []):
            if d["kind"]["type"] == "speech_act_request":
                speech_acts += 1

        for sig in rec.get("signals", []):
            if sig == "interrupt":
                falls.append([t, None])
            elif sig == "restore" and falls and falls[-1][1] is None:
                falls[-1][1] = t

        situation = rec.get("situation") or {"kind": "no_interaction"}
        kind = situation["kind"]
        if kind != "no_interaction" and kind != prev_situation_kind:
            pending_onsets.append(t)
        prev_situation_kind = kind
        if pending_onsets and any(
            req["source"] == "social_reaction"
            and req["payload"]["type"] in ("facial_expression", "speech")
            for req in rec["requests"]
        ):
            latencies.extend(t - onset for onset in pending_onsets)
            pending_onsets.clear()

    blink_rates = {
        kind: {
            "occurrences": blink_occ[kind],
            "blinks": blink_hits.get(kind, 0),
            "p_empirical": blink_hits.get(kind, 0) / blink_occ[kind],
        }
        for kind in sorted(blink_occ)
    }
    intervals = np.diff(passive_ticks) if len(passive_ticks) > 1 else np.array([])

    report = {
        "ticks": len(records),
        "requests_by_layer": requests_by_layer,
        "dropped_by_reason": dict(sorted(dropped_by_reason.items())),
        "blink": {
            "counts": blink_counts,
            "per_behavior": blink_rates,
            "passive_interval_mean": float(intervals.mean()) if intervals.size else None,
            "passive_interval_count": int(intervals.size),
        },
        "gestures": {
            "speech_acts": speech_acts,
            "accompanied": len(gesture_by_speech),
            "accompaniment_rate": (len(gesture_by_speech) / speech_acts) if speech_acts else None,
        },
        "falls": {
            "count": len(falls),
            "recovery_ticks": [
                (end - start) for start, end in falls if end is not None
            ],
        },
        "reaction_latency": {
            "count": len(latencies),
            "mean": float(np.mean(latencies)) if latencies else None,
            "max": int(np.max(latencies)) if latencies else None,
        },
    }
    return report


def render_stats(report: dict) -> str:
    """Human-readable table for a stats report."""
    lines = []
    add = lines.append
    add(f"ticks                     {report['ticks']}")
    add("requests by layer:")
    for layer, n in report["requests_by_layer"].items():
        add(f"  {layer:<26} {n}")
    add("dropped by reason:")
    if not report["dropped_by_reason"]:
        add("  (none)")
    for reason, n in report["dropped_by_reason"].items():
        add(f"  {reason:<26} {n}")
    b = report["blink"]
    add(f"blinks: triggered={b['counts']['triggered']} passive={b['counts']['passive']}")
    for kind, row in b["per_behavior"].items():
        add(
            f"  p(blink|{kind:<18}) = {row['p_empirical']:.3f} "
            f"({row['blinks']}/{row['occurrences']})"
        )
    if b["passive_interval_mean"] is not None:
        add(
            f"  passive inter-blink mean  {b['passive_interval_mean']:.2f} ticks "
            f"over {b['passive_interval_count']} intervals"
        )
    g = report["gestures"]
    if g["speech_acts"]:
        add(
            f"gestures: {g['accompanied']}/{g['speech_acts']} speech acts accompanied "
            f"(rate {g['accompaniment_rate']:.3f})"
        )
    f = report["falls"]
    add(f"falls: {f['count']} recovery_ticks={f['recovery_ticks']}")
    r = report["reaction_latency"]
    if r["count"]:
        add(f"reaction latency: mean={r['mean']:.2f} max={r['max']} over {r['count']} onsets")
    return "\n".join(lines) + "\n"
