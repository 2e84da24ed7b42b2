"""Anatomy of a fall: interrupt, damage avoidance, stiffness drop, apology.

Replays the tumble scenario and prints the fall state machine's journey
tick by tick, showing that every other layer goes silent until the restore
signal hands the session back.
"""

from lively import default_config, default_platform
from lively.config import data_path
from lively.simulator import load_scenario, run

config = default_config()
log = run(load_scenario(data_path("scenarios/tumble.json")), config, default_platform())

interrupt = next(r["tick"] for r in log.records if "interrupt" in r["signals"])
restore = next(r["tick"] for r in log.records if "restore" in r["signals"])

print(f"fall detected at tick {interrupt}, session restored at tick {restore} "
      f"({restore - interrupt} ticks)\n")

phase = None
for rec in log.records[interrupt - 2 : restore + 2]:
    t = rec["tick"]
    if rec["fall_state"]["phase"] != phase:
        phase = rec["fall_state"]["phase"]
        print(f"tick {t:>4}  phase -> {phase}")
    for r in rec["requests"]:
        p = r["payload"]
        detail = (
            p.get("posture_id") or p.get("utterance") or p.get("label")
            or p.get("level") or p.get("motion_id") or ""
        )
        print(f"          {r['source']:<18} {p['type']:<15} {detail}")
    for sig in rec["signals"]:
        print(f"          signal: {sig.upper()}")

stiff = [
    (rec["tick"], cmd["joint_targets"])
    for rec in log.records
    for cmd in rec["commands"]
    if cmd["channel"] == "stiffness_bus"
]
print(f"\nstiffness commands: {stiff}")
print(f"(configured fall stiffness level: {config.falling.stiffness_fall_level})")

intruders = [
    (rec["tick"], cmd["source"], cmd["channel"])
    for rec in log.records[interrupt:restore]
    for cmd in rec["commands"]
    if cmd["source"] != "falling_reaction"
]
print(f"non-falling commands during the interrupt window: {intruders or 'none'}")
