"""Story time: co-verbal open-palm gestures scheduled inside speech acts.

Runs the storytime scenario with gesture probability forced to 1 so every
speech act is accompanied, then shows the placement of each gesture inside
its speech interval and the social reactions woven between them.
"""

from lively import default_config, default_platform
from lively.config import data_path
from lively.simulator import load_scenario, run

config = default_config()
config.gestures.p_gesture = 1.0

log = run(load_scenario(data_path("scenarios/storytime.json")), config, default_platform())

speech_spans = {}
for rec in log.records:
    for d in rec["deliberative"]:
        if d["kind"]["type"] == "speech_act_request":
            k = d["kind"]
            speech_spans[k["speech_id"]] = (rec["tick"], rec["tick"] + k["duration_ticks"])

print("speech acts and their gestures:")
for rec in log.records:
    for r in rec["requests"]:
        if r["payload"]["type"] != "gesture":
            continue
        sid = r["speech_id"]
        s0, s1 = speech_spans[sid]
        g0, g1 = rec["tick"], rec["tick"] + r["duration_ticks"]
        bar = [" "] * (s1 - s0)
        for i in range(g0 - s0, g1 - s0):
            bar[i] = "#"
        print(f"  {sid}: speech [{s0:>4},{s1:>4})  gesture {r['payload']['gesture_id']:<18} "
              f"[{g0:>4},{g1:>4})  |{''.join(bar)}|")

reactions = [
    (rec["tick"], r["payload"]["label"], r["payload"]["valence"])
    for rec in log.records
    for r in rec["requests"]
    if r["source"] == "social_reaction" and r["payload"]["type"] == "facial_expression"
]
print("\nsocial reactions along the way:")
for tick, label, valence in reactions:
    print(f"  tick {tick:>4}  {label:<12} valence {valence:+.1f}")
