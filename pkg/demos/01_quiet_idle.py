"""A minute of nothing: idle small motions and passive blinks.

Runs the eventless scenario and walks through what the engine did to keep
the robot looking alive when nobody interacts with it.
"""

from lively import default_config, default_platform
from lively.config import data_path
from lively.simulator import load_scenario, render_stats, run, stats

scenario = load_scenario(data_path("scenarios/quiet_watch.json"))
log = run(scenario, default_config(), default_platform())

print(f"scenario {scenario.name!r}: {scenario.duration_ticks} ticks, not a single event\n")

motions = [
    (rec["tick"], r["payload"]["motion_id"], r["channels"])
    for rec in log.records
    for r in rec["requests"]
    if r["payload"]["type"] == "small_motion"
]
blinks = [rec["tick"] for rec in log.records if rec["blink"].get("emitted")]

print(f"idle small motions started: {len(motions)}")
for tick, motion, channels in motions[:8]:
    print(f"  tick {tick:>4}  {motion:<12} on {','.join(channels)}")
print(f"  ... and {max(0, len(motions) - 8)} more\n")

print(f"passive blinks: {len(blinks)} at ticks {blinks[:10]} ...")
intervals = [b - a for a, b in zip(blinks, blinks[1:])]
if intervals:
    print(f"mean inter-blink interval: {sum(intervals)/len(intervals):.1f} ticks "
          f"(configured mean: {default_config().blink.passive_mean_interval_ticks})\n")

print(render_stats(stats(log)))
