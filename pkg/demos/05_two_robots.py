"""Same brain, two bodies: platform independence in action.

Runs the identical scenario on a full humanoid (eyelids, legs) and on a
desk robot (face display, no eyelids, no legs) and diffs what the actuation
stage did with the same stream of winning requests.
"""

from lively import default_platform
from lively.config import data_path, default_config
from lively.simulator import load_scenario, run

scenario = load_scenario(data_path("scenarios/storytime.json"))
config = default_config()

for platform_file in ("platform_humanoid.json", "platform_deskbot.json"):
    platform = default_platform(platform_file)
    log = run(scenario, config, platform)

    by_channel = {}
    substituted = 0
    dropped = 0
    for rec in log.records:
        for cmd in rec["commands"]:
            by_channel[cmd["channel"]] = by_channel.get(cmd["channel"], 0) + 1
            if cmd["channel"] == "face" and cmd["annotation"] == "blink":
                substituted += 1
        dropped += len(rec["unrealized"])

    print(f"\n=== {platform.name} ===")
    print(f"capabilities: {platform.capabilities}")
    print("commands per channel:")
    for ch, n in sorted(by_channel.items()):
        print(f"  {ch:<14} {n}")
    if substituted:
        print(f"blinks rendered as face-display animations: {substituted}")
    if dropped:
        print(f"requests dropped for missing hardware: {dropped}")
