"""The blink model under a statistical microscope.

Samples the triggered-blink probabilities for every communicative behavior
kind, the passive inter-blink distribution, and the blink morphology mix,
comparing each against its configured value.
"""

import random

from lively import default_config
from lively.blink import (
    CommunicativeBehaviorKind,
    initial_passive_state,
    on_communicative_behavior,
    passive_step,
    sample_morphology,
)
from lively.core import Tick

cfg = default_config().blink
rng = random.Random(7)

print("triggered blink rates (10,000 occurrences per behavior kind):")
for kind in CommunicativeBehaviorKind:
    hits = sum(on_communicative_behavior(kind, cfg, rng) is not None for _ in range(10_000))
    print(f"  {kind.value:<18} configured {cfg.p_blink[kind]:.2f}   empirical {hits/10_000:.3f}")

state = initial_passive_state(cfg, rng)
ticks = []
for t in range(60_000):
    state, morph = passive_step(Tick(t), state, cfg, rng)
    if morph is not None:
        ticks.append(t)
intervals = [b - a for a, b in zip(ticks, ticks[1:])]
mean = sum(intervals) / len(intervals)
print(f"\npassive process over 60,000 quiet ticks: {len(ticks)} blinks, "
      f"mean interval {mean:.1f} ticks (configured {cfg.passive_mean_interval_ticks})")

counts = {}
halves = 0
for _ in range(10_000):
    m = sample_morphology(cfg, rng)
    counts[m.count] = counts.get(m.count, 0) + 1
    halves += m.amplitude.value == "half"
print(f"\nmorphology mix over 10,000 samples (p_multiple={cfg.p_multiple}, p_half={cfg.p_half}):")
for count in sorted(counts):
    print(f"  {count}x blinks: {counts[count]/10_000:.3f}")
print(f"  half amplitude: {halves/10_000:.3f}")
