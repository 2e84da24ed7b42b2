"""Gesture layer: library validation, scheduling distributions, containment."""

import random

from scipy.stats import chisquare

from lively.core import OutputChannel, SpeechActRequest
from lively.gestures import (
    GestureConfig,
    GestureSpec,
    Keyframe,
    OPEN_HAND_SUPINE,
    on_speech,
    validate_library,
)


def make_spec(gesture_id="g", family=OPEN_HAND_SUPINE, duration=20, channels=None, fractions=(0.0, 0.5, 1.0)):
    channels = channels or frozenset({OutputChannel.RIGHT_ARM})
    return GestureSpec(
        gesture_id=gesture_id,
        family=family,
        channels=channels,
        keyframes=tuple(
            Keyframe(fraction=f, targets={ch.value: [0.5, 0.5, 0.5] for ch in channels})
            for f in fractions
        ),
        duration_ticks=duration,
    )


def speech(duration=50, speech_id="s", utterance="hello there"):
    return SpeechActRequest(speech_id=speech_id, utterance=utterance, duration_ticks=duration)


class TestValidateLibrary:
    def test_small_supine_library_ok(self):
        lib = [make_spec(f"g{i}") for i in range(4)]
        assert validate_library(lib).ok

    def test_palm_down_family_rejected(self):
        r = validate_library([make_spec(family="open_hand_prone")])
        assert not r.ok
        assert any("open_hand_supine" in v for v in r.violations)

    def test_non_increasing_fractions_rejected(self):
        r = validate_library([make_spec(fractions=(0.0, 0.5, 0.5, 1.0))])
        assert not r.ok
        assert any("strictly increasing" in v for v in r.violations)

    def test_first_last_fraction_pinned(self):
        assert not validate_library([make_spec(fractions=(0.1, 1.0))]).ok
        assert not validate_library([make_spec(fractions=(0.0, 0.9))]).ok

    def test_targets_out_of_range_rejected(self):
        bad = GestureSpec(
            gesture_id="bad",
            family=OPEN_HAND_SUPINE,
            channels=frozenset({OutputChannel.RIGHT_ARM}),
            keyframes=(
                Keyframe(0.0, {"right_arm": [0.5]}),
                Keyframe(1.0, {"right_arm": [1.4]}),
            ),
            duration_ticks=10,
        )
        assert not validate_library([bad]).ok

    def test_duplicate_ids_rejected(self):
        assert not validate_library([make_spec("same"), make_spec("same")]).ok


class TestOnSpeech:
    def test_p_zero_never_gestures(self):
        cfg = GestureConfig(p_gesture=0.0, min_gap_ticks=0, library=[make_spec()])
        for seed in range(100):
            assert on_speech(speech(), cfg, random.Random(seed), 0) is None

    def test_p_one_always_gestures_with_offset_in_range(self):
        # spec example: speech 50, gesture 20 -> offset in [0, 30]
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=0, library=[make_spec(duration=20)])
        for seed in range(200):
            planned = on_speech(speech(50), cfg, random.Random(seed), speech_start_tick=100)
            assert planned is not None
            offset = planned.start_tick - 100
            assert 0 <= offset <= 30
            assert planned.request.duration_ticks == 20

    def test_offset_distribution_uniform(self):
        # oracle: uniform over the 31 admissible offsets, chi-square over 10k seeds
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=0, library=[make_spec(duration=20)])
        rng = random.Random(99)
        counts = [0] * 31
        for _ in range(10_000):
            planned = on_speech(speech(50), cfg, rng, 0)
            counts[planned.start_tick] += 1
        _, p = chisquare(counts)
        assert p > 0.01

    def test_accompaniment_rate_converges(self):
        cfg = GestureConfig(p_gesture=0.7, min_gap_ticks=0, library=[make_spec()])
        rng = random.Random(5)
        n = 10_000
        hits = sum(on_speech(speech(), cfg, rng, t * 100) is not None for t in range(n))
        assert abs(hits / n - 0.7) <= 0.02

    def test_long_gesture_truncated_to_speech(self):
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=0, library=[make_spec(duration=80)])
        planned = on_speech(speech(30), cfg, random.Random(1), 10)
        assert planned.start_tick == 10  # no slack: offset forced to 0
        assert planned.request.duration_ticks == 30

    def test_containment_always(self):
        cfg = GestureConfig(
            p_gesture=1.0,
            min_gap_ticks=0,
            library=[make_spec("a", duration=20), make_spec("b", duration=45)],
        )
        rng = random.Random(3)
        for i in range(2000):
            dur = 10 + (i % 70)
            start = i * 7
            planned = on_speech(speech(dur), cfg, rng, start)
            g0 = planned.start_tick
            g1 = g0 + planned.request.duration_ticks
            assert start <= g0 and g1 <= start + dur

    def test_min_gap_shrinks_window(self):
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=10, library=[make_spec(duration=20)])
        # previous gesture ended at tick 95; speech starts at 100 for 50 ticks
        for seed in range(100):
            planned = on_speech(
                speech(50), cfg, random.Random(seed), speech_start_tick=100, last_gesture_end_tick=95
            )
            assert planned.start_tick >= 105

    def test_min_gap_can_forbid_entirely(self):
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=100, library=[make_spec(duration=20)])
        planned = on_speech(
            speech(50), cfg, random.Random(0), speech_start_tick=100, last_gesture_end_tick=95
        )
        assert planned is None

    def test_gesture_choice_uniform_over_library(self):
        lib = [make_spec(f"g{i}") for i in range(4)]
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=0, library=lib)
        rng = random.Random(17)
        counts = {}
        for t in range(8000):
            planned = on_speech(speech(), cfg, rng, t * 100)
            counts[planned.spec_id] = counts.get(planned.spec_id, 0) + 1
        assert set(counts) == {f"g{i}" for i in range(4)}
        _, p = chisquare(list(counts.values()))
        assert p > 0.01

    def test_empty_library_silent(self):
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=0, library=[])
        assert on_speech(speech(), cfg, random.Random(0), 0) is None


class TestNoOverlapInvariant:
    def test_sequential_reservations_never_overlap(self):
        # simulate the engine's reservation discipline across many speech acts
        cfg = GestureConfig(p_gesture=1.0, min_gap_ticks=0, library=[make_spec(duration=25)])
        rng = random.Random(8)
        last_end = -(10**9)
        intervals = []
        t = 0
        for _ in range(500):
            planned = on_speech(speech(60), cfg, rng, t, last_gesture_end_tick=last_end)
            if planned is not None:
                s, e = planned.start_tick, planned.start_tick + planned.request.duration_ticks
                intervals.append((s, e))
                last_end = e
            t += rng.randint(10, 90)
        for (s1, e1), (s2, e2) in zip(intervals, intervals[1:]):
            assert e1 <= s2
