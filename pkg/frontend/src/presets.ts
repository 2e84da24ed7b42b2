/**
 * Preset events matching the therapist's in-session vocabulary. Each button
 * on the console injects exactly one of these.
 */

export interface Preset {
  id: string;
  label: string;
  event: Record<string, unknown>;
}

let speechCounter = 0;

export const PRESETS: Preset[] = [
  {
    id: "child_smiles",
    label: "child smiles",
    event: { type: "emotion_display", valence: 0.8, arousal: 0.6, label: "smile" },
  },
  {
    id: "child_sad",
    label: "child looks sad",
    event: { type: "emotion_display", valence: -0.6, arousal: 0.4, label: "sad" },
  },
  {
    id: "affective_touch",
    label: "affective touch",
    event: { type: "physical_contact", contact_kind: "affective_touch", intensity: 0.6 },
  },
  {
    id: "child_hits",
    label: "child hits robot",
    event: { type: "physical_contact", contact_kind: "hit", intensity: 0.7 },
  },
  {
    id: "push_with_tilt",
    label: "push (robot tilts!)",
    event: { type: "balance_reading", tilt_deg: 60, tilt_rate_deg_s: 200 },
  },
  {
    id: "face_appears",
    label: "face appears",
    event: { type: "face_detected", x: 0.5, y: 0.5 },
  },
  {
    id: "sound_left",
    label: "sound from the left",
    event: { type: "sound_source", azimuth_deg: -60 },
  },
  {
    id: "sound_right",
    label: "sound from the right",
    event: { type: "sound_source", azimuth_deg: 60 },
  },
];

export function speechActPreset(utterance = "Let me tell you something interesting."): Record<string, unknown> {
  speechCounter += 1;
  return {
    type: "speech_act_request",
    speech_id: `console-${speechCounter}`,
    utterance,
    duration_ticks: 40,
  };
}

/** Tests need reproducible speech ids. */
export function resetSpeechCounter(): void {
  speechCounter = 0;
}
