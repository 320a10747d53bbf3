// In-browser session history and the submit flow. History lives only in
// memory for the lifetime of the page; there is no server-side persistence.

import type { ApiClient } from "./api.js";
import type { AttemptRecord, Prediction } from "./types.js";
import { durationProblem } from "./cards.js";
import { encodeWavPcm16 } from "./wav.js";

/** Append keeping the ordered-by-timestamp invariant (stable for ties). */
export function appendAttempt(history: AttemptRecord[], attempt: AttemptRecord): AttemptRecord[] {
  const next = [...history, attempt];
  next.sort((a, b) => a.timestampMs - b.timestampMs);
  return next;
}

export interface SubmitDeps {
  client: ApiClient;
  now?: () => number;
  makeAudioUrl?: (wav: ArrayBuffer) => string;
}

/**
 * Encode, submit, and record one attempt. Resolves to the grown history;
 * rejects without touching it when the clip is out of bounds or the
 * service refuses it.
 */
export async function submitRecording(
  samples: Float32Array,
  sampleRateHz: number,
  history: AttemptRecord[],
  deps: SubmitDeps,
): Promise<{ history: AttemptRecord[]; attempt: AttemptRecord }> {
  const durationS = samples.length / sampleRateHz;
  const problem = durationProblem(durationS);
  if (problem !== null) {
    throw new Error(problem);
  }
  const wav = encodeWavPcm16(samples, sampleRateHz);
  const prediction: Prediction = await deps.client.predict(wav);
  const attempt: AttemptRecord = {
    timestampMs: (deps.now ?? Date.now)(),
    durationS,
    prediction,
    audioUrl: (deps.makeAudioUrl ?? defaultAudioUrl)(wav),
  };
  return { history: appendAttempt(history, attempt), attempt };
}

/** Serializes submissions: at most one prediction request in flight. */
export class SubmitGate {
  private busy = false;

  get inFlight(): boolean {
    return this.busy;
  }

  async run<T>(task: () => Promise<T>): Promise<T> {
    if (this.busy) {
      throw new Error("a submission is already in flight");
    }
    this.busy = true;
    try {
      return await task();
    } finally {
      this.busy = false;
    }
  }
}

function defaultAudioUrl(wav: ArrayBuffer): string {
  return URL.createObjectURL(new Blob([wav], { type: "audio/wav" }));
}
