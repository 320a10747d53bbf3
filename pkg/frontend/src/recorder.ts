// Microphone capture. MediaRecorder hands back whatever compressed format
// the browser prefers; decodeAudioData turns that into raw float samples
// which the WAV encoder then serializes for the service.

import { downmixToMono } from "./wav.js";

export interface Recording {
  samples: Float32Array;
  sampleRateHz: number;
}

export class Recorder {
  private stream?: MediaStream;
  private recorder?: MediaRecorder;
  private chunks: BlobPart[] = [];

  get recording(): boolean {
    return this.recorder?.state === "recording";
  }

  async start(): Promise<void> {
    this.stream = await navigator.mediaDevices.getUserMedia({
      audio: { channelCount: 1, echoCancellation: true, noiseSuppression: true },
    });
    this.chunks = [];
    this.recorder = new MediaRecorder(this.stream);
    this.recorder.ondataavailable = (e) => this.chunks.push(e.data);
    this.recorder.start();
  }

  async stop(): Promise<Recording> {
    const recorder = this.recorder;
    if (!recorder) {
      throw new Error("not recording");
    }
    await new Promise<void>((resolve) => {
      recorder.onstop = () => resolve();
      recorder.stop();
    });
    this.stream?.getTracks().forEach((t) => t.stop());
    this.recorder = undefined;

    const blob = new Blob(this.chunks, { type: recorder.mimeType || "audio/webm" });
    const ctx = new AudioContext();
    try {
      const decoded = await ctx.decodeAudioData(await blob.arrayBuffer());
      const channels = [];
      for (let c = 0; c < decoded.numberOfChannels; c++) {
        channels.push(decoded.getChannelData(c));
      }
      return { samples: downmixToMono(channels), sampleRateHz: decoded.sampleRate };
    } finally {
      await ctx.close();
    }
  }
}

/** Human guidance for the usual getUserMedia failures. */
export function permissionGuidance(err: unknown): string {
  const name = err instanceof DOMException ? err.name : "";
  if (name === "NotAllowedError") {
    return "Microphone access was denied. Allow it in the browser's site settings, then reload.";
  }
  if (name === "NotFoundError") {
    return "No microphone found. Plug one in or check the input device settings.";
  }
  return `Could not start recording: ${err instanceof Error ? err.message : String(err)}`;
}
