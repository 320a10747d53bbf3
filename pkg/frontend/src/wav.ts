// Client-side linear-PCM WAV encoding. The service accepts exactly one
// codec, so the browser does the converting, not the server.

/** Mono float samples in [-1, 1] -> 16-bit PCM WAV (canonical 44-byte header). */
export function encodeWavPcm16(samples: Float32Array | number[], sampleRateHz: number): ArrayBuffer {
  if (!Number.isInteger(sampleRateHz) || sampleRateHz <= 0) {
    throw new Error(`sample rate must be a positive integer, got ${sampleRateHz}`);
  }
  const n = samples.length;
  const dataBytes = n * 2;
  const buffer = new ArrayBuffer(44 + dataBytes);
  const view = new DataView(buffer);

  writeAscii(view, 0, "RIFF");
  view.setUint32(4, 36 + dataBytes, true);
  writeAscii(view, 8, "WAVE");
  writeAscii(view, 12, "fmt ");
  view.setUint32(16, 16, true); // fmt chunk size
  view.setUint16(20, 1, true); // format 1 = integer PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRateHz, true);
  view.setUint32(28, sampleRateHz * 2, true); // byte rate
  view.setUint16(32, 2, true); // block align
  view.setUint16(34, 16, true); // bits per sample
  writeAscii(view, 36, "data");
  view.setUint32(40, dataBytes, true);

  for (let i = 0; i < n; i++) {
    const x = Math.round((samples[i] as number) * 32767.0);
    view.setInt16(44 + 2 * i, Math.max(-32768, Math.min(32767, x)), true);
  }
  return buffer;
}

/** Average down to mono; AudioBuffer.getChannelData supplies the inputs. */
export function downmixToMono(channels: Float32Array[]): Float32Array {
  if (channels.length === 0) {
    throw new Error("no channels to downmix");
  }
  const first = channels[0] as Float32Array;
  if (channels.length === 1) {
    return first;
  }
  const out = new Float32Array(first.length);
  for (let i = 0; i < out.length; i++) {
    let acc = 0;
    for (const ch of channels) {
      acc += ch[i] ?? 0;
    }
    out[i] = acc / channels.length;
  }
  return out;
}

function writeAscii(view: DataView, offset: number, text: string): void {
  for (let i = 0; i < text.length; i++) {
    view.setUint8(offset + i, text.charCodeAt(i));
  }
}
