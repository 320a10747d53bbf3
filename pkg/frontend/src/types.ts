// Shapes mirror the scoring service's JSON responses; field names are the
// service's, not ours, so arrays here index rules in the /rules order.

export interface RuleInfo {
  index: number;
  key: string;
  name: string;
  description: string;
}

export interface RulesResponse {
  ordering: string;
  rules: RuleInfo[];
}

export interface Prediction {
  clip_token: string;
  probabilities: number[];
  verdicts: boolean[];
  model_id: string;
  dsp_config_hash: string;
}

export interface HealthResponse {
  status: "ready" | "degraded";
  model_id: string | null;
  uptime_s: number;
}

export interface AttemptRecord {
  timestampMs: number;
  durationS: number;
  prediction: Prediction;
  // object URL (or any resolvable reference) to the recorded clip for replay
  audioUrl: string;
}

// client-side guard mirroring the service's clip length contract
export const MIN_CLIP_S = 0.25;
export const MAX_CLIP_S = 30.0;
