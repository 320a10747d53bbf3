// Pure view-model builders. Nothing here computes a verdict or a score:
// every displayed number and pass/fail flag is copied from a service
// response, which is what the contract tests pin down.

import type { AttemptRecord, Prediction, RuleInfo } from "./types.js";
import { MAX_CLIP_S, MIN_CLIP_S } from "./types.js";

export interface RuleCard {
  key: string;
  name: string;
  description: string;
  probability: number;
  passed: boolean;
}

export type Trend = "up" | "down" | "flat";

export interface HistoryRow {
  timestampMs: number;
  durationS: number;
  audioUrl: string;
  cards: RuleCard[];
}

export interface HistoryView {
  empty: boolean;
  rows: HistoryRow[]; // newest first
  trends: (Trend | null)[]; // per rule, null until two attempts exist
}

/** One card per rule, in the order the service declared. */
export function ruleCards(prediction: Prediction, rules: RuleInfo[]): RuleCard[] {
  const ordered = [...rules].sort((a, b) => a.index - b.index);
  return ordered.map((rule) => {
    const probability = prediction.probabilities[rule.index];
    const passed = prediction.verdicts[rule.index];
    if (probability === undefined || passed === undefined) {
      throw new Error(`prediction is missing rule index ${rule.index}`);
    }
    return {
      key: rule.key,
      name: rule.name,
      description: rule.description,
      probability,
      passed,
    };
  });
}

/** null when acceptable, otherwise a message matching the service's limits. */
export function durationProblem(durationS: number): string | null {
  if (durationS < MIN_CLIP_S) {
    return `recording too short: ${durationS.toFixed(2)} s; the service needs at least ${MIN_CLIP_S} s`;
  }
  if (durationS > MAX_CLIP_S) {
    return `recording too long: ${durationS.toFixed(2)} s; the service accepts at most ${MAX_CLIP_S} s`;
  }
  return null;
}

export function historyView(attempts: AttemptRecord[], rules: RuleInfo[]): HistoryView {
  const rows = [...attempts]
    .sort((a, b) => b.timestampMs - a.timestampMs)
    .map((attempt) => ({
      timestampMs: attempt.timestampMs,
      durationS: attempt.durationS,
      audioUrl: attempt.audioUrl,
      cards: ruleCards(attempt.prediction, rules),
    }));
  return { empty: rows.length === 0, rows, trends: trends(attempts, rules) };
}

/** Per-rule arrow comparing the latest attempt's probability to the previous one. */
export function trends(attempts: AttemptRecord[], rules: RuleInfo[]): (Trend | null)[] {
  const ordered = [...attempts].sort((a, b) => a.timestampMs - b.timestampMs);
  return rules.map((rule) => {
    if (ordered.length < 2) {
      return null;
    }
    const latest = ordered[ordered.length - 1]!.prediction.probabilities[rule.index];
    const previous = ordered[ordered.length - 2]!.prediction.probabilities[rule.index];
    if (latest === undefined || previous === undefined) {
      return null;
    }
    if (latest > previous) {
      return "up";
    }
    return latest < previous ? "down" : "flat";
  });
}
