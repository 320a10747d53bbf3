// Page wiring: one record/stop button, three rule cards, attempt history.
// All state transitions go through here; the modules this imports stay pure.

import { ApiClient, ApiError } from "./api.js";
import { historyView, ruleCards } from "./cards.js";
import { Recorder, permissionGuidance } from "./recorder.js";
import { SubmitGate, submitRecording } from "./session.js";
import type { AttemptRecord, RuleInfo } from "./types.js";

const params = new URLSearchParams(window.location.search);
const client = new ApiClient(params.get("service") ?? "http://127.0.0.1:8000");
const recorder = new Recorder();
const gate = new SubmitGate();

let rules: RuleInfo[] = [];
let history: AttemptRecord[] = [];

const recordButton = document.getElementById("record") as HTMLButtonElement;
const statusLine = document.getElementById("status") as HTMLElement;
const cardsBox = document.getElementById("cards") as HTMLElement;
const historyBox = document.getElementById("history") as HTMLElement;

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.className = isError ? "error" : "";
}

function renderCards(attempt: AttemptRecord): void {
  cardsBox.replaceChildren(
    ...ruleCards(attempt.prediction, rules).map((card) => {
      const div = document.createElement("div");
      div.className = card.passed ? "card pass" : "card fail";
      const title = document.createElement("h3");
      title.textContent = `${card.name} - ${card.passed ? "correct" : "needs work"}`;
      const prob = document.createElement("p");
      prob.textContent = `confidence ${card.probability.toFixed(3)}`;
      const desc = document.createElement("p");
      desc.textContent = card.description;
      div.append(title, prob, desc);
      return div;
    }),
  );
}

function renderHistory(): void {
  const view = historyView(history, rules);
  if (view.empty) {
    historyBox.textContent = "No attempts yet. Record a recitation to get feedback.";
    return;
  }
  const arrows = { up: "↑", down: "↓", flat: "→" };
  const trendLine = document.createElement("p");
  trendLine.textContent = rules
    .map((r, i) => {
      const t = view.trends[i];
      return `${r.key} ${t ? arrows[t] : ""}`.trim();
    })
    .join("  |  ");
  const rows = view.rows.map((row) => {
    const item = document.createElement("div");
    item.className = "attempt";
    const when = new Date(row.timestampMs).toLocaleTimeString();
    const verdicts = row.cards.map((c) => `${c.key}: ${c.passed ? "ok" : "x"}`).join(", ");
    const label = document.createElement("span");
    label.textContent = `${when} (${row.durationS.toFixed(2)} s) ${verdicts} `;
    const replay = document.createElement("audio");
    replay.controls = true;
    replay.src = row.audioUrl;
    item.append(label, replay);
    return item;
  });
  historyBox.replaceChildren(trendLine, ...rows);
}

async function onRecordClick(): Promise<void> {
  if (gate.inFlight) {
    return; // submit running; the button is disabled anyway
  }
  if (!recorder.recording) {
    try {
      await recorder.start();
    } catch (err) {
      setStatus(permissionGuidance(err), true);
      return;
    }
    recordButton.textContent = "Stop";
    setStatus("Recording... recite the verse, then press stop.");
    return;
  }

  recordButton.textContent = "Record";
  recordButton.disabled = true;
  setStatus("Scoring...");
  try {
    const { samples, sampleRateHz } = await recorder.stop();
    const result = await gate.run(() =>
      submitRecording(samples, sampleRateHz, history, { client }),
    );
    history = result.history;
    renderCards(result.attempt);
    renderHistory();
    setStatus("Done. Record again to improve your score.");
  } catch (err) {
    if (err instanceof ApiError) {
      setStatus(`The service refused the clip (${err.status}): ${err.message}`, true);
    } else {
      setStatus(err instanceof Error ? err.message : String(err), true);
    }
  } finally {
    recordButton.disabled = false;
  }
}

async function boot(): Promise<void> {
  try {
    rules = (await client.rules()).rules;
  } catch (err) {
    setStatus(
      `Cannot reach the scoring service: ${err instanceof Error ? err.message : err}. ` +
        "Start it with `tajweed serve --checkpoint <ckpt>` and reload.",
      true,
    );
    recordButton.disabled = true;
    return;
  }
  const health = await client.health();
  if (health.status !== "ready") {
    setStatus("Service is up but degraded (no model loaded); scoring will fail.", true);
  } else {
    setStatus(`Ready. Model ${health.model_id?.slice(0, 12)}...`);
  }
  renderHistory();
  recordButton.addEventListener("click", () => void onRecordClick());
}

void boot();
