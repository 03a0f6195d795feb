// DOM wiring for the readability trial page.

import { httpApi } from "./api.js";
import { SessionController } from "./session.js";
import { SessionState, canSubmit } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const total = parseInt(params.get("n") ?? "10", 10);
const radiusParam = params.get("radius");
const radius = radiusParam === null ? undefined : parseFloat(radiusParam);

const image = el<HTMLImageElement>("challenge-image");
const answer = el<HTMLInputElement>("answer");
const ratingBox = el<HTMLDivElement>("rating");
const submitButton = el<HTMLButtonElement>("submit");
const progress = el<HTMLSpanElement>("progress");
const banner = el<HTMLDivElement>("banner");
const bannerText = el<HTMLSpanElement>("banner-text");
const retryButton = el<HTMLButtonElement>("retry");
const answering = el<HTMLDivElement>("answering");
const donePanel = el<HTMLDivElement>("done");
const summary = el<HTMLTableElement>("summary");

let rating: number | null = null;
for (let value = 1; value <= 10; value++) {
  const label = document.createElement("label");
  const radio = document.createElement("input");
  radio.type = "radio";
  radio.name = "rating";
  radio.value = String(value);
  radio.addEventListener("change", () => {
    rating = value;
    render(controller.state);
  });
  label.append(radio, String(value));
  ratingBox.append(label);
}

function resetRating(): void {
  rating = null;
  for (const radio of ratingBox.querySelectorAll("input")) {
    (radio as HTMLInputElement).checked = false;
  }
}

function renderSummary(): void {
  summary.innerHTML = "";
  const report = controller.report;
  if (!report) {
    summary.textContent = "No report available.";
    return;
  }
  const head = summary.insertRow();
  for (const title of ["responder", "radius", "n", "similarity", "exact match", "rating"]) {
    const cell = document.createElement("th");
    cell.textContent = title;
    head.append(cell);
  }
  for (const bucket of report.buckets) {
    const row = summary.insertRow();
    row.insertCell().textContent = bucket.responder;
    row.insertCell().textContent = String(bucket.radius);
    row.insertCell().textContent = String(bucket.n);
    row.insertCell().textContent = `${(100 * bucket.avg_char_similarity).toFixed(2)}%`;
    row.insertCell().textContent = `${bucket.exact_match_pct.toFixed(2)}%`;
    row.insertCell().textContent =
      bucket.avg_rating === null ? "-" : bucket.avg_rating.toFixed(1);
  }
}

function render(state: SessionState): void {
  progress.textContent = `${state.submitted} answered, ${state.remaining} to go`;

  banner.hidden = state.error === null;
  bannerText.textContent = state.error ?? "";

  answering.hidden = state.phase !== "answering";
  donePanel.hidden = state.phase !== "done";

  if (state.phase === "answering" && state.current) {
    if (image.dataset.challengeId !== state.current.id) {
      image.dataset.challengeId = state.current.id;
      image.src = state.current.imageUrl;
      answer.value = "";
      resetRating();
      answer.focus();
    }
    submitButton.disabled = !canSubmit(state, rating);
  }

  if (state.phase === "done") {
    renderSummary();
  }
}

const controller = new SessionController(httpApi(), {
  n: total,
  radius: Number.isFinite(radius as number) ? radius : undefined,
  onChange: render,
});

submitButton.addEventListener("click", () => {
  if (rating !== null) {
    void controller.submit(answer.value, rating);
  }
});
answer.addEventListener("keydown", (event) => {
  if (event.key === "Enter" && !submitButton.disabled && rating !== null) {
    void controller.submit(answer.value, rating);
  }
});
retryButton.addEventListener("click", () => void controller.retry());

render(controller.state);
void controller.start();
