/*
 * Chat turn rendering. The one rule that matters here: the answer element's
 * text is assigned from the payload with textContent, character for
 * character. No markdown pass, no truncation, no client-side wording.
 */

import type { AskResponse, Reference } from "./types.js";
import { strings, type UiLocale } from "./i18n.js";

/** Patterns and refusal classes that get the warning treatment. */
const WARNING_PATTERNS = new Set(["B", "anomaly"]);
const WARNING_REFUSALS = new Set(["explicit_refusal", "safety_warning"]);

export function isWarningTurn(payload: AskResponse): boolean {
  return (
    WARNING_PATTERNS.has(payload.pattern) || WARNING_REFUSALS.has(payload.refusal)
  );
}

function fileStem(file: string): string {
  const dot = file.lastIndexOf(".");
  return dot > 0 ? file.slice(0, dot) : file;
}

/** DOM id the manual browser assigns to a section entry. */
export function sectionAnchorId(file: string, sectionId: string): string {
  return sectionId
    ? `manual-${fileStem(file)}-${sectionId}`
    : `manual-${fileStem(file)}`;
}

function renderReferenceChips(
  references: Reference[],
  locale: UiLocale,
): HTMLElement | null {
  if (references.length === 0) {
    return null;
  }
  const wrap = document.createElement("div");
  wrap.className = "turn-references";
  const label = document.createElement("span");
  label.className = "turn-references-label";
  label.textContent = strings(locale).referencesLabel;
  wrap.appendChild(label);
  for (const ref of references) {
    const targets = ref.sections.length > 0 ? ref.sections : [""];
    for (const sectionId of targets) {
      const chip = document.createElement("a");
      chip.className = "reference-chip";
      chip.textContent = sectionId ? `${ref.file} §${sectionId}` : ref.file;
      chip.href = `#${sectionAnchorId(ref.file, sectionId)}`;
      chip.dataset.file = ref.file;
      chip.dataset.section = sectionId;
      wrap.appendChild(chip);
    }
  }
  return wrap;
}

/**
 * Render one completed turn (question + structured answer) into `container`.
 * Returns the turn element; the answer body lives in `.turn-answer`.
 */
export function renderTurn(
  container: HTMLElement,
  question: string,
  payload: AskResponse,
  locale: UiLocale,
): HTMLElement {
  const turn = document.createElement("article");
  turn.className = isWarningTurn(payload) ? "turn turn--warning" : "turn";
  turn.dataset.pattern = payload.pattern;
  turn.dataset.refusal = payload.refusal;

  const q = document.createElement("p");
  q.className = "turn-question";
  q.textContent = question;
  turn.appendChild(q);

  const badges = document.createElement("div");
  badges.className = "turn-badges";
  const patternBadge = document.createElement("span");
  patternBadge.className = `badge badge-pattern badge-pattern-${payload.pattern}`;
  patternBadge.textContent = payload.pattern;
  badges.appendChild(patternBadge);
  const refusalBadge = document.createElement("span");
  refusalBadge.className = "badge badge-refusal";
  refusalBadge.textContent = payload.refusal;
  badges.appendChild(refusalBadge);
  turn.appendChild(badges);

  const answer = document.createElement("div");
  answer.className = "turn-answer";
  answer.textContent = payload.body;
  turn.appendChild(answer);

  const chips = renderReferenceChips(payload.references, locale);
  if (chips !== null) {
    turn.appendChild(chips);
  }

  container.appendChild(turn);
  if (payload.pattern === "anomaly") {
    showAnomalyModal(payload.body, locale);
  }
  return turn;
}

/**
 * Render a failed send: the question, a localized failure notice, and a
 * retry button. Deliberately no answer element at all, so a network error
 * can never look like an answer.
 */
export function renderErrorTurn(
  container: HTMLElement,
  question: string,
  locale: UiLocale,
  onRetry: () => void,
): HTMLElement {
  const turn = document.createElement("article");
  turn.className = "turn turn--error";
  const q = document.createElement("p");
  q.className = "turn-question";
  q.textContent = question;
  turn.appendChild(q);
  const notice = document.createElement("p");
  notice.className = "turn-error-notice";
  notice.textContent = strings(locale).requestFailed;
  turn.appendChild(notice);
  const retry = document.createElement("button");
  retry.type = "button";
  retry.className = "turn-retry";
  retry.textContent = strings(locale).retry;
  retry.addEventListener("click", onRetry);
  turn.appendChild(retry);
  container.appendChild(turn);
  return turn;
}

/**
 * Blocking notice shown for anomaly answers. The message area displays the
 * server-provided text and nothing else.
 */
export function showAnomalyModal(serverText: string, locale: UiLocale): HTMLElement {
  const existing = document.querySelector(".anomaly-modal");
  if (existing !== null) {
    existing.remove();
  }
  const overlay = document.createElement("div");
  overlay.className = "anomaly-modal";
  const box = document.createElement("div");
  box.className = "anomaly-modal-box";
  const title = document.createElement("h2");
  title.textContent = strings(locale).safetyNoticeTitle;
  box.appendChild(title);
  const message = document.createElement("p");
  message.className = "anomaly-modal-text";
  message.textContent = serverText;
  box.appendChild(message);
  const dismiss = document.createElement("button");
  dismiss.type = "button";
  dismiss.className = "anomaly-modal-dismiss";
  dismiss.textContent = strings(locale).dismiss;
  dismiss.addEventListener("click", () => overlay.remove());
  box.appendChild(dismiss);
  overlay.appendChild(box);
  document.body.appendChild(overlay);
  return overlay;
}
