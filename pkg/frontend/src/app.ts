/*
 * Application shell: wires the chat form, mode toggle, manual browser, and
 * dashboard together against the /v1 API. All answer text rendering is
 * delegated to chat.ts so the verbatim invariant lives in one place.
 */

import { ask, listManuals, runEval, SendQueue } from "./api.js";
import { renderErrorTurn, renderTurn } from "./chat.js";
import { renderDashboard } from "./dashboard.js";
import { detectLocale, strings, type UiLocale } from "./i18n.js";
import { renderManuals, scrollToSection } from "./manual.js";
import type { AskRequest, ResponseMode } from "./types.js";

const FIXTURE_DATASET = "fixtures/table_s1.jsonl";
const FIXTURE_RUBRIC = "fixtures/rubric.json";

export interface AppHandles {
  locale: UiLocale;
  queue: SendQueue;
  send: (question: string) => Promise<void>;
  currentMode: () => ResponseMode;
}

/** Build the static page skeleton inside `root`. */
function buildSkeleton(root: HTMLElement, locale: UiLocale): void {
  const ui = strings(locale);
  root.innerHTML = `
    <header><h1>${ui.appTitle}</h1></header>
    <main>
      <section id="chat-view">
        <div id="turns"></div>
        <form id="ask-form">
          <input id="question" type="text" autocomplete="off"
                 placeholder="${ui.inputPlaceholder}">
          <label class="mode-toggle">
            <input id="mode-toggle" type="checkbox">
            <span id="mode-label">${ui.modeRetrieval}</span>
          </label>
          <button id="send" type="submit" disabled>${ui.send}</button>
        </form>
      </section>
      <section id="manuals-view"><h2>${ui.manualsTitle}</h2><div id="manuals"></div></section>
      <section id="dashboard-view"><h2>${ui.dashboardTitle}</h2><div id="dashboard"></div></section>
    </main>
  `;
}

export function initApp(root: HTMLElement): AppHandles {
  const locale = detectLocale(navigator.language ?? "en");
  const ui = strings(locale);
  buildSkeleton(root, locale);

  const turns = root.querySelector<HTMLElement>("#turns")!;
  const form = root.querySelector<HTMLFormElement>("#ask-form")!;
  const input = root.querySelector<HTMLInputElement>("#question")!;
  const sendButton = root.querySelector<HTMLButtonElement>("#send")!;
  const modeToggle = root.querySelector<HTMLInputElement>("#mode-toggle")!;
  const modeLabel = root.querySelector<HTMLElement>("#mode-label")!;
  const queue = new SendQueue();

  const currentMode = (): ResponseMode =>
    modeToggle.checked ? "instructional" : "retrieval";

  // Empty input keeps send disabled; whitespace does not count as input.
  input.addEventListener("input", () => {
    sendButton.disabled = input.value.trim().length === 0;
  });
  modeToggle.addEventListener("change", () => {
    modeLabel.textContent = modeToggle.checked
      ? ui.modeInstructional
      : ui.modeRetrieval;
  });

  async function send(question: string): Promise<void> {
    // The toggle contributes exactly one field to the payload.
    const payload: AskRequest = { question, mode: currentMode() };
    await queue.enqueue(async () => {
      try {
        const response = await ask(payload);
        renderTurn(turns, question, response, locale);
      } catch {
        renderErrorTurn(turns, question, locale, () => {
          void send(question);
        });
      }
    });
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const question = input.value.trim();
    if (question.length === 0) {
      return;
    }
    input.value = "";
    sendButton.disabled = true;
    void send(question);
  });

  // Reference chips navigate to manual anchors.
  turns.addEventListener("click", (event) => {
    const chip = (event.target as HTMLElement).closest<HTMLAnchorElement>(
      ".reference-chip",
    );
    if (chip !== null) {
      event.preventDefault();
      scrollToSection(chip.dataset.file ?? "", chip.dataset.section ?? "");
    }
  });

  const manualsContainer = root.querySelector<HTMLElement>("#manuals")!;
  listManuals()
    .then((catalog) => renderManuals(manualsContainer, catalog, locale))
    .catch(() => renderManuals(manualsContainer, { manuals: [] }, locale));

  const dashboardContainer = root.querySelector<HTMLElement>("#dashboard")!;
  runEval(FIXTURE_DATASET, FIXTURE_RUBRIC)
    .then((report) => renderDashboard(dashboardContainer, report, locale))
    .catch(() => renderDashboard(dashboardContainer, null, locale));

  return { locale, queue, send, currentMode };
}

if (typeof document !== "undefined" && document.getElementById("app") !== null) {
  initApp(document.getElementById("app")!);
}
