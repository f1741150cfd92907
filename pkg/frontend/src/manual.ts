/*
 * Manual browser: the resolved catalog as a section list with stable DOM
 * anchors. Reference chips in the chat link here by anchor id.
 */

import type { ManualsResponse } from "./types.js";
import { sectionAnchorId } from "./chat.js";
import { strings, type UiLocale } from "./i18n.js";

export function renderManuals(
  container: HTMLElement,
  catalog: ManualsResponse,
  locale: UiLocale,
): void {
  const ui = strings(locale);
  container.replaceChildren();
  if (catalog.manuals.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = ui.emptyManuals;
    container.appendChild(empty);
    return;
  }
  for (const manual of catalog.manuals) {
    const doc = document.createElement("section");
    doc.className = "manual";
    doc.id = sectionAnchorId(manual.source_file, "");

    const heading = document.createElement("h3");
    heading.textContent =
      `${manual.logical_name} ${ui.versionLabel(manual.version)} ` +
      `(${ui.sectionCount(manual.sections.length)})`;
    doc.appendChild(heading);

    const list = document.createElement("ul");
    list.className = "manual-sections";
    for (const section of manual.sections) {
      const item = document.createElement("li");
      item.id = sectionAnchorId(manual.source_file, section.id);
      item.className = "manual-section";
      const title = document.createElement("span");
      title.textContent = `${section.id} ${section.title}`;
      item.appendChild(title);
      for (const tag of section.tags) {
        const chip = document.createElement("span");
        chip.className = "tag-chip";
        chip.textContent = tag;
        item.appendChild(chip);
      }
      list.appendChild(item);
    }
    doc.appendChild(list);
    container.appendChild(doc);
  }
}

/** Scroll the anchor a reference chip points at into view, if present. */
export function scrollToSection(file: string, sectionId: string): boolean {
  const target = document.getElementById(sectionAnchorId(file, sectionId));
  if (target === null) {
    return false;
  }
  target.scrollIntoView();
  return true;
}
