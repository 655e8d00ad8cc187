// Topic by word probability matrix for side-by-side inspection of selected
// topics.  Cell shading encodes the probability reported by the service;
// the raw value is kept on the cell for tooltips and tests.

import type { Glyph } from "./types.js";

export function renderTopicWordMatrix(
  container: HTMLElement,
  glyphs: Glyph[],
  selectedTopicIds: number[],
  topN = 8,
): HTMLTableElement {
  container.textContent = "";
  const table = document.createElement("table");
  table.className = "topic-word-matrix";
  container.appendChild(table);

  const chosen = glyphs
    .filter((g) => selectedTopicIds.includes(g.topic_id))
    .sort((a, b) => a.topic_id - b.topic_id);

  // column order: best probability anywhere, descending, then word
  const bestProb = new Map<string, number>();
  for (const glyph of chosen) {
    for (const word of glyph.words.slice(0, topN)) {
      const prev = bestProb.get(word.word);
      if (prev === undefined || word.probability > prev) bestProb.set(word.word, word.probability);
    }
  }
  const columns = [...bestProb.keys()].sort((a, b) => {
    const d = bestProb.get(b)! - bestProb.get(a)!;
    return d !== 0 ? d : a < b ? -1 : 1;
  });

  const head = table.createTHead().insertRow();
  head.appendChild(document.createElement("th"));
  for (const word of columns) {
    const th = document.createElement("th");
    th.textContent = word;
    head.appendChild(th);
  }

  const body = table.createTBody();
  for (const glyph of chosen) {
    const row = body.insertRow();
    row.dataset.topicId = String(glyph.topic_id);
    const th = document.createElement("th");
    th.textContent = `topic ${glyph.topic_id} (r${glyph.run_id})`;
    row.appendChild(th);
    const probs = new Map(glyph.words.slice(0, topN).map((w) => [w.word, w.probability]));
    const maxProb = Math.max(...probs.values(), 1e-12);
    for (const word of columns) {
      const cell = row.insertCell();
      const p = probs.get(word);
      if (p === undefined) continue;
      cell.dataset.value = String(p);
      cell.title = `${word}: ${p.toFixed(4)}`;
      const alpha = Math.max(0.06, p / maxProb);
      cell.style.backgroundColor = `rgba(76, 120, 168, ${alpha.toFixed(3)})`;
    }
  }
  return table;
}
