// Chord diagram of topic co-association.  Arc length is proportional to the
// number of training sequences associated with the topic; ribbons connect
// topic pairs that share sequences, with widths proportional to the shared
// counts reported by the service.

import { UNLABELED_COLOR, wordClassColor } from "./colors.js";
import { annularArcPath, ribbonPath } from "./geometry.js";
import type { Glyph } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const PAD = 0.04;

export interface ChordOptions {
  size?: number;
}

/** Word class carrying the most probability mass in the glyph's top words. */
export function dominantWordClass(glyph: Glyph): string {
  const mass = new Map<string, number>();
  for (const word of glyph.words) {
    mass.set(word.word_class, (mass.get(word.word_class) ?? 0) + word.probability);
  }
  let best = "unlabeled";
  let bestMass = -1;
  for (const cls of [...mass.keys()].sort()) {
    const m = mass.get(cls)!;
    if (m > bestMass) {
      bestMass = m;
      best = cls;
    }
  }
  return best;
}

export function renderChord(container: HTMLElement, glyphs: Glyph[], chord: number[][], opts: ChordOptions = {}): SVGSVGElement {
  const size = opts.size ?? 420;
  const cx = size / 2;
  const cy = size / 2;
  const rOuter = size / 2 - 10;
  const rInner = rOuter - 14;
  container.textContent = "";

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(size));
  svg.setAttribute("height", String(size));
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", "topic-chord");
  container.appendChild(svg);

  const n = glyphs.length;
  if (n === 0) {
    const msg = document.createElement("div");
    msg.className = "empty-state";
    msg.textContent = "no topics to relate";
    container.appendChild(msg);
    return svg;
  }

  const counts = glyphs.map((g) => g.association_count);
  const totalCount = counts.reduce((a, b) => a + b, 0);
  // with no associations yet every topic gets an equal arc
  const weights = totalCount > 0 ? counts : glyphs.map(() => 1);
  const weightSum = weights.reduce((a, b) => a + b, 0);
  const usable = 2 * Math.PI - PAD * n;

  const starts: number[] = [];
  const ends: number[] = [];
  let angle = -Math.PI / 2;
  for (let i = 0; i < n; i++) {
    const span = (weights[i] / weightSum) * usable;
    starts.push(angle);
    ends.push(angle + span);
    angle += span + PAD;
  }

  // each arc is subdivided among its partners in proportion to shared counts
  const cursor = starts.slice();
  const rowSums = glyphs.map((_, i) => {
    let s = 0;
    for (let j = 0; j < n; j++) if (j !== i) s += chord[i]?.[j] ?? 0;
    return s;
  });

  function takeSubArc(i: number, count: number): [number, number] {
    const span = rowSums[i] > 0 ? ((ends[i] - starts[i]) * count) / rowSums[i] : 0;
    const a0 = cursor[i];
    cursor[i] += span;
    return [a0, a0 + span];
  }

  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      const count = chord[i]?.[j] ?? 0;
      if (count <= 0) continue;
      const [a0, a1] = takeSubArc(i, count);
      const [b0, b1] = takeSubArc(j, count);
      const ribbon = document.createElementNS(SVG_NS, "path");
      ribbon.setAttribute("class", "ribbon");
      ribbon.setAttribute("d", ribbonPath(cx, cy, rInner, a0, a1, b0, b1));
      ribbon.setAttribute("data-source", String(glyphs[i].topic_id));
      ribbon.setAttribute("data-target", String(glyphs[j].topic_id));
      ribbon.setAttribute("data-count", String(count));
      ribbon.setAttribute("fill", UNLABELED_COLOR);
      ribbon.setAttribute("opacity", "0.5");
      const title = document.createElementNS(SVG_NS, "title");
      title.textContent = `topics ${glyphs[i].topic_id} and ${glyphs[j].topic_id}: ${count} shared sequences`;
      ribbon.appendChild(title);
      svg.appendChild(ribbon);
    }
  }

  for (let i = 0; i < n; i++) {
    const arc = document.createElementNS(SVG_NS, "path");
    arc.setAttribute("class", "arc");
    arc.setAttribute("d", annularArcPath(cx, cy, rInner, rOuter, starts[i], ends[i]));
    arc.setAttribute("data-topic-id", String(glyphs[i].topic_id));
    arc.setAttribute("fill", wordClassColor(dominantWordClass(glyphs[i])));
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `topic ${glyphs[i].topic_id}: ${glyphs[i].association_count} sequences`;
    arc.appendChild(title);
    svg.appendChild(arc);

    const label = document.createElementNS(SVG_NS, "text");
    const mid = (starts[i] + ends[i]) / 2;
    const lx = cx + (rOuter + 4) * Math.cos(mid);
    const ly = cy + (rOuter + 4) * Math.sin(mid);
    label.setAttribute("class", "arc-label");
    label.setAttribute("x", lx.toFixed(1));
    label.setAttribute("y", ly.toFixed(1));
    label.setAttribute("text-anchor", Math.cos(mid) >= 0 ? "start" : "end");
    label.textContent = String(glyphs[i].topic_id);
    svg.appendChild(label);
  }

  return svg;
}
