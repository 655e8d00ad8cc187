// Topic projection scatter plot.  Every glyph is a pie of the topic's top
// words colored by word class, with a run badge and an optional group halo.
// All numbers shown come from the service payload; this module only lays
// them out.

import { OTHER_COLOR, wordClassColor } from "./colors.js";
import { pieSlicePath, scaleLinear, type Point } from "./geometry.js";
import type { GroupingState } from "./grouping.js";
import type { TopicProjection } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ScatterOptions {
  width?: number;
  height?: number;
  glyphRadius?: number;
  onSelectionChange?: (selected: number[]) => void;
}

export interface ScatterHandle {
  svg: SVGSVGElement;
  getSelection(): number[];
  setSelection(topicIds: number[]): void;
  rubberBand(x0: number, y0: number, x1: number, y1: number): void;
  refresh(grouping: GroupingState): void;
}

/** Screen position per topic id, preserving the projection's ordering. */
export function layoutPositions(
  projection: TopicProjection, width: number, height: number, margin: number,
): Map<number, Point> {
  const xs = projection.coords.map((c) => c[0]);
  const ys = projection.coords.map((c) => c[1]);
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys);
  const out = new Map<number, Point>();
  projection.topics.forEach((topic, i) => {
    out.set(topic.id, {
      x: scaleLinear(projection.coords[i][0], xLo, xHi, margin, width - margin),
      y: scaleLinear(projection.coords[i][1], yLo, yHi, margin, height - margin),
    });
  });
  return out;
}

/** Topic ids whose positions fall inside the rectangle (inclusive). */
export function idsInRect(
  positions: Map<number, Point>, x0: number, y0: number, x1: number, y1: number,
): number[] {
  const [xa, xb] = x0 <= x1 ? [x0, x1] : [x1, x0];
  const [ya, yb] = y0 <= y1 ? [y0, y1] : [y1, y0];
  const hit: number[] = [];
  for (const [id, p] of positions) {
    if (p.x >= xa && p.x <= xb && p.y >= ya && p.y <= yb) hit.push(id);
  }
  return hit.sort((a, b) => a - b);
}

/**
 * Group member nearest to the group's mean position.  Purely cosmetic
 * highlight; ties resolve to the lowest topic id.
 */
export function medianTopicId(positions: Map<number, Point>, memberIds: number[]): number {
  let mx = 0;
  let my = 0;
  for (const id of memberIds) {
    const p = positions.get(id);
    if (!p) throw new Error(`no position for topic ${id}`);
    mx += p.x;
    my += p.y;
  }
  mx /= memberIds.length;
  my /= memberIds.length;
  let best = -1;
  let bestDist = Infinity;
  for (const id of [...memberIds].sort((a, b) => a - b)) {
    const p = positions.get(id)!;
    const d = (p.x - mx) ** 2 + (p.y - my) ** 2;
    if (d < bestDist) {
      bestDist = d;
      best = id;
    }
  }
  return best;
}

export function renderTopicScatter(
  container: HTMLElement,
  projection: TopicProjection,
  grouping: GroupingState,
  opts: ScatterOptions = {},
): ScatterHandle {
  const width = opts.width ?? 640;
  const height = opts.height ?? 480;
  const radius = opts.glyphRadius ?? 16;
  container.textContent = "";

  if (projection.topics.length === 0) {
    const msg = document.createElement("div");
    msg.className = "empty-state";
    msg.textContent = "no topics yet; run topic extraction first";
    container.appendChild(msg);
    const svg = document.createElementNS(SVG_NS, "svg");
    return {
      svg,
      getSelection: () => [],
      setSelection: () => undefined,
      rubberBand: () => undefined,
      refresh: () => undefined,
    };
  }

  const positions = layoutPositions(projection, width, height, radius + 8);
  const selection = new Set<number>();
  let currentGrouping = grouping;
  const view = { x: 0, y: 0, w: width, h: height };

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "topic-scatter");
  container.appendChild(svg);

  function applyView(): void {
    svg.setAttribute("viewBox", `${view.x} ${view.y} ${view.w} ${view.h}`);
  }

  function toView(offsetX: number, offsetY: number): Point {
    return {
      x: view.x + (offsetX / width) * view.w,
      y: view.y + (offsetY / height) * view.h,
    };
  }

  function notify(): void {
    if (opts.onSelectionChange) opts.onSelectionChange([...selection].sort((a, b) => a - b));
  }

  function render(): void {
    while (svg.firstChild) svg.removeChild(svg.firstChild);
    applyView();

    const medians = new Set<number>();
    for (const group of currentGrouping.groups) {
      if (group.topicIds.length > 0) medians.add(medianTopicId(positions, group.topicIds));
    }

    for (const glyph of projection.glyphs) {
      const pos = positions.get(glyph.topic_id)!;
      const g = document.createElementNS(SVG_NS, "g");
      g.setAttribute("class", "topic");
      g.setAttribute("data-topic-id", String(glyph.topic_id));
      g.setAttribute("data-run-id", String(glyph.run_id));
      g.setAttribute("transform", `translate(${pos.x.toFixed(3)} ${pos.y.toFixed(3)})`);

      const groupIndex = currentGrouping.groupOf(glyph.topic_id);
      if (groupIndex !== null) {
        const halo = document.createElementNS(SVG_NS, "circle");
        halo.setAttribute("class", "halo");
        halo.setAttribute("r", String(radius + 5));
        halo.setAttribute("fill", currentGrouping.groups[groupIndex].color);
        halo.setAttribute("opacity", "0.35");
        g.appendChild(halo);
      }

      // pie of word shares; any probability mass not in the top words is "other"
      let angle = -Math.PI / 2;
      let shown = 0;
      for (const word of glyph.words) {
        shown += word.probability;
      }
      const total = Math.max(shown, 1);
      for (const word of glyph.words) {
        const span = (word.probability / total) * 2 * Math.PI;
        if (span <= 0) continue;
        const slice = document.createElementNS(SVG_NS, "path");
        slice.setAttribute("class", "slice");
        slice.setAttribute("d", pieSlicePath(0, 0, radius, angle, angle + span));
        slice.setAttribute("fill", wordClassColor(word.word_class));
        slice.setAttribute("data-word", word.word);
        g.appendChild(slice);
        angle += span;
      }
      if (shown < 1) {
        const span = ((1 - shown) / total) * 2 * Math.PI;
        const rest = document.createElementNS(SVG_NS, "path");
        rest.setAttribute("class", "slice other");
        rest.setAttribute("d", pieSlicePath(0, 0, radius, angle, angle + span));
        rest.setAttribute("fill", OTHER_COLOR);
        g.appendChild(rest);
      }

      const outline = document.createElementNS(SVG_NS, "circle");
      outline.setAttribute("class", selection.has(glyph.topic_id) ? "outline selected" : "outline");
      outline.setAttribute("r", String(radius));
      outline.setAttribute("fill", "none");
      outline.setAttribute("stroke", selection.has(glyph.topic_id) ? "#222" : "#999");
      outline.setAttribute("stroke-width", selection.has(glyph.topic_id) ? "2.5" : "1");
      g.appendChild(outline);

      if (medians.has(glyph.topic_id)) {
        const ring = document.createElementNS(SVG_NS, "circle");
        ring.setAttribute("class", "median");
        ring.setAttribute("r", String(radius + 9));
        ring.setAttribute("fill", "none");
        ring.setAttribute("stroke", "#333");
        ring.setAttribute("stroke-dasharray", "3 2");
        g.appendChild(ring);
      }

      const badge = document.createElementNS(SVG_NS, "text");
      badge.setAttribute("class", "run-badge");
      badge.setAttribute("x", String(radius - 2));
      badge.setAttribute("y", String(-radius + 2));
      badge.textContent = `r${glyph.run_id}`;
      g.appendChild(badge);

      const title = document.createElementNS(SVG_NS, "title");
      const wordList = glyph.words
        .map((w) => `${w.word} ${w.probability.toFixed(3)}`)
        .join(", ");
      title.textContent = `topic ${glyph.topic_id} (run ${glyph.run_id}): ${wordList}`;
      g.appendChild(title);

      g.addEventListener("click", (ev) => {
        ev.stopPropagation();
        if (selection.has(glyph.topic_id)) selection.delete(glyph.topic_id);
        else selection.add(glyph.topic_id);
        render();
        notify();
      });

      svg.appendChild(g);
    }
  }

  function rubberBand(x0: number, y0: number, x1: number, y1: number): void {
    selection.clear();
    for (const id of idsInRect(positions, x0, y0, x1, y1)) selection.add(id);
    render();
    notify();
  }

  // drag to rubber-band, alt-drag to pan, wheel to zoom
  let drag: { x: number; y: number; pan: boolean } | null = null;
  let band: SVGRectElement | null = null;

  svg.addEventListener("mousedown", (ev) => {
    const p = toView(ev.offsetX, ev.offsetY);
    drag = { x: p.x, y: p.y, pan: ev.altKey };
    if (!drag.pan) {
      band = document.createElementNS(SVG_NS, "rect");
      band.setAttribute("class", "rubber");
      band.setAttribute("fill", "#4c78a8");
      band.setAttribute("opacity", "0.15");
      svg.appendChild(band);
    }
  });

  svg.addEventListener("mousemove", (ev) => {
    if (!drag) return;
    const p = toView(ev.offsetX, ev.offsetY);
    if (drag.pan) {
      view.x -= p.x - drag.x;
      view.y -= p.y - drag.y;
      applyView();
      return;
    }
    if (band) {
      band.setAttribute("x", String(Math.min(drag.x, p.x)));
      band.setAttribute("y", String(Math.min(drag.y, p.y)));
      band.setAttribute("width", String(Math.abs(p.x - drag.x)));
      band.setAttribute("height", String(Math.abs(p.y - drag.y)));
    }
  });

  svg.addEventListener("mouseup", (ev) => {
    if (!drag) return;
    const p = toView(ev.offsetX, ev.offsetY);
    const start = drag;
    drag = null;
    if (band) {
      band.remove();
      band = null;
    }
    if (!start.pan && (Math.abs(p.x - start.x) > 3 || Math.abs(p.y - start.y) > 3)) {
      rubberBand(start.x, start.y, p.x, p.y);
    }
  });

  svg.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY > 0 ? 1.15 : 1 / 1.15;
    const p = toView(ev.offsetX, ev.offsetY);
    view.x = p.x - (p.x - view.x) * factor;
    view.y = p.y - (p.y - view.y) * factor;
    view.w *= factor;
    view.h *= factor;
    applyView();
  });

  render();

  return {
    svg,
    getSelection: () => [...selection].sort((a, b) => a - b),
    setSelection: (ids: number[]) => {
      selection.clear();
      for (const id of ids) selection.add(id);
      render();
    },
    rubberBand,
    refresh: (g: GroupingState) => {
      currentGrouping = g;
      render();
    },
  };
}
