// Stable color assignment for word classes shared by the scatter glyphs,
// the chord arcs, and the legend.

const CLASS_PALETTE = [
  "#e45756",
  "#4c78a8",
  "#72b7b2",
  "#f58518",
  "#54a24b",
  "#b279a2",
  "#eeca3b",
  "#9d755d",
];

export const UNLABELED_COLOR = "#b0b0b0";
export const OTHER_COLOR = "#e6e6e6";

const assigned = new Map<string, string>();

export function wordClassColor(wordClass: string): string {
  if (wordClass === "unlabeled") return UNLABELED_COLOR;
  let color = assigned.get(wordClass);
  if (color === undefined) {
    color = CLASS_PALETTE[assigned.size % CLASS_PALETTE.length];
    assigned.set(wordClass, color);
  }
  return color;
}

export function knownWordClasses(): string[] {
  return [...assigned.keys()];
}
