// SVG path construction for pie glyphs, chord arcs, and ribbons.

export interface Point {
  x: number;
  y: number;
}

export function polar(cx: number, cy: number, radius: number, angle: number): Point {
  return { x: cx + radius * Math.cos(angle), y: cy + radius * Math.sin(angle) };
}

/** Filled pie slice from a0 to a1 (radians, clockwise in SVG coords). */
export function pieSlicePath(cx: number, cy: number, r: number, a0: number, a1: number): string {
  const p0 = polar(cx, cy, r, a0);
  const p1 = polar(cx, cy, r, a1);
  const large = a1 - a0 > Math.PI ? 1 : 0;
  return [
    `M ${cx} ${cy}`,
    `L ${fmt(p0.x)} ${fmt(p0.y)}`,
    `A ${r} ${r} 0 ${large} 1 ${fmt(p1.x)} ${fmt(p1.y)}`,
    "Z",
  ].join(" ");
}

/** Annular band between rInner and rOuter spanning a0..a1. */
export function annularArcPath(
  cx: number, cy: number, rInner: number, rOuter: number, a0: number, a1: number,
): string {
  const o0 = polar(cx, cy, rOuter, a0);
  const o1 = polar(cx, cy, rOuter, a1);
  const i1 = polar(cx, cy, rInner, a1);
  const i0 = polar(cx, cy, rInner, a0);
  const large = a1 - a0 > Math.PI ? 1 : 0;
  return [
    `M ${fmt(o0.x)} ${fmt(o0.y)}`,
    `A ${rOuter} ${rOuter} 0 ${large} 1 ${fmt(o1.x)} ${fmt(o1.y)}`,
    `L ${fmt(i1.x)} ${fmt(i1.y)}`,
    `A ${rInner} ${rInner} 0 ${large} 0 ${fmt(i0.x)} ${fmt(i0.y)}`,
    "Z",
  ].join(" ");
}

/**
 * Ribbon connecting sub-arc [a0,a1] to sub-arc [b0,b1] on a circle of the
 * given radius.  Both ends are closed with quadratic curves through the
 * center so crossing ribbons stay readable.
 */
export function ribbonPath(
  cx: number, cy: number, radius: number,
  a0: number, a1: number, b0: number, b1: number,
): string {
  const pa0 = polar(cx, cy, radius, a0);
  const pa1 = polar(cx, cy, radius, a1);
  const pb0 = polar(cx, cy, radius, b0);
  const pb1 = polar(cx, cy, radius, b1);
  const largeA = a1 - a0 > Math.PI ? 1 : 0;
  const largeB = b1 - b0 > Math.PI ? 1 : 0;
  return [
    `M ${fmt(pa0.x)} ${fmt(pa0.y)}`,
    `A ${radius} ${radius} 0 ${largeA} 1 ${fmt(pa1.x)} ${fmt(pa1.y)}`,
    `Q ${cx} ${cy} ${fmt(pb0.x)} ${fmt(pb0.y)}`,
    `A ${radius} ${radius} 0 ${largeB} 1 ${fmt(pb1.x)} ${fmt(pb1.y)}`,
    `Q ${cx} ${cy} ${fmt(pa0.x)} ${fmt(pa0.y)}`,
    "Z",
  ].join(" ");
}

/** Map value from [lo, hi] to [outLo, outHi]; degenerate domains land mid-range. */
export function scaleLinear(value: number, lo: number, hi: number, outLo: number, outHi: number): number {
  if (hi === lo) return (outLo + outHi) / 2;
  return outLo + ((value - lo) / (hi - lo)) * (outHi - outLo);
}

function fmt(v: number): string {
  return v.toFixed(3);
}
