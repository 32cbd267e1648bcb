/** Dependency-free SVG chart builders. Pure string generation so rendering is
 * unit-testable without a browser. */

export interface Series {
  label: string;
  xs: number[];
  ys: number[];
  color: string;
  dashed?: boolean;
}

export interface Marker {
  x: number;
  y: number;
  label: string;
}

const W = 460;
const H = 280;
const PAD = 44;

function scale(values: number[], lo: number, hi: number, outLo: number, outHi: number) {
  const span = hi - lo || 1;
  return values.map((v) => outLo + ((v - lo) / span) * (outHi - outLo));
}

export function lineChart(series: Series[], marker?: Marker, title = ""): string {
  const allX = series.flatMap((s) => s.xs);
  const allY = series.flatMap((s) => s.ys).concat(marker ? [marker.y] : []);
  const xLo = Math.min(...allX, 0);
  const xHi = Math.max(...allX);
  const yLo = Math.min(...allY, 0);
  const yHi = Math.max(...allY) * 1.05 || 1;
  const parts: string[] = [
    `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg">`,
    `<text x="${W / 2}" y="16" text-anchor="middle" class="title">${title}</text>`,
    `<line x1="${PAD}" y1="${H - PAD}" x2="${W - 8}" y2="${H - PAD}" stroke="#888"/>`,
    `<line x1="${PAD}" y1="${H - PAD}" x2="${PAD}" y2="20" stroke="#888"/>`,
  ];
  for (const s of series) {
    const px = scale(s.xs, xLo, xHi, PAD, W - 8);
    const py = scale(s.ys, yLo, yHi, H - PAD, 20);
    const d = px.map((x, i) => `${i === 0 ? "M" : "L"}${x.toFixed(1)},${py[i].toFixed(1)}`).join(" ");
    const dash = s.dashed ? ' stroke-dasharray="5,4"' : "";
    parts.push(`<path d="${d}" fill="none" stroke="${s.color}" stroke-width="1.8"${dash}/>`);
  }
  if (marker) {
    const [mx] = scale([marker.x], xLo, xHi, PAD, W - 8);
    const [my] = scale([marker.y], yLo, yHi, H - PAD, 20);
    parts.push(
      `<circle cx="${mx.toFixed(1)}" cy="${my.toFixed(1)}" r="4.5" fill="#d62728"/>`,
      `<text x="${(mx + 8).toFixed(1)}" y="${(my - 6).toFixed(1)}" class="marker">${marker.label}</text>`,
    );
  }
  let ly = 30;
  for (const s of series) {
    parts.push(
      `<rect x="${W - 150}" y="${ly - 8}" width="14" height="3" fill="${s.color}"/>`,
      `<text x="${W - 132}" y="${ly - 3}" class="legend">${s.label}</text>`,
    );
    ly += 16;
  }
  parts.push("</svg>");
  return parts.join("");
}

export function barPairs(
  labels: string[],
  before: number[],
  after: number[],
  title = "",
): string {
  const yHi = Math.max(...before, ...after) * 1.1 || 1;
  const n = labels.length;
  const group = (W - PAD - 20) / n;
  const parts: string[] = [
    `<svg viewBox="0 0 ${W} ${H}" xmlns="http://www.w3.org/2000/svg">`,
    `<text x="${W / 2}" y="16" text-anchor="middle" class="title">${title}</text>`,
    `<line x1="${PAD}" y1="${H - PAD}" x2="${W - 8}" y2="${H - PAD}" stroke="#888"/>`,
  ];
  for (let i = 0; i < n; i++) {
    const x0 = PAD + 10 + i * group;
    const hb = ((H - PAD - 24) * before[i]) / yHi;
    const ha = ((H - PAD - 24) * after[i]) / yHi;
    parts.push(
      `<rect x="${x0}" y="${H - PAD - hb}" width="${group * 0.32}" height="${hb}" fill="#7f7f7f"/>`,
      `<rect x="${x0 + group * 0.36}" y="${H - PAD - ha}" width="${group * 0.32}" height="${ha}" fill="#1f77b4"/>`,
      `<text x="${x0 + group * 0.34}" y="${H - PAD + 14}" text-anchor="middle" class="legend">${labels[i]}</text>`,
    );
  }
  parts.push("</svg>");
  return parts.join("");
}
