// Minimal SVG line charts: one row of features is one chartable series.
// Pure string generation so it is trivially testable without a DOM.

export interface ChartOptions {
  width: number;
  height: number;
  pad: number;
  stroke: string;
}

const DEFAULTS: ChartOptions = { width: 280, height: 64, pad: 6, stroke: "#2563eb" };

export function polylinePoints(
  values: number[],
  options: Partial<ChartOptions> = {},
): string {
  const { width, height, pad } = { ...DEFAULTS, ...options };
  if (values.length === 0) {
    return "";
  }
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const span = hi - lo || 1; // flat series draws a midline
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const step = values.length > 1 ? innerW / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = pad + (values.length > 1 ? i * step : innerW / 2);
      const y = pad + innerH - ((v - lo) / span) * innerH;
      return `${round2(x)},${round2(y)}`;
    })
    .join(" ");
}

export function lineChartSvg(values: number[], options: Partial<ChartOptions> = {}): string {
  const opts = { ...DEFAULTS, ...options };
  const points = polylinePoints(values, opts);
  return (
    `<svg viewBox="0 0 ${opts.width} ${opts.height}" width="${opts.width}" ` +
    `height="${opts.height}" role="img">` +
    `<polyline fill="none" stroke="${opts.stroke}" stroke-width="1.5" points="${points}"/>` +
    `</svg>`
  );
}

function round2(n: number): number {
  return Math.round(n * 100) / 100;
}
