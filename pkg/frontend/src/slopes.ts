/** Least-squares order estimation on log-log data. */

export interface Point {
  h: number;
  error: number;
}

/**
 * Slope of log(error) vs log(h) fitted over the finest `points` entries
 * (smallest h).  This is the statistic the simulator writes to eoc.csv.
 */
export function leastSquaresSlope(data: Point[], points = 3): number {
  const usable = data.filter((p) => p.h > 0 && p.error > 0);
  if (usable.length < 2) {
    throw new Error(`need at least two positive points, got ${usable.length}`);
  }
  const finest = [...usable].sort((a, b) => b.h - a.h).slice(-Math.min(points, usable.length));
  const xs = finest.map((p) => Math.log(p.h));
  const ys = finest.map((p) => Math.log(p.error));
  const xMean = xs.reduce((a, b) => a + b, 0) / xs.length;
  const yMean = ys.reduce((a, b) => a + b, 0) / ys.length;
  let num = 0;
  let den = 0;
  for (let i = 0; i < xs.length; i++) {
    num += (xs[i] - xMean) * (ys[i] - yMean);
    den += (xs[i] - xMean) ** 2;
  }
  return num / den;
}
