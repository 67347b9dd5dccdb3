import type { SeriesChannel } from "./types.js";

export interface HoverReadout {
  channel: string;
  unit: string;
  timestamp: string; // verbatim payload string
  value: number; // verbatim payload value
  index: number;
}

export type ViewRange = [number, number]; // epoch ms

const PALETTE = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed", "#0891b2"];

export function parseTs(s: string): number {
  return new Date(s.replace(" ", "T")).getTime();
}

function nearestIndex(sorted: number[], t: number): number {
  let lo = 0;
  let hi = sorted.length - 1;
  while (hi - lo > 1) {
    const mid = (lo + hi) >> 1;
    if (sorted[mid] <= t) lo = mid;
    else hi = mid;
  }
  return Math.abs(sorted[lo] - t) <= Math.abs(sorted[hi] - t) ? lo : hi;
}

export class SeriesPlot {
  readonly canvas: HTMLCanvasElement;
  private ctx: CanvasRenderingContext2D | null;
  private channels: SeriesChannel[] = [];
  private times: number[][] = [];
  private tMin = 0;
  private tMax = 1;
  private vMin = 0;
  private vMax = 1;
  private viewLo = 0;
  private viewHi = 1;
  private dragX: number | null = null;
  private margin = { left: 56, right: 12, top: 10, bottom: 24 };

  onHover: ((r: HoverReadout | null) => void) | null = null;
  onViewChange: ((view: ViewRange) => void) | null = null;

  constructor(width = 860, height = 320) {
    this.canvas = document.createElement("canvas");
    this.canvas.width = width;
    this.canvas.height = height;
    this.canvas.style.cursor = "crosshair";
    try {
      this.ctx = this.canvas.getContext("2d");
    } catch {
      this.ctx = null; // headless DOMs have no 2d context; geometry still works
    }

    this.canvas.addEventListener("wheel", (e: WheelEvent) => {
      e.preventDefault();
      this.zoomAt(e.deltaY < 0 ? 0.8 : 1.25, e.offsetX);
    });
    this.canvas.addEventListener("mousedown", (e: MouseEvent) => {
      this.dragX = e.offsetX;
    });
    this.canvas.addEventListener("mouseup", () => {
      this.dragX = null;
    });
    this.canvas.addEventListener("mouseleave", () => {
      this.dragX = null;
      if (this.onHover) this.onHover(null);
    });
    this.canvas.addEventListener("mousemove", (e: MouseEvent) => {
      if (this.dragX !== null) {
        this.panBy(e.offsetX - this.dragX);
        this.dragX = e.offsetX;
      } else if (this.onHover) {
        this.onHover(this.hoverAt(e.offsetX));
      }
    });
  }

  setData(channels: SeriesChannel[]): void {
    this.channels = channels;
    this.times = channels.map((c) => c.timestamps.map(parseTs));
    const allT = this.times.flat();
    const allV = channels.flatMap((c) => c.values);
    this.tMin = Math.min(...allT);
    this.tMax = Math.max(...allT);
    this.vMin = Math.min(...allV);
    this.vMax = Math.max(...allV);
    if (this.tMax === this.tMin) this.tMax = this.tMin + 1;
    if (this.vMax === this.vMin) this.vMax = this.vMin + 1;
    this.viewLo = this.tMin;
    this.viewHi = this.tMax;
    this.draw();
  }

  get view(): ViewRange {
    return [this.viewLo, this.viewHi];
  }

  setView(view: ViewRange): void {
    this.viewLo = Math.max(this.tMin, view[0]);
    this.viewHi = Math.min(this.tMax, view[1]);
    if (this.viewHi <= this.viewLo) {
      this.viewLo = this.tMin;
      this.viewHi = this.tMax;
    }
    this.draw();
  }

  private plotWidth(): number {
    return this.canvas.width - this.margin.left - this.margin.right;
  }

  private plotHeight(): number {
    return this.canvas.height - this.margin.top - this.margin.bottom;
  }

  xOf(t: number): number {
    return this.margin.left + ((t - this.viewLo) / (this.viewHi - this.viewLo)) * this.plotWidth();
  }

  tOf(px: number): number {
    return this.viewLo + ((px - this.margin.left) / this.plotWidth()) * (this.viewHi - this.viewLo);
  }

  yOf(v: number): number {
    return this.margin.top + (1 - (v - this.vMin) / (this.vMax - this.vMin)) * this.plotHeight();
  }

  zoomAt(factor: number, px: number): void {
    const anchor = this.tOf(px);
    const span = (this.viewHi - this.viewLo) * factor;
    const full = this.tMax - this.tMin;
    const clamped = Math.min(full, Math.max(full / 1e4, span));
    let lo = anchor - (anchor - this.viewLo) * (clamped / (this.viewHi - this.viewLo));
    lo = Math.min(Math.max(lo, this.tMin), this.tMax - clamped);
    this.viewLo = lo;
    this.viewHi = lo + clamped;
    this.draw();
    if (this.onViewChange) this.onViewChange(this.view);
  }

  panBy(dxPx: number): void {
    const span = this.viewHi - this.viewLo;
    let lo = this.viewLo - (dxPx / this.plotWidth()) * span;
    lo = Math.min(Math.max(lo, this.tMin), this.tMax - span);
    this.viewLo = lo;
    this.viewHi = lo + span;
    this.draw();
    if (this.onViewChange) this.onViewChange(this.view);
  }

  // Nearest sample to the cursor across channels; the readout repeats the
  // payload's timestamp string and value untouched.
  hoverAt(px: number): HoverReadout | null {
    if (!this.channels.length) return null;
    const t = this.tOf(px);
    let best: HoverReadout | null = null;
    let bestDist = Infinity;
    for (let ci = 0; ci < this.channels.length; ci++) {
      const ch = this.channels[ci];
      if (!ch.timestamps.length) continue;
      const i = nearestIndex(this.times[ci], t);
      const dist = Math.abs(this.xOf(this.times[ci][i]) - px);
      if (dist < bestDist) {
        bestDist = dist;
        best = {
          channel: ch.name,
          unit: ch.unit,
          timestamp: ch.timestamps[i],
          value: ch.values[i],
          index: i,
        };
      }
    }
    return best;
  }

  draw(): void {
    const ctx = this.ctx;
    if (!ctx) return; // headless test environment
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.fillStyle = "#ffffff";
    ctx.fillRect(0, 0, width, height);

    ctx.strokeStyle = "#9ca3af";
    ctx.strokeRect(this.margin.left, this.margin.top, this.plotWidth(), this.plotHeight());

    ctx.font = "11px sans-serif";
    ctx.fillStyle = "#374151";
    for (let k = 0; k <= 4; k++) {
      const v = this.vMin + ((this.vMax - this.vMin) * k) / 4;
      ctx.fillText(v.toPrecision(4), 4, this.yOf(v) + 4);
      const t = this.viewLo + ((this.viewHi - this.viewLo) * k) / 4;
      ctx.fillText(new Date(t).toISOString().slice(0, 16), this.xOf(t) - 30, height - 6);
    }

    for (let ci = 0; ci < this.channels.length; ci++) {
      const ch = this.channels[ci];
      ctx.strokeStyle = PALETTE[ci % PALETTE.length];
      ctx.beginPath();
      let started = false;
      for (let i = 0; i < ch.values.length; i++) {
        const t = this.times[ci][i];
        if (t < this.viewLo || t > this.viewHi) continue;
        const x = this.xOf(t);
        const y = this.yOf(ch.values[i]);
        if (started) ctx.lineTo(x, y);
        else {
          ctx.moveTo(x, y);
          started = true;
        }
      }
      ctx.stroke();
      ctx.fillStyle = PALETTE[ci % PALETTE.length];
      ctx.fillText(ch.name, this.margin.left + 8 + ci * 140, this.margin.top + 12);
    }
  }
}
