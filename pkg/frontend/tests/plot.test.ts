import { describe, expect, it } from "vitest";

import { SeriesPlot, parseTs } from "../src/plot.js";
import { makeItem } from "./fakeServer.js";

function fixtureChannels() {
  return makeItem(0, "A").series!.channels;
}

describe("SeriesPlot hover", () => {
  it("readout repeats the payload values exactly", () => {
    const channels = fixtureChannels();
    const plot = new SeriesPlot();
    plot.setData(channels);
    for (const k of [0, 7, 23, 47]) {
      const px = plot.xOf(parseTs(channels[0].timestamps[k]));
      const r = plot.hoverAt(px)!;
      expect(r.timestamp).toBe(channels[0].timestamps[k]);
      expect(r.value).toBe(channels[0].values[k]); // verbatim, not recomputed
      expect(r.index).toBe(k);
      expect(r.channel).toBe("channel 0");
    }
  });

  it("hover stays exact after zoom and pan", () => {
    const channels = fixtureChannels();
    const plot = new SeriesPlot();
    plot.setData(channels);
    const [lo0, hi0] = plot.view;
    plot.zoomAt(0.5, plot.xOf(parseTs(channels[0].timestamps[24])));
    const [lo1, hi1] = plot.view;
    expect(hi1 - lo1).toBeLessThan(hi0 - lo0);

    plot.panBy(-80);
    const px = plot.xOf(parseTs(channels[0].timestamps[30]));
    const r = plot.hoverAt(px)!;
    expect(r.timestamp).toBe(channels[0].timestamps[30]);
    expect(r.value).toBe(channels[0].values[30]);
  });

  it("zoom is clamped to the data extent", () => {
    const channels = fixtureChannels();
    const plot = new SeriesPlot();
    plot.setData(channels);
    plot.zoomAt(100, 400); // zoom far out
    const [lo, hi] = plot.view;
    expect(lo).toBe(parseTs(channels[0].timestamps[0]));
    expect(hi).toBe(parseTs(channels[0].timestamps[47]));
  });

  it("picks the nearest channel in multi-channel overlays", () => {
    const a = fixtureChannels()[0];
    const b = { ...makeItem(3, "A").series!.channels[0], name: "other" };
    const plot = new SeriesPlot();
    plot.setData([a, b]);
    const r = plot.hoverAt(plot.xOf(parseTs(a.timestamps[10])))!;
    // Same x for both channels; nearest-by-x ties resolve to the first.
    expect([a.values[10], b.values[10]]).toContain(r.value);
    expect(r.timestamp).toBe(a.timestamps[10]);
  });

  it("restores a saved view", () => {
    const channels = fixtureChannels();
    const plot = new SeriesPlot();
    plot.setData(channels);
    plot.zoomAt(0.25, 430);
    const saved = plot.view;
    const fresh = new SeriesPlot();
    fresh.setData(channels);
    fresh.setView(saved);
    expect(fresh.view).toEqual(saved);
  });
});
