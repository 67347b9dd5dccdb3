import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";
import { FakeServer } from "./fakeServer.js";

function flush(): Promise<void> {
  return new Promise((r) => setTimeout(r, 0));
}

function setup() {
  const server = new FakeServer();
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = new App(root, new ApiClient(server.fetch));
  return { server, root, app };
}

beforeEach(() => {
  document.body.textContent = "";
});

describe("queue view", () => {
  it("lists the five flagged fixtures", async () => {
    const { root, app } = setup();
    await app.refreshQueue();
    const rows = root.querySelectorAll(".queue-row");
    expect(rows).toHaveLength(5);
    expect(root.querySelector(".done-banner")).toBeNull();
  });

  it("shows a done banner when the queue empties", async () => {
    const { server, root, app } = setup();
    for (const entry of server.queue()) server.decide(entry.qa_id, { action: "keep" });
    await app.refreshQueue();
    expect(root.querySelector(".done-banner")).not.toBeNull();
    expect(root.querySelectorAll(".queue-row")).toHaveLength(0);
  });
});

describe("item view", () => {
  it("shows question, flags, answer and plot", async () => {
    const { root, app } = setup();
    await app.refreshQueue();
    await app.open("qa-0000");
    expect(root.querySelector(".question")!.textContent).toContain("channel 0");
    expect(root.querySelectorAll(".flag")).toHaveLength(1);
    expect(root.querySelector(".gold-text")!.textContent).toBe("2");
    expect(root.querySelector("canvas")).not.toBeNull();
  });

  it("hover readout shows the exact payload value", async () => {
    const { server, root, app } = setup();
    await app.open("qa-0000");
    const item = server.items.get("qa-0000")!;
    const ch = item.series!.channels[0];
    const plot = app.plot!;
    const readout = root.querySelector(".readout")!;
    plot.onHover!(plot.hoverAt(plot.xOf(new Date(ch.timestamps[5].replace(" ", "T")).getTime())));
    expect(readout.textContent).toBe(`${ch.name}: ${ch.timestamps[5]} → ${ch.values[5]} ${ch.unit}`);
  });

  it("hides the evidence table for metadata-answered items", async () => {
    const { root, app } = setup();
    await app.open("qa-0000"); // fmt A
    expect(root.querySelector(".evidence-table")).toBeNull();
  });

  it("shows verbatim evidence for computed items", async () => {
    const { server, root, app } = setup();
    await app.open("qa-0001"); // fmt B
    const item = server.items.get("qa-0001")!;
    const cells = [...root.querySelectorAll(".evidence-value")].map((c) => c.textContent);
    const emitted = item.evidence.emitted as Record<string, unknown>;
    expect(cells).toEqual(Object.values(emitted).map(String));
    expect(root.querySelector(".plan-source")!.textContent).toBe(item.plan_source);
  });

  it("zoom persists per item across reopen", async () => {
    const { app } = setup();
    await app.open("qa-0000");
    app.plot!.zoomAt(0.3, 400);
    const saved = app.plot!.view;
    await app.open("qa-0001");
    await app.open("qa-0000");
    expect(app.plot!.view).toEqual(saved);
  });
});

describe("decisions", () => {
  it("keep round-trips to human_kept and refreshes the queue", async () => {
    const { server, root, app } = setup();
    await app.refreshQueue();
    await app.open("qa-0000");
    await app.decide("keep");
    expect(server.items.get("qa-0000")!.status).toBe("human_kept");
    const ids = [...root.querySelectorAll(".queue-row")].map((r) => (r as HTMLElement).dataset.qaId);
    expect(ids).toHaveLength(4);
    expect(ids).not.toContain("qa-0000");
  });

  it("correct sends the edited answer and round-trips to human_corrected", async () => {
    const { server, root, app } = setup();
    await app.open("qa-0000");
    (root.querySelector(".field-input") as HTMLInputElement).value = "7";
    (root.querySelector(".corrected-text") as HTMLInputElement).value = "7";
    await app.decide("correct");
    const item = server.items.get("qa-0000")!;
    expect(item.status).toBe("human_corrected");
    expect(item.gold.fields.count.atom!.value).toBe(7);
    expect(item.gold_text).toBe("7");
    expect(item.evidence.original_gold).toBeDefined();
  });

  it("correct with an empty answer is rejected locally", async () => {
    const { server, root, app } = setup();
    await app.open("qa-0000");
    (root.querySelector(".corrected-text") as HTMLInputElement).value = "  ";
    await app.decide("correct");
    expect(root.querySelector(".error")!.textContent).toContain("non-empty");
    expect(server.items.get("qa-0000")!.status).toBe("flagged");
  });

  it("discard round-trips to discarded", async () => {
    const { server, app } = setup();
    await app.open("qa-0001");
    await app.decide("discard");
    expect(server.items.get("qa-0001")!.status).toBe("discarded");
  });

  it("skip leaves the item flagged and still queued", async () => {
    const { server, root, app } = setup();
    await app.open("qa-0002");
    await app.decide("skip");
    expect(server.items.get("qa-0002")!.status).toBe("flagged");
    const ids = [...root.querySelectorAll(".queue-row")].map((r) => (r as HTMLElement).dataset.qaId);
    expect(ids).toContain("qa-0002");
  });

  it("a conflict surfaces without losing edits", async () => {
    const { server, root, app } = setup();
    await app.open("qa-0000");
    const input = root.querySelector(".corrected-text") as HTMLInputElement;
    input.value = "carefully edited answer";
    server.decide("qa-0000", { action: "keep" }); // another reviewer got there first
    await app.decide("keep");
    expect(root.querySelector(".error")!.textContent).toContain("409");
    expect(input.value).toBe("carefully edited answer");
  });

  it("keyboard shortcut k keeps the open item", async () => {
    const { server, app } = setup();
    await app.open("qa-0003");
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "k" }));
    await flush();
    await flush();
    expect(server.items.get("qa-0003")!.status).toBe("human_kept");
  });
});
