import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { FakeServer } from "./fakeServer.js";

describe("ApiClient", () => {
  it("lists the five flagged fixtures", async () => {
    const api = new ApiClient(new FakeServer().fetch);
    const queue = await api.getQueue();
    expect(queue).toHaveLength(5);
    expect(queue.every((e) => e.flags.length > 0)).toBe(true);
  });

  it("fetches an item with its series payload", async () => {
    const api = new ApiClient(new FakeServer().fetch);
    const item = await api.getItem("qa-0000");
    expect(item.series!.channels[0].values).toHaveLength(48);
    expect(item.series!.channels[0].timestamps).toHaveLength(48);
  });

  it("raises ApiError with status for unknown items", async () => {
    const api = new ApiClient(new FakeServer().fetch);
    await expect(api.getItem("nope")).rejects.toMatchObject({ status: 404 });
  });

  it("round-trips a keep decision and conflicts on the second", async () => {
    const api = new ApiClient(new FakeServer().fetch);
    const res = await api.postDecision("qa-0000", { action: "keep" });
    expect(res.status).toBe("human_kept");
    const err = await api.postDecision("qa-0000", { action: "discard" }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
  });

  it("rejects bad actions with 422", async () => {
    const api = new ApiClient(new FakeServer().fetch);
    await expect(api.postDecision("qa-0000", { action: "frobnicate" as never })).rejects.toMatchObject({
      status: 422,
    });
  });

  it("exports only shippable statuses", async () => {
    const server = new FakeServer();
    const api = new ApiClient(server.fetch);
    await api.postDecision("qa-0000", { action: "keep" });
    await api.postDecision("qa-0001", { action: "discard" });
    const exported = await api.getExport();
    const statuses = new Set(exported.map((d) => d.status));
    expect([...statuses].every((s) => ["passed", "human_kept", "human_corrected"].includes(s))).toBe(
      true,
    );
    expect(exported.some((d) => d.qa_id === "qa-0001")).toBe(false);
  });
});
