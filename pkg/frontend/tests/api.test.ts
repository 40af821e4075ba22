import { describe, expect, it, vi } from "vitest";

import { ApiError, ConvKgClient } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ConvKgClient", () => {
  it("creates a session", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ session_id: "abc123" }, 201));
    const client = new ConvKgClient("http://x", fetchMock as unknown as typeof fetch);
    const sid = await client.createSession();
    expect(sid).toBe("abc123");
    expect(fetchMock).toHaveBeenCalledWith(
      "http://x/v1/session",
      expect.objectContaining({ method: "POST", body: JSON.stringify({}) }),
    );
  });

  it("passes the speaker id through", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ session_id: "s" }, 201));
    const client = new ConvKgClient("", fetchMock as unknown as typeof fetch);
    await client.createSession("alice");
    expect(fetchMock.mock.calls[0][1].body).toBe(JSON.stringify({ speaker_id: "alice" }));
  });

  it("asks within a session", async () => {
    const payload = {
      turn: 0,
      values: ["Q_JosephJackson"],
      value_labels: ["Joseph Jackson"],
      short_text: "Joseph Jackson",
      long_text: "Joseph Jackson",
      confidence: 0.8,
      source: "REASONING",
      provenance_triples: [["Q_MichaelJackson", "P_father", "Q_JosephJackson"]],
      query_debug: "SELECT ?y\nQ_MichaelJackson P_father ?y",
      excerpts: [],
      entity_sheets: [],
      clarification: null,
    };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(payload));
    const client = new ConvKgClient("", fetchMock as unknown as typeof fetch);
    const answer = await client.ask("sid", "What is his father's name?");
    expect(answer).toEqual(payload);
    expect(fetchMock.mock.calls[0][0]).toBe("/v1/session/sid/ask");
  });

  it("raises ApiError with the server detail", async () => {
    const fetchMock = vi
      .fn()
      .mockResolvedValue(jsonResponse({ detail: "unknown or expired session" }, 404));
    const client = new ConvKgClient("", fetchMock as unknown as typeof fetch);
    await expect(client.ask("nope", "hi")).rejects.toMatchObject({
      status: 404,
      message: "unknown or expired session",
    });
  });

  it("exposes 409 conflicts", async () => {
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse({ detail: "busy" }, 409));
    const client = new ConvKgClient("", fetchMock as unknown as typeof fetch);
    try {
      await client.reward("sid", 0, "CORRECT");
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(ApiError);
      expect((err as ApiError).status).toBe(409);
    }
  });

  it("fetches entity sheets and health", async () => {
    const sheet = { id: "Q_X", label: "X", description: "", types: [], image: null };
    const fetchMock = vi.fn().mockResolvedValue(jsonResponse(sheet));
    const client = new ConvKgClient("", fetchMock as unknown as typeof fetch);
    expect(await client.entity("Q_X")).toEqual(sheet);
    expect(fetchMock.mock.calls[0][0]).toBe("/v1/entity/Q_X");
  });
});
