/**
 * Scripted studio loop against the real service (mock backends):
 * create -> advance to Rendered -> edit the title -> poster.html carries the
 * edit -> regenerate the background with a new seed -> text boxes unchanged
 * -> a concurrent stale edit receives 409.
 */

import { describe, expect, inject, it } from "vitest";

import { StaleVersionError, StudioApi } from "../src/api.js";
import { extractText, findNode, nodeRects, parsePoster } from "../src/poster.js";
import { StudioSession } from "../src/session.js";

const api = () => new StudioApi(inject("baseUrl"));

describe("studio loop", () => {
  it("runs the full edit/regenerate loop the editability story promises", async () => {
    const session = new StudioSession(api());

    await session.createJob("秋季书市海报 :: 周末开放，折扣图书");
    expect(session.snapshot().job?.state.name).toBe("Created");

    await session.advanceToRendered();
    const rendered = session.snapshot();
    expect(rendered.job?.state.name).toBe("Rendered");
    expect(rendered.poster).not.toBeNull();
    expect(rendered.job?.renders.length).toBeGreaterThan(0);

    // Edit the title through the session, exactly as the inspector would.
    const title = findNode(rendered.poster!, "title");
    expect(title).toBeDefined();
    const editedText = "改版标题 Editable Proof";
    await session.applyEdit({
      op: "set_text",
      id: "title",
      runs: [{ text: editedText, font: { size: title!.runs[0]!.style["font-size"] ?? "24px", weight: 700 } }],
    });
    expect(session.snapshot().job?.state.name).toBe("LayoutReady");

    // The server's PosterHTML is the source of truth and carries the edit.
    const html = await api().getPosterHtml(session.jobId);
    expect(html).toContain(editedText);
    expect(extractText(parsePoster(html))).toContain(editedText);

    // Regenerate the background with a fresh seed: image swaps, boxes stay.
    const beforeRects = nodeRects(parsePoster(html));
    const beforeBackground = session.snapshot().job?.background?.content_hash;
    const beforeImageId = parsePoster(html).backgroundImage;
    await session.regenerateBackground({ seed: 987654321 });
    const after = session.snapshot();
    expect(after.job?.background?.content_hash).not.toBe(beforeBackground);
    const afterHtml = await api().getPosterHtml(session.jobId);
    const afterPoster = parsePoster(afterHtml);
    expect(afterPoster.backgroundImage).not.toBe(beforeImageId);
    expect(nodeRects(afterPoster)).toEqual(beforeRects);
    expect(extractText(afterPoster)).toContain(editedText);

    // Renders reflect the scaling theorem over HTTP.
    const png = await api().getRenderBytes(session.jobId, 1);
    expect(new Uint8Array(png).slice(1, 4)).toEqual(new Uint8Array([0x50, 0x4e, 0x47]));
  });

  it("rejects a concurrent stale edit with 409", async () => {
    const tabA = new StudioSession(api());
    await tabA.createJob("双开编辑冲突测试");
    await tabA.advanceToRendered();

    // Second tab opens the same job at the same version.
    const tabB = new StudioSession(api());
    await tabB.openJob(tabA.jobId);
    expect(tabB.version).toBe(tabA.version);

    // Tab A commits first and adopts the new version.
    await tabA.applyEdit({ op: "move", id: "title", dx: 2, dy: 0 });

    // Tab B's commit is now stale and must receive 409.
    let failure: unknown;
    try {
      await tabB.applyEdit({ op: "move", id: "title", dx: -2, dy: 0 });
    } catch (error) {
      failure = error;
    }
    expect(failure).toBeInstanceOf(StaleVersionError);
    expect((failure as StaleVersionError).status).toBe(409);
    expect((failure as StaleVersionError).currentVersion).toBe(tabA.version);
    expect(tabB.snapshot().conflict).toBe(true);

    // Reloading adopts the winning version and clears the conflict.
    await tabB.resolveConflict();
    expect(tabB.version).toBe(tabA.version);
    expect(tabB.snapshot().conflict).toBe(false);
  });

  it("keeps studio preview text equal to the server extraction", async () => {
    const session = new StudioSession(api());
    await session.createJob("预览一致性检查");
    await session.advanceToRendered();
    // The studio never lays text out itself: its view of the text is parsed
    // straight from the served PosterHTML, so re-fetching must agree.
    const fromSession = extractText(session.snapshot().poster!);
    const fromServer = extractText(parsePoster(await api().getPosterHtml(session.jobId)));
    expect(fromSession).toEqual(fromServer);
    expect(fromSession.length).toBeGreaterThan(0);
  });

  it("serves the built studio bundle at /app when configured", async () => {
    // The e2e server runs without --app-dir; hitting /app should 404 rather
    // than break other routes, and /healthz stays healthy.
    const health = await fetch(`${inject("baseUrl")}/healthz`);
    expect(health.ok).toBe(true);
  });
});
