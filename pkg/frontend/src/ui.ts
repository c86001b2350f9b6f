/**
 * DOM wiring for the studio: requirement form, stage stepper, live
 * PosterHTML preview with click-to-select, an element inspector, the
 * background regenerate panel, and render history compare.
 *
 * The preview shows the server's PosterHTML verbatim inside a scaled
 * container (CSS zoom only, no layout of our own); the raster toggle swaps
 * in the server-rendered PNG for pixel-exact inspection.
 */

import { ApiError, type EditOp, StaleVersionError } from "./api.js";
import { type NodeView, findNode, lengthToPx } from "./poster.js";
import { type SessionSnapshot, StudioSession } from "./session.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (HTMLElement | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

function toast(message: string, kind: "info" | "error" = "info"): void {
  const box = document.getElementById("toasts");
  if (!box) return;
  const item = el("div", { class: `toast ${kind}` }, message);
  box.append(item);
  setTimeout(() => item.remove(), 5000);
}

async function guard(action: () => Promise<void>): Promise<void> {
  try {
    await action();
  } catch (error) {
    if (error instanceof StaleVersionError) {
      toast("Someone else changed this job; reload to continue.", "error");
    } else if (error instanceof ApiError) {
      toast(error.message, "error");
    } else {
      toast(String(error), "error");
    }
  }
}

export function mountStudio(root: HTMLElement, session: StudioSession): void {
  root.innerHTML = "";
  root.append(
    el(
      "div",
      { class: "studio" },
      buildSidebar(session),
      buildPreviewPane(session),
      buildInspectorPane(session),
    ),
    el("div", { id: "toasts" }),
  );
  session.subscribe((snap) => renderAll(session, snap));
  void refreshJobList(session);
}

function buildSidebar(session: StudioSession): HTMLElement {
  const requirement = el("textarea", {
    id: "requirement",
    placeholder: "描述你的海报需求 / describe the poster you need",
    rows: "4",
  });
  const create = el("button", { id: "create-job" }, "Create job");
  create.onclick = () =>
    guard(async () => {
      const text = (requirement as HTMLTextAreaElement).value.trim();
      if (!text) {
        toast("Requirement text is required", "error");
        return;
      }
      await session.createJob(text);
      await refreshJobList(session);
    });
  const advance = el("button", { id: "advance" }, "Advance stage");
  advance.onclick = () => guard(() => session.advance());
  const run = el("button", { id: "run-all" }, "Run to Rendered");
  run.onclick = () =>
    guard(async () => {
      await session.advanceToRendered();
    });
  return el(
    "aside",
    { class: "sidebar" },
    el("h1", {}, "PosterForge Studio"),
    requirement,
    el("div", { class: "row" }, create),
    el("div", { class: "state-line", id: "state-line" }, "no job"),
    el("div", { class: "row" }, advance, run),
    el("h2", {}, "Jobs"),
    el("ul", { id: "job-list" }),
  );
}

function buildPreviewPane(session: StudioSession): HTMLElement {
  const live = el("div", { id: "preview-live" });
  live.onclick = (event) => {
    const target = (event.target as HTMLElement).closest("[id]");
    if (target && target.id && live.contains(target) && target !== live) {
      session.select(target.id);
      event.preventDefault();
    }
  };
  const rasterToggle = el("label", { class: "toggle" }, el("input", { type: "checkbox", id: "raster-toggle" }), " server raster");
  rasterToggle.querySelector("input")!.addEventListener("change", () => renderAll(session, session.snapshot()));
  const zoom = el("select", { id: "zoom" });
  for (const value of ["0.25", "0.5", "0.75", "1", "1.5", "2"]) {
    zoom.append(el("option", value === "0.5" ? { value, selected: "" } : { value }, `${value}x`));
  }
  (zoom as HTMLSelectElement).value = "0.5";
  zoom.addEventListener("change", () => session.setPreviewScale(parseFloat((zoom as HTMLSelectElement).value)));
  session.setPreviewScale(0.5);
  return el(
    "main",
    { class: "preview" },
    el("div", { class: "preview-bar" }, rasterToggle, zoom),
    el("div", { id: "preview-scroll" }, live, el("img", { id: "preview-raster", alt: "raster preview" })),
    el("h2", {}, "Render history"),
    el("div", { id: "render-history" }),
  );
}

function buildInspectorPane(session: StudioSession): HTMLElement {
  return el(
    "aside",
    { class: "inspector" },
    el("h2", {}, "Inspector"),
    el("div", { id: "inspector-body" }, "select an element in the preview"),
    el("h2", {}, "Background"),
    buildRegeneratePanel(session),
  );
}

function buildRegeneratePanel(session: StudioSession): HTMLElement {
  const seed = el("input", { id: "regen-seed", type: "number", placeholder: "seed" });
  const style = el("select", { id: "regen-style" });
  style.append(el("option", { value: "" }, "(keep style)"));
  for (const name of ["Illustrative", "Design-Oriented", "Minimalistic", "Photorealistic"]) {
    style.append(el("option", { value: name }, name));
  }
  const caption = el("textarea", { id: "regen-caption", rows: "2", placeholder: "(keep caption)" });
  const go = el("button", { id: "regen" }, "Regenerate background");
  go.onclick = () =>
    guard(async () => {
      const overrides: { seed?: number; style?: string; caption?: string } = {};
      const seedValue = (seed as HTMLInputElement).value;
      if (seedValue) overrides.seed = parseInt(seedValue, 10);
      const styleValue = (style as HTMLSelectElement).value;
      if (styleValue) overrides.style = styleValue;
      const captionValue = (caption as HTMLTextAreaElement).value.trim();
      if (captionValue) overrides.caption = captionValue;
      await session.regenerateBackground(overrides);
      toast("Background regenerated; layout untouched.");
    });
  return el("div", { class: "regen" }, seed, style, caption, go);
}

async function refreshJobList(session: StudioSession): Promise<void> {
  const list = document.getElementById("job-list");
  if (!list) return;
  try {
    const { jobs } = await session.api.listJobs();
    list.innerHTML = "";
    for (const job of jobs) {
      const item = el(
        "li",
        {},
        el("a", { href: "#" }, `${job.requirement.text.slice(0, 28)} — ${job.state.name} v${job.version}`),
      );
      item.querySelector("a")!.onclick = (event) => {
        event.preventDefault();
        void guard(() => session.openJob(job.id));
      };
      list.append(item);
    }
  } catch (error) {
    toast(String(error), "error");
  }
}

function renderAll(session: StudioSession, snap: SessionSnapshot): void {
  renderStateLine(snap);
  renderPreview(session, snap);
  renderInspector(session, snap);
  renderHistory(session, snap);
  if (snap.conflict) {
    const line = document.getElementById("state-line");
    if (line) {
      const reload = el("button", {}, "Reload server state");
      reload.onclick = () => guard(() => session.resolveConflict());
      line.append(el("span", { class: "conflict" }, " — conflict (409): "), reload);
    }
  }
}

function renderStateLine(snap: SessionSnapshot): void {
  const line = document.getElementById("state-line");
  if (!line) return;
  if (!snap.job) {
    line.textContent = "no job";
    return;
  }
  const failed = snap.job.state.name === "Failed"
    ? ` (${snap.job.state.stage}: ${snap.job.state.reason})`
    : "";
  line.textContent = `${snap.job.id.slice(0, 8)}… ${snap.job.state.name}${failed} v${snap.job.version}`;
}

function renderPreview(session: StudioSession, snap: SessionSnapshot): void {
  const live = document.getElementById("preview-live");
  const raster = document.getElementById("preview-raster") as HTMLImageElement | null;
  const useRaster = (document.getElementById("raster-toggle") as HTMLInputElement | null)?.checked;
  if (!live || !raster) return;
  if (!snap.job || !snap.posterHtml) {
    live.innerHTML = "<p class='placeholder'>advance the job until a poster exists</p>";
    raster.style.display = "none";
    return;
  }
  if (useRaster && (snap.job.state.name === "Rendered" || snap.job.state.name === "LayoutReady")) {
    raster.src = session.api.renderUrl(snap.job.id, 1) + `&v=${snap.job.version}`;
    raster.style.display = "block";
    raster.style.width = `${lengthWidth(snap) * snap.previewScale}px`;
    live.style.display = "none";
    return;
  }
  raster.style.display = "none";
  live.style.display = "block";
  // The server's PosterHTML is injected verbatim; zoom is pure CSS.
  live.innerHTML = snap.posterHtml;
  const posterRoot = live.querySelector(".poster") as HTMLElement | null;
  if (posterRoot) {
    posterRoot.style.transformOrigin = "top left";
    posterRoot.style.transform = `scale(${snap.previewScale})`;
    posterRoot.style.position = "relative";
  }
  if (snap.selection) {
    const selected = live.querySelector(`[id="${CSS.escape(snap.selection)}"]`) as HTMLElement | null;
    if (selected) selected.classList.add("selected-node");
  }
}

function lengthWidth(snap: SessionSnapshot): number {
  return snap.poster?.width ?? 0;
}

function renderInspector(session: StudioSession, snap: SessionSnapshot): void {
  const body = document.getElementById("inspector-body");
  if (!body) return;
  if (!snap.poster || !snap.selection) {
    body.textContent = "select an element in the preview";
    return;
  }
  const node = findNode(snap.poster, snap.selection);
  if (!node) {
    body.textContent = "selection no longer exists";
    return;
  }
  body.innerHTML = "";
  body.append(el("div", { class: "node-id" }, `#${node.id}`));
  body.append(buildRectEditor(session, node));
  if (node.runs.length) body.append(buildTextEditor(session, node));
  body.append(buildStyleEditor(session, node));
  const remove = el("button", { class: "danger" }, "Remove element");
  remove.onclick = () => guard(() => session.applyEdit({ op: "remove_node", id: node.id }));
  body.append(remove);
}

function buildRectEditor(session: StudioSession, node: NodeView): HTMLElement {
  const fields: [string, number][] = [
    ["left", node.left],
    ["top", node.top],
    ["width", node.width],
    ["height", node.height],
  ];
  const inputs = fields.map(([name, value]) =>
    el("label", {}, `${name} `, el("input", { type: "number", value: String(value), "data-f": name })),
  );
  const apply = el("button", {}, "Apply rect");
  apply.onclick = () =>
    guard(async () => {
      const read = (name: string): number =>
        parseFloat((inputs.find((i) => i.querySelector(`[data-f="${name}"]`))!
          .querySelector("input") as HTMLInputElement).value);
      const edits: EditOp[] = [];
      const dx = read("left") - node.left;
      const dy = read("top") - node.top;
      if (dx !== 0 || dy !== 0) edits.push({ op: "move", id: node.id, dx, dy });
      const width = read("width");
      const height = read("height");
      if (width !== node.width || height !== node.height) {
        edits.push({ op: "resize", id: node.id, width, height });
      }
      for (const edit of edits) session.stageEdit(edit);
      await session.commitEdits();
    });
  return el("div", { class: "rect-editor" }, ...inputs, apply);
}

function buildTextEditor(session: StudioSession, node: NodeView): HTMLElement {
  const areas = node.runs.map((run) =>
    el("textarea", { rows: "2", class: "run-text" }, run.text),
  );
  const apply = el("button", {}, "Apply text");
  apply.onclick = () =>
    guard(() =>
      session.applyEdit({
        op: "set_text",
        id: node.id,
        runs: node.runs.map((run, i) => ({
          text: (areas[i] as HTMLTextAreaElement).value || run.text,
          font: {
            family: run.style["font-family"],
            size: run.style["font-size"] ?? "16px",
            weight: run.style["font-weight"] ? parseInt(run.style["font-weight"], 10) : 400,
            color: run.style["color"] ?? "#000000",
            align: (run.style["text-align"] as "left" | "center" | "right" | undefined) ?? "left",
          },
        })),
      }),
    );
  return el("div", { class: "text-editor" }, ...areas, apply);
}

const STYLE_FIELDS = ["background-color", "border-radius", "z-index", "color", "font-size", "font-weight", "text-align"];

function buildStyleEditor(session: StudioSession, node: NodeView): HTMLElement {
  const prop = el("select", {});
  for (const name of STYLE_FIELDS) prop.append(el("option", { value: name }, name));
  const value = el("input", { type: "text", placeholder: "value, e.g. #FF8800 or 12px" });
  const apply = el("button", {}, "Set style");
  apply.onclick = () =>
    guard(() =>
      session.applyEdit({
        op: "set_style",
        id: node.id,
        property: (prop as HTMLSelectElement).value,
        value: (value as HTMLInputElement).value.trim(),
      }),
    );
  return el("div", { class: "style-editor" }, prop, value, apply);
}

function renderHistory(session: StudioSession, snap: SessionSnapshot): void {
  const box = document.getElementById("render-history");
  if (!box) return;
  box.innerHTML = "";
  if (!snap.job || !snap.job.renders.length) {
    box.textContent = "no renders yet";
    return;
  }
  // Side-by-side compare: each render scale next to the current one.
  for (const render of snap.job.renders) {
    box.append(
      el(
        "figure",
        {},
        el("img", {
          src: session.api.renderUrl(snap.job.id, render.scale) + `&v=${snap.job.version}`,
          class: "history-img",
        }),
        el("figcaption", {}, `scale ${render.scale} — ${render.digest.slice(0, 10)}`),
      ),
    );
  }
}

declare global {
  interface Window {
    CSS: typeof CSS;
  }
}
