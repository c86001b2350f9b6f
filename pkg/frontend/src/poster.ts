/**
 * Read-only inspection of the server's canonical PosterHTML.
 *
 * The studio never does layout math: these helpers only lift node ids,
 * declared rects, style declarations and span text out of the markup the
 * service produced so the inspector can show editable fields. Offsets in
 * the markup are CSS parent-relative; absolute positions are recovered by
 * summing ancestor offsets, which is bookkeeping, not layout.
 */

export interface RunView {
  text: string;
  style: Record<string, string>;
}

export interface NodeView {
  id: string;
  /** Document-absolute offsets in px, exact as authored. */
  left: number;
  top: number;
  width: number;
  height: number;
  zIndex: number;
  style: Record<string, string>;
  runs: RunView[];
  children: NodeView[];
}

export interface PosterView {
  width: number;
  height: number;
  backgroundColor: string | null;
  backgroundImage: string | null;
  nodes: NodeView[];
}

const TAG_RE = /<(\/?)(div|span|img)((?:\s+[a-zA-Z-]+="[^"]*")*)\s*\/?>/g;
const ATTR_RE = /([a-zA-Z-]+)="([^"]*)"/g;

function decodeEntities(raw: string): string {
  return raw
    .replace(/&lt;/g, "<")
    .replace(/&gt;/g, ">")
    .replace(/&quot;/g, '"')
    .replace(/&apos;/g, "'")
    .replace(/&#x([0-9a-fA-F]+);/g, (_, hex: string) => String.fromCodePoint(parseInt(hex, 16)))
    .replace(/&#(\d+);/g, (_, dec: string) => String.fromCodePoint(parseInt(dec, 10)))
    .replace(/&amp;/g, "&");
}

function parseAttrs(raw: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const match of raw.matchAll(ATTR_RE)) {
    out[match[1]!.toLowerCase()] = decodeEntities(match[2]!);
  }
  return out;
}

export function parseStyle(raw: string): Record<string, string> {
  const out: Record<string, string> = {};
  for (const chunk of raw.split(";")) {
    const idx = chunk.indexOf(":");
    if (idx < 0) continue;
    const prop = chunk.slice(0, idx).trim().toLowerCase();
    const value = chunk.slice(idx + 1).trim();
    if (prop) out[prop] = value;
  }
  return out;
}

/** Parse "12px", "12.5px" or "calc(25px/3)" to a number (px). */
export function lengthToPx(value: string | undefined): number {
  if (!value) return 0;
  const calc = value.match(/^calc\((-?\d+)px\/(\d+)\)$/);
  if (calc) return parseInt(calc[1]!, 10) / parseInt(calc[2]!, 10);
  const plain = value.match(/^(-?\d+(?:\.\d+)?)px$/);
  if (plain) return parseFloat(plain[1]!);
  return 0;
}

interface Frame {
  view: NodeView | null; // null for the root poster div
  absLeft: number;
  absTop: number;
  children: NodeView[];
}

/**
 * Structural parse of canonical PosterHTML into a node tree for the
 * inspector. Tolerates exactly the canonical form the service serializes.
 */
export function parsePoster(html: string): PosterView {
  TAG_RE.lastIndex = 0;
  const poster: PosterView = {
    width: 0,
    height: 0,
    backgroundColor: null,
    backgroundImage: null,
    nodes: [],
  };
  const stack: Frame[] = [];
  let sawRoot = false;
  let match: RegExpExecArray | null;
  let pendingSpan: { style: Record<string, string>; start: number } | null = null;

  while ((match = TAG_RE.exec(html)) !== null) {
    const closing = match[1] === "/";
    const tag = match[2]!;
    const attrs = parseAttrs(match[3] ?? "");
    const style = parseStyle(attrs["style"] ?? "");

    if (tag === "span") {
      const frame = stack[stack.length - 1];
      if (!frame) continue;
      if (!closing) {
        pendingSpan = { style, start: TAG_RE.lastIndex };
      } else if (pendingSpan && frame.view) {
        frame.view.runs.push({
          text: decodeEntities(html.slice(pendingSpan.start, match.index)),
          style: pendingSpan.style,
        });
        pendingSpan = null;
      }
      continue;
    }

    if (closing) {
      const frame = stack.pop();
      if (!frame) continue;
      if (frame.view) {
        frame.view.children = frame.children;
        const parent = stack[stack.length - 1];
        if (parent) parent.children.push(frame.view);
      } else {
        poster.nodes = frame.children;
      }
      continue;
    }

    if (!sawRoot) {
      sawRoot = true;
      poster.width = lengthToPx(style["width"]);
      poster.height = lengthToPx(style["height"]);
      poster.backgroundColor = style["background-color"] ?? null;
      const image = style["background-image"]?.match(/^url\((.*)\)$/);
      poster.backgroundImage = image ? image[1]! : null;
      stack.push({ view: null, absLeft: 0, absTop: 0, children: [] });
      continue;
    }

    const parent = stack[stack.length - 1];
    const absLeft = (parent?.absLeft ?? 0) + lengthToPx(style["left"]);
    const absTop = (parent?.absTop ?? 0) + lengthToPx(style["top"]);
    const view: NodeView = {
      id: attrs["id"] ?? "",
      left: absLeft,
      top: absTop,
      width: lengthToPx(style["width"]),
      height: lengthToPx(style["height"]),
      zIndex: style["z-index"] ? parseInt(style["z-index"], 10) : 0,
      style,
      runs: [],
      children: [],
    };
    const selfClosing = tag === "img" || match[0]!.endsWith("/>");
    if (selfClosing) {
      if (parent) parent.children.push(view);
    } else {
      stack.push({ view, absLeft, absTop, children: [] });
    }
  }
  return poster;
}

export function flattenNodes(poster: PosterView): NodeView[] {
  const out: NodeView[] = [];
  const walk = (nodes: NodeView[]) => {
    for (const n of nodes) {
      out.push(n);
      walk(n.children);
    }
  };
  walk(poster.nodes);
  return out;
}

export function findNode(poster: PosterView, id: string): NodeView | undefined {
  return flattenNodes(poster).find((n) => n.id === id);
}

/** Concatenated run text per node with runs, in document order. */
export function extractText(poster: PosterView): string[] {
  return flattenNodes(poster)
    .filter((n) => n.runs.length > 0)
    .map((n) => n.runs.map((r) => r.text).join(""));
}

/** (id, rect) pairs for comparing geometry across versions. */
export function nodeRects(poster: PosterView): [string, number, number, number, number][] {
  return flattenNodes(poster).map((n) => [n.id, n.left, n.top, n.width, n.height]);
}
