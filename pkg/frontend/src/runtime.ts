/**
 * Tracer runtime injected into instrumented projects as `__cftracer.js`.
 *
 * A shadow stack of source positions attributes every function entry to its
 * caller: entering records the edge (stack top -> entered) and pushes; the
 * wrapping `finally` pops, so exceptions unwind the stack correctly. An
 * empty stack means a top-level (or post-async-boundary) call, attributed
 * to the synthetic program-entry node.
 *
 * This module must stay dependency-free: it is copied verbatim next to the
 * instrumented sources.
 */

import * as fs from "fs";

export const ENTRY_POS = "<entry>:1:1";

export interface TraceRecord {
  caller: string;
  callee: string;
  count: number;
}

const stack: string[] = [];
const edges = new Map<string, number>();
const nodes = new Set<string>();

export function enter(pos: string): string {
  const caller = stack.length > 0 ? stack[stack.length - 1] : ENTRY_POS;
  nodes.add(caller);
  nodes.add(pos);
  const key = caller + "|" + pos;
  edges.set(key, (edges.get(key) ?? 0) + 1);
  stack.push(pos);
  return pos;
}

/** Per-edge invocation counts; the emitted document folds these away. */
export function records(): TraceRecord[] {
  return Array.from(edges.entries()).map(([key, count]) => {
    const [caller, callee] = key.split("|");
    return { caller, callee, count };
  });
}

export function exit(token: string): void {
  if (stack.length > 0 && stack[stack.length - 1] === token) {
    stack.pop();
    return;
  }
  // Mismatched unwind (should not happen with finally-wrapping); drop down
  // to the matching frame rather than corrupting the whole stack.
  const at = stack.lastIndexOf(token);
  if (at >= 0) {
    stack.length = at;
  }
}

function comparePos(a: string, b: string): number {
  const [fileA, lineA, colA] = splitPos(a);
  const [fileB, lineB, colB] = splitPos(b);
  if (fileA !== fileB) return fileA < fileB ? -1 : 1;
  if (lineA !== lineB) return lineA - lineB;
  return colA - colB;
}

function splitPos(pos: string): [string, number, number] {
  const second = pos.lastIndexOf(":");
  const first = pos.lastIndexOf(":", second - 1);
  return [
    pos.slice(0, first),
    parseInt(pos.slice(first + 1, second), 10),
    parseInt(pos.slice(second + 1), 10),
  ];
}

/** The unified call-graph document for everything recorded so far. */
export function traceDocument(): object {
  const nodeDocs = Array.from(nodes)
    .sort(comparePos)
    .map((pos) => ({ pos, entry: pos === ENTRY_POS, final: false }));
  const edgeDocs = Array.from(edges.keys())
    .map((key) => key.split("|"))
    .sort((a, b) => comparePos(a[0], b[0]) || comparePos(a[1], b[1]))
    .map(([source, target]) => ({
      source,
      target,
      found_by: ["dynamic-trace"],
      confidence: 1.0,
    }));
  return { nodes: nodeDocs, edges: edgeDocs };
}

export function writeTrace(outPath: string): void {
  fs.writeFileSync(outPath, JSON.stringify(traceDocument(), null, 2) + "\n");
}

/** Test hook: forget all recorded state. */
export function reset(): void {
  stack.length = 0;
  edges.clear();
  nodes.clear();
}

const outPath = process.env.CFTRACE_OUT;
if (outPath) {
  process.on("exit", () => writeTrace(outPath));
}
