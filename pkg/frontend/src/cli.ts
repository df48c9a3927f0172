#!/usr/bin/env node
/**
 * dyntrace: instrument a JavaScript project and record executed call edges.
 *
 *   dyntrace instrument <src> <dst>
 *   dyntrace run <dst> --out <trace.json> [--exec "<command>"]
 *
 * `run` executes the project's test command (default `node test.js`) inside
 * the instrumented copy with CFTRACE_OUT set; on process exit the runtime
 * writes the unified call-graph document to that path.
 */

import { spawnSync } from "child_process";
import * as path from "path";
import { instrumentTree } from "./instrument";

function usage(): never {
  console.error("usage: dyntrace instrument <src> <dst>");
  console.error('       dyntrace run <dst> --out <trace.json> [--exec "<command>"]');
  process.exit(2);
}

function main(argv: string[]): number {
  const [command, ...rest] = argv;
  if (command === "instrument") {
    const [src, dst] = rest;
    if (!src || !dst) usage();
    const stats = instrumentTree(path.resolve(src), path.resolve(dst));
    console.log(`instrumented ${stats.functions} functions in ${stats.files} files`);
    for (const skipped of stats.skipped) {
      console.error(`skipped ${skipped}`);
    }
    return 0;
  }
  if (command === "run") {
    const dst = rest[0];
    if (!dst || dst.startsWith("--")) usage();
    let out = "trace.json";
    let exec = "node test.js";
    for (let i = 1; i < rest.length; i += 1) {
      if (rest[i] === "--out" && rest[i + 1]) {
        out = rest[(i += 1)];
      } else if (rest[i] === "--exec" && rest[i + 1]) {
        exec = rest[(i += 1)];
      } else {
        usage();
      }
    }
    const result = spawnSync(exec, {
      cwd: path.resolve(dst),
      env: { ...process.env, CFTRACE_OUT: path.resolve(out) },
      shell: true,
      stdio: "inherit",
    });
    return result.status ?? 1;
  }
  usage();
}

process.exit(main(process.argv.slice(2)));
