/**
 * Source instrumentation: wrap every function body so entry/exit flow
 * through the tracer runtime.
 *
 * Rewrites are pure text insertions at positions computed on the original
 * source, so the recorded identity positions always refer to pre-rewrite
 * coordinates. Identity follows the shared convention: the `function`
 * keyword for declarations/expressions, the parameter-list start for
 * arrows; merging with statically extracted graphs depends on it.
 */

import * as fs from "fs";
import * as path from "path";
import ts from "typescript";

export const RUNTIME_BASENAME = "__cftracer.js";

interface Insertion {
  offset: number;
  text: string;
}

export interface InstrumentStats {
  files: number;
  functions: number;
  skipped: string[];
}

export function instrumentSource(source: string, relPath: string, runtimeRequire: string): string {
  const sf = ts.createSourceFile(relPath, source, ts.ScriptTarget.ES2020, true, ts.ScriptKind.JS);
  const insertions: Insertion[] = [];

  const posOf = (offset: number): string => {
    const lc = sf.getLineAndCharacterOfPosition(offset);
    return `${relPath}:${lc.line + 1}:${lc.character + 1}`;
  };

  const wrapBlock = (body: ts.Block, pos: string): void => {
    insertions.push({
      offset: body.getStart(sf) + 1,
      text: ` const __cfx = __cftracer.enter("${pos}"); try {`,
    });
    insertions.push({
      offset: body.end - 1,
      text: `} finally { __cftracer.exit(__cfx); } `,
    });
  };

  const wrapExpressionBody = (body: ts.Expression, pos: string): void => {
    insertions.push({
      offset: body.getStart(sf),
      text: `{ const __cfx = __cftracer.enter("${pos}"); try { return (`,
    });
    insertions.push({
      offset: body.end,
      text: `); } finally { __cftracer.exit(__cfx); } }`,
    });
  };

  const functionKeywordOffset = (node: ts.FunctionLikeDeclaration): number => {
    const keyword = node
      .getChildren(sf)
      .find((child) => child.kind === ts.SyntaxKind.FunctionKeyword);
    return (keyword ?? node).getStart(sf);
  };

  const arrowParamsOffset = (node: ts.ArrowFunction): number => {
    const paren = node
      .getChildren(sf)
      .find((child) => child.kind === ts.SyntaxKind.OpenParenToken);
    if (paren !== undefined) return paren.getStart(sf);
    if (node.parameters.length > 0) return node.parameters[0].getStart(sf);
    return node.getStart(sf);
  };

  const visit = (node: ts.Node): void => {
    if ((ts.isFunctionDeclaration(node) || ts.isFunctionExpression(node)) && node.body) {
      wrapBlock(node.body, posOf(functionKeywordOffset(node)));
    } else if (ts.isArrowFunction(node)) {
      const pos = posOf(arrowParamsOffset(node));
      if (ts.isBlock(node.body)) {
        wrapBlock(node.body, pos);
      } else {
        wrapExpressionBody(node.body, pos);
      }
    }
    ts.forEachChild(node, visit);
  };
  visit(sf);

  let output = source;
  for (const insertion of insertions.sort((a, b) => b.offset - a.offset)) {
    output = output.slice(0, insertion.offset) + insertion.text + output.slice(insertion.offset);
  }
  return `const __cftracer = require(${JSON.stringify(runtimeRequire)});\n` + output;
}

export function countInstrumentedFunctions(source: string): number {
  return source.split("__cftracer.enter(").length - 1;
}

/** Copy srcDir to dstDir, instrumenting every .js file outside node_modules. */
export function instrumentTree(srcDir: string, dstDir: string): InstrumentStats {
  const stats: InstrumentStats = { files: 0, functions: 0, skipped: [] };
  fs.mkdirSync(dstDir, { recursive: true });
  fs.writeFileSync(
    path.join(dstDir, RUNTIME_BASENAME),
    fs.readFileSync(path.join(__dirname, "runtime.js")),
  );

  const walk = (dir: string): void => {
    for (const entry of fs.readdirSync(dir, { withFileTypes: true }).sort()) {
      const srcPath = path.join(dir, entry.name);
      const rel = path.relative(srcDir, srcPath);
      const dstPath = path.join(dstDir, rel);
      if (entry.isDirectory()) {
        if (entry.name === "node_modules" || entry.name === ".git") continue;
        fs.mkdirSync(dstPath, { recursive: true });
        walk(srcPath);
        continue;
      }
      if (!entry.name.endsWith(".js")) {
        fs.copyFileSync(srcPath, dstPath);
        continue;
      }
      const relPosix = rel.split(path.sep).join("/");
      const source = fs.readFileSync(srcPath, "utf8");
      let requirePath = path
        .relative(path.dirname(dstPath), path.join(dstDir, RUNTIME_BASENAME))
        .split(path.sep)
        .join("/");
      if (!requirePath.startsWith(".")) requirePath = "./" + requirePath;
      try {
        const instrumented = instrumentSource(source, relPosix, requirePath);
        fs.writeFileSync(dstPath, instrumented);
        stats.files += 1;
        stats.functions += countInstrumentedFunctions(instrumented);
      } catch (err) {
        stats.skipped.push(`${relPosix}: ${String(err)}`);
        fs.copyFileSync(srcPath, dstPath);
      }
    }
  };
  walk(srcDir);
  return stats;
}
