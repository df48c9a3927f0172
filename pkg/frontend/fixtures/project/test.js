const assert = require("assert");
const main = require("./main");
const check = require("./lib/check");

const out = main.run([{ name: "a", value: 1 }, { name: "", value: 2 }]);
assert.strictEqual(out.length, 2);

const verdict = check.validate({ name: "x" });
assert.strictEqual(verdict.ok, true);

console.log("results: " + out.join(" | "));
console.log("fixture tests passed");
