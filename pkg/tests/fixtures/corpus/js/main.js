const engine = require("./lib/engine");
const store = require("./lib/store");

function run(entries) {
  const results = [];
  for (let i = 0; i < entries.length; i++) {
    results.push(engine.process(entries[i]));
  }
  store.save("count", results.length);
  return results;
}

module.exports = { run: run };
