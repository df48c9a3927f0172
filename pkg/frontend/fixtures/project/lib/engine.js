const format = require("./format");
const check = require("./check");

function process(entry) {
  const result = check.validate(entry);
  return render(result);
}

function render(result) {
  return format.formatRow("ok", result.ok);
}

module.exports = { process: process, render: render };
