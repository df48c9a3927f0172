function pad(text, width) {
  let out = "" + text;
  while (out.length < width) {
    out = " " + out;
  }
  return out;
}

function formatRow(name, value) {
  return pad(name, 10) + ": " + pad(value, 6);
}

module.exports = { pad: pad, formatRow: formatRow };
