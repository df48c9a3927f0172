function isEmpty(value) {
  return value === null || value === undefined || value === "";
}

function validate(entry) {
  if (isEmpty(entry.name)) {
    return reject("missing name");
  }
  return { ok: true, entry: entry };
}

function reject(reason) {
  return { ok: false, reason: reason };
}

module.exports = { validate: validate, isEmpty: isEmpty };
