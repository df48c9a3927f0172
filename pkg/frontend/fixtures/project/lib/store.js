const data = {};

function save(name, value) {
  data[name] = value;
  return name;
}

function validate(name) {
  return save(name, null);
}

module.exports = { save: save, validate: validate };
