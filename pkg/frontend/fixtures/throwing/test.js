function boom() {
  throw new Error("expected failure");
}

function safe() {
  try {
    boom();
  } catch (err) {
    // swallowed on purpose
  }
  after();
}

function after() {
  return 1;
}

safe();
console.log("throwing fixture done");
