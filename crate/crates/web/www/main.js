import init, { kepler_orbit, fpu_energy_exchange, lowrank_robustness } from "./pkg/geomint_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555"];

function rows(flat, stride) {
  const out = [];
  for (let i = 0; i + stride <= flat.length; i += stride) out.push(flat.slice(i, i + stride));
  return out;
}

function value(section, name) {
  return Number(section.querySelector(`[name=${name}]`).value);
}

function extent(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (!(hi > lo)) { lo -= 1; hi += 1; }
  return [lo, hi];
}

// Plots series of [x, y] points; ys on a log axis when logY is set.
function plot(canvas, series, { logY = false, title = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 44;
  ctx.clearRect(0, 0, w, h);
  const tf = (y) => (logY ? Math.log10(y) : y);
  const xs = series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = series.flatMap((s) => s.points.map((p) => tf(p[1])));
  const [x0, x1] = extent(xs);
  const [y0, y1] = extent(ys);
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((tf(y) - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.font = "12px system-ui";
  ctx.fillText(title, pad, pad - 10);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 16);
  ctx.fillText(x1.toPrecision(3), w - pad - 30, h - pad + 16);
  const lab = (y) => (logY ? `1e${y.toFixed(1)}` : y.toPrecision(3));
  ctx.fillText(lab(y1), 2, pad + 4);
  ctx.fillText(lab(y0), 2, h - pad);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    ctx.beginPath();
    let pen = false;
    for (const [x, y] of s.points) {
      if (!Number.isFinite(y) || (logY && y <= 0)) { pen = false; continue; }
      if (s.markers) ctx.fillRect(px(x) - 3, py(y) - 3, 6, 6);
      if (pen) ctx.lineTo(px(x), py(y)); else ctx.moveTo(px(x), py(y));
      pen = true;
    }
    ctx.stroke();
  }
}

function legend(section, names) {
  section.querySelector(".legend").innerHTML = names
    .map((n, i) => `<span style="color:${COLORS[i % COLORS.length]}">&#9632; ${n}</span>`)
    .join("");
}

function guarded(section, f) {
  const status = section.querySelector(".status");
  try {
    status.textContent = "";
    f();
  } catch (e) {
    status.textContent = String(e.message ?? e);
  }
}

function drawKepler() {
  const s = document.getElementById("kepler");
  guarded(s, () => {
    const method = s.querySelector("[name=method]").value;
    const data = rows(kepler_orbit(method, value(s, "e"), value(s, "h"), value(s, "t_end"), 4000), 5);
    const orbit = s.querySelector(".orbit");
    const ctx = orbit.getContext("2d");
    const r = Math.max(2, ...data.map((d) => Math.hypot(d[1], d[2])).filter(Number.isFinite));
    const scale = (orbit.width / 2 - 10) / r;
    ctx.clearRect(0, 0, orbit.width, orbit.height);
    ctx.fillStyle = "#e5a000";
    ctx.beginPath();
    ctx.arc(orbit.width / 2, orbit.height / 2, 5, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = COLORS[0];
    ctx.beginPath();
    data.forEach(([, x, y], i) => {
      const X = orbit.width / 2 + x * scale, Y = orbit.height / 2 - y * scale;
      if (i === 0) ctx.moveTo(X, Y); else ctx.lineTo(X, Y);
    });
    ctx.stroke();
    plot(s.querySelector(".energy"), [
      { color: COLORS[1], points: data.map((d) => [d[0], Math.abs(d[3])]) },
    ], { logY: true, title: "|relative energy error|" });
  });
}

function drawFpu() {
  const s = document.getElementById("fpu");
  guarded(s, () => {
    const m = 3;
    const filter = s.querySelector("[name=filter]").value;
    const data = rows(fpu_energy_exchange(m, value(s, "omega"), filter, value(s, "h"), value(s, "t_end"), 2000), m + 3);
    const names = [...Array(m).keys()].map((j) => `E${j + 1}`).concat(["H_omega"]);
    legend(s, names);
    plot(s.querySelector("canvas"), names.map((_, k) => ({
      color: COLORS[k],
      points: data.map((d) => [d[0], d[k + 1]]),
    })), { title: "oscillatory energies" });
  });
}

function drawLowrank() {
  const s = document.getElementById("lowrank");
  s.querySelector(".status").textContent = "running...";
  setTimeout(() => guarded(s, () => {
    const rank = value(s, "rank");
    const floors = [];
    for (let e = rank; e <= rank + 32; e += 4) floors.push(e);
    const data = rows(lowrank_robustness(value(s, "size"), rank, value(s, "h"), value(s, "tail"), new Float64Array(floors)), 5);
    const names = ["best rank-r", "ksl", "ksl-strang", "naive factor ODE"];
    legend(s, names);
    plot(s.querySelector("canvas"), names.map((_, k) => ({
      color: COLORS[k],
      markers: true,
      points: data.map((d) => [d[0], d[k + 1]]),
    })), { logY: true, title: "error at t = 1 against -log2 of the smallest retained singular value" });
  }), 10);
}

await init();
for (const [id, draw] of [["kepler", drawKepler], ["fpu", drawFpu]]) {
  const s = document.getElementById(id);
  s.querySelectorAll("input, select").forEach((el) => el.addEventListener("change", draw));
  draw();
}
document.querySelector("#lowrank [name=run]").addEventListener("click", drawLowrank);
drawLowrank();
