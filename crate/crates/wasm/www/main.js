import init, { nullComparison, standardizations, pearson3Curves } from "./pkg/grv_wasm.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

function readForm(section) {
  const req = {};
  for (const el of section.querySelectorAll("input, select")) {
    if (el.type === "checkbox") req[el.name] = el.checked;
    else if (el.type === "number") req[el.name] = Number(el.value);
    else req[el.name] = el.value;
  }
  return req;
}

function frame(ctx, box, xr, yr) {
  const sx = (x) => box.x + ((x - xr[0]) / (xr[1] - xr[0])) * box.w;
  const sy = (y) => box.y + box.h - ((y - yr[0]) / (yr[1] - yr[0])) * box.h;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(box.x, box.y, box.w, box.h);
  ctx.fillStyle = "#555";
  ctx.font = "11px sans-serif";
  ctx.fillText(xr[0].toPrecision(3), box.x, box.y + box.h + 14);
  ctx.fillText(xr[1].toPrecision(3), box.x + box.w - 30, box.y + box.h + 14);
  ctx.fillText(yr[1].toPrecision(3), box.x - 38, box.y + 10);
  return { sx, sy };
}

function line(ctx, pts, sx, sy, color) {
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
  ctx.stroke();
  ctx.lineWidth = 1;
}

function showError(section, err) {
  const out = section.querySelector(".stats") ?? section;
  out.innerHTML = `<span class="error">${err.message ?? err}</span>`;
}

function runNull() {
  const section = document.getElementById("null");
  const res = JSON.parse(nullComparison(JSON.stringify(readForm(section))));
  const canvas = section.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const edges = res.bin_edges;
  const ymax = Math.max(...res.bin_density, ...res.curve.map((p) => p[1])) * 1.05;
  const box = { x: 50, y: 10, w: canvas.width - 70, h: canvas.height - 40 };
  const { sx, sy } = frame(ctx, box, [edges[0], edges[edges.length - 1]], [0, ymax]);
  ctx.fillStyle = "#c7d7ea";
  res.bin_density.forEach((d, i) => {
    const x0 = sx(edges[i]);
    ctx.fillRect(x0, sy(d), sx(edges[i + 1]) - x0 - 1, sy(0) - sy(d));
  });
  line(ctx, res.curve, sx, sy, COLORS[1]);
  ctx.strokeStyle = "#000";
  ctx.setLineDash([4, 3]);
  ctx.beginPath();
  ctx.moveTo(sx(res.statistic), box.y);
  ctx.lineTo(sx(res.statistic), box.y + box.h);
  ctx.stroke();
  ctx.setLineDash([]);
  section.querySelector(".stats").textContent =
    `GRV = ${res.statistic.toFixed(4)}   analytic p = ${res.p_analytic.toExponential(3)}   ` +
    `permutation p = ${res.p_permutation.toExponential(3)}\n` +
    `null mean ${res.null_mean.toExponential(3)}, sd ${res.null_sd.toExponential(3)}, skewness ${res.gamma.toFixed(3)}`;
}

function scatter(ctx, box, pts, title) {
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const pad = (lo, hi) => [lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo)];
  const xr = pad(Math.min(...xs), Math.max(...xs));
  const yr = pad(Math.min(...ys), Math.max(...ys));
  const { sx, sy } = frame(ctx, box, xr, yr);
  ctx.fillStyle = "rgba(31, 119, 180, 0.45)";
  for (const [x, y] of pts) ctx.fillRect(sx(x) - 1.5, sy(y) - 1.5, 3, 3);
  ctx.fillStyle = "#222";
  ctx.font = "12px sans-serif";
  ctx.fillText(title, box.x + 6, box.y + 16);
}

function runScatter() {
  const section = document.getElementById("scatter");
  const req = { ...readForm(section), gen_measure: "ibs", p: 2, q: 10 };
  const res = JSON.parse(standardizations(JSON.stringify(req)));
  const canvas = section.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const h = canvas.height - 40;
  const w = canvas.width / 2 - 70;
  scatter(ctx, { x: 50, y: 10, w, h }, res.gram_pairs, `Gram entries, GRV = ${res.grv.toFixed(4)}`);
  scatter(ctx, { x: canvas.width / 2 + 50, y: 10, w, h }, res.distance_pairs,
    `standardized distances, Mantel r = ${res.mantel.toFixed(4)}`);
  section.querySelector(".stats").textContent =
    `${res.gram_pairs.length} Gram pairs, ${res.distance_pairs.length} distance pairs`;
}

function runCurves() {
  const section = document.getElementById("curves");
  const gammas = section.querySelector("input").value.split(",").map(Number).filter(Number.isFinite);
  const curves = JSON.parse(pearson3Curves(JSON.stringify(gammas)));
  const canvas = section.querySelector("canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const finite = curves.flatMap((c) => c.points.map((p) => p[1])).filter(Number.isFinite);
  const box = { x: 50, y: 10, w: canvas.width - 200, h: canvas.height - 40 };
  const { sx, sy } = frame(ctx, box, [-4, 6], [0, Math.min(Math.max(...finite), 1.2) * 1.05]);
  curves.forEach((c, i) => {
    const color = COLORS[i % COLORS.length];
    line(ctx, c.points.filter((p) => Number.isFinite(p[1]) && p[1] < 1.3), sx, sy, color);
    ctx.fillStyle = color;
    ctx.fillText(`skewness ${c.gamma}`, box.x + box.w + 14, box.y + 16 + 16 * i);
  });
}

function wire(id, fn) {
  const section = document.getElementById(id);
  const run = () => {
    try {
      fn();
    } catch (err) {
      showError(section, err);
    }
  };
  section.querySelector("button").addEventListener("click", run);
  run();
}

await init();
wire("null", runNull);
wire("scatter", runScatter);
wire("curves", runCurves);
