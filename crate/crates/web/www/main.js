import init, { spiralTrace, flameSchedule, sphereCurve } from "./pkg/lmfo_web.js";

// LMFO5 is left out: it is the same run as MFO at equal q.
const ALGORITHMS = ["MFO", "LMFO1", "LMFO2", "LMFO3", "LMFO4", "LMFO6", "PSO"];
const COLORS = ["#000", "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#808080"];

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function frame(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#ddd";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
}

// Polyline through (xs[i], ys[i]) mapped onto the canvas box.
function plot(ctx, xs, ys, box, color) {
  const { x0, x1, y0, y1, w, h, pad } = box;
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = color;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
}

function guard(errId, fn) {
  try {
    $(errId).textContent = "";
    fn();
  } catch (e) {
    $(errId).textContent = String(e.message ?? e);
  }
}

function drawSpiral() {
  guard("sp-err", () => {
    const canvas = $("sp-canvas");
    const ctx = canvas.getContext("2d");
    const xy = spiralTrace($("sp-kind").value, num("sp-q"), num("sp-t0"), num("sp-t1"), 600, 1);
    const xs = [], ys = [];
    for (let i = 0; i < xy.length; i += 2) {
      xs.push(xy[i]);
      ys.push(xy[i + 1]);
    }
    const r = Math.max(1e-9, ...xs.map(Math.abs), ...ys.map(Math.abs));
    frame(ctx, canvas.width, canvas.height);
    const box = { x0: -r, x1: r, y0: -r, y1: r, w: canvas.width, h: canvas.height, pad: 10 };
    plot(ctx, [-r, r], [0, 0], box, "#eee");
    plot(ctx, [0, 0], [-r, r], box, "#eee");
    plot(ctx, xs, ys, box, "#4363d8");
  });
}

function drawSchedule() {
  guard("fs-err", () => {
    const canvas = $("fs-canvas");
    const ctx = canvas.getContext("2d");
    const counts = Array.from(flameSchedule(num("fs-n"), num("fs-t")));
    frame(ctx, canvas.width, canvas.height);
    const xs = counts.map((_, i) => i + 1);
    const box = { x0: 1, x1: counts.length, y0: 0, y1: counts[0], w: canvas.width, h: canvas.height, pad: 12 };
    plot(ctx, xs, counts, box, "#e6194b");
    ctx.fillStyle = "#222";
    ctx.fillText(`${counts[0]} flames at l=1, ${counts[counts.length - 1]} at l=${counts.length}`, 16, 20);
  });
}

function drawCurves() {
  guard("cv-err", () => {
    const canvas = $("cv-canvas");
    const ctx = canvas.getContext("2d");
    const curves = ALGORITHMS.map((a) =>
      Array.from(sphereCurve(a, num("cv-q"), num("cv-dim"), num("cv-pop"), num("cv-iter"), num("cv-seed")))
    );
    const logs = curves.map((c) => c.map((v) => Math.log10(Math.max(v, 1e-300))));
    const all = logs.flat();
    frame(ctx, canvas.width, canvas.height);
    const box = {
      x0: 1, x1: curves[0].length, y0: Math.min(...all), y1: Math.max(...all),
      w: canvas.width, h: canvas.height, pad: 14,
    };
    logs.forEach((ys, k) => plot(ctx, ys.map((_, i) => i + 1), ys, box, COLORS[k]));
    $("cv-legend").innerHTML = ALGORITHMS.map(
      (a, k) => `<span style="color:${COLORS[k]}">■ ${a} ${curves[k][curves[k].length - 1].toExponential(3)}</span>`
    ).join(" &nbsp; ") + " &nbsp; (log10 best-so-far)";
  });
}

await init();
for (const id of ["sp-kind", "sp-q", "sp-t0", "sp-t1"]) $(id).addEventListener("input", drawSpiral);
for (const id of ["fs-n", "fs-t"]) $(id).addEventListener("input", drawSchedule);
$("cv-run").addEventListener("click", drawCurves);
drawSpiral();
drawSchedule();
drawCurves();
