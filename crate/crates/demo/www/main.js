import init, { fit_gmm, compare_modes, retraction_sweep } from "./pkg/vtf_demo.js";

const COLORS = { vtf_isr: "#1f77b4", vtf_chol: "#d62728", rlbfgs: "#2ca02c" };
const PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

function formValues(id) {
  const out = {};
  for (const el of document.querySelectorAll(`#${id} [name]`)) {
    out[el.name] = el.type === "number" ? Number(el.value) : el.value;
  }
  return out;
}

function call(fn, request) {
  try {
    return JSON.parse(fn(JSON.stringify(request)));
  } catch (e) {
    document.getElementById("status").innerHTML = `<span class="err">${e}</span>`;
    return null;
  }
}

function scales(ctx, xs, ys, pad = 36, logY = false, logX = false) {
  const tx = logX ? Math.log10 : (v) => v;
  const ty = logY ? Math.log10 : (v) => v;
  const fx = xs.map(tx), fy = ys.map(ty).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...fx), Math.max(...fx)];
  const [y0, y1] = [Math.min(...fy), Math.max(...fy)];
  const w = ctx.canvas.width - 2 * pad, h = ctx.canvas.height - 2 * pad;
  return {
    x: (v) => pad + ((tx(v) - x0) / (x1 - x0 || 1)) * w,
    y: (v) => pad + h - ((ty(v) - y0) / (y1 - y0 || 1)) * h,
    bounds: { x0, x1, y0, y1 },
  };
}

function axes(ctx, s, xlabel, ylabel) {
  const { width, height } = ctx.canvas;
  ctx.strokeStyle = "#999";
  ctx.strokeRect(36, 36, width - 72, height - 72);
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  ctx.fillText(xlabel, width / 2 - 30, height - 10);
  ctx.save();
  ctx.translate(12, height / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  const b = s.bounds;
  ctx.fillText(b.y1.toPrecision(3), 2, 40);
  ctx.fillText(b.y0.toPrecision(3), 2, height - 38);
}

function ellipse(ctx, s, mean, cov, color, dashed) {
  // 2-sigma contour from the 2x2 eigendecomposition
  const [a, b, c] = [cov.data[0], cov.data[1], cov.data[3]];
  const tr = (a + c) / 2, det = Math.sqrt(((a - c) / 2) ** 2 + b * b);
  const l1 = tr + det, l2 = Math.max(tr - det, 0);
  const theta = Math.atan2(l1 - a, b || 1e-300);
  ctx.beginPath();
  for (let i = 0; i <= 64; i++) {
    const t = (2 * Math.PI * i) / 64;
    const u = 2 * Math.sqrt(l1) * Math.cos(t), v = 2 * Math.sqrt(l2) * Math.sin(t);
    const px = mean[0] + u * Math.cos(theta) - v * Math.sin(theta);
    const py = mean[1] + u * Math.sin(theta) + v * Math.cos(theta);
    i ? ctx.lineTo(s.x(px), s.y(py)) : ctx.moveTo(s.x(px), s.y(py));
  }
  ctx.setLineDash(dashed ? [4, 4] : []);
  ctx.strokeStyle = color;
  ctx.lineWidth = dashed ? 1 : 2;
  ctx.stroke();
  ctx.setLineDash([]);
  ctx.lineWidth = 1;
}

function runFit() {
  const req = formValues("fit-form");
  const resp = call(fit_gmm, req);
  if (!resp) return;
  const ctx = document.getElementById("fit-canvas").getContext("2d");
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const s = scales(ctx, resp.points.map((p) => p[0]), resp.points.map((p) => p[1]), 20);
  ctx.fillStyle = "rgba(0,0,0,.35)";
  for (const [x, y] of resp.points) ctx.fillRect(s.x(x) - 1, s.y(y) - 1, 2, 2);
  resp.truth.means.forEach((m, j) => ellipse(ctx, s, m, resp.truth.covs[j], "#888", true));
  resp.fitted.means.forEach((m, j) => ellipse(ctx, s, m, resp.fitted.covs[j], PALETTE[j % PALETTE.length], false));
  const r = resp.run;
  document.getElementById("fit-info").textContent =
    `${r.iterations} iterations, ${r.termination.replace(/_/g, " ")}, final cost ${r.final_cost.toFixed(4)}, ` +
    `${r.wall_time_ms.toFixed(1)} ms. Dashed: generating components. Solid: fit.`;
}

function runCompare() {
  const resp = call(compare_modes, formValues("fit-form"));
  if (!resp) return;
  const best = Math.min(...resp.runs.map((r) => r.final_cost));
  const gaps = resp.runs.map((r) => r.cost_trace.map((c) => Math.max(c - best, 1e-14)));
  const ctx = document.getElementById("cmp-canvas").getContext("2d");
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const allX = gaps.flatMap((g) => g.map((_, i) => i));
  const s = scales(ctx, allX, gaps.flat(), 36, true);
  axes(ctx, s, "iteration", "log10(cost - best)");
  resp.runs.forEach((r, k) => {
    ctx.beginPath();
    gaps[k].forEach((g, i) => (i ? ctx.lineTo(s.x(i), s.y(g)) : ctx.moveTo(s.x(i), s.y(g))));
    ctx.strokeStyle = COLORS[r.label];
    ctx.stroke();
  });
  document.getElementById("cmp-legend").innerHTML = resp.runs
    .map((r) => `<span style="color:${COLORS[r.label]}">&#9644; ${r.label}</span>`)
    .join("");
  const rows = resp.runs
    .map(
      (r) =>
        `<tr><td style="text-align:left">${r.label}</td><td>${r.iterations}</td><td>${r.termination.replace(/_/g, " ")}</td>` +
        `<td>${r.final_cost.toFixed(6)}</td><td>${r.wall_time_ms.toFixed(1)}</td><td>${r.cubic_calls_in_recursion}</td></tr>`,
    )
    .join("");
  document.getElementById("cmp-table").innerHTML =
    "<tr><th>mode</th><th>iterations</th><th>stop</th><th>last cost</th><th>ms</th><th>O(n&sup3;) calls in recursion</th></tr>" + rows;
}

function runRetraction() {
  const resp = call(retraction_sweep, formValues("ret-form"));
  if (!resp) return;
  const ctx = document.getElementById("ret-canvas").getContext("2d");
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  const errs = resp.curves.flatMap((c) => c.errors.map((e) => Math.max(e, 1e-17)));
  const s = scales(ctx, resp.ts, errs, 36, true, true);
  axes(ctx, s, "log10 t", "log10 |Ret - Exp|");
  for (const c of resp.curves) {
    ctx.beginPath();
    c.errors.forEach((e, i) => {
      const [x, y] = [s.x(resp.ts[i]), s.y(Math.max(e, 1e-17))];
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.strokeStyle = COLORS[c.label];
    ctx.stroke();
  }
  document.getElementById("ret-legend").innerHTML = resp.curves
    .map((c) => `<span style="color:${COLORS[c.label]}">&#9644; ${c.label}: slope ${c.order.toFixed(2)}</span>`)
    .join("");
}

await init();
document.getElementById("status").textContent = "Ready.";
document.getElementById("fit-run").onclick = runFit;
document.getElementById("cmp-run").onclick = runCompare;
document.getElementById("ret-run").onclick = runRetraction;
runFit();
runCompare();
runRetraction();
