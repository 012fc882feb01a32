import init, { spectrum, surrogate_curve, regret_curves } from "./pkg/oim_demo.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// Draws each series as a polyline (or points) on shared axes.
function plot(canvas, series, { points = false } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x), ys = series.flatMap((s) => s.y);
  if (xs.length === 0) return;
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(0, ...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad + ((y0 - y) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  ctx.fillText(String(x0), pad, h - pad + 14);
  ctx.fillText(String(x1), w - pad - 20, h - pad + 14);
  series.forEach((s, i) => {
    ctx.strokeStyle = ctx.fillStyle = s.color || COLORS[i % COLORS.length];
    if (points) {
      s.x.forEach((x, j) => ctx.fillRect(sx(x) - 1.5, sy(s.y[j]) - 1.5, 3, 3));
    } else {
      ctx.beginPath();
      s.x.forEach((x, j) => (j ? ctx.lineTo : ctx.moveTo).call(ctx, sx(x), sy(s.y[j])));
      ctx.stroke();
    }
  });
}

function legend(el, names) {
  el.innerHTML = names
    .map((n, i) => `<span style="color:${COLORS[i % COLORS.length]}">■ ${n}</span>`)
    .join("");
}

function guarded(fn) {
  return () => {
    $("status").className = "";
    $("status").textContent = "Running…";
    // Yield once so the status text paints before the blocking call.
    setTimeout(() => {
      try {
        fn();
        $("status").textContent = "Ready.";
      } catch (e) {
        $("status").className = "error";
        $("status").textContent = String(e);
      }
    }, 0);
  };
}

function runSpectrum() {
  const r = JSON.parse(spectrum(num("sp-iter"), num("sp-seed"), num("sp-d")));
  $("sp-info").textContent =
    `${r.nodes} nodes, ${r.edges} arcs, density ${r.density.toFixed(4)}`;
  plot($("sp-eig"), [{ x: r.eigenvalues.map((_, i) => i), y: r.eigenvalues }], { points: true });
  // Nodes embedded by their first two non-trivial features.
  const k = r.features[0].length > 2 ? 1 : 0;
  plot(
    $("sp-feat"),
    [{ x: r.features.map((f) => f[k]), y: r.features.map((f) => f[k + 1] ?? 0) }],
    { points: true },
  );
}

function runSurrogate() {
  const rows = JSON.parse(
    surrogate_curve(num("su-iter"), num("su-seed"), num("su-w"), num("su-k")),
  );
  const ks = rows.map((r) => r.k);
  const names = ["mean spread", "mean surrogate", "upper bound", "lower bound"];
  const keys = ["mean_spread", "mean_surrogate", "upper_bound", "lower_bound"];
  legend($("su-legend"), names);
  plot($("su-plot"), keys.map((key) => ({ x: ks, y: rows.map((r) => r[key]) })));
}

function runRegret() {
  const algos = [...document.querySelectorAll("input[name=rg-algo]:checked")].map((c) => c.value);
  const curves = JSON.parse(
    regret_curves(num("rg-iter"), num("rg-seed"), num("rg-k"), num("rg-t"), algos.join(",")),
  );
  legend($("rg-legend"), curves.map((c) => c.algorithm));
  plot(
    $("rg-plot"),
    curves.map((c) => ({ x: c.cumulative_regret.map((_, t) => t + 1), y: c.cumulative_regret })),
  );
}

await init();
$("sp-run").onclick = guarded(runSpectrum);
$("su-run").onclick = guarded(runSurrogate);
$("rg-run").onclick = guarded(runRegret);
$("status").textContent = "Ready.";
