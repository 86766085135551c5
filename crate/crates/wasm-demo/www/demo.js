import init, { spectrum, locations, roc, complexity } from "./pkg/gfde_wasm.js";

const COLORS = { edm: "#1f77b4", residual: "#d62728", ss: "#2ca02c", clean: "#999", faulty: "#1f77b4" };
const PAD = { l: 56, r: 12, t: 14, b: 36 };

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

// Plot frame with linear or log10 axes; returns data-to-pixel mappers.
function frame(canvas, { x0, x1, y0, y1, xlabel, ylabel, logY = false }) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const ty = (v) => (logY ? Math.log10(v) : v);
  const [ya, yb] = [ty(y0), ty(y1)];
  const px = (x) => PAD.l + ((x - x0) / (x1 - x0)) * (w - PAD.l - PAD.r);
  const py = (y) => h - PAD.b - ((ty(y) - ya) / (yb - ya)) * (h - PAD.t - PAD.b);

  ctx.strokeStyle = "#444";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.beginPath();
  ctx.moveTo(PAD.l, PAD.t);
  ctx.lineTo(PAD.l, h - PAD.b);
  ctx.lineTo(w - PAD.r, h - PAD.b);
  ctx.stroke();

  ctx.textAlign = "center";
  for (let i = 0; i <= 4; i++) {
    const x = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(Number(x.toPrecision(3)).toString(), px(x), h - PAD.b + 14);
  }
  ctx.fillText(xlabel, (PAD.l + w - PAD.r) / 2, h - 6);
  ctx.textAlign = "right";
  for (let i = 0; i <= 4; i++) {
    const t = ya + ((yb - ya) * i) / 4;
    const label = logY ? `1e${t.toFixed(1)}` : Number(t.toPrecision(3)).toString();
    ctx.fillText(label, PAD.l - 4, (logY ? py(10 ** t) : py(t)) + 4);
  }
  ctx.save();
  ctx.translate(12, (PAD.t + h - PAD.b) / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.textAlign = "center";
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  return { ctx, px, py };
}

function line(f, pts, color) {
  f.ctx.strokeStyle = color;
  f.ctx.lineWidth = 2;
  f.ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? f.ctx.lineTo(f.px(x), f.py(y)) : f.ctx.moveTo(f.px(x), f.py(y))));
  f.ctx.stroke();
  f.ctx.lineWidth = 1;
}

function legend(f, items) {
  items.forEach(([name, color], i) => {
    f.ctx.fillStyle = color;
    f.ctx.fillRect(PAD.l + 12, PAD.t + 6 + 16 * i, 10, 10);
    f.ctx.fillStyle = "#222";
    f.ctx.textAlign = "left";
    f.ctx.fillText(name, PAD.l + 26, PAD.t + 15 + 16 * i);
  });
}

function guarded(infoId, fn) {
  try {
    fn();
  } catch (e) {
    $(infoId).textContent = String(e.message ?? e);
    $(infoId).className = "err";
  }
}

function drawSpectrum() {
  $("sp-bias-v").textContent = $("sp-bias").value;
  guarded("sp-info", () => {
    const v = JSON.parse(spectrum(num("sp-seed"), num("sp-sats"), num("sp-sigma"), num("sp-bias")));
    const floor = 1e-6;
    const all = [...v.clean, ...v.faulty].map((x) => Math.max(x, floor));
    const bars = frame($("sp-bars"), {
      x0: 0.5, x1: v.clean.length + 0.5, y0: floor, y1: Math.max(...all) * 10,
      xlabel: "eigenvalue index (by magnitude)", ylabel: "|λ| [m²]", logY: true,
    });
    v.clean.forEach((c, i) => {
      const k = i + 1;
      for (const [val, dx, color] of [[c, -0.2, COLORS.clean], [v.faulty[i], 0.2, COLORS.faulty]]) {
        const top = bars.py(Math.max(val, floor));
        bars.ctx.fillStyle = color;
        bars.ctx.fillRect(bars.px(k + dx) - 7, top, 14, bars.py(floor) - top);
      }
    });
    legend(bars, [["without bias", COLORS.clean], ["with bias", COLORS.faulty]]);

    const c = v.statistic_vs_bias;
    const ys = c.map((p) => Math.max(p[1], 1e-18));
    const curve = frame($("sp-curve"), {
      x0: 0, x1: c[c.length - 1][0], y0: Math.min(...ys), y1: Math.max(...ys) * 2,
      xlabel: "bias on one range [m]", ylabel: "mean detection statistic", logY: true,
    });
    line(curve, c.map((p, i) => [p[0], ys[i]]), COLORS.edm);

    $("sp-info").className = "note";
    $("sp-info").textContent =
      `statistic ${v.statistic_clean.toExponential(2)} without bias, ` +
      `${v.statistic_faulty.toExponential(2)} with ${$("sp-bias").value} m on one range`;
  });
}

function drawRoc() {
  $("roc-info").textContent = "running…";
  $("roc-info").className = "note";
  setTimeout(() => guarded("roc-info", () => {
    const v = JSON.parse(roc(num("roc-seed"), Number($("roc-loc").value), num("roc-hours"), num("roc-faults"), num("roc-bias")));
    const f = frame($("roc-plot"), { x0: 0, x1: 1, y0: 0, y1: 1, xlabel: "false alarm rate", ylabel: "true positive rate" });
    line(f, [[0, 0], [1, 1]], "#ddd");
    for (const s of v.series) {
      const pts = [[0, 0], ...s.points.map((p) => [p.false_alarm_rate, p.true_positive_rate]), [1, 1]];
      line(f, pts, COLORS[s.method]);
    }
    legend(f, v.series.map((s) => [`${s.method}  AUC ${s.auc.toFixed(3)}`, COLORS[s.method]]));
    $("roc-info").textContent = `${v.location}: ${v.epochs} epochs`;
  }), 10);
}

function drawComplexity() {
  guarded("cx-info", () => {
    const rows = JSON.parse(complexity(num("cx-f"), num("cx-k"), 10, num("cx-max")));
    const keys = [["log10_edm", "EDM", COLORS.edm], ["log10_residual", "residual", COLORS.residual], ["log10_ss", "solution separation", COLORS.ss]];
    const ys = rows.flatMap((r) => keys.map(([k]) => r[k])).filter(Number.isFinite);
    const f = frame($("cx-plot"), {
      x0: rows[0].m, x1: rows[rows.length - 1].m, y0: 10 ** Math.min(...ys), y1: 10 ** (Math.max(...ys) + 0.5),
      xlabel: "measurements m", ylabel: "operations", logY: true,
    });
    for (const [k, , color] of keys) {
      line(f, rows.filter((r) => Number.isFinite(r[k])).map((r) => [r.m, 10 ** r[k]]), color);
    }
    legend(f, keys.map(([, name, color]) => [name, color]));
    $("cx-info").className = "note";
    $("cx-info").textContent = "";
  });
}

await init();
JSON.parse(locations()).forEach((name, i) => $("roc-loc").add(new Option(name, i, i === 4, i === 4)));
for (const id of ["sp-seed", "sp-sats", "sp-sigma", "sp-bias"]) $(id).addEventListener("input", drawSpectrum);
for (const id of ["cx-f", "cx-k", "cx-max"]) $(id).addEventListener("input", drawComplexity);
$("roc-run").addEventListener("click", drawRoc);
drawSpectrum();
drawComplexity();
drawRoc();
