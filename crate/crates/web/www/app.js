import init, { stepResponse, nicholsAt, cornerMargins } from "./pkg/ascent_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function call(fn, out) {
  const v = JSON.parse(fn());
  if (v.error) {
    out.textContent = v.error;
    out.className = "out err";
    return null;
  }
  out.className = "out";
  return v;
}

const fmt = (x, unit) => (x === null ? "∞" : x.toFixed(2) + " " + unit);

// Linear axes over [x0, x1] × [y0, y1] with a small margin.
function frame(ctx, x0, x1, y0, y1, xlabel, ylabel) {
  const { width: w, height: h } = ctx.canvas;
  const pad = 42;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  ctx.strokeRect(pad, 8, w - pad - 8, h - pad);
  const sx = (x) => pad + ((x - x0) / (x1 - x0)) * (w - pad - 8);
  const sy = (y) => 8 + (1 - (y - y0) / (y1 - y0)) * (h - pad);
  for (let i = 0; i <= 4; i++) {
    const x = x0 + (i * (x1 - x0)) / 4;
    const y = y0 + (i * (y1 - y0)) / 4;
    ctx.fillText(x.toPrecision(3), sx(x) - 10, h - pad + 22);
    ctx.fillText(y.toPrecision(3), 2, sy(y) + 4);
  }
  ctx.fillText(xlabel, w / 2, h - 4);
  ctx.save();
  ctx.translate(10, h / 2);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  return { sx, sy };
}

function line(ctx, { sx, sy }, xs, ys, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, i) => {
    if (ys[i] === null) {
      pen = false;
      return;
    }
    pen ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]));
    pen = true;
  });
  ctx.stroke();
}

const range = (v) => {
  const f = v.filter((x) => x !== null && Number.isFinite(x));
  let lo = Math.min(...f), hi = Math.max(...f);
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  return [lo, hi];
};

function runStep() {
  const out = $("step-out");
  const v = call(
    () => stepResponse($("controller").value, num("amp"), num("sigma"), num("noise"), num("delay") | 0, num("duration")),
    out,
  );
  if (!v) return;
  out.textContent = `RMS θ_err ${v.rms_theta_err_deg.toFixed(4)} deg, RMS β̇ ${v.rms_beta_rate_dps.toFixed(4)} deg/s`;
  const ctx = $("step-plot").getContext("2d");
  const [lo, hi] = range([...v.theta_deg, ...v.theta_cmd_deg, ...v.beta_deg]);
  const ax = frame(ctx, v.t[0], v.t[v.t.length - 1], lo, hi, "t (s)", "deg");
  line(ctx, ax, v.t, v.theta_cmd_deg, "#888");
  line(ctx, ax, v.t, v.theta_deg, "#1f5fbf");
  line(ctx, ax, v.t, v.beta_deg, "#c0392b");
  ctx.fillStyle = "#1f5fbf"; ctx.fillText("θ", 60, 24);
  ctx.fillStyle = "#c0392b"; ctx.fillText("β", 75, 24);
}

function runNichols() {
  const t = num("t-nichols");
  $("t-label").textContent = t;
  const out = $("nichols-out");
  const v = call(() => nicholsAt($("controller").value, t, "thetaerr_to_theta", $("full").checked), out);
  if (!v) return;
  const m = v.margins;
  out.textContent = `PM ${fmt(m.pm_deg, "deg")}, GM ${fmt(m.gm_db, "dB")}, closed loop ${m.stable ? "stable" : "unstable"}`;
  const ctx = $("nichols-plot").getContext("2d");
  const ax = frame(ctx, -360, 0, -40, 40, "phase (deg)", "gain (dB)");
  ctx.fillStyle = "#c0392b";
  ctx.beginPath();
  ctx.arc(ax.sx(-180), ax.sy(0), 4, 0, 2 * Math.PI);
  ctx.fill();
  const clip = (y) => (y === null ? null : Math.max(-40, Math.min(40, y)));
  line(ctx, ax, v.phase_deg, v.gain_db.map(clip), "#1f5fbf");
}

function runCorners() {
  const out = $("corner-out");
  out.textContent = "computing…";
  setTimeout(() => {
    const v = call(() => cornerMargins($("controller").value, num("t-corner"), num("delta"), 1), out);
    if (!v) return;
    const ok = v.cases.filter((c) => c.margins);
    const pm = ok.map((c) => c.margins.pm_deg);
    const gm = ok.map((c) => c.margins.gm_db);
    const worst = (a) => a.reduce((x, y) => (y !== null && (x === null || y < x) ? y : x), null);
    out.textContent =
      `nominal PM ${fmt(v.nominal.pm_deg, "deg")} / GM ${fmt(v.nominal.gm_db, "dB")}; ` +
      `worst PM ${fmt(worst(pm), "deg")} / GM ${fmt(worst(gm), "dB")}; ` +
      `${ok.filter((c) => !c.margins.stable).length} unstable, ${v.cases.length - ok.length} failed`;
    const [plo, phi] = range(pm);
    const [glo, ghi] = range(gm);
    const ctx = $("corner-plot").getContext("2d");
    const ax = frame(ctx, plo - 1, phi + 1, glo - 1, ghi + 1, "PM (deg)", "GM (dB)");
    ok.forEach((c) => {
      if (c.margins.pm_deg === null || c.margins.gm_db === null) return;
      ctx.fillStyle = c.margins.stable ? "#1f5fbf" : "#c0392b";
      ctx.fillRect(ax.sx(c.margins.pm_deg) - 2, ax.sy(c.margins.gm_db) - 2, 4, 4);
    });
  }, 0);
}

await init();
$("run-step").onclick = runStep;
$("t-nichols").oninput = runNichols;
$("full").onchange = runNichols;
$("controller").onchange = () => { runNichols(); runStep(); };
$("run-corner").onclick = runCorners;
runNichols();
runStep();
