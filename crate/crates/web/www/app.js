import init, { timeline, sweep, run_source, example_source } from "./pkg/empa_web.js";

const $ = (id) => document.getElementById(id);
const COLORS = ["#3a7bd5", "#e8a317", "#ccc"];

function fail(el, e) {
  el.className = "err";
  el.textContent = String(e.message ?? e);
}

function gantt(t) {
  const cv = $("gantt"), g = cv.getContext("2d");
  const seg = t.segments();
  let rows = 1;
  for (let i = 0; i < seg.length; i += 4) rows = Math.max(rows, seg[i] + 1);
  const rowH = Math.max(6, Math.min(18, Math.floor(560 / rows)));
  cv.height = rows * rowH + 24;
  g.clearRect(0, 0, cv.width, cv.height);
  const left = 40, w = cv.width - left - 10, scale = w / Math.max(1, t.clocks());
  g.font = "10px monospace";
  for (let r = 0; r < rows; r++) g.fillText("c" + r, 2, r * rowH + rowH - 3);
  // blocked first so execution draws on top
  for (const kind of [2, 0, 1]) {
    g.fillStyle = COLORS[kind];
    for (let i = 0; i < seg.length; i += 4) {
      if (seg[i + 3] !== kind) continue;
      g.fillRect(left + seg[i + 1] * scale, seg[i] * rowH + 1, Math.max(1, seg[i + 2] * scale - 0.5), rowH - 2);
    }
  }
  g.fillStyle = "#000";
  g.fillText("0", left, cv.height - 6);
  g.fillText(t.clocks() + " clocks", cv.width - 80, cv.height - 6);
}

function drawTimeline() {
  const s = $("summary");
  try {
    const t = timeline($("mode").value, +$("veclen").value, +$("pool").value);
    s.className = "";
    s.textContent = `${t.clocks()} clocks, ${t.peak()} cores, eax=${t.eax()}`;
    gantt(t);
    $("trace").textContent = t.trace();
  } catch (e) { fail(s, e); }
}

function plot(csv) {
  const lines = csv.trim().split("\n");
  const head = lines[0].split(",");
  const L = head.indexOf("length"), M = head.indexOf("mode"), S = head.indexOf("speedup");
  const series = {};
  for (const line of lines.slice(1)) {
    const f = line.split(",");
    (series[f[M]] ??= []).push([+f[L], +f[S]]);
  }
  const cv = $("plot"), g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const pts = Object.values(series).flat();
  const xmax = Math.max(...pts.map((p) => p[0])), ymax = Math.max(...pts.map((p) => p[1]));
  const x = (v) => 40 + (v / xmax) * (cv.width - 60), y = (v) => cv.height - 20 - (v / ymax) * (cv.height - 40);
  g.strokeStyle = "#000";
  g.strokeRect(40, 20, cv.width - 60, cv.height - 40);
  g.font = "11px sans-serif";
  g.fillText("speedup " + ymax.toFixed(2), 44, 14);
  g.fillText("length " + xmax, cv.width - 80, cv.height - 4);
  const colors = { NO: "#888", FOR: "#3a7bd5", SUMUP: "#e8a317" };
  let ky = 36;
  for (const [mode, ps] of Object.entries(series)) {
    g.strokeStyle = g.fillStyle = colors[mode];
    g.beginPath();
    ps.forEach(([a, b], i) => (i ? g.lineTo(x(a), y(b)) : g.moveTo(x(a), y(b))));
    g.stroke();
    g.fillText(mode, 50, ky);
    ky += 14;
  }
}

function doSweep() {
  const out = $("csv");
  try {
    const csv = sweep($("lengths").value, +$("pool").value);
    out.className = "";
    out.textContent = csv;
    plot(csv);
  } catch (e) { fail(out, e); }
}

function runCustom() {
  const s = $("srcsummary");
  try {
    const t = run_source($("src").value, +$("pool").value);
    s.className = "";
    s.textContent = `${t.clocks()} clocks, ${t.peak()} cores, eax=${t.eax()}`;
    gantt(t);
    $("trace").textContent = t.trace();
  } catch (e) { fail(s, e); }
}

await init();
$("draw").onclick = drawTimeline;
$("sweep").onclick = doSweep;
$("runsrc").onclick = runCustom;
$("load").onclick = () => ($("src").value = example_source("SUMUP"));
$("src").value = example_source("SUMUP");
drawTimeline();
