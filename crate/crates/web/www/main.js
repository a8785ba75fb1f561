import init, { Session, fixture_names } from "./pkg/gim_web.js";

const $ = (id) => document.getElementById(id);
let session = null;
let mesh = null;
let yaw = 0.6, pitch = 0.35;

function status(msg) { $("status").textContent = msg; }

function blit(id, rgba, n) {
  const c = $(id);
  c.width = n; c.height = n;
  c.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), n, n), 0, 0);
}

function showStats(rows) {
  $("stats").innerHTML = rows.map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`).join("");
}

function showAtlas() {
  const n = session.resolution;
  blit("positions", session.positionRgba(), n);
  blit("charts", session.chartRgba(), n);
  blit("albedo", session.albedoRgba(), n);
  $("turns").textContent = `${session.quarterTurns * 90}°`;
}

async function encode() {
  const res = Number($("resolution").value);
  const cyl = $("encoding").value === "cylindrical";
  const file = $("obj").files[0];
  status("encoding…");
  await new Promise(requestAnimationFrame);
  const t0 = performance.now();
  try {
    session?.free();
    session = file
      ? Session.fromObj(await file.text(), res, cyl)
      : Session.fromFixture($("fixture").value, res, cyl);
  } catch (e) {
    session = null;
    status(String(e));
    return;
  }
  const ms = performance.now() - t0;
  mesh = null;
  showAtlas();
  drawMesh();
  showStats([
    ["resolution", session.resolution],
    ["encoding", session.encoding + (session.cylindricalFallback ? " (fallback)" : "")],
    ["charts", session.chartCount],
    ["valid pixels", session.validPixels],
    ["encode time", `${ms.toFixed(0)} ms`],
  ]);
  status("");
}

function rotate(k) {
  if (!session) return;
  session.rotate(k);
  mesh = null;
  showAtlas();
}

async function decode() {
  if (!session) return;
  status("decoding…");
  await new Promise(requestAnimationFrame);
  let r;
  try {
    r = JSON.parse(session.fidelityJson(Number($("samples").value)));
  } catch (e) {
    status(String(e));
    return;
  }
  mesh = { pos: session.meshPositions(), tri: session.meshTriangles() };
  drawMesh();
  const f = (x) => x.toExponential(2);
  showStats([
    ["vertices", r.vertex_count],
    ["triangles", r.triangle_count],
    ["charts", r.chart_count],
    ["chamfer mean", f(r.chamfer_mean)],
    ["chamfer p95", f(r.chamfer_p95)],
    ["chamfer max", f(r.chamfer_max)],
    ["tolerance", f(r.tolerance)],
    ["coverage", (100 * r.coverage_fraction).toFixed(2) + " %"],
    ["area ratio spread", r.area_ratio_spread.toFixed(3)],
  ]);
  status("");
}

function drawMesh() {
  const c = $("view");
  const g = c.getContext("2d");
  g.fillStyle = "#18181c";
  g.fillRect(0, 0, c.width, c.height);
  if (!mesh) return;
  const { pos, tri } = mesh;
  const cy = Math.cos(yaw), sy = Math.sin(yaw), cp = Math.cos(pitch), sp = Math.sin(pitch);
  const nv = pos.length / 3;
  const p = new Float32Array(nv * 3);
  for (let i = 0; i < nv; i++) {
    const x = pos[3 * i], y = pos[3 * i + 1], z = pos[3 * i + 2];
    const x1 = cy * x + sy * z, z1 = -sy * x + cy * z;
    p[3 * i] = x1;
    p[3 * i + 1] = cp * y - sp * z1;
    p[3 * i + 2] = sp * y + cp * z1;
  }
  const nt = tri.length / 3;
  const order = new Uint32Array(nt);
  const depth = new Float32Array(nt);
  for (let t = 0; t < nt; t++) {
    order[t] = t;
    depth[t] = p[3 * tri[3 * t] + 2] + p[3 * tri[3 * t + 1] + 2] + p[3 * tri[3 * t + 2] + 2];
  }
  order.sort((a, b) => depth[a] - depth[b]);
  const s = c.width * 0.42, ox = c.width / 2, oy = c.height / 2;
  for (const t of order) {
    const a = 3 * tri[3 * t], b = 3 * tri[3 * t + 1], d = 3 * tri[3 * t + 2];
    const ux = p[b] - p[a], uy = p[b + 1] - p[a + 1], uz = p[b + 2] - p[a + 2];
    const vx = p[d] - p[a], vy = p[d + 1] - p[a + 1], vz = p[d + 2] - p[a + 2];
    const nx = uy * vz - uz * vy, ny = uz * vx - ux * vz, nz = ux * vy - uy * vx;
    const len = Math.hypot(nx, ny, nz) || 1;
    const shade = Math.round(60 + 170 * Math.abs((0.3 * nx + 0.5 * ny + 0.8 * nz) / len));
    g.fillStyle = g.strokeStyle = `rgb(${shade},${shade},${Math.min(255, shade + 20)})`;
    g.beginPath();
    g.moveTo(ox + s * p[a], oy - s * p[a + 1]);
    g.lineTo(ox + s * p[b], oy - s * p[b + 1]);
    g.lineTo(ox + s * p[d], oy - s * p[d + 1]);
    g.closePath();
    g.fill();
    g.stroke();
  }
}

function orbit() {
  const c = $("view");
  let drag = null;
  c.addEventListener("pointerdown", (e) => { drag = [e.clientX, e.clientY]; c.setPointerCapture(e.pointerId); });
  c.addEventListener("pointerup", () => { drag = null; });
  c.addEventListener("pointermove", (e) => {
    if (!drag) return;
    yaw += (e.clientX - drag[0]) * 0.01;
    pitch = Math.max(-1.5, Math.min(1.5, pitch + (e.clientY - drag[1]) * 0.01));
    drag = [e.clientX, e.clientY];
    drawMesh();
  });
}

await init();
for (const name of fixture_names()) $("fixture").add(new Option(name, name));
$("fixture").addEventListener("change", () => { $("obj").value = ""; });
$("encode").addEventListener("click", encode);
$("rot90").addEventListener("click", () => rotate(1));
$("rot270").addEventListener("click", () => rotate(3));
$("decode").addEventListener("click", decode);
orbit();
await encode();
