import init, { distanceMap, symmetries, thresholdSweep } from "./pkg/poseval_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function drawDistance() {
  const view = JSON.parse(distanceMap($("shape").value, num("rx"), num("ry"), num("z")));
  const ctx = $("dist").getContext("2d");
  const img = ctx.createImageData(view.width, view.height);
  view.pixels.forEach((g, i) => {
    img.data.set([g, g, g, 255], 4 * i);
  });
  ctx.putImageData(img, 0, 0);
  $("dist-info").textContent = view.covered
    ? `${view.covered} px, distance ${view.min.toFixed(1)} to ${view.max.toFixed(1)} mm`
    : "object outside the image";
}

function runSymmetries() {
  $("sym-out").textContent = "searching...";
  setTimeout(() => {
    const s = JSON.parse(symmetries($("shape").value));
    $("sym-out").textContent = [
      `epsilon            ${s.epsilon.toFixed(2)} mm`,
      `discrete           ${s.discrete}`,
      `continuous axes    ${s.continuous}`,
      `steps per axis     ${s.continuous_steps.join(", ") || "-"}`,
      `expanded set       ${s.expanded}`,
      s.needs_review ? "needs manual review" : "",
    ].join("\n");
  }, 0);
}

function runSweep() {
  const s = JSON.parse(thresholdSweep($("shape").value, num("shift"), num("turn")));
  $("sweep-info").textContent =
    `MSSD ${s.mssd.toFixed(2)} mm, MSPD ${s.mspd.toFixed(2)} px; ` +
    `recall ${(100 * s.ar_mssd).toFixed(0)}% / ${(100 * s.ar_mspd).toFixed(0)}%`;
  const cell = (r, unit) => `<td class="${r.correct ? "ok" : "miss"}">${r.theta.toFixed(1)} ${unit}</td>`;
  $("sweep").innerHTML =
    "<tr><th>MSSD θ</th><th>MSPD θ</th></tr>" +
    s.mssd_rows.map((r, i) => `<tr>${cell(r, "mm")}${cell(s.mspd_rows[i], "px")}</tr>`).join("");
}

await init();
for (const id of ["rx", "ry", "z"]) $(id).addEventListener("input", drawDistance);
for (const id of ["shift", "turn"]) $(id).addEventListener("input", runSweep);
$("shape").addEventListener("change", () => {
  drawDistance();
  runSweep();
  $("sym-out").textContent = "";
});
$("sym-run").addEventListener("click", runSymmetries);
drawDistance();
runSweep();
