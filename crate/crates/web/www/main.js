import init, { check_pair, audit_html, lightness_sweep } from "./pkg/crawlcontrast_web.js";

const $ = (id) => document.getElementById(id);
const verdict = (ok) => `<span class="${ok ? "pass" : "fail"}">${ok ? "pass" : "fail"}</span>`;
const escape = (s) => s.replace(/[&<>"]/g, (c) => `&#${c.charCodeAt(0)};`);

function updatePair() {
  try {
    const r = JSON.parse(check_pair($("fg").value, $("bg").value));
    $("pair-result").innerHTML =
      `<span class="swatch" style="color:${r.fg};background:${r.bg}">Sample text</span> ` +
      `${r.ratio.toFixed(2)}:1, normal text ${verdict(r.passes_normal)}, large text ${verdict(r.passes_large)}`;
    updateSweep();
  } catch (e) {
    $("pair-result").innerHTML = `<span class="error">${escape(String(e.message ?? e))}</span>`;
    $("sweep").innerHTML = "";
    $("sweep-result").textContent = "";
  }
}

function updateSweep() {
  const s = JSON.parse(lightness_sweep($("fg").value, $("bg").value));
  $("sweep").innerHTML = s.points
    .map((p) => `<div class="${p.passes_normal ? "ok" : ""}" style="background:${p.fg}" title="${p.lightness}% ${p.fg} ${p.ratio.toFixed(2)}:1"></div>`)
    .join("");
  $("sweep-result").textContent = s.nearest_passing
    ? `Closest passing shade: ${s.nearest_passing}`
    : "No lightness of this hue reaches 4.5:1 on this background.";
}

function runAudit() {
  const r = JSON.parse(audit_html($("html").value));
  if (r.pairings.length === 0) {
    $("audit-result").textContent = `${r.declarations} colour declarations, no pairings.`;
    return;
  }
  const rows = r.pairings
    .map((p) => `<tr><td><span class="swatch" style="color:${p.fg};background:${p.bg}">Aa</span></td>` +
      `<td>${p.fg}</td><td>${p.bg}</td><td>${p.ratio.toFixed(2)}:1</td>` +
      `<td>${verdict(p.passes_normal)}</td><td>${verdict(p.passes_large)}</td><td>${p.provenance}</td></tr>`)
    .join("");
  $("audit-result").innerHTML =
    `<p>${r.declarations} declarations (${r.unparsed_declarations} unparsed), ` +
    `${r.passing_normal}/${r.pairings.length} pairings pass (${(r.pass_rate_normal * 100).toFixed(1)}%).</p>` +
    `<table><tr><th></th><th>text</th><th>background</th><th>ratio</th><th>normal</th><th>large</th><th>source</th></tr>${rows}</table>`;
}

await init();
$("fg").addEventListener("input", updatePair);
$("bg").addEventListener("input", updatePair);
$("audit").addEventListener("click", runAudit);
updatePair();
runAudit();
