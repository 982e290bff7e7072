/**
 * DOM rendering. Pure function of the view-model: every call repaints the
 * panels from scratch, so rendering the same state twice is a no-op in
 * effect. Numbers are the service's 12-digit strings, trimmed for display
 * only.
 */

import type { ConsoleSession } from "./session.js";

export interface PanelRefs {
  stream: HTMLElement;
  needsChart: HTMLElement;
  gauge: HTMLElement;
  queryPanel: HTMLElement;
  popup: HTMLElement;
  summary: HTMLElement;
  status: HTMLElement;
}

function pct(p: string): string {
  return `${(Number.parseFloat(p) * 100).toFixed(1)}%`;
}

function barRow(name: string, p: string, cls = ""): string {
  return (
    `<div class="bar-row ${cls}">` +
    `<span class="bar-label">${name}</span>` +
    `<span class="bar-track"><span class="bar-fill" style="width:${pct(p)}"></span></span>` +
    `<span class="bar-value">${Number.parseFloat(p).toFixed(3)}</span>` +
    `</div>`
  );
}

export function render(vm: ConsoleSession, refs: PanelRefs): void {
  const tail = vm.entries.slice(-40);
  refs.stream.innerHTML = tail
    .map((e) => `<div class="entry entry-${e.kind}"><span class="t">${e.t}</span> ${e.label}</div>`)
    .join("");
  refs.stream.scrollTop = refs.stream.scrollHeight;

  const cycle = vm.lastCycle;
  if (cycle) {
    const rows = Object.entries(cycle.needs)
      .map(([name, p]) => barRow(name, p))
      .join("");
    refs.needsChart.innerHTML = `<div class="chart-title">needs @ t=${cycle.t}</div>${rows}`;

    const threshold = vm.threshold;
    refs.gauge.innerHTML =
      `<div class="chart-title">p(help now) = ${Number.parseFloat(cycle.p_help).toFixed(3)}</div>` +
      `<div class="gauge-track">` +
      `<span class="gauge-fill" style="width:${pct(cycle.p_help)}"></span>` +
      `<span class="gauge-marker" style="left:${(threshold * 100).toFixed(1)}%"></span>` +
      `</div>` +
      `<div class="gauge-caption">threshold ${threshold.toFixed(2)}</div>`;
  }

  if (vm.queryView) {
    const before = Object.entries(vm.queryView.before).map(([n, p]) => barRow(n, p, "before")).join("");
    const after = Object.entries(vm.queryView.after).map(([n, p]) => barRow(n, p, "after")).join("");
    refs.queryPanel.innerHTML =
      `<div class="chart-title">query: "${vm.queryView.text}"</div>` +
      `<div class="split"><div><h4>actions only</h4>${before}</div>` +
      `<div><h4>with query terms</h4>${after}</div></div>`;
  } else {
    refs.queryPanel.innerHTML = `<div class="chart-title">no query yet</div>`;
  }

  if (vm.popup && vm.popup.outcome === "open") {
    const remaining = (vm.popupRemainingMs() / 1000).toFixed(1);
    const topics = vm.popup.topics
      .map(([name, p]) => `<button class="topic" data-topic="${name}">${name} (${pct(p)})</button>`)
      .join("");
    refs.popup.innerHTML =
      `<div class="popup-box">` +
      `<div class="popup-head">It looks like you could use a hand <span class="countdown">${remaining}s</span></div>` +
      `<div class="popup-topics">${topics}</div>` +
      `<button class="dismiss">dismiss</button>` +
      `</div>`;
    refs.popup.classList.remove("hidden");
  } else {
    refs.popup.innerHTML = "";
    refs.popup.classList.add("hidden");
  }

  refs.summary.innerHTML =
    `<div class="chart-title">review later</div>` +
    (vm.summary.length
      ? vm.summary.map((s) => `<div class="entry">${s.name} <span class="t">x${s.count}</span></div>`).join("")
      : `<div class="entry muted">nothing yet</div>`);

  refs.status.textContent = vm.lastError
    ? `error: ${vm.lastError}`
    : `session ${vm.sessionId} · t=${vm.virtualNow}ms · ${vm.declaredLevel}`;
  refs.status.classList.toggle("error", vm.lastError !== null);
}
