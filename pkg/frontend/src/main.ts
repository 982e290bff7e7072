/** Console wiring: one live session against the hosting service. */

import { EngineClient } from "./client.js";
import { render, type PanelRefs } from "./render.js";
import { ConsoleSession, openConsoleSession } from "./session.js";

const client = new EngineClient("");

function ref(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

async function boot(): Promise<void> {
  const refs: PanelRefs = {
    stream: ref("stream"),
    needsChart: ref("needs-chart"),
    gauge: ref("gauge"),
    queryPanel: ref("query-panel"),
    popup: ref("popup"),
    summary: ref("summary"),
    status: ref("status"),
  };

  const bundle = await client.bundle();
  const levelSelect = ref("level") as HTMLSelectElement;
  levelSelect.innerHTML = bundle.expertise_states
    .map((s) => `<option value="${s}">${s}</option>`)
    .join("");

  const symbolInput = ref("symbol") as HTMLInputElement;
  const datalist = ref("symbols") as HTMLElement;
  datalist.innerHTML = bundle.atomic_symbols.map((s) => `<option value="${s}">`).join("");

  let vm: ConsoleSession;
  let stopStream: (() => void) | null = null;
  let streamBuffer: Promise<void> = Promise.resolve();

  const repaint = () => render(vm, refs);

  async function openSession(level?: string): Promise<void> {
    if (stopStream) stopStream();
    const slider = ref("threshold") as HTMLInputElement;
    vm = await openConsoleSession(client, {
      declaredLevel: level,
      threshold: Number.parseFloat(slider.value),
    });
    vm.onChange(repaint);
    stopStream = client.stream(vm.sessionId, () => {
      // the stream is a wake-up; sync() re-reads the buffer idempotently
      streamBuffer = streamBuffer.then(() => vm.sync());
    });
    repaint();
  }

  await openSession();

  levelSelect.addEventListener("change", () => void openSession(levelSelect.value));

  ref("inject").addEventListener("click", () => {
    if (symbolInput.value) void vm.injectEvent(symbolInput.value);
  });
  ref("burst").addEventListener("click", () => void vm.burst("menu_open", 4));
  ref("pause6").addEventListener("click", () => void vm.pause(6000).then(() => vm.refreshSummary()));

  const slider = ref("threshold") as HTMLInputElement;
  slider.addEventListener("change", () => void vm.setThreshold(Number.parseFloat(slider.value)));

  const queryInput = ref("query") as HTMLInputElement;
  ref("ask").addEventListener("click", () => void vm.submitQuery(queryInput.value));

  ref("popup").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (target.classList.contains("topic")) {
      void vm.acknowledge(target.dataset.topic ?? "").then(() => vm.refreshSummary());
    } else if (target.classList.contains("dismiss")) {
      void vm.dismiss();
    }
  });

  setInterval(repaint, 250); // keeps the popup countdown ticking
}

void boot();
