// DOM wiring for the review UI. One store, re-rendered wholesale after every
// action: state lives in the store, never in the DOM.

import { ChallengeInfo, GatewayApi } from "./api.js";
import { lineChartSvg } from "./chart.js";
import { ReviewStore } from "./state.js";

const api = new GatewayApi("");
const store = new ReviewStore(api);
let challenges: ChallengeInfo[] = [];
let banner = "";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, v);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function labelSetFor(challengeId: string | null): string[] {
  const info = challenges.find((c) => c.challenge_id === challengeId);
  return info ? info.label_set : [];
}

async function refreshAll(): Promise<void> {
  challenges = await api.challenges();
  await store.refreshRecords();
  render();
}

function render(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  root.replaceChildren();

  if (banner) {
    root.appendChild(el("div", { class: "banner" }, banner));
  }

  const layout = el("div", { class: "layout" });
  layout.appendChild(renderRecordList());
  layout.appendChild(renderRecordView());
  root.appendChild(layout);
  void renderBenchmark(root);
}

function renderRecordList(): HTMLElement {
  const side = el("div", { class: "side" });
  side.appendChild(el("h2", {}, "My records"));
  for (const record of store.records) {
    const item = el(
      "button",
      { class: "record" },
      `${record.record_id.slice(0, 10)}…  (${record.kind ?? "?"}, ${record.rows ?? "?"} rows)`,
    );
    item.addEventListener("click", () => {
      void store
        .openRecord(record.record_id)
        .then(render)
        .catch((err) => {
          banner = String(err);
          render();
        });
    });
    side.appendChild(item);
  }
  return side;
}

function renderRecordView(): HTMLElement {
  const main = el("div", { class: "main" });
  const view = store.current;
  if (!view) {
    main.appendChild(el("p", {}, "Open a record to review its rows."));
    return main;
  }
  const summary = store.records.find((r) => r.record_id === view.recordId);
  const labels = labelSetFor(summary?.challenge_id ?? null);

  main.appendChild(el("h2", {}, `Record ${view.recordId.slice(0, 16)}…`));
  const table = el("table");
  const head = el("tr");
  for (const title of ["#", "series", "label", "predicted", "correction"]) {
    head.appendChild(el("th", {}, title));
  }
  table.appendChild(head);

  view.rows.forEach((row, i) => {
    const tr = el("tr");
    tr.appendChild(el("td", {}, String(i)));
    const chartCell = el("td");
    chartCell.innerHTML = lineChartSvg(row);
    tr.appendChild(chartCell);
    tr.appendChild(el("td", {}, view.labels ? view.labels[i] : "—"));
    tr.appendChild(el("td", {}, view.predictedLabels ? view.predictedLabels[i] : "pending"));

    const cell = el("td");
    const select = el("select");
    select.appendChild(el("option", { value: "" }, "keep"));
    for (const label of labels) {
      select.appendChild(el("option", { value: label }, label));
    }
    const draft = store.drafts.get(i);
    if (draft) {
      select.value = draft.label;
    }
    select.addEventListener("change", () => {
      if (select.value) {
        store.draftCorrection(i, select.value);
      } else {
        store.dropDraft(i);
      }
      render();
    });
    cell.appendChild(select);
    if (draft?.error) {
      cell.appendChild(el("span", { class: "error" }, ` ${draft.error}`));
    }
    tr.appendChild(cell);
    table.appendChild(tr);
  });
  main.appendChild(table);

  const submit = el("button", { class: "submit" }, `Submit ${store.drafts.size} correction(s)`);
  submit.addEventListener("click", () => {
    void store
      .submitDrafts()
      .then((accepted) => {
        banner = accepted.length
          ? `Registered ${accepted.length} corrected record(s): ` +
            accepted.map((r) => r.newRecordId.slice(0, 10) + "…").join(", ")
          : "No drafts were accepted.";
        return store.refreshRecords();
      })
      .then(render)
      .catch((err) => {
        banner = String(err);
        render();
      });
  });
  if (store.drafts.size === 0) {
    submit.setAttribute("disabled", "disabled");
  }
  main.appendChild(submit);

  if (store.receipts.length) {
    const list = el("ul", { class: "receipts" });
    for (const receipt of store.receipts) {
      list.appendChild(
        el("li", {}, `row ${receipt.rowIndex} → ${receipt.label} as ${receipt.newRecordId.slice(0, 12)}…`),
      );
    }
    main.appendChild(list);
  }
  return main;
}

async function renderBenchmark(root: HTMLElement): Promise<void> {
  if (challenges.length === 0) {
    return;
  }
  const section = el("div", { class: "benchmark" });
  section.appendChild(el("h2", {}, `Benchmark: ${challenges[0].challenge_id}`));
  const table = el("table");
  const head = el("tr");
  for (const title of ["algorithm", "best performance", "evaluations"]) {
    head.appendChild(el("th", {}, title));
  }
  table.appendChild(head);
  const rows = await api.benchmark(challenges[0].challenge_id);
  for (const row of rows) {
    const tr = el("tr");
    tr.appendChild(el("td", {}, row.algorithm_id.slice(0, 12) + "…"));
    tr.appendChild(el("td", {}, row.best_performance.toFixed(3)));
    tr.appendChild(el("td", {}, String(row.evaluations)));
    table.appendChild(tr);
  }
  section.appendChild(table);
  root.appendChild(section);
}

window.addEventListener("load", () => {
  void refreshAll().catch((err) => {
    banner = `gateway unreachable: ${String(err)}`;
    render();
  });
});
