/** DOM rendering. All state comes from the controller; this module only
 * draws it. Score shading is normalized per sentence: the best-scoring
 * token gets full intensity, purely presentational. */

import type { SessionController, SentenceView } from "./controller.js";
import type { IndexInfo } from "./types.js";
import { STRATEGIES } from "./types.js";

export function shadeAlpha(score: number, maxScore: number): number {
  if (maxScore <= 0 || score <= 0) return 0;
  return Math.min(1, score / maxScore);
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function sparkline(values: number[], width = 120, height = 24): SVGSVGElement {
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  svg.setAttribute("class", "sparkline");
  if (values.length === 0) return svg;
  const max = Math.max(...values, 1);
  const step = width / values.length;
  values.forEach((v, i) => {
    const bar = document.createElementNS("http://www.w3.org/2000/svg", "rect");
    const h = Math.max(1, (v / max) * (height - 2));
    bar.setAttribute("x", String(i * step));
    bar.setAttribute("y", String(height - h));
    bar.setAttribute("width", String(Math.max(1, step - 1)));
    bar.setAttribute("height", String(h));
    svg.appendChild(bar);
  });
  return svg;
}

function renderSentence(ctl: SessionController, view: SentenceView): HTMLElement {
  const section = el("section", "sentence-panel");
  const ctx = view.context;
  if (ctx.before) section.appendChild(el("p", "context", ctx.before));

  const line = el("p", "sentence");
  const maxScore = Math.max(...view.tokens.map((t) => t.score));
  view.tokens.forEach((tok, i) => {
    const chip = el("button", "token", tok.surface);
    chip.type = "button";
    chip.dataset.index = String(i);
    chip.title = `score ${tok.score.toFixed(3)}`;
    chip.style.setProperty("--shade", shadeAlpha(tok.score, maxScore).toFixed(3));
    if (view.toggles[i]) chip.classList.add("positive");
    // group contiguous positives visually
    if (view.toggles[i] && i > 0 && view.toggles[i - 1]) chip.classList.add("run");
    chip.addEventListener("click", () => ctl.toggleToken(i));
    line.appendChild(chip);
    line.appendChild(document.createTextNode(" "));
  });
  section.appendChild(line);
  if (ctx.after) section.appendChild(el("p", "context", ctx.after));
  section.appendChild(el("p", "doc-ref", `document ${ctx.docId}`));

  const controls = el("div", "submit-row");
  const confirmLabel = el("label", "confirm");
  const confirm = el("input") as HTMLInputElement;
  confirm.type = "checkbox";
  confirm.id = "confirm-whole";
  confirm.checked = view.confirmed;
  confirm.addEventListener("change", () => ctl.setConfirmed(confirm.checked));
  confirmLabel.appendChild(confirm);
  confirmLabel.appendChild(
    document.createTextNode(" every token in this sentence is labeled"),
  );
  controls.appendChild(confirmLabel);

  const submit = el("button", "submit", "Submit sentence");
  submit.id = "submit-btn";
  submit.disabled = !ctl.canSubmit;
  submit.addEventListener("click", () => void ctl.submit());
  controls.appendChild(submit);
  section.appendChild(controls);
  return section;
}

function renderSetup(
  ctl: SessionController,
  indexes: IndexInfo[],
): HTMLElement {
  const form = el("form", "setup");
  form.id = "setup-form";

  const indexSelect = el("select") as HTMLSelectElement;
  indexSelect.id = "setup-index";
  for (const info of indexes) {
    const opt = el("option") as HTMLOptionElement;
    opt.value = info.index_id;
    opt.textContent = `${info.index_id} (${info.counts.tokens ?? "?"} tokens)`;
    indexSelect.appendChild(opt);
  }

  const className = el("input") as HTMLInputElement;
  className.id = "setup-class";
  className.placeholder = "entity class, e.g. island";

  const strategySelect = el("select") as HTMLSelectElement;
  strategySelect.id = "setup-strategy";
  for (const s of STRATEGIES) {
    const opt = el("option") as HTMLOptionElement;
    opt.value = s;
    opt.textContent = s;
    strategySelect.appendChild(opt);
  }

  const seedQuery = el("input") as HTMLInputElement;
  seedQuery.id = "setup-seed-query";
  seedQuery.placeholder = "seed terms, e.g. Malta island";

  const startBtn = el("button", "submit", "Start session");
  startBtn.id = "setup-start";

  for (const [label, node] of [
    ["index", indexSelect],
    ["class name", className],
    ["strategy", strategySelect],
    ["seed query", seedQuery],
  ] as const) {
    const row = el("label", "field", label + " ");
    row.appendChild(node);
    form.appendChild(row);
  }
  form.appendChild(startBtn);
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    void ctl.start({
      indexId: indexSelect.value,
      className: className.value,
      strategy: strategySelect.value,
      seedQuery: seedQuery.value,
      seed: 0,
    });
  });
  return form;
}

function renderProgress(ctl: SessionController): HTMLElement {
  const panel = el("aside", "progress");
  panel.appendChild(el("h2", undefined, "Progress"));
  const dl = el("dl");
  const rows: [string, string][] = [
    ["round", String(ctl.round)],
    ["sentences labeled", String(ctl.labeledSentences)],
    ["tokens labeled", String(ctl.labeledTokens)],
    ["model size", String(ctl.modelSize)],
  ];
  for (const [k, v] of rows) {
    dl.appendChild(el("dt", undefined, k));
    const dd = el("dd", undefined, v);
    dd.dataset.stat = k.replace(/ /g, "-");
    dl.appendChild(dd);
  }
  panel.appendChild(dl);
  panel.appendChild(el("h3", undefined, "entity list growth"));
  panel.appendChild(sparkline(ctl.entityGrowth));
  return panel;
}

function renderEntities(ctl: SessionController): HTMLElement {
  const panel = el("aside", "entities");
  panel.appendChild(el("h2", undefined, "Entities"));
  const list = el("ol");
  list.id = "entity-list";
  for (const surface of ctl.entities) {
    list.appendChild(el("li", undefined, surface));
  }
  panel.appendChild(list);
  return panel;
}

export function render(
  root: HTMLElement,
  ctl: SessionController,
  indexes: IndexInfo[],
): void {
  root.textContent = "";
  const header = el("header");
  header.appendChild(el("h1", undefined, "entityscout"));
  root.appendChild(header);

  if (ctl.message) {
    const note = el("p", "message", ctl.message);
    note.id = "message";
    root.appendChild(note);
  }

  if (ctl.phase === "setup") {
    root.appendChild(renderSetup(ctl, indexes));
    return;
  }

  const main = el("main", "columns");
  const work = el("section", "work");

  if (ctl.phase === "busy") {
    work.appendChild(el("p", "busy", "waiting for the server..."));
  } else if (ctl.phase === "labeling" && ctl.sentence) {
    work.appendChild(renderSentence(ctl, ctl.sentence));
  } else if (ctl.phase === "complete") {
    const done = el("section", "complete");
    done.appendChild(el("h2", undefined, "All sentences labeled"));
    const url = ctl.exportUrl();
    if (url) {
      const a = el("a", "export", "Download labeled data (CoNLL)") as HTMLAnchorElement;
      a.id = "export-link";
      a.href = url;
      a.setAttribute("download", "labeled.conll");
      done.appendChild(a);
    }
    work.appendChild(done);
  } else if (ctl.phase === "conflict") {
    const btn = el("button", "submit", "Refresh session");
    btn.id = "refresh-btn";
    btn.addEventListener("click", () => void ctl.refreshSession());
    work.appendChild(btn);
  }

  main.appendChild(work);
  main.appendChild(renderEntities(ctl));
  main.appendChild(renderProgress(ctl));
  root.appendChild(main);
}
