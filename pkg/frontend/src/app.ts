import { ApiClient, ApiError } from "./api.js";
import { SeriesPlot, ViewRange } from "./plot.js";
import type {
  AnswerNodeDict,
  AtomDict,
  DecisionAction,
  ItemPayload,
} from "./types.js";

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

function coerceValue(atom: AtomDict, raw: string): unknown {
  if (atom.subtype === "integer_count") return parseInt(raw, 10);
  if (atom.subtype === "numeric_scalar" || atom.subtype === "duration") return parseFloat(raw);
  if (atom.subtype === "binary") return raw.trim().toLowerCase();
  return raw;
}

export class App {
  private queueDiv: HTMLDivElement;
  private detailDiv: HTMLDivElement;
  private current: ItemPayload | null = null;
  plot: SeriesPlot | null = null;
  private views = new Map<string, ViewRange>(); // zoom persists per item
  private fieldInputs = new Map<string, HTMLInputElement>();
  private textInput: HTMLInputElement | null = null;
  reviewer = "";

  constructor(root: HTMLElement, private api: ApiClient) {
    this.queueDiv = el("div", "queue");
    this.detailDiv = el("div", "detail");
    this.detailDiv.style.display = "none";
    root.appendChild(this.queueDiv);
    root.appendChild(this.detailDiv);

    document.addEventListener("keydown", (e: KeyboardEvent) => {
      const target = e.target as HTMLElement | null;
      if (target && (target.tagName === "INPUT" || target.tagName === "TEXTAREA")) return;
      if (!this.current) return;
      if (e.key === "k") void this.decide("keep");
      else if (e.key === "d") void this.decide("discard");
      else if (e.key === "s") void this.decide("skip");
      else if (e.key === "c" && this.textInput) this.textInput.focus();
    });
  }

  async refreshQueue(): Promise<void> {
    const entries = await this.api.getQueue();
    this.queueDiv.textContent = "";
    const heading = el("h1", "", "Review queue");
    this.queueDiv.appendChild(heading);
    if (!entries.length) {
      this.queueDiv.appendChild(el("div", "done-banner", "All items reviewed — queue is empty."));
      return;
    }
    const list = el("ul", "queue-list");
    for (const entry of entries) {
      const li = el("li", "queue-row");
      li.dataset.qaId = entry.qa_id;
      li.appendChild(el("span", "qa-id", entry.qa_id));
      li.appendChild(el("span", "question", entry.question));
      li.appendChild(el("span", "skills", entry.skills.join("+")));
      li.appendChild(el("span", "flags", `${entry.flags.length} flag(s)`));
      li.addEventListener("click", () => void this.open(entry.qa_id));
      list.appendChild(li);
    }
    this.queueDiv.appendChild(list);
  }

  async open(qaId: string): Promise<void> {
    const item = await this.api.getItem(qaId);
    this.current = item;
    this.fieldInputs.clear();
    this.detailDiv.textContent = "";
    this.queueDiv.style.display = "none";
    this.detailDiv.style.display = "";

    const back = el("button", "back", "← queue");
    back.addEventListener("click", () => this.showQueue());
    this.detailDiv.appendChild(back);

    this.detailDiv.appendChild(el("h2", "question", item.question));

    const meta = el("div", "meta");
    meta.appendChild(el("span", "fmt", `format ${item.fmt}`));
    meta.appendChild(el("span", "skills", item.assignment.composition.join(" + ")));
    this.detailDiv.appendChild(meta);

    const verifier = el("div", "verifier-panel");
    verifier.appendChild(el("h3", "", "Verifier output"));
    const flagList = el("ul", "flag-list");
    for (const f of item.flags) flagList.appendChild(el("li", "flag", f));
    verifier.appendChild(flagList);
    this.detailDiv.appendChild(verifier);

    const gold = el("div", "gold-panel");
    gold.appendChild(el("h3", "", "Proposed answer"));
    gold.appendChild(el("p", "gold-text", item.gold_text));
    this.detailDiv.appendChild(gold);

    if (item.series) {
      const plotWrap = el("div", "plot-wrap");
      this.plot = new SeriesPlot();
      this.plot.setData(item.series.channels);
      const saved = this.views.get(qaId);
      if (saved) this.plot.setView(saved);
      this.plot.onViewChange = (v) => this.views.set(qaId, v);
      const readout = el("div", "readout", "hover for values");
      this.plot.onHover = (r) => {
        readout.textContent = r
          ? `${r.channel}: ${r.timestamp} → ${r.value} ${r.unit}`
          : "hover for values";
      };
      plotWrap.appendChild(this.plot.canvas);
      plotWrap.appendChild(readout);
      this.detailDiv.appendChild(plotWrap);
    }

    if (item.fmt === "B") {
      const evid = el("div", "evidence-panel");
      evid.appendChild(el("h3", "", "Evidence"));
      const table = el("table", "evidence-table");
      const emitted = (item.evidence.emitted ?? {}) as Record<string, unknown>;
      for (const [name, value] of Object.entries(emitted)) {
        const tr = el("tr");
        tr.appendChild(el("td", "evidence-name", name));
        tr.appendChild(el("td", "evidence-value", String(value)));
        table.appendChild(tr);
      }
      evid.appendChild(table);
      const plan = el("pre", "plan-source", item.plan_source);
      evid.appendChild(plan);
      this.detailDiv.appendChild(evid);
    }

    this.detailDiv.appendChild(this.buildDecisionBar(item));
    this.detailDiv.appendChild(el("div", "error"));
  }

  private buildDecisionBar(item: ItemPayload): HTMLDivElement {
    const bar = el("div", "decision-bar");
    for (const action of ["keep", "discard", "skip"] as DecisionAction[]) {
      const btn = el("button", `decide-${action}`, `${action} (${action[0]})`);
      btn.addEventListener("click", () => void this.decide(action));
      bar.appendChild(btn);
    }

    const correct = el("div", "correct-form");
    correct.appendChild(el("h3", "", "Correct answer"));
    for (const [name, field] of Object.entries(item.gold.fields)) {
      if (!field.atom) continue;
      const label = el("label", "field-label", `${name} (${field.atom.subtype})`);
      const input = el("input", "field-input");
      input.value = String(field.atom.value);
      label.appendChild(input);
      correct.appendChild(label);
      this.fieldInputs.set(name, input);
    }
    const textLabel = el("label", "field-label", "answer text");
    this.textInput = el("input", "corrected-text");
    this.textInput.value = item.gold_text;
    textLabel.appendChild(this.textInput);
    correct.appendChild(textLabel);

    const submit = el("button", "decide-correct", "submit correction (c)");
    submit.addEventListener("click", () => void this.decide("correct"));
    correct.appendChild(submit);
    bar.appendChild(correct);
    return bar;
  }

  private correctedGold(item: ItemPayload): AnswerNodeDict {
    const fields: AnswerNodeDict["fields"] = {};
    for (const [name, field] of Object.entries(item.gold.fields)) {
      if (!field.atom) {
        fields[name] = field;
        continue;
      }
      const input = this.fieldInputs.get(name);
      const raw = input ? input.value : String(field.atom.value);
      fields[name] = {
        ...field,
        atom: { ...field.atom, value: coerceValue(field.atom, raw) },
      };
    }
    return { kind: item.gold.kind, fields };
  }

  async decide(action: DecisionAction): Promise<void> {
    const item = this.current;
    if (!item) return;
    const errorDiv = this.detailDiv.querySelector(".error") as HTMLDivElement;
    errorDiv.textContent = "";

    const body: Parameters<ApiClient["postDecision"]>[1] = { action, reviewer: this.reviewer };
    if (action === "correct") {
      const text = this.textInput ? this.textInput.value.trim() : "";
      if (!text) {
        errorDiv.textContent = "correction requires a non-empty answer";
        return;
      }
      body.corrected_gold = this.correctedGold(item);
      body.corrected_text = text;
    }

    try {
      await this.api.postDecision(item.qa_id, body);
    } catch (e) {
      // Conflicts and validation errors surface in place; edits stay intact.
      errorDiv.textContent = e instanceof ApiError ? `${e.status}: ${e.message}` : String(e);
      return;
    }
    this.showQueue();
    await this.refreshQueue();
  }

  private showQueue(): void {
    this.current = null;
    this.plot = null;
    this.detailDiv.style.display = "none";
    this.queueDiv.style.display = "";
  }
}
