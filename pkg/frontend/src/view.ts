// DOM rendering for a RunView. Kept intentionally thin: all interesting
// state lives in the model, which the tests cover without a browser.

import { groupPanels, validateFeedback, type RunView } from "./model.js";

export interface ViewCallbacks {
  onSubmitVerdict(solved: boolean, feedback: string): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  textContent?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (textContent !== undefined) node.textContent = textContent;
  return node;
}

export function renderRunView(
  container: HTMLElement,
  view: RunView,
  callbacks: ViewCallbacks,
): void {
  container.replaceChildren();

  const header = el("header", "run-header");
  header.append(
    el("h2", "run-goal", view.goal ?? view.runId),
    el("span", `status status-${view.status}`, view.status),
    el("span", `connection connection-${view.connection}`, view.connection),
  );
  container.append(header);

  if (view.awaitingFeedback) {
    container.append(renderFeedbackForm(view, callbacks));
  }

  for (const group of groupPanels(view.panels)) {
    const roundSection = el("section", "round");
    roundSection.append(el("h3", "round-title", `round ${group.round}`));
    for (const stageGroup of group.stages) {
      const stageBlock = el("details", `stage stage-${stageGroup.stage}`);
      (stageBlock as HTMLDetailsElement).open = true;
      stageBlock.append(el("summary", "stage-name", stageGroup.stage));
      for (const panel of stageGroup.panels) {
        const panelNode = el("article", `panel panel-${panel.kind}`);
        panelNode.dataset.seq = String(panel.seq);
        panelNode.append(el("h4", "panel-title", `#${panel.seq} ${panel.title}`));
        if (panel.body) {
          panelNode.append(el("pre", "panel-body", panel.body));
        }
        stageBlock.append(panelNode);
      }
      roundSection.append(stageBlock);
    }
    container.append(roundSection);
  }
}

function renderFeedbackForm(view: RunView, callbacks: ViewCallbacks): HTMLElement {
  const form = el("form", "feedback-form");
  form.append(el("p", "feedback-banner", "This run is waiting for your verdict."));
  const textarea = el("textarea", "feedback-text");
  textarea.placeholder = "Feedback for the next round (required when rejecting)";
  form.append(textarea);
  const errorBox = el("p", "feedback-error", view.formError ?? "");
  const approve = el("button", "approve", "Approve");
  approve.type = "button";
  const reject = el("button", "reject", "Reject");
  reject.type = "button";

  approve.addEventListener("click", () => {
    callbacks.onSubmitVerdict(true, textarea.value);
  });
  reject.addEventListener("click", () => {
    const problem = validateFeedback(false, textarea.value);
    if (problem) {
      errorBox.textContent = problem;
      return;
    }
    callbacks.onSubmitVerdict(false, textarea.value);
  });

  form.append(approve, reject, errorBox);
  return form;
}
