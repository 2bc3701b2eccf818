// Entry point: run list when no run is selected, live run view otherwise.

import { listRuns, listTasks, startRun, submitFeedback } from "./api.js";
import {
  applyEvent,
  initialView,
  type ConnectionState,
  type RunView,
} from "./model.js";
import { subscribeEvents } from "./stream.js";
import { renderRunView } from "./view.js";

const BASE_URL = "";

function q<T extends HTMLElement>(selector: string): T {
  const node = document.querySelector(selector);
  if (!node) throw new Error(`missing element: ${selector}`);
  return node as T;
}

async function showIndex(root: HTMLElement): Promise<void> {
  root.replaceChildren();
  const heading = document.createElement("h2");
  heading.textContent = "tasks";
  root.append(heading);
  const tasks = await listTasks(BASE_URL);
  const taskList = document.createElement("ul");
  for (const task of tasks) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.textContent = `start ${task.id}`;
    button.addEventListener("click", async () => {
      const { run_id } = await startRun(BASE_URL, { task_id: task.id });
      window.location.search = `?run=${run_id}`;
    });
    item.append(button, document.createTextNode(` ${task.goal} [${task.kind}]`));
    taskList.append(item);
  }
  root.append(taskList);

  const runsHeading = document.createElement("h2");
  runsHeading.textContent = "runs";
  root.append(runsHeading);
  const runList = document.createElement("ul");
  for (const run of await listRuns(BASE_URL)) {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = `?run=${run.run_id}`;
    link.textContent = `${run.run_id.slice(0, 8)} ${run.goal}`;
    item.append(link, document.createTextNode(` [${run.status}]`));
    runList.append(item);
  }
  root.append(runList);
}

function watchRun(root: HTMLElement, runId: string): void {
  let view: RunView = initialView(runId);

  const callbacks = {
    onSubmitVerdict(solved: boolean, feedback: string): void {
      void submitFeedback(BASE_URL, runId, solved, feedback).then((result) => {
        if (result.ok) {
          view = { ...view, awaitingFeedback: false, formError: null };
        } else {
          view = { ...view, formError: `${result.code}: ${result.message}` };
        }
        renderRunView(root, view, callbacks);
      });
    },
  };

  const repaint = () => renderRunView(root, view, callbacks);
  repaint();

  subscribeEvents({
    baseUrl: BASE_URL,
    runId,
    fromSeq: 0,
    onEvent(event) {
      view = applyEvent(view, event);
      repaint();
    },
    onConnection(state: ConnectionState) {
      view = { ...view, connection: state };
      repaint();
    },
  });
}

function boot(): void {
  const root = q<HTMLElement>("#app");
  const runId = new URLSearchParams(window.location.search).get("run");
  if (runId) {
    watchRun(root, runId);
  } else {
    void showIndex(root);
  }
}

boot();
