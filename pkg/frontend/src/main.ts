/** Wires the state machine, renderers and API client to the DOM.
 *
 * Every state change waits for the server response (no optimistic
 * updates); each submit issues exactly one feedback call.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  AppState,
  backToBrowser,
  feedbackApplied,
  feedbackRejected,
  initialState,
  pendingPayload,
  resynced,
  selectQuery,
  sessionStarted,
  submitStarted,
  toggleLabel,
  withConfig,
  withPatches,
} from "./state.js";
import { RANKING_STRIP_SIZE, renderApp } from "./views.js";
import type { Label, RankingEntry } from "./types.js";

export class ConsoleApp {
  state: AppState = initialState();
  private finalRanking: RankingEntry[] = [];

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    root.addEventListener("click", (event) => {
      void this.onClick(event);
    });
    root.addEventListener("change", (event) => this.onChange(event));
  }

  async start(): Promise<void> {
    const patches = await this.api.corpusPatches();
    this.state = withPatches(this.state, patches);
    this.render();
  }

  render(): void {
    this.root.innerHTML = renderApp(this.state, this.finalRanking);
  }

  private onChange(event: Event): void {
    const target = event.target as HTMLSelectElement | null;
    const key = target?.dataset?.config;
    if (!target || !key) return;
    this.state = withConfig(this.state, { [key]: target.value });
    this.render();
  }

  async onClick(event: Event): Promise<void> {
    const element = (event.target as HTMLElement | null)?.closest<HTMLElement>(
      "[data-action]",
    );
    if (!element) return;
    const action = element.dataset.action;
    if (action === "pick-query") {
      this.state = selectQuery(this.state, Number(element.dataset.id));
      this.render();
    } else if (action === "start-session") {
      await this.startSession();
    } else if (action === "label") {
      this.state = toggleLabel(
        this.state,
        Number(element.dataset.id),
        element.dataset.label as Label,
      );
      this.render();
    } else if (action === "submit-labels") {
      await this.submitLabels();
    } else if (action === "resync") {
      await this.resync();
    } else if (action === "new-search") {
      this.state = backToBrowser(this.state);
      this.finalRanking = [];
      this.render();
    }
  }

  private async startSession(): Promise<void> {
    if (this.state.queryId === null) return;
    try {
      const created = await this.api.createSession(
        this.state.queryId,
        this.state.config,
      );
      this.state = sessionStarted(this.state, created);
    } catch (err) {
      this.state = { ...this.state, error: describe(err) };
    }
    this.render();
  }

  private async submitLabels(): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    const payload = pendingPayload(session);
    if (payload === null) return;
    this.state = submitStarted(this.state);
    this.render();
    try {
      const response = await this.api.sendFeedback(
        session.sessionId,
        session.iteration,
        payload,
      );
      this.state = feedbackApplied(this.state, response);
      if (response.stopped) {
        await this.loadFinalRanking(session.sessionId);
      }
    } catch (err) {
      this.state = feedbackRejected(this.state, describe(err));
    }
    this.render();
  }

  private async loadFinalRanking(sessionId: string): Promise<void> {
    const ranking = await this.api.ranking(sessionId, RANKING_STRIP_SIZE);
    this.finalRanking = ranking.ids.map((id, i) => ({
      id,
      score: ranking.scores[i],
    }));
  }

  private async resync(): Promise<void> {
    const session = this.state.session;
    if (!session) return;
    try {
      const summary = await this.api.sessionSummary(session.sessionId);
      this.state = resynced(this.state, summary);
      if (summary.stopped) {
        await this.loadFinalRanking(session.sessionId);
      }
    } catch (err) {
      this.state = { ...this.state, error: describe(err) };
    }
    this.render();
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.status === 409) {
      return `The session moved on (another submission won): ${err.message}`;
    }
    return err.message;
  }
  return String(err);
}

export function bootstrap(): void {
  const root = document.getElementById("app");
  if (!root) return;
  const app = new ConsoleApp(root, new ApiClient(""));
  void app.start();
}
