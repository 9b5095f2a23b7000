/** Pure state machine for the labelling console.
 *
 * Submitting is only possible once every retrieved patch carries a
 * label, and the outgoing payload is exactly the user's toggles. All
 * transitions return fresh state; rendering and network effects live
 * elsewhere.
 */

import type {
  FeedbackResponse,
  Label,
  PatchInfo,
  RankingEntry,
  RetrievedItem,
  SessionConfig,
  SessionCreated,
} from "./types.js";

export type View = "browser" | "labeling" | "ranking";

export interface UiSessionState {
  sessionId: string;
  iteration: number;
  retrieved: RetrievedItem[];
  labels: Partial<Record<number, Label>>;
  rankingHead: RankingEntry[];
  stopped: boolean;
  submitting: boolean;
  needsResync: boolean;
  fallback: boolean;
}

export interface AppState {
  view: View;
  patches: PatchInfo[];
  config: SessionConfig;
  queryId: number | null;
  session: UiSessionState | null;
  error: string | null;
}

export const DEFAULT_CONFIG: SessionConfig = {
  kind: "spectral-spatial",
  classifier: "knn",
  prototype_policy: "online",
  criterion: "AL",
  scope: 10,
};

export function initialState(): AppState {
  return {
    view: "browser",
    patches: [],
    config: { ...DEFAULT_CONFIG },
    queryId: null,
    session: null,
    error: null,
  };
}

export function withPatches(state: AppState, patches: PatchInfo[]): AppState {
  return { ...state, patches };
}

export function withConfig(state: AppState, config: Partial<SessionConfig>): AppState {
  return { ...state, config: { ...state.config, ...config } };
}

export function selectQuery(state: AppState, queryId: number): AppState {
  return { ...state, queryId };
}

export function sessionStarted(state: AppState, created: SessionCreated): AppState {
  return {
    ...state,
    view: created.stopped ? "ranking" : "labeling",
    error: null,
    session: {
      sessionId: created.session_id,
      iteration: created.iteration,
      retrieved: created.retrieved,
      labels: {},
      rankingHead: [],
      stopped: created.stopped,
      submitting: false,
      needsResync: false,
      fallback: false,
    },
  };
}

export function toggleLabel(state: AppState, patchId: number, label: Label): AppState {
  const session = state.session;
  if (!session || session.stopped || session.submitting) return state;
  if (!session.retrieved.some((item) => item.id === patchId)) return state;
  return {
    ...state,
    session: { ...session, labels: { ...session.labels, [patchId]: label } },
  };
}

/** Submit is enabled exactly when every retrieved item is labelled. */
export function allLabeled(session: UiSessionState): boolean {
  return (
    session.retrieved.length > 0 &&
    session.retrieved.every((item) => session.labels[item.id] !== undefined)
  );
}

/** The payload a submit would send: precisely the toggles, or null when
 * the invariant is not met. */
export function pendingPayload(
  session: UiSessionState,
): Record<number, Label> | null {
  if (!allLabeled(session) || session.submitting || session.stopped) return null;
  const payload: Record<number, Label> = {};
  for (const item of session.retrieved) {
    payload[item.id] = session.labels[item.id] as Label;
  }
  return payload;
}

export function submitStarted(state: AppState): AppState {
  if (!state.session) return state;
  return { ...state, session: { ...state.session, submitting: true } };
}

export function feedbackApplied(state: AppState, response: FeedbackResponse): AppState {
  if (!state.session) return state;
  return {
    ...state,
    view: response.stopped ? "ranking" : "labeling",
    session: {
      ...state.session,
      iteration: response.iteration,
      retrieved: response.retrieved,
      labels: {},
      rankingHead: response.ranking_head,
      stopped: response.stopped,
      submitting: false,
      needsResync: false,
      fallback: response.fallback,
    },
  };
}

/** A conflict (stale iteration) or validation rejection surfaces as a
 * re-sync prompt; the pending toggles are kept for inspection. */
export function feedbackRejected(state: AppState, message: string): AppState {
  if (!state.session) return state;
  return {
    ...state,
    error: message,
    session: { ...state.session, submitting: false, needsResync: true },
  };
}

export function resynced(state: AppState, summary: {
  iteration: number;
  retrieved: RetrievedItem[];
  stopped: boolean;
}): AppState {
  if (!state.session) return state;
  return {
    ...state,
    error: null,
    view: summary.stopped ? "ranking" : "labeling",
    session: {
      ...state.session,
      iteration: summary.iteration,
      retrieved: summary.retrieved,
      labels: {},
      stopped: summary.stopped,
      submitting: false,
      needsResync: false,
    },
  };
}

export function backToBrowser(state: AppState): AppState {
  return { ...state, view: "browser", session: null, queryId: null, error: null };
}
