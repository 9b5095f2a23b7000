/** Payload types of the retrieval server's JSON API. */

export interface CorpusSummary {
  n_patches: number;
  bands: number;
  patch_lines: number;
  patch_samples: number;
  kinds_available: string[];
}

export interface PatchInfo {
  id: number;
  category: number | null;
}

export interface RetrievedItem {
  id: number;
  thumbnail_url: string;
}

export interface RankingEntry {
  id: number;
  score: number;
}

export interface SessionConfig {
  kind: string;
  classifier: string;
  prototype_policy: string;
  criterion: string;
  scope: number;
}

export interface SessionCreated {
  session_id: string;
  iteration: number;
  retrieved: RetrievedItem[];
  stopped: boolean;
}

export interface FeedbackResponse {
  iteration: number;
  retrieved: RetrievedItem[];
  ranking_head: RankingEntry[];
  stopped: boolean;
  fallback: boolean;
}

export interface RankingResponse {
  ids: number[];
  scores: number[];
}

export interface SessionSummary {
  session_id: string;
  query_id: number;
  iteration: number;
  stopped: boolean;
  retrieved: RetrievedItem[];
  kind: string;
  classifier: string;
  criterion: string;
  prototype_policy: string;
}

export type Label = "relevant" | "non-relevant";
