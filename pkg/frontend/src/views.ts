/** HTML-string renderers for the console's four views. */

import type { AppState, UiSessionState } from "./state.js";
import { allLabeled } from "./state.js";
import type { RankingEntry } from "./types.js";

export const RANKING_STRIP_SIZE = 24;

const KINDS = ["spectral", "spectral-spatial", "ndd-avg", "ndd-byband"];
const CLASSIFIERS = ["knn", "svm"];
const POLICIES = ["online", "offline"];
const CRITERIA = ["BW", "AL", "BW+AL"];

function esc(value: unknown): string {
  return String(value).replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

function thumb(id: number): string {
  return `/patch/${id}/thumbnail`;
}

export function renderError(error: string | null): string {
  if (!error) return "";
  return `
    <div class="error-banner" data-test="error">
      ${esc(error)}
      <button data-action="resync">Re-sync session</button>
    </div>`;
}

export function renderBrowser(state: AppState): string {
  const cells = state.patches
    .map(
      (p) => `
      <figure class="cell ${state.queryId === p.id ? "selected" : ""}"
              data-action="pick-query" data-id="${p.id}">
        <img src="${thumb(p.id)}" alt="patch ${p.id}" loading="lazy">
        <figcaption>#${p.id}${p.category === null ? "" : ` · c${esc(p.category)}`}</figcaption>
      </figure>`,
    )
    .join("");
  return `
    <section class="browser">
      <h2>Corpus</h2>
      <p>Pick a query patch, choose the search setup, then start.</p>
      <div class="grid" data-test="corpus-grid">${cells}</div>
      ${renderQueryPicker(state)}
    </section>`;
}

function option(value: string, current: string): string {
  const selected = value === current ? " selected" : "";
  return `<option value="${esc(value)}"${selected}>${esc(value)}</option>`;
}

export function renderQueryPicker(state: AppState): string {
  const c = state.config;
  const ready = state.queryId !== null;
  return `
    <form class="picker" data-test="query-picker">
      <label>dissimilarity
        <select data-config="kind">${KINDS.map((k) => option(k, c.kind)).join("")}</select>
      </label>
      <label>classifier
        <select data-config="classifier">${CLASSIFIERS.map((k) => option(k, c.classifier)).join("")}</select>
      </label>
      <label>prototypes
        <select data-config="prototype_policy">${POLICIES.map((k) => option(k, c.prototype_policy)).join("")}</select>
      </label>
      <label>retrieval
        <select data-config="criterion">${CRITERIA.map((k) => option(k, c.criterion)).join("")}</select>
      </label>
      <span data-test="query-choice">${ready ? `query: #${state.queryId}` : "no query selected"}</span>
      <button type="button" data-action="start-session" ${ready ? "" : "disabled"}>
        Start search
      </button>
    </form>`;
}

export function renderLabelingGrid(session: UiSessionState): string {
  const cards = session.retrieved
    .map((item) => {
      const label = session.labels[item.id];
      return `
      <figure class="cell" data-test="retrieved" data-id="${item.id}">
        <img src="${esc(item.thumbnail_url)}" alt="patch ${item.id}">
        <figcaption>#${item.id}</figcaption>
        <div class="toggles">
          <button data-action="label" data-id="${item.id}" data-label="relevant"
                  class="${label === "relevant" ? "on" : ""}">relevant</button>
          <button data-action="label" data-id="${item.id}" data-label="non-relevant"
                  class="${label === "non-relevant" ? "on" : ""}">non-relevant</button>
        </div>
      </figure>`;
    })
    .join("");
  const enabled = allLabeled(session) && !session.submitting;
  return `
    <section class="labeling">
      <h2>Label the retrieved patches
        <span class="badge" data-test="iteration">iteration ${session.iteration}</span>
        ${session.fallback ? '<span class="badge warn">dissimilarity fallback</span>' : ""}
      </h2>
      <div class="grid">${cards}</div>
      <button data-action="submit-labels" data-test="submit" ${enabled ? "" : "disabled"}>
        ${session.submitting ? "Submitting…" : "Submit labels"}
      </button>
      ${renderRankingStrip(session.rankingHead)}
    </section>`;
}

export function renderRankingStrip(entries: RankingEntry[]): string {
  if (!entries.length) return "";
  const cells = entries
    .slice(0, RANKING_STRIP_SIZE)
    .map(
      (e) => `
      <figure class="cell small" data-test="strip-item" data-id="${e.id}">
        <img src="${thumb(e.id)}" alt="patch ${e.id}">
        <figcaption>#${e.id} · ${e.score.toFixed(3)}</figcaption>
      </figure>`,
    )
    .join("");
  return `
    <div class="strip">
      <h3>Current top of ranking</h3>
      <div class="grid" data-test="ranking-strip">${cells}</div>
    </div>`;
}

export function renderRankingView(session: UiSessionState,
                                  ranking: RankingEntry[]): string {
  const cells = ranking
    .map(
      (e) => `
      <figure class="cell small" data-test="final-item" data-id="${e.id}">
        <img src="${thumb(e.id)}" alt="patch ${e.id}">
        <figcaption>#${e.id} · ${e.score.toFixed(3)}</figcaption>
      </figure>`,
    )
    .join("");
  return `
    <section class="ranking">
      <h2>Final ranking
        <span class="badge" data-test="iteration">iteration ${session.iteration}</span>
        <span class="badge stop" data-test="stopped">session stopped</span>
      </h2>
      <div class="grid" data-test="final-ranking">${cells}</div>
      <button data-action="new-search">New search</button>
    </section>`;
}

export function renderApp(state: AppState, finalRanking: RankingEntry[]): string {
  const body =
    state.view === "browser" || !state.session
      ? renderBrowser(state)
      : state.view === "labeling"
        ? renderLabelingGrid(state.session)
        : renderRankingView(state.session, finalRanking);
  return `${renderError(state.error)}${body}`;
}
