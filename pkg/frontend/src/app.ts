import { ConflictError, ServiceClient } from './client.js';
import {
  GridViewState,
  addPick,
  canSubmit,
  clearPicks,
  fromPayload,
  remainingPicks,
  removePick,
  toBallot,
} from './state.js';
import { BestPayload, SessionPayload } from './types.js';

export type ExportResult = {
  best: BestPayload;
  png: Uint8Array;
  latentJson: string;
};

export type AppHandle = {
  state: () => GridViewState;
  payload: () => SessionPayload;
  clickTile: (index: number) => void;
  unclickTile: (index: number) => void;
  clear: () => void;
  submit: () => Promise<void>;
  undo: () => Promise<void>;
  refresh: () => Promise<void>;
  exportBest: () => Promise<ExportResult>;
};

export type MountOptions = {
  generator?: string;
  preset?: string;
  seed?: number;
  sessionId?: string;
};

function maybeDownload(doc: Document, bytes: Uint8Array, name: string, mime: string): void {
  // Best effort: test DOMs may lack object URLs; the export result is
  // returned to the caller either way.
  try {
    const url = URL.createObjectURL(new Blob([bytes.slice().buffer], { type: mime }));
    const anchor = doc.createElement('a');
    anchor.href = url;
    anchor.download = name;
    anchor.click();
    URL.revokeObjectURL(url);
  } catch {
    /* ignore */
  }
}

export async function mountApp(
  root: HTMLElement,
  client: ServiceClient,
  options: MountOptions = {},
): Promise<AppHandle> {
  const doc = root.ownerDocument;
  let payload: SessionPayload;
  if (options.sessionId) {
    payload = await client.getSession(options.sessionId);
  } else {
    payload = await client.createSession(
      options.generator ?? 'mlp-d64-s32-seed0',
      options.preset ?? 'faces',
      options.seed ?? 0,
    );
  }
  let state = fromPayload(payload);
  let inflight = false;

  root.innerHTML = '';
  root.classList.add('app');

  const header = doc.createElement('header');
  const sessionLabel = doc.createElement('span');
  sessionLabel.className = 'session-label';
  const iterationLabel = doc.createElement('span');
  iterationLabel.className = 'iteration';
  const shownLabel = doc.createElement('span');
  shownLabel.className = 'images-shown';
  const picksLabel = doc.createElement('span');
  picksLabel.className = 'picks-left';
  header.append(sessionLabel, iterationLabel, shownLabel, picksLabel);

  const grid = doc.createElement('div');
  grid.className = 'grid';

  const controls = doc.createElement('div');
  controls.className = 'controls';
  const submitButton = doc.createElement('button');
  submitButton.className = 'submit';
  submitButton.textContent = 'submit picks';
  const clearButton = doc.createElement('button');
  clearButton.className = 'clear';
  clearButton.textContent = 'clear picks';
  const undoButton = doc.createElement('button');
  undoButton.className = 'undo';
  undoButton.textContent = 'undo';
  const exportButton = doc.createElement('button');
  exportButton.className = 'export';
  exportButton.textContent = 'export best';
  controls.append(submitButton, clearButton, undoButton, exportButton);

  const history = doc.createElement('div');
  history.className = 'history';

  const status = doc.createElement('p');
  status.className = 'status';

  root.append(header, grid, controls, history, status);

  function renderCounters(): void {
    sessionLabel.textContent = `session ${state.sessionId}`;
    iterationLabel.textContent = `iteration ${state.iteration}`;
    // shown verbatim from the service, never recomputed here
    shownLabel.textContent = `${state.imagesShown} images shown`;
    picksLabel.textContent = `${remainingPicks(state)} picks left`;
    submitButton.disabled = !canSubmit(state) || inflight;
    undoButton.disabled = inflight;
  }

  function renderBadges(): void {
    grid.querySelectorAll('.tile').forEach((tile, index) => {
      const badge = tile.querySelector('.badge') as HTMLElement;
      const count = state.pickCounts[index];
      badge.textContent = `×${count}`;
      badge.hidden = count === 0;
    });
    renderCounters();
  }

  function buildTile(imageId: string, index: number): HTMLElement {
    const tile = doc.createElement('figure');
    tile.className = index === 0 ? 'tile best' : 'tile';
    tile.dataset.index = String(index);

    const img = doc.createElement('img');
    img.src = client.imageUrl(imageId);
    img.alt = `candidate ${index}`;
    img.addEventListener('error', () => {
      if (tile.querySelector('.retry')) return;
      const retry = doc.createElement('button');
      retry.className = 'retry';
      retry.textContent = 'retry';
      retry.addEventListener('click', (event) => {
        event.stopPropagation();
        retry.remove();
        img.src = `${client.imageUrl(imageId)}?r=${Date.now()}`;
      });
      tile.append(retry);
    });

    const badge = doc.createElement('span');
    badge.className = 'badge';
    badge.hidden = true;

    tile.append(img, badge);
    if (index === 0) {
      const mark = doc.createElement('figcaption');
      mark.className = 'best-mark';
      mark.textContent = 'current best';
      tile.append(mark);
    }

    tile.addEventListener('click', () => {
      state = addPick(state, index);
      renderBadges();
    });
    tile.addEventListener('contextmenu', (event) => {
      event.preventDefault();
      state = removePick(state, index);
      renderBadges();
    });
    return tile;
  }

  function renderGrid(): void {
    grid.innerHTML = '';
    state.batchImageIds.forEach((imageId, index) => {
      grid.append(buildTile(imageId, index));
    });
    renderBadges();
  }

  function applyPayload(next: SessionPayload): void {
    payload = next;
    state = fromPayload(next);
    renderGrid();
  }

  function appendHistoryThumb(imageId: string, iteration: number): void {
    const thumb = doc.createElement('img');
    thumb.className = 'history-thumb';
    thumb.src = client.imageUrl(imageId);
    thumb.title = `elite of iteration ${iteration}`;
    history.append(thumb);
  }

  async function refresh(): Promise<void> {
    applyPayload(await client.getSession(state.sessionId));
    status.textContent = '';
  }

  async function submit(): Promise<void> {
    if (!canSubmit(state) || inflight) return;
    inflight = true;
    renderCounters();
    const previousElite = state.batchImageIds[0];
    const previousIteration = state.iteration;
    try {
      const next = await client.submitSelection(state.sessionId, toBallot(state), state.iteration);
      appendHistoryThumb(previousElite, previousIteration);
      applyPayload(next);
      status.textContent = '';
    } catch (err) {
      if (err instanceof ConflictError) {
        // someone moved the session first; show where it actually is
        await refresh();
        status.textContent = 'selection conflicted; reloaded current state';
      } else {
        status.textContent = `submit failed: ${String(err)}`;
      }
    } finally {
      inflight = false;
      renderCounters();
    }
  }

  async function undo(): Promise<void> {
    if (inflight) return;
    inflight = true;
    renderCounters();
    try {
      const next = await client.undo(state.sessionId);
      history.lastElementChild?.remove();
      applyPayload(next);
      status.textContent = '';
    } catch (err) {
      status.textContent =
        err instanceof ConflictError ? 'nothing to undo' : `undo failed: ${String(err)}`;
    } finally {
      inflight = false;
      renderCounters();
    }
  }

  async function exportBest(): Promise<ExportResult> {
    const best = await client.getBest(state.sessionId);
    const png = await client.imageBytes(best.image_id);
    const latentJson = JSON.stringify(best, null, 2) + '\n';
    maybeDownload(doc, png, `${best.image_id}.png`, 'image/png');
    maybeDownload(doc, new TextEncoder().encode(latentJson), `${best.image_id}.json`, 'application/json');
    return { best, png, latentJson };
  }

  submitButton.addEventListener('click', () => void submit());
  clearButton.addEventListener('click', () => {
    state = clearPicks(state);
    renderBadges();
  });
  undoButton.addEventListener('click', () => void undo());
  exportButton.addEventListener('click', () => {
    exportBest().catch((err) => {
      status.textContent =
        err instanceof ConflictError ? 'no completed iteration yet' : `export failed: ${String(err)}`;
    });
  });

  renderGrid();

  return {
    state: () => state,
    payload: () => payload,
    clickTile: (index) => {
      state = addPick(state, index);
      renderBadges();
    },
    unclickTile: (index) => {
      state = removePick(state, index);
      renderBadges();
    },
    clear: () => {
      state = clearPicks(state);
      renderBadges();
    },
    submit,
    undo,
    refresh,
    exportBest,
  };
}

/** Browser entry point: wires the query string to mountApp. */
export async function boot(): Promise<AppHandle> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get('base') ?? window.location.origin;
  const client = new ServiceClient(base);
  const root = document.getElementById('app');
  if (!root) throw new Error('missing #app element');
  const handle = await mountApp(root, client, {
    generator: params.get('generator') ?? undefined,
    preset: params.get('preset') ?? undefined,
    seed: params.has('seed') ? Number(params.get('seed')) : undefined,
    sessionId: params.get('session') ?? undefined,
  });
  if (!params.get('session')) {
    params.set('session', handle.state().sessionId);
    window.history.replaceState(null, '', `${window.location.pathname}?${params}`);
  }
  return handle;
}
