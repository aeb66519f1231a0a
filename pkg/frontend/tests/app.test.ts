// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from 'vitest';

import { mountApp } from '../src/app.js';
import { ServiceClient } from '../src/client.js';
import { SessionPayload } from '../src/types.js';

const PNG_BYTES = new Uint8Array([0x89, 0x50, 0x4e, 0x47, 1, 2, 3, 4]);

// Minimal in-memory stand-in for the service, driven through fetch so the
// real client code path is exercised.
function fakeService(batchSize = 28, mu = 5) {
  const state = {
    iteration: 0,
    history: [] as { iteration: number; best_image_id: string }[],
  };
  const batchIds = (iter: number) =>
    Array.from({ length: batchSize }, (_, i) => `it${iter}-img${i}`);

  function payload(): SessionPayload {
    return {
      session_id: 'fake00',
      generator: 'mlp-d64-s32-seed0',
      config: { mu, lam: batchSize - 1, mutation_rate: null, recombination: 'average' },
      seed: 0,
      iteration: state.iteration,
      mu,
      lam: batchSize - 1,
      batch: batchIds(state.iteration).map((image_id, index) => ({ index, image_id })),
      best_image_id: state.history.length
        ? state.history[state.history.length - 1].best_image_id
        : null,
      images_shown: state.iteration * batchSize,
      unique_images: state.iteration === 0 ? 0 : 1 + state.iteration * (batchSize - 1),
      history: state.history.slice(),
    };
  }

  function json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { 'content-type': 'application/json' },
    });
  }

  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^http:\/\/[^/]+/, '');
    if (path === '/sessions' && init?.method === 'POST') {
      return json(201, payload());
    }
    if (path === '/sessions/fake00') {
      return json(200, payload());
    }
    if (path === '/sessions/fake00/selection') {
      const body = JSON.parse(String(init?.body));
      if (body.iteration !== state.iteration) {
        return json(409, {
          detail: { error: 'iteration conflict', iteration: state.iteration },
        });
      }
      const best = `it${state.iteration}-img${body.picks[0].index}`;
      state.history.push({ iteration: state.iteration, best_image_id: best });
      state.iteration += 1;
      return json(200, payload());
    }
    if (path === '/sessions/fake00/undo') {
      if (state.iteration < 1) return json(409, { detail: 'nothing to undo' });
      state.iteration -= 1;
      state.history.pop();
      return json(200, payload());
    }
    if (path === '/sessions/fake00/best') {
      if (state.iteration < 1) return json(409, { detail: 'no completed iteration yet' });
      return json(200, {
        session_id: 'fake00',
        iteration: state.iteration,
        image_id: state.history[state.history.length - 1].best_image_id,
        latent: [0.25, -1.5, 0.0],
        images_shown: state.iteration * batchSize,
        unique_images: 1 + state.iteration * (batchSize - 1),
      });
    }
    if (/^\/images\/.*\.png/.test(path)) {
      return new Response(PNG_BYTES.slice().buffer, {
        status: 200,
        headers: { 'content-type': 'image/png' },
      });
    }
    return json(404, { detail: `unknown path ${path}` });
  };

  return { state, fetchFn };
}

function setup(batchSize = 28, mu = 5) {
  const service = fakeService(batchSize, mu);
  const client = new ServiceClient('http://fake', service.fetchFn);
  const root = document.createElement('div');
  document.body.innerHTML = '';
  document.body.append(root);
  return { service, client, root };
}

function tiles(root: HTMLElement): HTMLElement[] {
  return Array.from(root.querySelectorAll('.tile'));
}

function text(root: HTMLElement, selector: string): string {
  return root.querySelector(selector)?.textContent ?? '';
}

describe('grid rendering', () => {
  it('shows all 28 tiles in batch order with the elite marked', async () => {
    const { client, root } = setup();
    await mountApp(root, client);
    const ts = tiles(root);
    expect(ts).toHaveLength(28);
    expect(ts[0].classList.contains('best')).toBe(true);
    expect(ts[0].querySelector('.best-mark')?.textContent).toBe('current best');
    expect(ts[1].classList.contains('best')).toBe(false);
    const img = ts[9].querySelector('img') as HTMLImageElement;
    expect(img.src).toContain('/images/it0-img9.png');
  });

  it('starts with zero picks and submit disabled', async () => {
    const { client, root } = setup();
    await mountApp(root, client);
    const submit = root.querySelector('.submit') as HTMLButtonElement;
    expect(submit.disabled).toBe(true);
    expect(text(root, '.picks-left')).toBe('5 picks left');
    expect(text(root, '.images-shown')).toBe('0 images shown');
    for (const tile of tiles(root)) {
      expect((tile.querySelector('.badge') as HTMLElement).hidden).toBe(true);
    }
  });

  it('adds a retry affordance when a tile image fails', async () => {
    const { client, root } = setup();
    await mountApp(root, client);
    const tile = tiles(root)[4];
    const img = tile.querySelector('img') as HTMLImageElement;
    const srcBefore = img.src;
    img.dispatchEvent(new Event('error'));
    const retry = tile.querySelector('.retry') as HTMLButtonElement;
    expect(retry).not.toBeNull();
    retry.click();
    expect(tile.querySelector('.retry')).toBeNull();
    expect(img.src).not.toBe(srcBefore);
    expect(img.src).toContain('/images/it0-img4.png');
  });
});

describe('picking via clicks', () => {
  it('click adds a vote, right-click removes it', async () => {
    const { client, root } = setup();
    await mountApp(root, client);
    const tile = tiles(root)[3];
    tile.click();
    tile.click();
    const badge = tile.querySelector('.badge') as HTMLElement;
    expect(badge.hidden).toBe(false);
    expect(badge.textContent).toBe('×2');
    expect(text(root, '.picks-left')).toBe('3 picks left');

    tile.dispatchEvent(new MouseEvent('contextmenu', { bubbles: true, cancelable: true }));
    expect(badge.textContent).toBe('×1');
    expect(text(root, '.picks-left')).toBe('4 picks left');
  });

  it('caps total votes at mu', async () => {
    const { client, root } = setup();
    await mountApp(root, client);
    const tile = tiles(root)[6];
    for (let i = 0; i < 9; i++) tile.click();
    expect((tile.querySelector('.badge') as HTMLElement).textContent).toBe('×5');
    expect(text(root, '.picks-left')).toBe('0 picks left');
    tiles(root)[7].click();
    expect((tiles(root)[7].querySelector('.badge') as HTMLElement).hidden).toBe(true);
  });

  it('clear resets the ballot', async () => {
    const { client, root } = setup();
    const handle = await mountApp(root, client);
    tiles(root)[1].click();
    tiles(root)[2].click();
    (root.querySelector('.clear') as HTMLButtonElement).click();
    expect(handle.state().pickCounts.every((c) => c === 0)).toBe(true);
    expect((root.querySelector('.submit') as HTMLButtonElement).disabled).toBe(true);
  });
});

describe('submission round', () => {
  it('renders the next batch and appends the elite thumbnail', async () => {
    const { client, root } = setup();
    const handle = await mountApp(root, client);
    handle.clickTile(2);
    handle.clickTile(2);
    handle.clickTile(11);
    await handle.submit();

    expect(handle.state().iteration).toBe(1);
    expect(text(root, '.iteration')).toBe('iteration 1');
    expect(text(root, '.images-shown')).toBe('28 images shown');
    const img = tiles(root)[0].querySelector('img') as HTMLImageElement;
    expect(img.src).toContain('it1-img0');
    // ballot is spent; fresh grid cannot resubmit
    expect((root.querySelector('.submit') as HTMLButtonElement).disabled).toBe(true);

    const thumbs = root.querySelectorAll('.history-thumb');
    expect(thumbs).toHaveLength(1);
    expect((thumbs[0] as HTMLImageElement).src).toContain('it0-img0');
  });

  it('reloads current state on an iteration conflict', async () => {
    const { service, client, root } = setup();
    const handle = await mountApp(root, client);
    // another tab advances the session behind our back
    service.state.history.push({ iteration: 0, best_image_id: 'it0-img5' });
    service.state.iteration = 1;

    handle.clickTile(4);
    await handle.submit();
    expect(text(root, '.status')).toContain('conflict');
    expect(handle.state().iteration).toBe(1);
    expect(tiles(root)[3].querySelector('img')?.src).toContain('it1-img3');
    expect(root.querySelectorAll('.history-thumb')).toHaveLength(0);
  });

  it('undo restores the previous grid and trims the strip', async () => {
    const { client, root } = setup();
    const handle = await mountApp(root, client);
    handle.clickTile(8);
    await handle.submit();
    expect(root.querySelectorAll('.history-thumb')).toHaveLength(1);

    await handle.undo();
    expect(handle.state().iteration).toBe(0);
    expect(tiles(root)[8].querySelector('img')?.src).toContain('it0-img8');
    expect(root.querySelectorAll('.history-thumb')).toHaveLength(0);
    expect(text(root, '.images-shown')).toBe('0 images shown');
  });

  it('reports undo at iteration zero without crashing', async () => {
    const { client, root } = setup();
    const handle = await mountApp(root, client);
    await handle.undo();
    expect(text(root, '.status')).toBe('nothing to undo');
    expect(handle.state().iteration).toBe(0);
  });
});

describe('export', () => {
  it('returns the best payload and its image bytes verbatim', async () => {
    const { client, root } = setup();
    const handle = await mountApp(root, client);
    handle.clickTile(5);
    await handle.submit();

    const result = await handle.exportBest();
    expect(result.best.image_id).toBe('it0-img5');
    expect(Array.from(result.png)).toEqual(Array.from(PNG_BYTES));
    const parsed = JSON.parse(result.latentJson);
    expect(parsed).toEqual(result.best);
    expect(parsed.latent).toEqual([0.25, -1.5, 0.0]);
  });
});
