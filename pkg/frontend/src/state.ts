import { Pick, SessionPayload } from './types.js';

// Pure view model for the selection grid. Pick counts stay within
// 0 <= count, sum(counts) <= mu; submission needs at least one pick.

export type GridViewState = {
  sessionId: string;
  iteration: number;
  mu: number;
  batchImageIds: string[];
  pickCounts: number[];
  imagesShown: number;
  bestImageId: string | null;
};

export function fromPayload(payload: SessionPayload): GridViewState {
  return {
    sessionId: payload.session_id,
    iteration: payload.iteration,
    mu: payload.mu,
    batchImageIds: payload.batch.map((slot) => slot.image_id),
    pickCounts: payload.batch.map(() => 0),
    imagesShown: payload.images_shown,
    bestImageId: payload.best_image_id,
  };
}

export function totalPicks(state: GridViewState): number {
  return state.pickCounts.reduce((a, b) => a + b, 0);
}

export function remainingPicks(state: GridViewState): number {
  return state.mu - totalPicks(state);
}

export function canSubmit(state: GridViewState): boolean {
  return totalPicks(state) >= 1;
}

/** One more vote for a tile; a no-op once the mu-vote budget is spent. */
export function addPick(state: GridViewState, index: number): GridViewState {
  if (index < 0 || index >= state.pickCounts.length) {
    throw new Error(`tile index ${index} out of range`);
  }
  if (remainingPicks(state) <= 0) {
    return state;
  }
  const pickCounts = state.pickCounts.slice();
  pickCounts[index] += 1;
  return { ...state, pickCounts };
}

/** Take one vote back from a tile; a no-op at zero. */
export function removePick(state: GridViewState, index: number): GridViewState {
  if (index < 0 || index >= state.pickCounts.length) {
    throw new Error(`tile index ${index} out of range`);
  }
  if (state.pickCounts[index] === 0) {
    return state;
  }
  const pickCounts = state.pickCounts.slice();
  pickCounts[index] -= 1;
  return { ...state, pickCounts };
}

export function clearPicks(state: GridViewState): GridViewState {
  return { ...state, pickCounts: state.pickCounts.map(() => 0) };
}

/** Ballot for POST /sessions/{id}/selection: picked tiles in batch order. */
export function toBallot(state: GridViewState): Pick[] {
  const picks: Pick[] = [];
  state.pickCounts.forEach((count, index) => {
    if (count > 0) {
      picks.push({ index, count });
    }
  });
  return picks;
}
