// Shapes returned by the service; the UI renders these verbatim and never
// derives its own counters.

export type BatchSlot = {
  index: number;
  image_id: string;
};

export type HistoryEntry = {
  iteration: number;
  best_image_id: string;
};

export type SessionPayload = {
  session_id: string;
  generator: string;
  config: {
    mu: number;
    lam: number;
    mutation_rate: number | null;
    recombination: string;
  };
  seed: number;
  iteration: number;
  mu: number;
  lam: number;
  batch: BatchSlot[];
  best_image_id: string | null;
  images_shown: number;
  unique_images: number;
  history: HistoryEntry[];
};

export type BestPayload = {
  session_id: string;
  iteration: number;
  image_id: string;
  latent: number[];
  images_shown: number;
  unique_images: number;
};

export type Pick = {
  index: number;
  count: number;
};
