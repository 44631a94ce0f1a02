/** Payload shapes of the entityscout JSON API (schema version 1). */

export interface TokenPayload {
  surface: string;
  score: number;
}

export interface ContextPayload {
  doc_id: string;
  before: string;
  after: string;
}

export interface SentencePayload {
  sentence_id: number;
  tokens: TokenPayload[];
  context: ContextPayload;
}

export interface LabelsResponse {
  round: number;
  model_size: number;
  top_entities: string[];
}

export interface SessionSnapshot {
  session_id: string;
  class_name: string;
  strategy: string;
  round: number;
  labeled_sentences: number;
  labeled_tokens: number;
  model_size: number;
  pending: SentencePayload | null;
  complete: boolean;
}

export interface IndexInfo {
  index_id: string;
  counts: Record<string, number>;
  backend: string;
}

export interface SessionSetup {
  indexId: string;
  className: string;
  strategy: string;
  seedQuery: string;
  seed: number;
}

export const STRATEGIES = ["interactive", "docrank", "random_pool", "unsure"] as const;
