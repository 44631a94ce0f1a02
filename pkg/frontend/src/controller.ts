/** Session flow state machine. Renders-from-server-state only: every
 * field below is copied out of a response; nothing is predicted locally,
 * and the next sentence appears only after the server answers. */

import { ApiClient, ApiError, ConflictError } from "./api.js";
import type { SentencePayload, SessionSetup } from "./types.js";
import { STRATEGIES } from "./types.js";

export type Phase =
  | "setup"
  | "busy"
  | "labeling"
  | "complete"
  | "conflict"
  | "error";

export interface SentenceView {
  sentenceId: number;
  tokens: { surface: string; score: number }[];
  toggles: boolean[];
  confirmed: boolean;
  context: { docId: string; before: string; after: string };
}

const ENTITY_PANEL_LIMIT = 20;

export function validateSetup(setup: SessionSetup): string | null {
  if (!setup.indexId) return "choose an index";
  if (!setup.className.trim()) return "class name must not be empty";
  if (!(STRATEGIES as readonly string[]).includes(setup.strategy))
    return `strategy must be one of ${STRATEGIES.join(", ")}`;
  if (!setup.seedQuery.trim()) return "seed query must not be empty";
  return null;
}

export class SessionController {
  phase: Phase = "setup";
  sessionId: string | null = null;
  sentence: SentenceView | null = null;
  entities: string[] = [];
  round = 0;
  labeledSentences = 0;
  labeledTokens = 0;
  modelSize = 0;
  /** entity-panel size after each submit, for the progress sparkline */
  entityGrowth: number[] = [];
  message: string | null = null;
  onChange: () => void = () => {};

  constructor(private api: ApiClient) {}

  private update(mut: () => void): void {
    mut();
    this.onChange();
  }

  exportUrl(): string | null {
    return this.sessionId ? this.api.exportUrl(this.sessionId) : null;
  }

  get canSubmit(): boolean {
    return this.phase === "labeling" && this.sentence !== null && this.sentence.confirmed;
  }

  async start(setup: SessionSetup): Promise<void> {
    const problem = validateSetup(setup);
    if (problem) {
      this.update(() => {
        this.message = problem;
      });
      return;
    }
    this.update(() => {
      this.phase = "busy";
      this.message = null;
    });
    try {
      this.sessionId = await this.api.createSession(setup);
      await this.fetchNext();
    } catch (err) {
      this.failWith(err);
    }
  }

  async fetchNext(): Promise<void> {
    if (!this.sessionId) return;
    this.update(() => {
      this.phase = "busy";
    });
    try {
      const payload = await this.api.nextSentence(this.sessionId);
      this.update(() => {
        if (payload === null) {
          this.phase = "complete";
          this.sentence = null;
        } else {
          this.adoptSentence(payload);
        }
      });
    } catch (err) {
      this.failWith(err);
    }
  }

  private adoptSentence(payload: SentencePayload): void {
    this.sentence = {
      sentenceId: payload.sentence_id,
      tokens: payload.tokens.map((t) => ({ surface: t.surface, score: t.score })),
      toggles: payload.tokens.map(() => false),
      confirmed: false,
      context: {
        docId: payload.context.doc_id,
        before: payload.context.before,
        after: payload.context.after,
      },
    };
    this.phase = "labeling";
  }

  toggleToken(i: number): void {
    const s = this.sentence;
    if (this.phase !== "labeling" || !s || i < 0 || i >= s.toggles.length) return;
    this.update(() => {
      s.toggles[i] = !s.toggles[i];
    });
  }

  setConfirmed(value: boolean): void {
    if (!this.sentence) return;
    const s = this.sentence;
    this.update(() => {
      s.confirmed = value;
    });
  }

  async submit(): Promise<void> {
    if (!this.canSubmit || !this.sessionId || !this.sentence) return;
    const { sentenceId, toggles } = this.sentence;
    this.update(() => {
      this.phase = "busy";
    });
    try {
      const result = await this.api.submitLabels(this.sessionId, sentenceId, toggles);
      // the entity panel always reflects GET /entities, not the preview
      const entities =
        result.model_size > 0
          ? await this.api.entities(this.sessionId, ENTITY_PANEL_LIMIT)
          : [];
      this.update(() => {
        this.round = result.round;
        this.modelSize = result.model_size;
        this.labeledSentences += 1;
        this.labeledTokens += toggles.length;
        this.entities = entities;
        this.entityGrowth.push(entities.length);
        this.sentence = null;
      });
      await this.fetchNext();
    } catch (err) {
      this.failWith(err);
    }
  }

  /** After a 409 (another tab advanced the session, or a refresh raced a
   * submit): re-adopt the server's snapshot instead of local state. */
  async refreshSession(): Promise<void> {
    if (!this.sessionId) return;
    this.update(() => {
      this.phase = "busy";
    });
    try {
      const state = await this.api.sessionState(this.sessionId);
      const entities =
        state.model_size > 0
          ? await this.api.entities(this.sessionId, ENTITY_PANEL_LIMIT)
          : [];
      this.update(() => {
        this.round = state.round;
        this.modelSize = state.model_size;
        this.labeledSentences = state.labeled_sentences;
        this.labeledTokens = state.labeled_tokens;
        this.entities = entities;
        this.message = null;
        if (state.complete) {
          this.phase = "complete";
          this.sentence = null;
        } else if (state.pending) {
          this.adoptSentence(state.pending);
        } else {
          this.sentence = null;
        }
      });
      if (!this.sentence && this.phase !== "complete") await this.fetchNext();
    } catch (err) {
      this.failWith(err);
    }
  }

  private failWith(err: unknown): void {
    this.update(() => {
      if (err instanceof ConflictError) {
        this.phase = "conflict";
        this.message = `${err.message} — refresh the session to continue`;
      } else if (err instanceof ApiError) {
        this.phase = "error";
        this.message = err.message;
      } else {
        this.phase = "error";
        this.message = String(err);
      }
    });
  }
}
