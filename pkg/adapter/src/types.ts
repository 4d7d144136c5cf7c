/**
 * Shared shapes for the parse readers and the clause extractor.
 *
 * A parsed document is a list of sentences; each sentence carries its
 * tokens plus an explicit edge list. CoNLL-U trees give every token at
 * most one incoming edge, but collapsed-dependency graphs may attach a
 * token under several governors, so edges live outside the tokens.
 */

export type ArgType = "SUBJ" | "OBJ" | "PREP";

export interface Token {
  /** 1-based position within the sentence. */
  index: number;
  form: string;
  lemma: string;
  /** Universal POS tag, or "" when the input leaves it unspecified. */
  upos: string;
}

export interface Edge {
  /** Dependency label exactly as read, e.g. "nsubj", "obl:agent", "prep_to". */
  label: string;
  /** Token index of the governor. */
  head: number;
  /** Token index of the dependent. */
  dep: number;
}

export interface Sentence {
  tokens: Token[];
  edges: Edge[];
}

export interface ParsedDocument {
  docId: string;
  sentences: Sentence[];
}

export interface ClauseArg {
  argType: ArgType;
  headLemma: string;
  depLabel: string;
  caseframe: string;
}

export interface Clause {
  docId: string;
  sentenceIndex: number;
  clauseIndex: number;
  eventHeadLemma: string;
  args: ClauseArg[];
}

/** Collects skip diagnostics so callers can report and count them. */
export class WarningLog {
  readonly messages: string[] = [];

  add(message: string): void {
    this.messages.push(message);
  }

  get count(): number {
    return this.messages.length;
  }
}
