/** Public entry points for the parse-to-clause adapter. */

export { parseConllu } from "./conllu";
export { parseCollapsed } from "./collapsed";
export { extractClauses, formatClauses } from "./clauses";
export { DEFAULT_RULES, loadRules } from "./rules";
export type { Rules } from "./rules";
export { WarningLog } from "./types";
export type {
  ArgType,
  Clause,
  ClauseArg,
  Edge,
  ParsedDocument,
  Sentence,
  Token,
} from "./types";
