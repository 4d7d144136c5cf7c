/**
 * Clause extraction: turn dependency parses into flat clause records,
 * one per event head, each carrying its classified arguments.
 *
 * An event head is a main verb (auxiliaries and copulas excluded), a
 * noun from the event lexicon, or the predicate of a copular clause.
 * Arguments are the head's direct dependents whose label falls in the
 * subject table, the object table, or a prepositional pattern; all
 * other dependents are ignored.
 */

import { Rules } from "./rules";
import {
  ArgType,
  Clause,
  ClauseArg,
  ParsedDocument,
  Sentence,
  Token,
  WarningLog,
} from "./types";

/** Labels whose dependent is a copula or auxiliary, never an event head. */
const NON_HEAD_LABELS = new Set(["cop", "aux", "aux_pass", "auxpass"]);

function normalizeLabel(label: string): string {
  return label.replace(/:/g, "_");
}

function isVerbTag(upos: string): boolean {
  return upos === "VERB" || upos.startsWith("VB");
}

function isNounTag(upos: string): boolean {
  return upos === "NOUN" || upos === "PROPN" || upos.startsWith("NN");
}

/** Find the event-head token indices of one sentence, in token order. */
function findHeads(sentence: Sentence, rules: Rules): number[] {
  const nonHead = new Set<number>();
  const copPredicates = new Set<number>();
  for (const edge of sentence.edges) {
    const norm = normalizeLabel(edge.label);
    if (NON_HEAD_LABELS.has(norm)) {
      nonHead.add(edge.dep);
      if (norm === "cop") {
        copPredicates.add(edge.head);
      }
    }
  }
  const heads = new Set<number>();
  for (const token of sentence.tokens) {
    if (nonHead.has(token.index)) {
      continue;
    }
    if (isVerbTag(token.upos)) {
      heads.add(token.index);
    } else if (
      isNounTag(token.upos) &&
      rules.event_nouns.includes(token.lemma.toLowerCase())
    ) {
      heads.add(token.index);
    } else if (rules.copula_as_head && copPredicates.has(token.index)) {
      heads.add(token.index);
    }
  }
  return Array.from(heads).sort((a, b) => a - b);
}

interface Classified {
  argType: ArgType;
  depLabel: string;
}

/**
 * Decide whether a dependency edge names an argument and, if so, which
 * kind. Universal Dependencies oblique/nominal modifiers are folded
 * into prepositional labels using their case marker; already-collapsed
 * "prep_*" labels pass through unchanged.
 */
function classifyArg(
  norm: string,
  depIndex: number,
  sentence: Sentence,
  rules: Rules,
): Classified | null {
  if (rules.subj_labels.includes(norm)) {
    return { argType: "SUBJ", depLabel: norm };
  }
  if (rules.obj_labels.includes(norm)) {
    return { argType: "OBJ", depLabel: norm };
  }
  if (norm === "obl" || norm === "nmod") {
    const markers: { index: number; lemma: string }[] = [];
    for (const edge of sentence.edges) {
      if (edge.head === depIndex && normalizeLabel(edge.label) === "case") {
        const tok = tokenAt(sentence, edge.dep);
        if (tok !== undefined) {
          markers.push({ index: edge.dep, lemma: tok.lemma.toLowerCase() });
        }
      }
    }
    if (markers.length === 0) {
      return null;
    }
    markers.sort((a, b) => a.index - b.index);
    const label = "prep_" + markers.map((m) => m.lemma).join("_");
    return { argType: "PREP", depLabel: label };
  }
  for (const prefix of rules.prep_label_prefixes) {
    if (norm.startsWith(prefix) && norm.length > prefix.length) {
      return { argType: "PREP", depLabel: norm };
    }
  }
  return null;
}

function tokenAt(sentence: Sentence, index: number): Token | undefined {
  return sentence.tokens.find((t) => t.index === index);
}

/** Extract clause records from parsed documents. */
export function extractClauses(
  docs: ParsedDocument[],
  rules: Rules,
  warnings: WarningLog,
): Clause[] {
  const clauses: Clause[] = [];
  for (const doc of docs) {
    let clauseIndex = 0;
    for (let sentIdx = 0; sentIdx < doc.sentences.length; sentIdx++) {
      const sentence = doc.sentences[sentIdx];
      for (const headIndex of findHeads(sentence, rules)) {
        const headToken = tokenAt(sentence, headIndex);
        if (headToken === undefined) {
          warnings.add(
            `${doc.docId} sentence ${sentIdx}: edge references missing token ${headIndex}`,
          );
          continue;
        }
        const args: ClauseArg[] = [];
        const deps = sentence.edges
          .filter((e) => e.head === headIndex)
          .sort((a, b) => a.dep - b.dep);
        for (const edge of deps) {
          const depToken = tokenAt(sentence, edge.dep);
          if (depToken === undefined) {
            warnings.add(
              `${doc.docId} sentence ${sentIdx}: edge references missing token ${edge.dep}`,
            );
            continue;
          }
          const classified = classifyArg(
            normalizeLabel(edge.label),
            edge.dep,
            sentence,
            rules,
          );
          if (classified === null) {
            continue;
          }
          args.push({
            argType: classified.argType,
            headLemma: depToken.lemma,
            depLabel: classified.depLabel,
            caseframe: `${headToken.lemma}>${classified.depLabel}`,
          });
        }
        clauses.push({
          docId: doc.docId,
          sentenceIndex: sentIdx,
          clauseIndex,
          eventHeadLemma: headToken.lemma,
          args,
        });
        clauseIndex += 1;
      }
    }
  }
  return clauses;
}

/**
 * Serialize clauses as JSON lines in the field order the consumer's
 * corpus loader documents. Returns "" for an empty clause list,
 * otherwise every line including the last ends with "\n".
 */
export function formatClauses(clauses: Clause[]): string {
  const lines = clauses.map((clause) =>
    JSON.stringify({
      doc_id: clause.docId,
      sentence_index: clause.sentenceIndex,
      clause_index: clause.clauseIndex,
      event_head_lemma: clause.eventHeadLemma,
      args: clause.args.map((arg) => ({
        arg_type: arg.argType,
        head_lemma: arg.headLemma,
        dep_label: arg.depLabel,
        caseframe: arg.caseframe,
      })),
    }),
  );
  return lines.length === 0 ? "" : lines.join("\n") + "\n";
}
