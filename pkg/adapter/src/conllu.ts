/**
 * CoNLL-U reader.
 *
 * Understands the 10-column token format, "# newdoc" document
 * boundaries, blank-line sentence breaks, multiword-token ranges
 * (1-2), and empty nodes (3.1). Range and empty-node lines are not
 * syntactic words, so they are dropped without comment; anything else
 * that fails to parse is skipped with a warning so a corrupt corpus
 * surfaces in diagnostics instead of silently losing text.
 */

import { ParsedDocument, Sentence, WarningLog } from "./types";

const MWT_ID = /^\d+-\d+$/;
const EMPTY_NODE_ID = /^\d+\.\d+$/;
const NEWDOC = /^#\s*newdoc(?:\s+id\s*=\s*(.*))?\s*$/;

/**
 * Parse CoNLL-U text into documents. Documents without an explicit
 * "# newdoc id" comment receive synthesized ids; input with no newdoc
 * markers at all becomes a single synthesized document.
 */
export function parseConllu(text: string, warnings: WarningLog): ParsedDocument[] {
  const docs: ParsedDocument[] = [];
  let synthCount = 0;
  let current: ParsedDocument | null = null;
  let tokens: Sentence["tokens"] = [];
  let edges: Sentence["edges"] = [];

  const openDoc = (id: string | null): void => {
    if (id === null || id === "") {
      synthCount += 1;
      id = `doc-${String(synthCount).padStart(4, "0")}`;
    }
    current = { docId: id, sentences: [] };
    docs.push(current);
  };

  const flushSentence = (): void => {
    if (tokens.length === 0) {
      return;
    }
    if (current === null) {
      openDoc(null);
    }
    current!.sentences.push({ tokens, edges });
    tokens = [];
    edges = [];
  };

  const lines = text.split("\n");
  for (let lineNo = 1; lineNo <= lines.length; lineNo++) {
    const line = lines[lineNo - 1];
    if (line.trim() === "") {
      flushSentence();
      continue;
    }
    if (line.startsWith("#")) {
      const m = NEWDOC.exec(line);
      if (m) {
        flushSentence();
        openDoc(m[1] !== undefined ? m[1].trim() : null);
      }
      continue;
    }
    const cols = line.split("\t");
    if (cols.length !== 10) {
      warnings.add(`line ${lineNo}: expected 10 tab-separated columns, got ${cols.length}`);
      continue;
    }
    const [id, form, lemma, upos, , , head, deprel] = cols;
    if (MWT_ID.test(id) || EMPTY_NODE_ID.test(id)) {
      continue;
    }
    if (!/^\d+$/.test(id)) {
      warnings.add(`line ${lineNo}: unrecognized token id "${id}"`);
      continue;
    }
    if (!/^\d+$/.test(head)) {
      warnings.add(`line ${lineNo}: unrecognized head index "${head}"`);
      continue;
    }
    const index = parseInt(id, 10);
    tokens.push({
      index,
      form,
      lemma: lemma === "_" ? form : lemma,
      upos: upos === "_" ? "" : upos,
    });
    const headIndex = parseInt(head, 10);
    if (headIndex > 0) {
      edges.push({ label: deprel, head: headIndex, dep: index });
    }
  }
  flushSentence();
  return docs;
}
