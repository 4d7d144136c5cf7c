/**
 * Reader for collapsed-dependency dumps.
 *
 * This format carries no token table, only one edge per line:
 *
 *   label<TAB>head<TAB>dep
 *
 * where each endpoint is "lemma:pos:index". The index and POS are
 * taken from the right, so lemmas may themselves contain colons.
 * Document boundaries use the same "# newdoc id = X" comment as the
 * CoNLL-U reader and blank lines separate sentences. The token list of
 * each sentence is reconstructed from the edge endpoints.
 */

import { Edge, ParsedDocument, Token, WarningLog } from "./types";

const NEWDOC = /^#\s*newdoc(?:\s+id\s*=\s*(.*))?\s*$/;

interface ParsedNode {
  lemma: string;
  pos: string;
  index: number;
}

function parseNode(field: string): ParsedNode | null {
  const lastColon = field.lastIndexOf(":");
  if (lastColon <= 0) {
    return null;
  }
  const indexPart = field.slice(lastColon + 1);
  if (!/^\d+$/.test(indexPart)) {
    return null;
  }
  const prevColon = field.lastIndexOf(":", lastColon - 1);
  if (prevColon <= 0) {
    return null;
  }
  const lemma = field.slice(0, prevColon);
  const pos = field.slice(prevColon + 1, lastColon);
  if (lemma === "") {
    return null;
  }
  return { lemma, pos, index: parseInt(indexPart, 10) };
}

/** Parse collapsed-dependency text into documents. */
export function parseCollapsed(text: string, warnings: WarningLog): ParsedDocument[] {
  const docs: ParsedDocument[] = [];
  let synthCount = 0;
  let current: ParsedDocument | null = null;
  let nodes = new Map<number, Token>();
  let edges: Edge[] = [];

  const openDoc = (id: string | null): void => {
    if (id === null || id === "") {
      synthCount += 1;
      id = `doc-${String(synthCount).padStart(4, "0")}`;
    }
    current = { docId: id, sentences: [] };
    docs.push(current);
  };

  const recordNode = (node: ParsedNode): void => {
    const existing = nodes.get(node.index);
    if (existing === undefined) {
      nodes.set(node.index, {
        index: node.index,
        form: node.lemma,
        lemma: node.lemma,
        upos: node.pos,
      });
    }
  };

  const flushSentence = (): void => {
    if (nodes.size === 0) {
      return;
    }
    if (current === null) {
      openDoc(null);
    }
    const tokens = Array.from(nodes.values()).sort((a, b) => a.index - b.index);
    current!.sentences.push({ tokens, edges });
    nodes = new Map();
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
    if (cols.length !== 3) {
      warnings.add(`line ${lineNo}: expected 3 tab-separated fields, got ${cols.length}`);
      continue;
    }
    const [label, headField, depField] = cols;
    const head = parseNode(headField);
    const dep = parseNode(depField);
    if (label === "" || head === null || dep === null) {
      warnings.add(`line ${lineNo}: unparseable edge "${line}"`);
      continue;
    }
    recordNode(head);
    recordNode(dep);
    edges.push({ label, head: head.index, dep: dep.index });
  }
  flushSentence();
  return docs;
}
