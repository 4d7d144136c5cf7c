import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";
import { parseConllu } from "../src/conllu";
import { WarningLog } from "../src/types";

const FIXTURE = join(__dirname, "fixtures", "sample.conllu");

describe("parseConllu", () => {
  it("splits documents on newdoc comments and keeps their ids", () => {
    const warnings = new WarningLog();
    const docs = parseConllu(readFileSync(FIXTURE, "utf8"), warnings);
    expect(docs.map((d) => d.docId)).toEqual(["muc-0001", "muc-0002", "muc-0003"]);
    expect(docs.map((d) => d.sentences.length)).toEqual([4, 3, 3]);
    expect(warnings.count).toBe(0);
  });

  it("skips multiword-token ranges without warning", () => {
    const warnings = new WarningLog();
    const docs = parseConllu(readFileSync(FIXTURE, "utf8"), warnings);
    const cannot = docs[1].sentences[2];
    expect(cannot.tokens.map((t) => t.form)).toEqual([
      "Officials",
      "can",
      "not",
      "confirm",
      "the",
      "toll",
      ".",
    ]);
    expect(warnings.count).toBe(0);
  });

  it("skips empty nodes without warning", () => {
    const warnings = new WarningLog();
    const docs = parseConllu(readFileSync(FIXTURE, "utf8"), warnings);
    const chief = docs[2].sentences[0];
    expect(chief.tokens.map((t) => t.index)).toEqual([1, 2, 3, 4]);
    expect(warnings.count).toBe(0);
  });

  it("keeps the label, head, and dependent of every non-root edge", () => {
    const warnings = new WarningLog();
    const text = [
      "1\tMilitants\tmilitant\tNOUN\t_\t_\t2\tnsubj\t_\t_",
      "2\tbombed\tbomb\tVERB\t_\t_\t0\troot\t_\t_",
      "",
    ].join("\n");
    const docs = parseConllu(text, warnings);
    expect(docs).toHaveLength(1);
    const sent = docs[0].sentences[0];
    expect(sent.edges).toEqual([{ label: "nsubj", head: 2, dep: 1 }]);
  });

  it("falls back to the form when the lemma is underscore", () => {
    const warnings = new WarningLog();
    const text = "1\tBogota\t_\tPROPN\t_\t_\t0\troot\t_\t_\n";
    const docs = parseConllu(text, warnings);
    expect(docs[0].sentences[0].tokens[0].lemma).toBe("Bogota");
  });

  it("treats underscore UPOS as unspecified", () => {
    const warnings = new WarningLog();
    const text = "1\tword\tword\t_\t_\t_\t0\troot\t_\t_\n";
    const docs = parseConllu(text, warnings);
    expect(docs[0].sentences[0].tokens[0].upos).toBe("");
  });

  it("warns and skips rows with the wrong column count", () => {
    const warnings = new WarningLog();
    const text = [
      "1\tgood\tgood\tADJ\t_\t_\t0\troot\t_\t_",
      "2\tbroken row with spaces",
      "3\tfine\tfine\tADJ\t_\t_\t1\tconj\t_\t_",
      "",
    ].join("\n");
    const docs = parseConllu(text, warnings);
    expect(docs[0].sentences[0].tokens.map((t) => t.index)).toEqual([1, 3]);
    expect(warnings.count).toBe(1);
    expect(warnings.messages[0]).toContain("line 2");
  });

  it("warns and skips rows whose head is not an integer", () => {
    const warnings = new WarningLog();
    const text = "1\tword\tword\tNOUN\t_\t_\tx\tnsubj\t_\t_\n";
    const docs = parseConllu(text, warnings);
    expect(docs).toHaveLength(0);
    expect(warnings.count).toBe(1);
  });

  it("synthesizes ids for bare newdoc markers and headerless input", () => {
    const warnings = new WarningLog();
    const bare = [
      "# newdoc",
      "1\ta\ta\tDET\t_\t_\t0\troot\t_\t_",
      "",
      "# newdoc",
      "1\tb\tb\tNOUN\t_\t_\t0\troot\t_\t_",
      "",
    ].join("\n");
    expect(parseConllu(bare, warnings).map((d) => d.docId)).toEqual([
      "doc-0001",
      "doc-0002",
    ]);
    const headerless = "1\ta\ta\tDET\t_\t_\t0\troot\t_\t_\n";
    expect(parseConllu(headerless, new WarningLog())[0].docId).toBe("doc-0001");
  });

  it("flushes a trailing sentence without a final blank line", () => {
    const warnings = new WarningLog();
    const text = "1\tend\tend\tNOUN\t_\t_\t0\troot\t_\t_";
    const docs = parseConllu(text, warnings);
    expect(docs[0].sentences).toHaveLength(1);
  });
});
