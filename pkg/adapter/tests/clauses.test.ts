import { readFileSync } from "fs";
import { join } from "path";
import { describe, expect, it } from "vitest";
import { extractClauses, formatClauses } from "../src/clauses";
import { parseCollapsed } from "../src/collapsed";
import { parseConllu } from "../src/conllu";
import { DEFAULT_RULES, Rules } from "../src/rules";
import { Clause, WarningLog } from "../src/types";

const FIXTURE = join(__dirname, "fixtures", "sample.conllu");

function extractFixture(rules: Rules = DEFAULT_RULES): Clause[] {
  const warnings = new WarningLog();
  const docs = parseConllu(readFileSync(FIXTURE, "utf8"), warnings);
  const clauses = extractClauses(docs, rules, warnings);
  expect(warnings.count).toBe(0);
  return clauses;
}

function fromConllu(rows: string[], rules: Rules = DEFAULT_RULES): Clause[] {
  const warnings = new WarningLog();
  const docs = parseConllu(rows.join("\n") + "\n", warnings);
  return extractClauses(docs, rules, warnings);
}

describe("extractClauses", () => {
  it("finds one clause per event head across the fixture corpus", () => {
    const clauses = extractFixture();
    expect(clauses).toHaveLength(13);
    expect(
      clauses.filter((c) => c.docId === "muc-0001").map((c) => c.eventHeadLemma),
    ).toEqual(["bomb", "attack", "kill", "arrest", "explosion", "devastating"]);
  });

  it("numbers clauses contiguously within each document", () => {
    const clauses = extractFixture();
    for (const docId of ["muc-0001", "muc-0002", "muc-0003"]) {
      const indices = clauses
        .filter((c) => c.docId === docId)
        .map((c) => c.clauseIndex);
      expect(indices).toEqual(indices.map((_, i) => i));
    }
  });

  it("records the sentence ordinal of each clause", () => {
    const clauses = extractFixture();
    const third = clauses.filter((c) => c.docId === "muc-0003");
    expect(third.map((c) => c.sentenceIndex)).toEqual([0, 1, 1, 1]);
  });

  it("never promotes auxiliaries or copulas to event heads", () => {
    const lemmas = extractFixture().map((c) => c.eventHeadLemma);
    expect(lemmas).not.toContain("be");
    expect(lemmas).not.toContain("can");
  });

  it("promotes lexicon nouns but not other nouns", () => {
    const lemmas = extractFixture().map((c) => c.eventHeadLemma);
    expect(lemmas).toContain("attack");
    expect(lemmas).toContain("explosion");
    expect(lemmas).toContain("murder");
    expect(lemmas).not.toContain("mayor");
    expect(lemmas).not.toContain("embassy");
  });

  it("treats the copular predicate as a head only when configured to", () => {
    const withCop = extractFixture();
    expect(withCop.map((c) => c.eventHeadLemma)).toContain("devastating");
    const noCop = extractFixture({ ...DEFAULT_RULES, copula_as_head: false });
    expect(noCop.map((c) => c.eventHeadLemma)).not.toContain("devastating");
    expect(noCop).toHaveLength(12);
  });

  it("classifies passive subjects as objects and agents as subjects", () => {
    const arrest = extractFixture().find((c) => c.eventHeadLemma === "arrest");
    expect(arrest?.args).toEqual([
      {
        argType: "OBJ",
        headLemma: "suspect",
        depLabel: "nsubj_pass",
        caseframe: "arrest>nsubj_pass",
      },
      {
        argType: "SUBJ",
        headLemma: "police",
        depLabel: "obl_agent",
        caseframe: "arrest>obl_agent",
      },
    ]);
  });

  it("collapses obliques with case markers into prepositional labels", () => {
    const bomb = extractFixture().find((c) => c.eventHeadLemma === "bomb");
    expect(bomb?.args.map((a) => [a.argType, a.headLemma, a.depLabel])).toEqual([
      ["SUBJ", "militant", "nsubj"],
      ["OBJ", "embassy", "obj"],
      ["PREP", "bogota", "prep_in"],
    ]);
    expect(bomb?.args[2].caseframe).toBe("bomb>prep_in");
  });

  it("skips obliques that carry no case marker", () => {
    const clauses = fromConllu([
      "1\tShe\tshe\tPRON\t_\t_\t2\tnsubj\t_\t_",
      "2\tleft\tleave\tVERB\t_\t_\t0\troot\t_\t_",
      "3\tyesterday\tyesterday\tNOUN\t_\t_\t2\tobl\t_\t_",
    ]);
    expect(clauses).toHaveLength(1);
    expect(clauses[0].args.map((a) => a.headLemma)).toEqual(["she"]);
  });

  it("joins multiple case markers under one oblique with underscores", () => {
    const clauses = fromConllu([
      "1\tShe\tshe\tPRON\t_\t_\t2\tnsubj\t_\t_",
      "2\tclimbed\tclimb\tVERB\t_\t_\t0\troot\t_\t_",
      "3\tout\tout\tADP\t_\t_\t5\tcase\t_\t_",
      "4\tof\tof\tADP\t_\t_\t5\tcase\t_\t_",
      "5\tbed\tbed\tNOUN\t_\t_\t2\tobl\t_\t_",
    ]);
    expect(clauses[0].args.map((a) => a.depLabel)).toEqual(["nsubj", "prep_out_of"]);
  });

  it("ignores modifiers of tokens that are not event heads", () => {
    const clauses = extractFixture();
    const kidnap = clauses.find((c) => c.eventHeadLemma === "kidnap");
    expect(kidnap?.args.map((a) => a.headLemma)).toEqual(["rebel", "mayor"]);
    const all = clauses.flatMap((c) => c.args.map((a) => a.headLemma));
    expect(all).not.toContain("aguacatala");
  });

  it("orders arguments by dependent token position", () => {
    const demand = extractFixture().find((c) => c.eventHeadLemma === "demand");
    expect(demand?.args.map((a) => a.headLemma)).toEqual([
      "they",
      "ransom",
      "government",
    ]);
  });

  it("passes already-collapsed prepositional labels through unchanged", () => {
    const warnings = new WarningLog();
    const docs = parseCollapsed(
      [
        "nsubj\tbomb:VBD:2\tmilitant:NNS:1",
        "dobj\tbomb:VBD:2\tembassy:NN:4",
        "prep_in\tbomb:VBD:2\tbogota:NNP:6",
        "",
      ].join("\n"),
      warnings,
    );
    const clauses = extractClauses(docs, DEFAULT_RULES, warnings);
    expect(clauses).toHaveLength(1);
    expect(clauses[0].args.map((a) => [a.argType, a.depLabel])).toEqual([
      ["SUBJ", "nsubj"],
      ["OBJ", "dobj"],
      ["PREP", "prep_in"],
    ]);
    expect(warnings.count).toBe(0);
  });

  it("recognizes PTB verb and noun tags from collapsed dumps", () => {
    const warnings = new WarningLog();
    const docs = parseCollapsed("agent\tarrest:VBN:4\tpolice:NN:7\n", warnings);
    const clauses = extractClauses(docs, DEFAULT_RULES, warnings);
    expect(clauses).toHaveLength(1);
    expect(clauses[0].args[0].argType).toBe("SUBJ");
  });

  it("respects a custom event-noun lexicon", () => {
    const rules: Rules = { ...DEFAULT_RULES, event_nouns: ["mayor"] };
    const lemmas = extractFixture(rules).map((c) => c.eventHeadLemma);
    expect(lemmas).toContain("mayor");
    expect(lemmas).not.toContain("attack");
  });
});

describe("formatClauses", () => {
  it("writes compact JSON lines in the documented field order", () => {
    const clauses = extractFixture();
    const out = formatClauses(clauses.slice(0, 1));
    expect(out.endsWith("\n")).toBe(true);
    const parsed = JSON.parse(out.trimEnd());
    expect(Object.keys(parsed)).toEqual([
      "doc_id",
      "sentence_index",
      "clause_index",
      "event_head_lemma",
      "args",
    ]);
    expect(Object.keys(parsed.args[0])).toEqual([
      "arg_type",
      "head_lemma",
      "dep_label",
      "caseframe",
    ]);
  });

  it("returns an empty string for no clauses", () => {
    expect(formatClauses([])).toBe("");
  });
});
