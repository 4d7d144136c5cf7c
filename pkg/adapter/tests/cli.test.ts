import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { afterAll, describe, expect, it } from "vitest";
import { main } from "../src/cli";

const FIXTURES = join(__dirname, "fixtures");
const SAMPLE = join(FIXTURES, "sample.conllu");
const GOLD = join(FIXTURES, "gold.clauses.jsonl");

const workDir = mkdtempSync(join(tmpdir(), "adapter-cli-"));
afterAll(() => rmSync(workDir, { recursive: true, force: true }));

function captureStderr(run: () => number): { code: number; stderr: string } {
  const chunks: string[] = [];
  const original = process.stderr.write.bind(process.stderr);
  process.stderr.write = ((chunk: string | Uint8Array) => {
    chunks.push(String(chunk));
    return true;
  }) as typeof process.stderr.write;
  try {
    return { code: run(), stderr: chunks.join("") };
  } finally {
    process.stderr.write = original;
  }
}

describe("cli", () => {
  it("converts a parse file and matches the gold output", () => {
    const out = join(workDir, "out.jsonl");
    const code = main(["--input", SAMPLE, "--out", out]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toBe(readFileSync(GOLD, "utf8"));
  });

  it("accepts an explicit rules file", () => {
    const out = join(workDir, "ruled.jsonl");
    const code = main([
      "--input",
      SAMPLE,
      "--rules",
      join(FIXTURES, "rules.json"),
      "--out",
      out,
    ]);
    expect(code).toBe(0);
    expect(readFileSync(out, "utf8")).toBe(readFileSync(GOLD, "utf8"));
  });

  it("writes to stdout when no output path is given", () => {
    const chunks: string[] = [];
    const original = process.stdout.write.bind(process.stdout);
    process.stdout.write = ((chunk: string | Uint8Array) => {
      chunks.push(String(chunk));
      return true;
    }) as typeof process.stdout.write;
    try {
      expect(main(["--input", SAMPLE])).toBe(0);
    } finally {
      process.stdout.write = original;
    }
    expect(chunks.join("")).toBe(readFileSync(GOLD, "utf8"));
  });

  it("reads collapsed-dependency input when asked", () => {
    const input = join(workDir, "tiny.collapsed");
    writeFileSync(
      input,
      "# newdoc id = d-1\nnsubj\tresign:VBD:2\tchief:NN:1\n",
      "utf8",
    );
    const out = join(workDir, "collapsed.jsonl");
    const code = main(["--input", input, "--format", "collapsed", "--out", out]);
    expect(code).toBe(0);
    const record = JSON.parse(readFileSync(out, "utf8").trimEnd());
    expect(record.doc_id).toBe("d-1");
    expect(record.event_head_lemma).toBe("resign");
    expect(record.args).toHaveLength(1);
  });

  it("reports skipped lines on stderr without failing", () => {
    const input = join(workDir, "partial.conllu");
    writeFileSync(
      input,
      [
        "1\tresigned\tresign\tVERB\t_\t_\t0\troot\t_\t_",
        "not a conllu row",
        "",
      ].join("\n"),
      "utf8",
    );
    const out = join(workDir, "partial.jsonl");
    const { code, stderr } = captureStderr(() =>
      main(["--input", input, "--out", out]),
    );
    expect(code).toBe(0);
    expect(stderr).toContain("warning:");
    expect(stderr).toContain("1 input line(s) skipped");
    expect(readFileSync(out, "utf8")).toContain("resign");
  });

  it("exits 1 on usage errors", () => {
    expect(captureStderr(() => main([])).code).toBe(1);
    expect(captureStderr(() => main(["--input", SAMPLE, "--nope"])).code).toBe(1);
    expect(
      captureStderr(() => main(["--input", SAMPLE, "--format", "xml"])).code,
    ).toBe(1);
  });

  it("exits 2 when the input file is missing", () => {
    const { code, stderr } = captureStderr(() =>
      main(["--input", join(workDir, "absent.conllu")]),
    );
    expect(code).toBe(2);
    expect(stderr).toContain("cannot read");
  });

  it("exits 2 when the rules file is invalid", () => {
    const bad = join(workDir, "bad-rules.json");
    writeFileSync(bad, JSON.stringify({ version: 1, extra_key: true }), "utf8");
    const { code, stderr } = captureStderr(() =>
      main(["--input", SAMPLE, "--rules", bad]),
    );
    expect(code).toBe(2);
    expect(stderr).toContain("invalid");
  });
});
