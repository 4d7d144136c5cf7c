#!/usr/bin/env node
/**
 * Command line front end: read a parse file, extract clause records,
 * and write them as JSON lines.
 *
 * Exit codes: 0 on success, 1 on usage errors, 2 when the input file
 * is missing or unreadable. Per-line skip warnings go to stderr and do
 * not affect the exit code.
 */

import { readFileSync, writeFileSync } from "fs";
import yargs from "yargs";
import { extractClauses, formatClauses } from "./clauses";
import { parseCollapsed } from "./collapsed";
import { parseConllu } from "./conllu";
import { DEFAULT_RULES, Rules, loadRules } from "./rules";
import { WarningLog } from "./types";

interface CliOptions {
  input: string;
  format: "conllu" | "collapsed";
  rules?: string;
  out?: string;
}

function buildParser(argv: string[]) {
  return yargs(argv)
    .scriptName("parse-adapter")
    .usage("$0 --input FILE [--format conllu|collapsed] [--rules FILE] [--out FILE]")
    .option("input", {
      type: "string",
      demandOption: true,
      describe: "parse file to read",
    })
    .option("format", {
      choices: ["conllu", "collapsed"] as const,
      default: "conllu" as const,
      describe: "input parse format",
    })
    .option("rules", {
      type: "string",
      describe: "JSON rules file (defaults to the built-in tables)",
    })
    .option("out", {
      type: "string",
      describe: "output path (defaults to stdout)",
    })
    .strict()
    .help()
    .exitProcess(false)
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    });
}

/** Run the adapter; returns the process exit code. */
export function main(argv: string[]): number {
  let opts: CliOptions;
  try {
    opts = buildParser(argv).parseSync() as unknown as CliOptions;
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
    return 1;
  }

  let rules: Rules = DEFAULT_RULES;
  if (opts.rules !== undefined) {
    try {
      rules = loadRules(opts.rules);
    } catch (err) {
      process.stderr.write(`error: ${err instanceof Error ? err.message : String(err)}\n`);
      return 2;
    }
  }

  let text: string;
  try {
    text = readFileSync(opts.input, "utf8");
  } catch (err) {
    process.stderr.write(
      `error: cannot read ${opts.input}: ${err instanceof Error ? err.message : String(err)}\n`,
    );
    return 2;
  }

  const warnings = new WarningLog();
  const docs =
    opts.format === "collapsed"
      ? parseCollapsed(text, warnings)
      : parseConllu(text, warnings);
  const clauses = extractClauses(docs, rules, warnings);
  const output = formatClauses(clauses);

  for (const message of warnings.messages) {
    process.stderr.write(`warning: ${message}\n`);
  }
  if (warnings.count > 0) {
    process.stderr.write(`${warnings.count} input line(s) skipped\n`);
  }

  if (opts.out !== undefined) {
    try {
      writeFileSync(opts.out, output, "utf8");
    } catch (err) {
      process.stderr.write(
        `error: cannot write ${opts.out}: ${err instanceof Error ? err.message : String(err)}\n`,
      );
      return 2;
    }
  } else {
    process.stdout.write(output);
  }
  return 0;
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
