/**
 * Extraction rules: which dependency labels count as grammatical
 * subject or object, which nouns are treated as event anchors, and how
 * prepositional arguments are recognized.
 *
 * Rules are plain JSON so corpora with divergent label inventories
 * (older Stanford-collapsed output vs. modern Universal Dependencies)
 * can be handled by swapping a config file instead of editing code.
 */

import { readFileSync } from "fs";
import { z } from "zod";

const rulesSchema = z
  .object({
    version: z.literal(1),
    copula_as_head: z.boolean().default(true),
    event_nouns: z.array(z.string()).default([]),
    subj_labels: z.array(z.string()).min(1),
    obj_labels: z.array(z.string()).min(1),
    prep_label_prefixes: z.array(z.string()).default(["prep_"]),
  })
  .strict();

export type Rules = z.infer<typeof rulesSchema>;

/**
 * Built-in defaults covering both label inventories: UD labels are
 * matched after normalizing ":" to "_", so "nsubj:pass" and the older
 * "nsubjpass" both land in the object table (passive subjects fill the
 * object role of the underlying event).
 */
export const DEFAULT_RULES: Rules = {
  version: 1,
  copula_as_head: true,
  event_nouns: [
    "attack",
    "bombing",
    "explosion",
    "murder",
    "kidnapping",
    "assassination",
  ],
  subj_labels: ["nsubj", "csubj", "xsubj", "agent", "obl_agent"],
  obj_labels: [
    "obj",
    "dobj",
    "iobj",
    "nsubjpass",
    "nsubj_pass",
    "csubjpass",
    "csubj_pass",
  ],
  prep_label_prefixes: ["prep_"],
};

/**
 * Read a rules file and validate it against the schema. Unknown keys
 * are rejected so silent typos in a config cannot change behavior.
 */
export function loadRules(path: string): Rules {
  const raw = readFileSync(path, "utf8");
  let parsed: unknown;
  try {
    parsed = JSON.parse(raw);
  } catch (err) {
    throw new Error(`rules file ${path} is not valid JSON: ${String(err)}`);
  }
  const result = rulesSchema.safeParse(parsed);
  if (!result.success) {
    const detail = result.error.issues
      .map((issue) => `${issue.path.join(".") || "(root)"}: ${issue.message}`)
      .join("; ");
    throw new Error(`rules file ${path} is invalid: ${detail}`);
  }
  return result.data;
}
