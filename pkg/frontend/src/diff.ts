/**
 * Word-level diff between two texts, LCS-based. Small refinements often
 * change only a clause, so the diff has to make single-word edits visible.
 */

export type DiffKind = "same" | "del" | "ins";

export interface DiffSegment {
  kind: DiffKind;
  text: string;
}

function words(text: string): string[] {
  return text.split(/\s+/).filter((w) => w.length > 0);
}

/** Longest-common-subsequence table over word arrays. */
function lcsTable(a: string[], b: string[]): number[][] {
  const table: number[][] = Array.from({ length: a.length + 1 }, () =>
    new Array<number>(b.length + 1).fill(0),
  );
  for (let i = a.length - 1; i >= 0; i--) {
    for (let j = b.length - 1; j >= 0; j--) {
      table[i][j] =
        a[i] === b[j] ? table[i + 1][j + 1] + 1 : Math.max(table[i + 1][j], table[i][j + 1]);
    }
  }
  return table;
}

/** Merge adjacent raw ops of the same kind into word-joined segments. */
function merge(ops: Array<[DiffKind, string]>): DiffSegment[] {
  const segments: DiffSegment[] = [];
  for (const [kind, word] of ops) {
    const last = segments[segments.length - 1];
    if (last && last.kind === kind) {
      last.text += ` ${word}`;
    } else {
      segments.push({ kind, text: word });
    }
  }
  return segments;
}

export function wordDiff(before: string, after: string): DiffSegment[] {
  const a = words(before);
  const b = words(after);
  const table = lcsTable(a, b);
  const ops: Array<[DiffKind, string]> = [];
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] === b[j]) {
      ops.push(["same", a[i]]);
      i++;
      j++;
    } else if (table[i + 1][j] >= table[i][j + 1]) {
      ops.push(["del", a[i]]);
      i++;
    } else {
      ops.push(["ins", b[j]]);
      j++;
    }
  }
  while (i < a.length) ops.push(["del", a[i++]]);
  while (j < b.length) ops.push(["ins", b[j++]]);
  return merge(ops);
}

/** Reassemble one side of the diff; inverse property used by the tests. */
export function diffSide(segments: DiffSegment[], side: "before" | "after"): string {
  const keep: DiffKind = side === "before" ? "del" : "ins";
  return segments
    .filter((s) => s.kind === "same" || s.kind === keep)
    .map((s) => s.text)
    .join(" ");
}
