/** Dose display helpers.
 *
 * Displayed doses must be byte-identical to the service's JSON tokens.
 * The service emits shortest-round-trip decimal literals (Python float
 * repr); ECMAScript number-to-string uses the same shortest-round-trip
 * digits, so String(n) reproduces the wire token exactly for the dose
 * range, with one divergence: integral floats ("1.0" vs "1"). Doses
 * live strictly inside (0, 1) so the guard below is defensive only.
 */

export function formatDose(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`not a dose: ${value}`);
  }
  if (Number.isInteger(value)) {
    return `${value}.0`;
  }
  return String(value);
}

export function formatDosePair(dose: [number, number]): string {
  return `(${formatDose(dose[0])}, ${formatDose(dose[1])})`;
}

/** Literal numeric tokens of every `"doses": [[..], ..]` array in a raw
 * service response, in document order. Used by contract tests to prove
 * the byte-match invariant against recorded and live responses. */
export function doseTokensFromRaw(raw: string): string[][] {
  const groups: string[][] = [];
  const re = /"doses":\s*\[((?:\[[^\]]*\],?\s*)+)\]/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(raw)) !== null) {
    const inner = m[1]!;
    const pairRe = /\[([^\]]*)\]/g;
    let p: RegExpExecArray | null;
    while ((p = pairRe.exec(inner)) !== null) {
      groups.push(p[1]!.split(",").map((t) => t.trim()));
    }
  }
  return groups;
}
