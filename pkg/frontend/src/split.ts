/**
 * Line splitting, duplicated from the main tool's rule on purpose: the
 * exchange format requires one vector per line exactly as the consumer
 * counts lines, and the parity tests guard the two implementations against
 * drift.
 *
 * Rule: CRLF normalizes to LF, trailing empty lines are dropped, interior
 * blank lines are kept (they stay graph nodes downstream).
 */
export function splitLines(code: string): string[] {
  if (code === '') {
    throw new Error('cannot split empty code');
  }
  const lines = code.replace(/\r\n/g, '\n').split('\n');
  while (lines.length > 0 && lines[lines.length - 1] === '') {
    lines.pop();
  }
  return lines;
}
