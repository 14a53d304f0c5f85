export interface Segment {
  text: string;
  hit: boolean;
}

/**
 * Split text into plain and highlighted runs, marking every substring
 * occurrence of any term. Matching is plain substring search, the same
 * test the server-side keyword filter applies. Overlapping or adjacent
 * matches merge into a single run; concatenating the segments always
 * reproduces the input.
 */
export function segmentText(text: string, terms: readonly string[]): Segment[] {
  const marked = new Array<boolean>(text.length).fill(false);
  for (const term of terms) {
    if (!term) continue;
    let from = 0;
    for (;;) {
      const at = text.indexOf(term, from);
      if (at < 0) break;
      marked.fill(true, at, at + term.length);
      from = at + 1;
    }
  }
  const segments: Segment[] = [];
  let start = 0;
  for (let i = 1; i <= text.length; i++) {
    if (i === text.length || marked[i] !== marked[start]) {
      segments.push({ text: text.slice(start, i), hit: marked[start] === true });
      start = i;
    }
  }
  return segments;
}

/** Replace container contents with the text, wrapping hits in <mark>. */
export function renderHighlighted(
  container: HTMLElement,
  text: string,
  terms: readonly string[],
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  for (const segment of segmentText(text, terms)) {
    if (segment.hit) {
      const mark = doc.createElement("mark");
      mark.textContent = segment.text;
      container.appendChild(mark);
    } else {
      container.appendChild(doc.createTextNode(segment.text));
    }
  }
}
