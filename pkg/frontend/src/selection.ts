export interface SpanSelection {
  start: number;
  end: number;
  text: string;
}

/**
 * Character offsets of the current selection within `container`, or null
 * when the selection is collapsed or falls outside it.
 *
 * Offsets are measured against the container's full text content, so
 * highlight wrappers inside the note never shift them. The server maps
 * the selected span to token boundaries; this only has to deliver the
 * exact characters the annotator swept.
 */
export function selectionOffsets(container: Node): SpanSelection | null {
  const doc = container.ownerDocument;
  if (!doc) return null;
  const selection = doc.defaultView?.getSelection() ?? null;
  if (!selection || selection.rangeCount === 0 || selection.isCollapsed) return null;
  const range = selection.getRangeAt(0);
  if (!container.contains(range.startContainer) || !container.contains(range.endContainer)) {
    return null;
  }
  const start = measure(doc, container, range.startContainer, range.startOffset);
  const end = measure(doc, container, range.endContainer, range.endOffset);
  if (start === null || end === null || start === end) return null;
  const [from, to] = start < end ? [start, end] : [end, start];
  const text = (container.textContent ?? "").slice(from, to);
  return { start: from, end: to, text };
}

// Length of the text between the container start and (node, offset),
// measured with a throwaway range so element-anchored endpoints work too.
function measure(doc: Document, container: Node, node: Node, offset: number): number | null {
  const probe = doc.createRange();
  probe.selectNodeContents(container);
  try {
    probe.setEnd(node, offset);
  } catch {
    return null;
  }
  return probe.toString().length;
}
