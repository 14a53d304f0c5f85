// Display formatting only. Raw values are always preserved on the element
// (data-value) so what the user sees stays traceable to the API response.

export function fmtMetric(x: number): string {
  return x.toFixed(3);
}

export function fmtProbability(p: number | null): string {
  return p === null ? "n/a" : p.toFixed(3);
}

export function fmtPercent(p: number): string {
  return `${p}%`;
}

/** Set both the visible text and the machine-readable raw value. */
export function setNumberCell(el: HTMLElement, raw: number, text?: string): void {
  el.dataset.value = String(raw);
  el.textContent = text ?? (Number.isInteger(raw) ? String(raw) : fmtMetric(raw));
}
