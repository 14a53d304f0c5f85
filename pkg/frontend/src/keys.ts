// Single-key labeling: annotator throughput is the whole point of the
// queue screen, so everything reachable from the home row.

const IGNORED_TAGS = new Set(["INPUT", "TEXTAREA", "SELECT"]);

export interface QueueKeyHandlers {
  onPositive: () => void;
  onNegative: () => void;
  onSkip: () => void;
}

export const QUEUE_KEYS: Record<string, keyof QueueKeyHandlers> = {
  p: "onPositive",
  "1": "onPositive",
  n: "onNegative",
  "2": "onNegative",
  s: "onSkip",
  "3": "onSkip",
};

/**
 * Attach the labeling keymap to `target` (normally the document).
 * Returns the detach function. Keys pressed while a form control has
 * focus, or with a modifier held, pass through untouched.
 */
export function bindQueueKeys(target: EventTarget, handlers: QueueKeyHandlers): () => void {
  const onKeyDown = (event: Event) => {
    const key = event as KeyboardEvent;
    if (key.ctrlKey || key.metaKey || key.altKey) return;
    const el = key.target instanceof Element ? key.target : null;
    if (el && (IGNORED_TAGS.has(el.tagName) || (el as HTMLElement).isContentEditable)) return;
    const action = QUEUE_KEYS[key.key.toLowerCase()];
    if (!action) return;
    key.preventDefault();
    handlers[action]();
  };
  target.addEventListener("keydown", onKeyDown);
  return () => target.removeEventListener("keydown", onKeyDown);
}
