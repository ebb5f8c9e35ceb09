/**
 * Keyboard bindings for the review workflow.
 *
 * The whole triage flow is reachable without a pointer:
 *
 *   j / ArrowDown      next item
 *   k / ArrowUp        previous item
 *   a / b              act as reviewer-a / reviewer-b
 *   t                  draft decision: true positive
 *   f                  draft decision: false positive
 *   1-9                with a true-positive draft, toggle the nth type;
 *                      with a false-positive draft, pick the nth reason
 *   s                  submit the drafted label
 *   u                  resolve a disagreement without consensus
 *                      (defaults the item to false positive)
 *   e                  export validated findings
 *
 * Keystrokes originating in editable controls are ignored so typing a
 * reviewer id or a custom type never triggers shortcuts.
 */

export interface KeyboardHandlers {
  onNext: () => void;
  onPrev: () => void;
  onReviewer: (reviewerId: string) => void;
  onDecisionTrue: () => void;
  onDecisionFalse: () => void;
  onDigit: (n: number) => void;
  onSubmit: () => void;
  onResolveNoConsensus: () => void;
  onExport: () => void;
}

export function isEditableTarget(target: EventTarget | null): boolean {
  if (!(target instanceof HTMLElement)) return false;
  if (target instanceof HTMLInputElement) return target.type !== "checkbox";
  if (target instanceof HTMLTextAreaElement) return true;
  if (target instanceof HTMLSelectElement) return true;
  return target.isContentEditable === true;
}

export function bindKeyboard(
  target: Window,
  handlers: KeyboardHandlers,
): () => void {
  const onKeyDown = (event: KeyboardEvent) => {
    if (event.ctrlKey || event.metaKey || event.altKey) return;
    if (isEditableTarget(event.target)) return;

    const digit = /^[1-9]$/.test(event.key) ? Number(event.key) : null;
    if (digit !== null) {
      event.preventDefault();
      handlers.onDigit(digit);
      return;
    }

    switch (event.key) {
      case "j":
      case "ArrowDown":
        event.preventDefault();
        handlers.onNext();
        break;
      case "k":
      case "ArrowUp":
        event.preventDefault();
        handlers.onPrev();
        break;
      case "a":
        event.preventDefault();
        handlers.onReviewer("reviewer-a");
        break;
      case "b":
        event.preventDefault();
        handlers.onReviewer("reviewer-b");
        break;
      case "t":
        event.preventDefault();
        handlers.onDecisionTrue();
        break;
      case "f":
        event.preventDefault();
        handlers.onDecisionFalse();
        break;
      case "s":
        event.preventDefault();
        handlers.onSubmit();
        break;
      case "u":
        event.preventDefault();
        handlers.onResolveNoConsensus();
        break;
      case "e":
        event.preventDefault();
        handlers.onExport();
        break;
    }
  };

  target.addEventListener("keydown", onKeyDown);
  return () => target.removeEventListener("keydown", onKeyDown);
}
