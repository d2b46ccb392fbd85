/** Small DOM helpers shared by the widgets. */

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function button(
  label: string,
  className: string,
  onClick: () => void,
): HTMLButtonElement {
  const b = el("button", className, label);
  b.type = "button";
  b.addEventListener("click", onClick);
  return b;
}

/**
 * Render assumption text with backtick-quoted column references as
 * highlighted tokens: "sort by `Rating`" becomes text plus a styled
 * <code> element per reference.
 */
export function renderTokens(text: string): DocumentFragment {
  const frag = document.createDocumentFragment();
  const parts = text.split(/(`[^`]+`)/g);
  for (const part of parts) {
    if (part.startsWith("`") && part.endsWith("`") && part.length > 2) {
      const tok = el("code", "col-token", part.slice(1, -1));
      frag.appendChild(tok);
    } else if (part.length > 0) {
      frag.appendChild(document.createTextNode(part));
    }
  }
  return frag;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}
