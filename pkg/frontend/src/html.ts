/** Shared string-template helpers for the render functions. */

const REPLACEMENTS: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
  "'": "&#39;",
};

export function escapeHtml(value: string): string {
  return value.replace(/[&<>"']/g, (ch) => REPLACEMENTS[ch] ?? ch);
}

/** Numbers pass through JavaScript's default formatting so the rendered
 * text stays traceable to the payload value. */
export function num(value: number): string {
  return String(value);
}
