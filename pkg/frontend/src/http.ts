/** The single network choke point.
 *
 * The reader is read-only by construction: every request flows through
 * these two helpers, and both issue plain GETs against static files.
 * Nothing in the app may call fetch directly.
 */

export async function getJson<T>(url: string): Promise<T> {
  const response = await fetch(url, { method: "GET" });
  if (!response.ok) {
    throw new Error(`GET ${url} failed: ${response.status}`);
  }
  return (await response.json()) as T;
}

export async function getText(url: string): Promise<string> {
  const response = await fetch(url, { method: "GET" });
  if (!response.ok) {
    throw new Error(`GET ${url} failed: ${response.status}`);
  }
  return response.text();
}
