/** Service location: one env-style variable, nothing else. */

export const BASE_URL_VAR = "SOUNDTRAIL_API_URL";
export const DEFAULT_BASE_URL = "http://127.0.0.1:8645";

type Env = Record<string, string | undefined>;

function ambientEnv(): Env {
  const proc = (globalThis as { process?: { env?: Env } }).process;
  return proc?.env ?? {};
}

export function resolveBaseUrl(env: Env = ambientEnv()): string {
  const raw = env[BASE_URL_VAR];
  if (raw === undefined || raw.trim() === "") {
    return DEFAULT_BASE_URL;
  }
  return raw.trim().replace(/\/+$/, "");
}
