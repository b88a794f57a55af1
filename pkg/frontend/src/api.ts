/** Thin client for the designer service. All semantics live server-side. */
import type { Diagnostic } from "./model";

export interface ValidateResult {
  ok: boolean;
  diagnostics: Diagnostic[];
}

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly diagnostics: Diagnostic[] = [],
  ) {
    super(message);
  }
}

async function errorOf(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  let diagnostics: Diagnostic[] = [];
  try {
    const body = await response.json();
    if (body?.error?.message) message = body.error.message;
    if (Array.isArray(body?.diagnostics)) diagnostics = body.diagnostics;
  } catch {
    // not JSON; keep the status line
  }
  return new ApiError(message, response.status, diagnostics);
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  async validate(xml: string): Promise<ValidateResult> {
    const response = await fetch(`${this.base}/api/validate`, {
      method: "POST",
      headers: { "Content-Type": "application/xml" },
      body: xml,
    });
    if (!response.ok) throw await errorOf(response);
    return (await response.json()) as ValidateResult;
  }

  async compile(xml: string, backend = "tamarin"): Promise<string> {
    const response = await fetch(`${this.base}/api/compile?backend=${backend}`, {
      method: "POST",
      headers: { "Content-Type": "application/xml" },
      body: xml,
    });
    if (!response.ok) throw await errorOf(response);
    return response.text();
  }

  async examples(): Promise<string[]> {
    const response = await fetch(`${this.base}/api/examples`);
    if (!response.ok) throw await errorOf(response);
    return response.json();
  }

  async example(name: string): Promise<string> {
    const response = await fetch(`${this.base}/api/examples/${name}`);
    if (!response.ok) throw await errorOf(response);
    return response.text();
  }

  async protocols(): Promise<string[]> {
    const response = await fetch(`${this.base}/api/protocols`);
    if (!response.ok) throw await errorOf(response);
    return response.json();
  }

  async protocol(name: string): Promise<string> {
    const response = await fetch(`${this.base}/api/protocols/${name}`);
    if (!response.ok) throw await errorOf(response);
    return response.text();
  }

  /** Store and read back: the server canonicalizes at rest, so the bytes
   * returned here are the canonical export. */
  async storeAndFetch(name: string, xml: string): Promise<string> {
    const put = await fetch(`${this.base}/api/protocols/${name}`, {
      method: "PUT",
      headers: { "Content-Type": "application/xml" },
      body: xml,
    });
    if (!put.ok) throw await errorOf(put);
    return this.protocol(name);
  }

  async remove(name: string): Promise<void> {
    const response = await fetch(`${this.base}/api/protocols/${name}`, {
      method: "DELETE",
    });
    if (!response.ok && response.status !== 404) throw await errorOf(response);
  }

  async layout(name: string): Promise<Record<string, { x: number; y: number }> | null> {
    const response = await fetch(`${this.base}/api/protocols/${name}/layout`);
    if (response.status === 404) return null;
    if (!response.ok) throw await errorOf(response);
    return response.json();
  }

  async saveLayout(
    name: string,
    layout: Record<string, { x: number; y: number }>,
  ): Promise<void> {
    const response = await fetch(`${this.base}/api/protocols/${name}/layout`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(layout),
    });
    if (!response.ok) throw await errorOf(response);
  }
}
