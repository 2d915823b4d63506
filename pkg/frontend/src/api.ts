// Client for the inference service (/v1/inpaint, /v1/health).

export interface InpaintRequest {
  image: string; // base64 PNG (RGB)
  mask: string; // base64 PNG (8-bit single channel, 0 = hole, 255 = known)
  model?: string;
}

export interface InpaintResponse {
  image: string;
  timing_ms: number;
  model: string;
}

export interface HealthResponse {
  status: string;
  model: string;
  config: Record<string, unknown>;
}

export class ApiError extends Error {
  readonly status: number;
  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

async function detailOf(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") return body.detail;
  } catch {
    // fall through
  }
  return `${res.status} ${res.statusText}`;
}

export async function health(base = ""): Promise<HealthResponse> {
  const res = await fetch(`${base}/v1/health`);
  if (!res.ok) throw new ApiError(res.status, await detailOf(res));
  return res.json();
}

export async function inpaint(req: InpaintRequest, base = ""): Promise<InpaintResponse> {
  const res = await fetch(`${base}/v1/inpaint`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(req),
  });
  if (!res.ok) throw new ApiError(res.status, await detailOf(res));
  return res.json();
}
