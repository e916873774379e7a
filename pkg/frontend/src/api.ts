// Thin typed client over the service HTTP API. All state lives server-side;
// this module only shapes requests and parses responses.

import type {
  DatasetResponse,
  EpochEvent,
  GameAction,
  JobRecord,
  LevelInfo,
  SessionResponse,
  StrokeSetPayload,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public reason: string,
    detail: string,
  ) {
    super(`${reason}: ${detail}`);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let reason = "http_error";
      let detail = resp.statusText;
      try {
        const parsed = await resp.json();
        reason = parsed.reason ?? reason;
        detail = parsed.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, reason, detail);
    }
    return (await resp.json()) as T;
  }

  createDataset(
    digitA: StrokeSetPayload[],
    digitB: StrokeSetPayload[],
    numImagesPerDigit: number,
  ): Promise<DatasetResponse> {
    return this.request("POST", "/datasets", {
      strokes: {
        digit_a: digitA,
        digit_b: digitB,
        num_images_per_digit: numImagesPerDigit,
      },
    });
  }

  startTraining(datasetId: string, config: Record<string, unknown>): Promise<{ job_id: string }> {
    return this.request("POST", "/train", { dataset_id: datasetId, config });
  }

  getJob(jobId: string): Promise<JobRecord> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  cancelJob(jobId: string): Promise<{ id: string; state: string }> {
    return this.request("DELETE", `/jobs/${jobId}`);
  }

  /** Follow the held-open NDJSON progress stream, yielding one event per epoch. */
  async *streamEvents(jobId: string): AsyncGenerator<EpochEvent> {
    const resp = await this.fetchImpl(`${this.baseUrl}/jobs/${jobId}/events`, {
      method: "GET",
    });
    if (!resp.ok || resp.body === null) {
      throw new ApiError(resp.status, "stream_failed", resp.statusText);
    }
    const reader = resp.body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      const { lines, rest } = splitLines(buffer);
      buffer = rest;
      for (const line of lines) yield JSON.parse(line) as EpochEvent;
    }
    const { lines } = splitLines(buffer + "\n");
    for (const line of lines) yield JSON.parse(line) as EpochEvent;
  }

  interpolate(
    modelId: string,
    endpointA: unknown,
    endpointB: unknown,
    numImages: number,
    showGifOnly = true,
  ): Promise<{ media_id: string; frames: number; frame_media_ids?: string[] }> {
    return this.request("POST", `/models/${modelId}/interpolate`, {
      endpoint_a: endpointA,
      endpoint_b: endpointB,
      num_images: numImages,
      show_gif_only: showGifOnly,
    });
  }

  mediaUrl(mediaId: string): string {
    return `${this.baseUrl}/media/${mediaId}`;
  }

  listLevels(): Promise<LevelInfo[]> {
    return this.request("GET", "/levels");
  }

  createSession(level: string, seed: number): Promise<SessionResponse> {
    return this.request("POST", "/game/sessions", { level, seed });
  }

  getSession(sessionId: string): Promise<SessionResponse> {
    return this.request("GET", `/game/sessions/${sessionId}`);
  }

  act(sessionId: string, action: GameAction): Promise<SessionResponse> {
    return this.request("POST", `/game/sessions/${sessionId}/actions`, action);
  }
}

/** Split a streaming text buffer into complete lines plus the unfinished rest. */
export function splitLines(buffer: string): { lines: string[]; rest: string } {
  const parts = buffer.split("\n");
  const rest = parts.pop() ?? "";
  return { lines: parts.filter((l) => l.trim().length > 0), rest };
}
