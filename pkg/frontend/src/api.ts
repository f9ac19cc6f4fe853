// Typed client for the loopback gateway JSON API. The UI performs no
// cryptography and holds no keys: every plaintext it shows was decrypted by
// the local gateway on the owner's machine.

export interface RecordSummary {
  record_id: string;
  kind: string | null;
  challenge_id: string | null;
  rows: number | null;
  dimension: number | null;
  prediction_task_id: string | null;
}

export interface RecordRows {
  record_id: string;
  columns: string[];
  rows: number[][];
  labels: string[] | null;
  predicted_labels: string[] | null;
  prediction_task_id: string | null;
}

export interface BenchmarkRow {
  algorithm_id: string;
  best_model_id: string;
  best_performance: number;
  evaluations: number;
}

export interface ChallengeInfo {
  challenge_id: string;
  description: string;
  label_set: string[];
  validation_data_ids: string[];
}

export interface TaskInfo {
  task_id: string;
  kind: string;
  status: string;
  data_ids: string[];
  challenge_id: string;
}

export interface AuditReport {
  valid: boolean;
  first_invalid_index: number | null;
  registered_records: string[];
  learning: unknown[];
  predictions: unknown[];
}

export class GatewayError extends Error {
  constructor(
    public readonly code: string,
    public readonly status: number,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export class GatewayApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = (await response.json()) as Record<string, unknown>;
    if (!response.ok) {
      throw new GatewayError(
        String(payload.error ?? "GatewayError"),
        response.status,
        String(payload.detail ?? ""),
      );
    }
    return payload as T;
  }

  async listRecords(): Promise<RecordSummary[]> {
    const body = await this.request<{ records: RecordSummary[] }>("GET", "/api/records");
    return body.records;
  }

  openRecordRows(recordId: string): Promise<RecordRows> {
    return this.request<RecordRows>("GET", `/api/records/${recordId}/rows`);
  }

  async prediction(taskId: string): Promise<{ status: string; labels: string[] | null }> {
    return this.request("GET", `/api/predictions/${taskId}`);
  }

  async submitCorrection(
    sourceRecordId: string,
    rowIndex: number,
    correctedLabel: string,
  ): Promise<string> {
    const body = await this.request<{ record_id: string }>("POST", "/api/corrections", {
      source_record_id: sourceRecordId,
      row_index: rowIndex,
      corrected_label: correctedLabel,
    });
    return body.record_id;
  }

  async benchmark(challengeId: string): Promise<BenchmarkRow[]> {
    const body = await this.request<{ rows: BenchmarkRow[] }>(
      "GET",
      `/api/benchmark/${challengeId}`,
    );
    return body.rows;
  }

  async challenges(): Promise<ChallengeInfo[]> {
    const body = await this.request<{ challenges: ChallengeInfo[] }>("GET", "/api/challenges");
    return body.challenges;
  }

  async tasks(): Promise<TaskInfo[]> {
    const body = await this.request<{ tasks: TaskInfo[] }>("GET", "/api/tasks");
    return body.tasks;
  }

  audit(): Promise<AuditReport> {
    return this.request<AuditReport>("GET", "/api/audit");
  }
}
