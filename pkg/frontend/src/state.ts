// Review state: the open record, its draft corrections, and submission.
//
// Drafts never auto-submit; a draft leaves the store only when the gateway
// acknowledges it, and a rejected draft stays put with its error attached so
// the reviewer can fix or drop it. Everything here is reconstructible from
// gateway responses plus the drafts map.

import { GatewayApi, GatewayError, RecordRows, RecordSummary } from "./api.js";

export interface RecordView {
  recordId: string;
  columns: string[];
  rows: number[][];
  labels: string[] | null;
  predictedLabels: string[] | null;
  predictionTaskId: string | null;
}

export interface DraftCorrection {
  rowIndex: number;
  label: string;
  error?: string;
}

export interface SubmissionReceipt {
  rowIndex: number;
  label: string;
  newRecordId: string;
}

export class ReviewStore {
  records: RecordSummary[] = [];
  current: RecordView | null = null;
  drafts = new Map<number, DraftCorrection>();
  receipts: SubmissionReceipt[] = [];

  constructor(private readonly api: GatewayApi) {}

  async refreshRecords(): Promise<RecordSummary[]> {
    this.records = await this.api.listRecords();
    return this.records;
  }

  async openRecord(recordId: string): Promise<RecordView> {
    const rows: RecordRows = await this.api.openRecordRows(recordId);
    this.current = {
      recordId: rows.record_id,
      columns: rows.columns,
      rows: rows.rows,
      labels: rows.labels,
      predictedLabels: rows.predicted_labels,
      predictionTaskId: rows.prediction_task_id,
    };
    this.drafts.clear();
    return this.current;
  }

  draftCorrection(rowIndex: number, label: string): DraftCorrection {
    if (this.current === null) {
      throw new Error("no record is open");
    }
    if (rowIndex < 0 || rowIndex >= this.current.rows.length) {
      throw new Error(`row ${rowIndex} outside 0..${this.current.rows.length - 1}`);
    }
    const draft: DraftCorrection = { rowIndex, label };
    this.drafts.set(rowIndex, draft);
    return draft;
  }

  dropDraft(rowIndex: number): void {
    this.drafts.delete(rowIndex);
  }

  /** Submit every draft; accepted ones clear, rejected ones keep the error. */
  async submitDrafts(): Promise<SubmissionReceipt[]> {
    if (this.current === null) {
      throw new Error("no record is open");
    }
    const accepted: SubmissionReceipt[] = [];
    for (const draft of [...this.drafts.values()].sort((a, b) => a.rowIndex - b.rowIndex)) {
      try {
        const newRecordId = await this.api.submitCorrection(
          this.current.recordId,
          draft.rowIndex,
          draft.label,
        );
        const receipt = { rowIndex: draft.rowIndex, label: draft.label, newRecordId };
        accepted.push(receipt);
        this.receipts.push(receipt);
        this.drafts.delete(draft.rowIndex);
      } catch (err) {
        draft.error =
          err instanceof GatewayError ? err.message : `submission failed: ${String(err)}`;
      }
    }
    return accepted;
  }
}
