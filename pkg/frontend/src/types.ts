export type Verdict = "UNLABELED" | "ACCEPTED" | "REJECTED";

export interface SampleSentence {
  doc_id: string;
  sentence_id: number;
  text: string;
  subject_span: [number, number]; // inclusive 1-based token range
  object_span: [number, number];
}

export interface PatternRow {
  relation: string;
  sdp: string;
  rank: number;
  confidence: number;
  pos_count: number;
  neg_count: number;
  verdict: Verdict;
  sample_sentences: SampleSentence[];
}

export interface Progress {
  relation: string;
  total: number;
  labeled: number;
  accepted: number;
  rejected: number;
  session_elapsed: number; // seconds, server-reported
}

export interface QueueResponse {
  relation: string;
  patterns: PatternRow[];
}

export interface VerdictAck {
  relation: string;
  sdp: string;
  verdict: Verdict;
}
