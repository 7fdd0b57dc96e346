/**
 * client.ts — idiomatic wrapper over the flat-buffer symbols.
 *
 * `LlrftClient` takes ordinary nested arrays, packs them into the typed
 * array + offsets form, and delegates to the `llrft_v1_*` entry points,
 * so single calls and batches exercise exactly the same wire path.
 */

import { LlrftCode, LlrftError } from "./codes.js";
import {
  llrft_v1_batch_advantages,
  llrft_v1_batch_codec_decode,
  llrft_v1_batch_codec_encode,
  llrft_v1_batch_format_check,
  llrft_v1_batch_mdpr,
  llrft_v1_health,
  type AdvantagesResult,
  type CodecSpecJson,
  type DecodeResult,
  type EncodeResult,
  type FetchLike,
  type FormatCheckResult,
  type RewardWeightsJson,
  type ScoreResult,
} from "./symbols.js";

export interface LlrftClientOptions {
  /** Override the global `fetch`, e.g. to add auth or record traffic. */
  fetchImpl?: FetchLike;
}

/** Pack a ragged list of integer streams into (flat, offsets) CSR form. */
export function packStreams(streams: number[][]): {
  flat: Int32Array;
  offsets: Uint32Array;
} {
  let total = 0;
  for (const s of streams) total += s.length;
  const flat = new Int32Array(total);
  const offsets = new Uint32Array(streams.length + 1);
  let at = 0;
  for (let i = 0; i < streams.length; i++) {
    offsets[i] = at;
    for (const t of streams[i]!) {
      if (!Number.isInteger(t)) {
        throw new LlrftError(
          LlrftCode.INVALID_ARGUMENT,
          `stream ${i}: token ${t} is not an integer`,
        );
      }
      flat[at++] = t;
    }
  }
  offsets[streams.length] = at;
  return { flat, offsets };
}

/** Pack a ragged list of double groups into (flat, offsets) CSR form. */
export function packGroups(groups: number[][]): {
  flat: Float64Array;
  offsets: Uint32Array;
} {
  let total = 0;
  for (const g of groups) total += g.length;
  const flat = new Float64Array(total);
  const offsets = new Uint32Array(groups.length + 1);
  let at = 0;
  for (let i = 0; i < groups.length; i++) {
    offsets[i] = at;
    for (const r of groups[i]!) flat[at++] = r;
  }
  offsets[groups.length] = at;
  return { flat, offsets };
}

export class LlrftClient {
  readonly baseUrl: string;
  private readonly fetchImpl?: FetchLike;

  constructor(baseUrl: string, options: LlrftClientOptions = {}) {
    this.baseUrl = baseUrl;
    this.fetchImpl = options.fetchImpl;
  }

  /** Service version string; throws if the service is unreachable. */
  health(): Promise<string> {
    return llrft_v1_health(this.baseUrl, this.fetchImpl);
  }

  /** Score predicted/ground-truth token-stream pairs. */
  scorePairs(
    spec: CodecSpecJson,
    weights: RewardWeightsJson,
    pairs: Array<{ pred: number[]; gt: number[] }>,
  ): Promise<ScoreResult[]> {
    const pred = packStreams(pairs.map((p) => p.pred));
    const gt = packStreams(pairs.map((p) => p.gt));
    return llrft_v1_batch_mdpr(
      this.baseUrl,
      spec,
      weights,
      pred.flat,
      pred.offsets,
      gt.flat,
      gt.offsets,
      this.fetchImpl,
    );
  }

  /** Score a single pair; wraps the batch call. */
  async score(
    spec: CodecSpecJson,
    weights: RewardWeightsJson,
    pred: number[],
    gt: number[],
  ): Promise<ScoreResult> {
    const [result] = await this.scorePairs(spec, weights, [{ pred, gt }]);
    return result!;
  }

  /** Group-standardized advantages for each reward group. */
  advantages(groups: number[][], stdFloor = 1e-8): Promise<AdvantagesResult[]> {
    const packed = packGroups(groups);
    return llrft_v1_batch_advantages(
      this.baseUrl,
      packed.flat,
      packed.offsets,
      stdFloor,
      this.fetchImpl,
    );
  }

  /** Encode h-by-d action chunks into token streams. */
  encode(spec: CodecSpecJson, chunks: number[][][]): Promise<EncodeResult[]> {
    const block = spec.h * spec.d;
    const flat = new Float64Array(chunks.length * block);
    let at = 0;
    for (let i = 0; i < chunks.length; i++) {
      const chunk = chunks[i]!;
      if (chunk.length !== spec.h) {
        throw new LlrftError(
          LlrftCode.INVALID_ARGUMENT,
          `chunk ${i}: expected ${spec.h} rows, got ${chunk.length}`,
        );
      }
      for (const row of chunk) {
        if (row.length !== spec.d) {
          throw new LlrftError(
            LlrftCode.INVALID_ARGUMENT,
            `chunk ${i}: expected rows of ${spec.d} values, got ${row.length}`,
          );
        }
        for (const v of row) flat[at++] = v;
      }
    }
    return llrft_v1_batch_codec_encode(this.baseUrl, spec, flat, this.fetchImpl);
  }

  /** Decode token streams back into action chunks. */
  decode(spec: CodecSpecJson, streams: number[][]): Promise<DecodeResult[]> {
    const packed = packStreams(streams);
    return llrft_v1_batch_codec_decode(
      this.baseUrl,
      spec,
      packed.flat,
      packed.offsets,
      this.fetchImpl,
    );
  }

  /** Validity verdict for each token stream, without reconstruction. */
  formatCheck(
    spec: CodecSpecJson,
    streams: number[][],
  ): Promise<FormatCheckResult[]> {
    const packed = packStreams(streams);
    return llrft_v1_batch_format_check(
      this.baseUrl,
      spec,
      packed.flat,
      packed.offsets,
      this.fetchImpl,
    );
  }
}
