/**
 * symbols.ts — versioned flat-buffer entry points for the llrft service.
 *
 * Each `llrft_v1_*` function is the moral equivalent of a C export: inputs
 * are flat typed arrays plus an offsets table, outputs are plain result
 * records in batch order.  Ragged batches use the CSR convention —
 * `offsets` has one more entry than the batch has elements, starts at 0,
 * is nondecreasing, and ends at the flat buffer's length; element `i`
 * spans `flat[offsets[i] .. offsets[i+1])`.
 *
 * Framing errors (bad offsets, length mismatches) throw `LlrftError`
 * locally before any network traffic.  Request-level rejections from the
 * service (bad spec, bad weights) also throw.  Per-element failures never
 * throw: the element's result carries an `error` record and the rest of
 * the batch is unaffected.
 */

import { LlrftCode, LlrftError } from "./codes.js";

// ── Wire types ──────────────────────────────────────────────────────────

/** Codec geometry and normalization bounds, as the service serializes it. */
export interface CodecSpecJson {
  h: number;
  d: number;
  q: number;
  compression: "none" | "run-length";
  lower: number[];
  upper: number[];
}

/** Reward mixing weights. `lambda` is the format-compliance weight. */
export interface RewardWeightsJson {
  alpha: number;
  beta: number;
  omega: number;
  lambda: number;
}

/** One failed element of a batch request. */
export interface ApiError {
  code: number;
  message: string;
  index: number;
}

/** Reward terms for one predicted/ground-truth stream pair. */
export interface ScoreResult {
  qacr: number | null;
  ctar: number | null;
  fcr: number | null;
  mdpr: number | null;
  error: ApiError | null;
}

/** Token stream for one encoded chunk. */
export interface EncodeResult {
  tokens: number[] | null;
  error: ApiError | null;
}

/** Decoded h-by-d action chunk for one token stream. */
export interface DecodeResult {
  chunk: number[][] | null;
  error: ApiError | null;
}

/** Group-standardized advantages for one reward group. */
export interface AdvantagesResult {
  advantages: number[] | null;
  error: ApiError | null;
}

/** Validity verdict for one token stream. */
export interface FormatCheckResult {
  valid: boolean;
  violation: string | null;
  code: number;
}

/** Minimal fetch shape so callers can inject their own implementation. */
export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}>;

// ── Transport ───────────────────────────────────────────────────────────

async function post(
  baseUrl: string,
  path: string,
  body: unknown,
  fetchImpl?: FetchLike,
): Promise<unknown> {
  const doFetch = fetchImpl ?? (fetch as unknown as FetchLike);
  let response: Awaited<ReturnType<FetchLike>>;
  try {
    response = await doFetch(baseUrl.replace(/\/+$/, "") + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  } catch (cause) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `cannot reach service at ${baseUrl}: ${String(cause)}`,
    );
  }
  if (!response.ok) {
    throw await errorFromResponse(response);
  }
  return response.json();
}

async function errorFromResponse(
  response: Awaited<ReturnType<FetchLike>>,
): Promise<LlrftError> {
  let code = LlrftCode.INVALID_ARGUMENT;
  let message = `service returned HTTP ${response.status}`;
  try {
    const payload = (await response.json()) as { detail?: unknown };
    const detail = payload.detail;
    if (detail && typeof detail === "object") {
      const d = detail as { code?: unknown; message?: unknown };
      if (typeof d.code === "number") code = d.code;
      if (typeof d.message === "string") message = d.message;
    } else if (typeof detail === "string") {
      message = detail;
    }
  } catch {
    // Non-JSON body: keep the HTTP-status message.
  }
  return new LlrftError(code, message, response.status);
}

// ── Framing helpers ──────────────────────────────────────────────────────

/**
 * Validate a CSR offsets table against its flat buffer and return the
 * batch size. Throws `LlrftError(INVALID_ARGUMENT)` on any violation.
 */
function checkOffsets(
  offsets: Uint32Array,
  flatLength: number,
  what: string,
): number {
  if (offsets.length < 1) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `${what}: offsets must have at least one entry`,
    );
  }
  if (offsets[0] !== 0) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `${what}: offsets must start at 0, got ${offsets[0]}`,
    );
  }
  for (let i = 1; i < offsets.length; i++) {
    if (offsets[i]! < offsets[i - 1]!) {
      throw new LlrftError(
        LlrftCode.INVALID_ARGUMENT,
        `${what}: offsets must be nondecreasing, got ${offsets[i - 1]} then ${offsets[i]} at entry ${i}`,
      );
    }
  }
  const last = offsets[offsets.length - 1]!;
  if (last !== flatLength) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `${what}: offsets must end at the buffer length ${flatLength}, got ${last}`,
    );
  }
  return offsets.length - 1;
}

/** Slice a flat integer buffer into per-element arrays by CSR offsets. */
function sliceInts(flat: Int32Array, offsets: Uint32Array): number[][] {
  const out: number[][] = [];
  for (let i = 0; i + 1 < offsets.length; i++) {
    out.push(Array.from(flat.subarray(offsets[i]!, offsets[i + 1]!)));
  }
  return out;
}

/** Slice a flat double buffer into per-element arrays by CSR offsets. */
function sliceFloats(flat: Float64Array, offsets: Uint32Array): number[][] {
  const out: number[][] = [];
  for (let i = 0; i + 1 < offsets.length; i++) {
    out.push(Array.from(flat.subarray(offsets[i]!, offsets[i + 1]!)));
  }
  return out;
}

function resultsOf(payload: unknown, what: string): unknown[] {
  const results = (payload as { results?: unknown }).results;
  if (!Array.isArray(results)) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `${what}: malformed response, missing results array`,
    );
  }
  return results;
}

// ── v1 symbols ───────────────────────────────────────────────────────────

/**
 * llrft_v1_health(baseUrl) -> version string
 *
 * Probe the service. Resolves to the package version it reports; rejects
 * with `LlrftError` when the service is unreachable or unhealthy.
 */
export async function llrft_v1_health(
  baseUrl: string,
  fetchImpl?: FetchLike,
): Promise<string> {
  const doFetch = fetchImpl ?? (fetch as unknown as FetchLike);
  let response: Awaited<ReturnType<FetchLike>>;
  try {
    response = await doFetch(baseUrl.replace(/\/+$/, "") + "/v1/health", {
      method: "GET",
    });
  } catch (cause) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `cannot reach service at ${baseUrl}: ${String(cause)}`,
    );
  }
  if (!response.ok) {
    throw await errorFromResponse(response);
  }
  const payload = (await response.json()) as { status?: string; version?: string };
  if (payload.status !== "ok" || typeof payload.version !== "string") {
    throw new LlrftError(LlrftCode.INVALID_ARGUMENT, "service reported unhealthy");
  }
  return payload.version;
}

/**
 * llrft_v1_batch_mdpr(baseUrl, spec, weights,
 *                     predTokens, predOffsets, gtTokens, gtOffsets)
 *   -> ScoreResult[n]
 *
 * Score n predicted/ground-truth token-stream pairs. Both sides use the
 * CSR convention and must frame the same number of elements. Invalid
 * predictions score zero across the board (not an error); malformed
 * ground truth yields an `error` record for that element.
 */
export async function llrft_v1_batch_mdpr(
  baseUrl: string,
  spec: CodecSpecJson,
  weights: RewardWeightsJson,
  predTokens: Int32Array,
  predOffsets: Uint32Array,
  gtTokens: Int32Array,
  gtOffsets: Uint32Array,
  fetchImpl?: FetchLike,
): Promise<ScoreResult[]> {
  const nPred = checkOffsets(predOffsets, predTokens.length, "pred");
  const nGt = checkOffsets(gtOffsets, gtTokens.length, "gt");
  if (nPred !== nGt) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `pred frames ${nPred} streams but gt frames ${nGt}`,
    );
  }
  const preds = sliceInts(predTokens, predOffsets);
  const gts = sliceInts(gtTokens, gtOffsets);
  const payload = await post(
    baseUrl,
    "/v1/rewards/score",
    {
      spec,
      weights,
      pairs: preds.map((pred, i) => ({ pred, gt: gts[i]! })),
    },
    fetchImpl,
  );
  return resultsOf(payload, "score") as ScoreResult[];
}

/**
 * llrft_v1_batch_advantages(baseUrl, rewards, groupOffsets, stdFloor)
 *   -> AdvantagesResult[n]
 *
 * Standardize n reward groups to zero mean and unit population standard
 * deviation. Groups whose spread is below `stdFloor` come back as all
 * zeros; singleton groups are per-element errors.
 */
export async function llrft_v1_batch_advantages(
  baseUrl: string,
  rewards: Float64Array,
  groupOffsets: Uint32Array,
  stdFloor = 1e-8,
  fetchImpl?: FetchLike,
): Promise<AdvantagesResult[]> {
  checkOffsets(groupOffsets, rewards.length, "rewards");
  const payload = await post(
    baseUrl,
    "/v1/grpo/advantages",
    { groups: sliceFloats(rewards, groupOffsets), std_floor: stdFloor },
    fetchImpl,
  );
  return resultsOf(payload, "advantages") as AdvantagesResult[];
}

/**
 * llrft_v1_batch_codec_encode(baseUrl, spec, values) -> EncodeResult[n]
 *
 * Encode n action chunks. `values` is row-major: every consecutive
 * `spec.h * spec.d` doubles form one chunk (h rows of d values), so the
 * buffer length must be a multiple of that block size.
 */
export async function llrft_v1_batch_codec_encode(
  baseUrl: string,
  spec: CodecSpecJson,
  values: Float64Array,
  fetchImpl?: FetchLike,
): Promise<EncodeResult[]> {
  const block = spec.h * spec.d;
  if (!Number.isInteger(block) || block <= 0) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `spec frames an empty chunk (h=${spec.h}, d=${spec.d})`,
    );
  }
  if (values.length % block !== 0) {
    throw new LlrftError(
      LlrftCode.INVALID_ARGUMENT,
      `values length ${values.length} is not a multiple of h*d = ${block}`,
    );
  }
  const chunks: number[][][] = [];
  for (let start = 0; start < values.length; start += block) {
    const chunk: number[][] = [];
    for (let row = 0; row < spec.h; row++) {
      const at = start + row * spec.d;
      chunk.push(Array.from(values.subarray(at, at + spec.d)));
    }
    chunks.push(chunk);
  }
  const payload = await post(
    baseUrl,
    "/v1/codec/encode",
    { spec, chunks },
    fetchImpl,
  );
  return resultsOf(payload, "encode") as EncodeResult[];
}

/**
 * llrft_v1_batch_codec_decode(baseUrl, spec, tokens, offsets)
 *   -> DecodeResult[n]
 *
 * Decode n token streams framed by CSR offsets. Undecodable streams are
 * per-element errors whose code distinguishes the violation: 10 wrong
 * expanded length, 11 out-of-vocabulary token, 12 bad expansion count.
 */
export async function llrft_v1_batch_codec_decode(
  baseUrl: string,
  spec: CodecSpecJson,
  tokens: Int32Array,
  offsets: Uint32Array,
  fetchImpl?: FetchLike,
): Promise<DecodeResult[]> {
  checkOffsets(offsets, tokens.length, "tokens");
  const payload = await post(
    baseUrl,
    "/v1/codec/decode",
    { spec, streams: sliceInts(tokens, offsets) },
    fetchImpl,
  );
  return resultsOf(payload, "decode") as DecodeResult[];
}

/**
 * llrft_v1_batch_format_check(baseUrl, spec, tokens, offsets)
 *   -> FormatCheckResult[n]
 *
 * Cheap validity probe: like decode, but reports only the verdict and
 * the violation kind, never the reconstructed chunk.
 */
export async function llrft_v1_batch_format_check(
  baseUrl: string,
  spec: CodecSpecJson,
  tokens: Int32Array,
  offsets: Uint32Array,
  fetchImpl?: FetchLike,
): Promise<FormatCheckResult[]> {
  checkOffsets(offsets, tokens.length, "tokens");
  const payload = await post(
    baseUrl,
    "/v1/codec/format-check",
    { spec, streams: sliceInts(tokens, offsets) },
    fetchImpl,
  );
  return resultsOf(payload, "format-check") as FormatCheckResult[];
}
