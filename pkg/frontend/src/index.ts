export { LlrftCode, LlrftError } from "./codes.js";
export {
  llrft_v1_health,
  llrft_v1_batch_mdpr,
  llrft_v1_batch_advantages,
  llrft_v1_batch_codec_encode,
  llrft_v1_batch_codec_decode,
  llrft_v1_batch_format_check,
  type ApiError,
  type AdvantagesResult,
  type CodecSpecJson,
  type DecodeResult,
  type EncodeResult,
  type FetchLike,
  type FormatCheckResult,
  type RewardWeightsJson,
  type ScoreResult,
} from "./symbols.js";
export {
  LlrftClient,
  packGroups,
  packStreams,
  type LlrftClientOptions,
} from "./client.js";
