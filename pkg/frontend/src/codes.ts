/**
 * codes.ts — stable integer error codes shared with the llrft service.
 *
 * The codes are the wire contract: clients branch on the integer, the
 * message is for humans. Decode failures keep their violation kind as a
 * distinct code so a caller can tell a truncated stream from an
 * out-of-vocabulary token without parsing prose.
 */

export enum LlrftCode {
  OK = 0,
  INVALID_ARGUMENT = 1,

  DECODE_LENGTH = 10,
  DECODE_VOCABULARY = 11,
  DECODE_EXPANSION_COUNT = 12,

  MALFORMED_MATRIX = 20,
  BAD_CHECKPOINT = 30,
}

/**
 * Request-level failure: the service rejected the whole call (bad spec,
 * bad weights, unreachable endpoint). Per-element failures never throw;
 * they come back inside the result array as `ApiError` entries.
 */
export class LlrftError extends Error {
  /** Integer error code from the service, `LlrftCode.INVALID_ARGUMENT` if unknown. */
  readonly code: number;
  /** HTTP status, when the failure came from a response. */
  readonly status?: number;

  constructor(code: number, message: string, status?: number) {
    super(message);
    this.name = "LlrftError";
    this.code = code;
    this.status = status;
  }
}
