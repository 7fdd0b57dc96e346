/**
 * Local framing and error handling, no service required.
 *
 * Framing violations must be rejected before any network traffic, and the
 * transport must turn HTTP-level rejections into `LlrftError` with the
 * service's code attached.
 */

import { describe, expect, it } from "vitest";

import {
  LlrftClient,
  LlrftCode,
  LlrftError,
  llrft_v1_batch_advantages,
  llrft_v1_batch_codec_decode,
  llrft_v1_batch_codec_encode,
  llrft_v1_batch_mdpr,
  packGroups,
  packStreams,
  type CodecSpecJson,
  type FetchLike,
  type RewardWeightsJson,
} from "../src/index.js";

const SPEC: CodecSpecJson = {
  h: 2,
  d: 3,
  q: 4,
  compression: "none",
  lower: [0, 0, 0],
  upper: [1, 1, 1],
};

const WEIGHTS: RewardWeightsJson = {
  alpha: 5.0,
  beta: 0.8,
  omega: 0.7,
  lambda: 0.1,
};

/** fetch stand-in that records whether the wire was ever touched. */
function fetchSpy(): { impl: FetchLike; calls: () => number } {
  let count = 0;
  const impl: FetchLike = () => {
    count += 1;
    return Promise.reject(new Error("unexpected network call"));
  };
  return { impl, calls: () => count };
}

async function expectCode(promise: Promise<unknown>, code: number): Promise<LlrftError> {
  try {
    await promise;
  } catch (error) {
    expect(error).toBeInstanceOf(LlrftError);
    const e = error as LlrftError;
    expect(e.code).toBe(code);
    return e;
  }
  throw new Error("expected the call to reject");
}

describe("offsets framing is validated locally", () => {
  it("rejects offsets that do not start at zero", async () => {
    const spy = fetchSpy();
    await expectCode(
      llrft_v1_batch_codec_decode(
        "http://unused",
        SPEC,
        new Int32Array([1, 2, 3]),
        new Uint32Array([1, 3]),
        spy.impl,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(spy.calls()).toBe(0);
  });

  it("rejects decreasing offsets", async () => {
    const spy = fetchSpy();
    const e = await expectCode(
      llrft_v1_batch_codec_decode(
        "http://unused",
        SPEC,
        new Int32Array([1, 2, 3]),
        new Uint32Array([0, 3, 2, 3]),
        spy.impl,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(e.message).toContain("nondecreasing");
    expect(spy.calls()).toBe(0);
  });

  it("rejects offsets that do not end at the buffer length", async () => {
    const spy = fetchSpy();
    await expectCode(
      llrft_v1_batch_advantages(
        "http://unused",
        new Float64Array([1, 2, 3, 4]),
        new Uint32Array([0, 2, 3]),
        1e-8,
        spy.impl,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(spy.calls()).toBe(0);
  });

  it("rejects an empty offsets table", async () => {
    const spy = fetchSpy();
    await expectCode(
      llrft_v1_batch_advantages(
        "http://unused",
        new Float64Array(0),
        new Uint32Array(0),
        1e-8,
        spy.impl,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(spy.calls()).toBe(0);
  });

  it("rejects pred/gt tables that frame different batch sizes", async () => {
    const spy = fetchSpy();
    const e = await expectCode(
      llrft_v1_batch_mdpr(
        "http://unused",
        SPEC,
        WEIGHTS,
        new Int32Array([0, 1, 2, 3]),
        new Uint32Array([0, 2, 4]),
        new Int32Array([0, 1, 2]),
        new Uint32Array([0, 3]),
        spy.impl,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(e.message).toContain("2 streams");
    expect(spy.calls()).toBe(0);
  });

  it("rejects encode buffers that are not whole chunks", async () => {
    const spy = fetchSpy();
    const e = await expectCode(
      llrft_v1_batch_codec_encode(
        "http://unused",
        SPEC,
        new Float64Array(7),
        spy.impl,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(e.message).toContain("multiple of h*d");
    expect(spy.calls()).toBe(0);
  });
});

describe("packing helpers", () => {
  it("packStreams round-trips ragged token lists", () => {
    const { flat, offsets } = packStreams([[3, 1], [], [2]]);
    expect(Array.from(flat)).toEqual([3, 1, 2]);
    expect(Array.from(offsets)).toEqual([0, 2, 2, 3]);
  });

  it("packStreams rejects non-integer tokens", () => {
    expect(() => packStreams([[1.5]])).toThrowError(LlrftError);
  });

  it("packGroups round-trips ragged reward lists", () => {
    const { flat, offsets } = packGroups([[0.5], [1.5, -2.5]]);
    expect(Array.from(flat)).toEqual([0.5, 1.5, -2.5]);
    expect(Array.from(offsets)).toEqual([0, 1, 3]);
  });
});

describe("client-side shape checks happen before the wire", () => {
  it("rejects chunks with the wrong number of rows", () => {
    const spy = fetchSpy();
    const client = new LlrftClient("http://unused", { fetchImpl: spy.impl });
    expect(() => client.encode(SPEC, [[[0, 0, 0]]])).toThrowError(/expected 2 rows/);
    expect(spy.calls()).toBe(0);
  });

  it("rejects rows with the wrong number of values", () => {
    const spy = fetchSpy();
    const client = new LlrftClient("http://unused", { fetchImpl: spy.impl });
    expect(() =>
      client.encode(SPEC, [
        [
          [0, 0],
          [0, 0],
        ],
      ]),
    ).toThrowError(/rows of 3 values/);
    expect(spy.calls()).toBe(0);
  });
});

describe("transport failures surface as LlrftError", () => {
  it("wraps a connection failure", async () => {
    const failing: FetchLike = () => Promise.reject(new Error("ECONNREFUSED"));
    const e = await expectCode(
      llrft_v1_batch_advantages(
        "http://127.0.0.1:9",
        new Float64Array([1, 2]),
        new Uint32Array([0, 2]),
        1e-8,
        failing,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(e.message).toContain("cannot reach service");
  });

  it("carries the service's code and message out of an HTTP 400", async () => {
    const rejecting: FetchLike = () =>
      Promise.resolve({
        ok: false,
        status: 400,
        json: () =>
          Promise.resolve({
            detail: { code: LlrftCode.BAD_CHECKPOINT, message: "checkpoint is not valid base64" },
          }),
        text: () => Promise.resolve(""),
      });
    const e = await expectCode(
      llrft_v1_batch_advantages(
        "http://unused",
        new Float64Array([1, 2]),
        new Uint32Array([0, 2]),
        1e-8,
        rejecting,
      ),
      LlrftCode.BAD_CHECKPOINT,
    );
    expect(e.status).toBe(400);
    expect(e.message).toContain("base64");
  });

  it("keeps a generic message when the body is not JSON", async () => {
    const rejecting: FetchLike = () =>
      Promise.resolve({
        ok: false,
        status: 503,
        json: () => Promise.reject(new Error("not json")),
        text: () => Promise.resolve("Service Unavailable"),
      });
    const e = await expectCode(
      llrft_v1_batch_advantages(
        "http://unused",
        new Float64Array([1, 2]),
        new Uint32Array([0, 2]),
        1e-8,
        rejecting,
      ),
      LlrftCode.INVALID_ARGUMENT,
    );
    expect(e.status).toBe(503);
    expect(e.message).toContain("503");
  });
});
