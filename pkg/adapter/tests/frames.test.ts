import { describe, expect, it } from "vitest";

import { decodePayload, encodeFrame, FrameDecoder, readFloats } from "../src/frames.js";

describe("frame codec", () => {
  it("round-trips header and body", () => {
    const body = Buffer.from([1, 2, 3, 4]);
    const frame = encodeFrame({ op: "predict", count: 1 }, body);
    expect(frame.readUInt32LE(0)).toBe(frame.length - 4);
    const { header, body: got } = decodePayload(frame.subarray(4));
    expect(header).toEqual({ op: "predict", count: 1 });
    expect(Buffer.compare(got, body)).toBe(0);
  });

  it("rejects payloads without a header newline", () => {
    expect(() => decodePayload(Buffer.from('{"op":"info"}'))).toThrow(/newline/);
  });

  it("splits frames across arbitrary chunk boundaries", () => {
    const frames = [
      encodeFrame({ op: "info" }),
      encodeFrame({ op: "predict", count: 2 }, Buffer.alloc(8)),
      encodeFrame({ ok: true }),
    ];
    const stream = Buffer.concat(frames);
    for (const chunkSize of [1, 3, 7, stream.length]) {
      const decoder = new FrameDecoder();
      const payloads: Buffer[] = [];
      for (let at = 0; at < stream.length; at += chunkSize) {
        payloads.push(...decoder.push(stream.subarray(at, at + chunkSize)));
      }
      expect(payloads.length).toBe(3);
      expect(decodePayload(payloads[0]).header).toEqual({ op: "info" });
    }
  });

  it("reads little-endian float32 bodies", () => {
    const body = Buffer.alloc(8);
    body.writeFloatLE(1.5, 0);
    body.writeFloatLE(-2.25, 4);
    const values = readFloats(body, 2);
    expect(Array.from(values)).toEqual([1.5, -2.25]);
    expect(() => readFloats(body, 3)).toThrow(/expected 12/);
  });
});
