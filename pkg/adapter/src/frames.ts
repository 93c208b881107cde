/**
 * Length-prefixed frame codec shared with the certification engine.
 *
 * Frame layout: 4-byte little-endian payload length, then the payload:
 * one UTF-8 JSON header line terminated by "\n", followed by the binary
 * body (predict requests carry count*dim little-endian float32 values).
 */

export interface Frame {
  header: Record<string, unknown>;
  body: Buffer;
}

export function encodeFrame(header: Record<string, unknown>, body: Buffer = Buffer.alloc(0)): Buffer {
  const head = Buffer.from(JSON.stringify(header) + "\n", "utf8");
  const length = Buffer.alloc(4);
  length.writeUInt32LE(head.length + body.length, 0);
  return Buffer.concat([length, head, body]);
}

export function decodePayload(payload: Buffer): Frame {
  const newline = payload.indexOf(0x0a);
  if (newline < 0) {
    throw new Error("malformed frame: missing header newline");
  }
  const header = JSON.parse(payload.subarray(0, newline).toString("utf8"));
  return { header, body: payload.subarray(newline + 1) };
}

/** Incremental frame splitter over a byte stream. */
export class FrameDecoder {
  private buffer: Buffer = Buffer.alloc(0);

  /** Feed raw bytes; returns every completed payload (undecoded). */
  push(chunk: Buffer): Buffer[] {
    this.buffer = this.buffer.length === 0 ? chunk : Buffer.concat([this.buffer, chunk]);
    const payloads: Buffer[] = [];
    while (this.buffer.length >= 4) {
      const length = this.buffer.readUInt32LE(0);
      if (this.buffer.length < 4 + length) {
        break;
      }
      payloads.push(this.buffer.subarray(4, 4 + length));
      this.buffer = this.buffer.subarray(4 + length);
    }
    return payloads;
  }
}

export function readFloats(body: Buffer, count: number): Float64Array {
  if (body.length !== count * 4) {
    throw new Error(`body carries ${body.length} bytes, expected ${count * 4}`);
  }
  const out = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = body.readFloatLE(i * 4);
  }
  return out;
}
