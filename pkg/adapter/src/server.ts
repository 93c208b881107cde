/**
 * Request loop: one frame in, one frame out, no state between requests.
 * A malformed payload produces an error response and the loop continues;
 * only a broken length framing ends the stream.
 */

import { Writable } from "node:stream";

import { decodePayload, encodeFrame, FrameDecoder, readFloats } from "./frames.js";
import { Model } from "./model.js";

export interface ServerConfig {
  model: Model;
  batchCap: number;
}

export function handlePayload(payload: Buffer, config: ServerConfig): Buffer {
  let header: Record<string, unknown>;
  let body: Buffer;
  try {
    ({ header, body } = decodePayload(payload));
  } catch (err) {
    return encodeFrame({ ok: false, error: `malformed frame: ${(err as Error).message}` });
  }

  try {
    const op = header["op"];
    if (op === "info") {
      return encodeFrame({
        ok: true,
        label_count: config.model.labelCount,
        model: config.model.identity,
      });
    }
    if (op === "predict") {
      const count = Number(header["count"]);
      const dim = Number(header["dim"]);
      const dtype = header["dtype"];
      if (!Number.isInteger(count) || count < 1 || !Number.isInteger(dim) || dim < 1) {
        return encodeFrame({ ok: false, error: "predict needs positive integer count and dim" });
      }
      if (dtype !== "f32") {
        return encodeFrame({ ok: false, error: `unsupported dtype ${JSON.stringify(dtype)}` });
      }
      if (count > config.batchCap) {
        return encodeFrame({
          ok: false,
          error: `batch of ${count} exceeds the cap of ${config.batchCap}`,
        });
      }
      if (config.model.dim !== null && dim !== config.model.dim) {
        return encodeFrame({
          ok: false,
          error: `model expects dimension ${config.model.dim}, request carries ${dim}`,
        });
      }
      const values = readFloats(body, count * dim);
      const labels = config.model.predict(values, count, dim);
      return encodeFrame({ ok: true, labels });
    }
    return encodeFrame({ ok: false, error: `unknown op ${JSON.stringify(op)}` });
  } catch (err) {
    return encodeFrame({ ok: false, error: (err as Error).message });
  }
}

export function attach(
  input: NodeJS.ReadableStream,
  output: Writable,
  config: ServerConfig
): void {
  const decoder = new FrameDecoder();
  input.on("data", (chunk: Buffer) => {
    for (const payload of decoder.push(chunk)) {
      output.write(handlePayload(payload, config));
    }
  });
}
