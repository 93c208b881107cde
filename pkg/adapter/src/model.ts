/**
 * Model loading and inference. Two kinds:
 *  - "sign": labels by the sign of the first coordinate (trivial two-class
 *    model; the engine's echo-agreement tests use it),
 *  - "linear": argmax of W x + b with ties to the lowest class index;
 *    approximation directives transform W (and bias for the casts).
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import { applyDirective, Directive, directiveLabel } from "./approx.js";

export interface Model {
  labelCount: number;
  dim: number | null; // null accepts any request dimension
  identity: string;
  predict(batch: Float64Array, count: number, dim: number): number[];
}

interface ModelDoc {
  kind: string;
  weights?: number[][];
  bias?: number[];
}

class SignModel implements Model {
  labelCount = 2;
  dim = null;

  constructor(public identity: string) {}

  predict(batch: Float64Array, count: number, dim: number): number[] {
    const labels = new Array<number>(count);
    for (let i = 0; i < count; i++) {
      labels[i] = batch[i * dim] > 0 ? 1 : 0;
    }
    return labels;
  }
}

class LinearModel implements Model {
  labelCount: number;
  dim: number;

  constructor(
    private weights: number[][],
    private bias: number[],
    public identity: string
  ) {
    this.labelCount = weights.length;
    this.dim = weights[0].length;
  }

  predict(batch: Float64Array, count: number, dim: number): number[] {
    const labels = new Array<number>(count);
    for (let i = 0; i < count; i++) {
      let best = 0;
      let bestScore = -Infinity;
      for (let c = 0; c < this.labelCount; c++) {
        let score = this.bias[c];
        const row = this.weights[c];
        for (let j = 0; j < dim; j++) {
          score += row[j] * batch[i * dim + j];
        }
        if (score > bestScore) {
          bestScore = score;
          best = c;
        }
      }
      labels[i] = best;
    }
    return labels;
  }
}

export function loadModel(path: string, directive: Directive): Model {
  const raw = readFileSync(path);
  const digest = createHash("sha256").update(raw).digest("hex").slice(0, 16);
  const identity = `${digest}+${directiveLabel(directive)}@node${process.version}`;
  const doc = JSON.parse(raw.toString("utf8")) as ModelDoc;

  if (doc.kind === "sign") {
    if (directive.kind !== "none") {
      throw new Error("the sign model has no weights to approximate");
    }
    return new SignModel(identity);
  }
  if (doc.kind === "linear") {
    const weights = doc.weights;
    if (!Array.isArray(weights) || weights.length < 2 || !Array.isArray(weights[0])) {
      throw new Error(`${path}: linear model needs a (classes >= 2, dim) weight matrix`);
    }
    const dim = weights[0].length;
    if (weights.some((row) => row.length !== dim)) {
      throw new Error(`${path}: ragged weight matrix`);
    }
    let bias = doc.bias ?? new Array<number>(weights.length).fill(0);
    if (bias.length !== weights.length) {
      throw new Error(`${path}: bias length ${bias.length} != ${weights.length} classes`);
    }
    const approxWeights = applyDirective(weights, directive);
    if (directive.kind === "float16-cast" || directive.kind === "bfloat16-cast") {
      bias = applyDirective([bias], directive)[0];
    }
    return new LinearModel(approxWeights, bias, identity);
  }
  throw new Error(`${path}: unknown model kind ${JSON.stringify(doc.kind)}`);
}
