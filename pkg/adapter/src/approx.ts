/**
 * Weight-approximation directives: numeric-precision casts, dynamic int8
 * quantization, and magnitude pruning. Each transforms a weight matrix in
 * place-free fashion and is exactly reproducible (pure integer/bit math).
 */

export type Directive =
  | { kind: "none" }
  | { kind: "float16-cast" }
  | { kind: "bfloat16-cast" }
  | { kind: "int8-dynamic-quant" }
  | { kind: "l1-unstructured-prune"; fraction: number };

export function parseDirective(text: string): Directive {
  if (text === "none" || text === "") return { kind: "none" };
  if (text === "float16-cast") return { kind: "float16-cast" };
  if (text === "bfloat16-cast") return { kind: "bfloat16-cast" };
  if (text === "int8-dynamic-quant") return { kind: "int8-dynamic-quant" };
  const prune = text.match(/^l1-unstructured-prune:([0-9.]+)$/);
  if (prune) {
    const fraction = Number(prune[1]);
    if (!(fraction >= 0 && fraction < 1)) {
      throw new Error(`prune fraction must be in [0, 1), got ${fraction}`);
    }
    return { kind: "l1-unstructured-prune", fraction };
  }
  throw new Error(
    `unknown approximation ${JSON.stringify(text)}; expected none, float16-cast, ` +
      `bfloat16-cast, int8-dynamic-quant, or l1-unstructured-prune:FRACTION`
  );
}

export function directiveLabel(d: Directive): string {
  return d.kind === "l1-unstructured-prune" ? `${d.kind}:${d.fraction}` : d.kind;
}

const scratch = new DataView(new ArrayBuffer(4));

export function f16RoundTrip(value: number): number {
  scratch.setFloat32(0, value, true);
  const x = scratch.getUint32(0, true);
  const sign = (x >>> 16) & 0x8000;
  const exp32 = (x >>> 23) & 0xff;
  let mant = x & 0x7fffff;

  let half: number;
  if (exp32 === 0xff) {
    half = sign | 0x7c00 | (mant ? 0x200 : 0); // inf / quiet NaN
  } else {
    const e = exp32 - 127 + 15;
    if (e >= 0x1f) {
      half = sign | 0x7c00; // overflow to inf
    } else if (e <= 0) {
      if (e < -10) {
        half = sign; // underflow to zero
      } else {
        // subnormal half, round to nearest even
        mant |= 0x800000;
        const shift = 14 - e;
        const kept = mant >>> shift;
        const rest = mant & ((1 << shift) - 1);
        const halfway = 1 << (shift - 1);
        half = sign | (kept + (rest > halfway || (rest === halfway && (kept & 1)) ? 1 : 0));
      }
    } else {
      let kept = (e << 10) | (mant >>> 13);
      const rest = mant & 0x1fff;
      if (rest > 0x1000 || (rest === 0x1000 && (kept & 1))) {
        kept += 1; // carry may roll into the exponent; that is correct RTNE
      }
      half = sign | kept;
    }
  }

  // expand back to float32
  const hSign = (half & 0x8000) << 16;
  const hExp = (half >>> 10) & 0x1f;
  let hMant = half & 0x3ff;
  let bits: number;
  if (hExp === 0) {
    if (hMant === 0) {
      bits = hSign;
    } else {
      let e = -1;
      do {
        hMant <<= 1;
        e++;
      } while (!(hMant & 0x400));
      bits = hSign | ((127 - 15 - e) << 23) | ((hMant & 0x3ff) << 13);
    }
  } else if (hExp === 0x1f) {
    bits = hSign | 0x7f800000 | (hMant << 13);
  } else {
    bits = hSign | ((hExp - 15 + 127) << 23) | (hMant << 13);
  }
  scratch.setUint32(0, bits >>> 0, true);
  return scratch.getFloat32(0, true);
}

export function bf16RoundTrip(value: number): number {
  scratch.setFloat32(0, value, true);
  let x = scratch.getUint32(0, true);
  if ((x & 0x7fffffff) > 0x7f800000) {
    x = (x | 0x00400000) & 0xffff0000; // quiet the NaN, truncate
  } else {
    const lsb = (x >>> 16) & 1;
    x = (x + 0x7fff + lsb) & 0xffff0000; // round to nearest even on bit 16
  }
  scratch.setUint32(0, x >>> 0, true);
  return scratch.getFloat32(0, true);
}

/** Per-output-channel symmetric int8 quantization with dequantized apply. */
export function int8DynamicQuant(rows: number[][]): number[][] {
  return rows.map((row) => {
    let peak = 0;
    for (const w of row) peak = Math.max(peak, Math.abs(w));
    if (peak === 0) return row.slice();
    const scale = peak / 127;
    return row.map((w) => {
      const q = Math.max(-127, Math.min(127, Math.round(w / scale)));
      return q * scale;
    });
  });
}

/** Zero the `fraction` of weights with smallest |w| across the whole matrix. */
export function l1Prune(rows: number[][], fraction: number): number[][] {
  const flat: Array<{ mag: number; r: number; c: number }> = [];
  rows.forEach((row, r) => row.forEach((w, c) => flat.push({ mag: Math.abs(w), r, c })));
  const drop = Math.floor(flat.length * fraction);
  flat.sort((a, b) => a.mag - b.mag || a.r - b.r || a.c - b.c);
  const out = rows.map((row) => row.slice());
  for (let i = 0; i < drop; i++) {
    out[flat[i].r][flat[i].c] = 0;
  }
  return out;
}

export function applyDirective(rows: number[][], d: Directive): number[][] {
  switch (d.kind) {
    case "none":
      return rows.map((row) => row.slice());
    case "float16-cast":
      return rows.map((row) => row.map(f16RoundTrip));
    case "bfloat16-cast":
      return rows.map((row) => row.map(bf16RoundTrip));
    case "int8-dynamic-quant":
      return int8DynamicQuant(rows);
    case "l1-unstructured-prune":
      return l1Prune(rows, d.fraction);
  }
}
