/**
 * Entry point. Serves one model per process over stdio (default) or TCP.
 *
 *   node dist/main.js --model models/sign.json
 *   node dist/main.js --model m.json --approx int8-dynamic-quant --tcp 9000
 */

import net from "node:net";
import process from "node:process";

import { parseDirective } from "./approx.js";
import { loadModel } from "./model.js";
import { attach } from "./server.js";

interface Args {
  model: string;
  approx: string;
  batchCap: number;
  tcp: number | null;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { model: "", approx: "none", batchCap: 256, tcp: null };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = () => {
      if (i + 1 >= argv.length) throw new Error(`${flag} needs a value`);
      return argv[++i];
    };
    if (flag === "--model") args.model = value();
    else if (flag === "--approx") args.approx = value();
    else if (flag === "--batch-cap") args.batchCap = Number(value());
    else if (flag === "--tcp") args.tcp = Number(value());
    else throw new Error(`unknown flag ${flag}`);
  }
  if (!args.model) throw new Error("--model is required");
  if (!Number.isInteger(args.batchCap) || args.batchCap < 1) {
    throw new Error("--batch-cap must be a positive integer");
  }
  return args;
}

function main(): void {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    process.exit(2);
  }

  let config;
  try {
    const model = loadModel(args.model, parseDirective(args.approx));
    config = { model, batchCap: args.batchCap };
  } catch (err) {
    console.error(`model load failed: ${(err as Error).message}`);
    process.exit(1);
  }

  if (args.tcp !== null) {
    const server = net.createServer((socket) => attach(socket, socket, config));
    server.listen(args.tcp, () => {
      console.error(`serving ${config.model.identity} on tcp port ${args.tcp}`);
    });
  } else {
    attach(process.stdin, process.stdout, config);
    process.stdin.on("end", () => process.exit(0));
  }
}

main();
