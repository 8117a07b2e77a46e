// genlink-bridge: expose a model as a next-token scorer over stdio (default)
// or TCP. Usage: node dist/src/main.js [--model echo|affine|neglen] [--tcp PORT]

import { modelByName } from "./models.js";
import { serveStreams, serveTcp } from "./serve.js";

interface Args {
  model: string;
  tcp: number | null;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { model: "echo", tcp: null };
  for (let i = 0; i < argv.length; i += 1) {
    const flag = argv[i];
    if (flag === "--model") {
      args.model = argv[++i] ?? "";
    } else if (flag === "--tcp") {
      const port = Number(argv[++i]);
      if (!Number.isInteger(port) || port < 0 || port > 65535) {
        throw new Error(`invalid --tcp port: ${argv[i]}`);
      }
      args.tcp = port;
    } else {
      throw new Error(`unknown flag: ${flag}`);
    }
  }
  return args;
}

async function main(): Promise<void> {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`${String(err)}\n`);
    process.exit(2);
  }
  const model = modelByName(args.model);
  if (args.tcp !== null) {
    const server = serveTcp(args.tcp, model);
    server.on("listening", () => {
      const address = server.address();
      const port = typeof address === "object" && address ? address.port : args.tcp;
      process.stderr.write(`genlink-bridge model=${model.name} listening on :${port}\n`);
    });
    return;
  }
  await serveStreams(process.stdin, process.stdout, model);
}

void main();
