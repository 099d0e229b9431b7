/**
 * Embedding sidecar entry point.
 *
 *   node dist/main.js --stdio       one connection over stdin/stdout
 *   node dist/main.js --port 7071   TCP server, one client per socket
 */

import * as net from "node:net";
import * as process from "node:process";

import { LineSplitter, handleLine } from "./protocol.js";

function runStdio(): void {
  const splitter = new LineSplitter();
  process.stdin.setEncoding("utf8");
  process.stdin.on("data", (chunk: string) => {
    for (const line of splitter.push(chunk)) {
      process.stdout.write(handleLine(line) + "\n");
    }
  });
  process.stdin.on("end", () => process.exit(0));
}

function runTcp(port: number): void {
  const server = net.createServer((socket) => {
    const splitter = new LineSplitter();
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) => {
      for (const line of splitter.push(chunk)) {
        socket.write(handleLine(line) + "\n");
      }
    });
    socket.on("error", () => socket.destroy());
  });
  server.listen(port, "127.0.0.1", () => {
    // parseable readiness line for supervisors
    console.error(`listening on 127.0.0.1:${port}`);
  });
}

function main(): void {
  const args = process.argv.slice(2);
  const portIdx = args.indexOf("--port");
  if (portIdx >= 0) {
    const port = Number(args[portIdx + 1]);
    if (!Number.isInteger(port) || port <= 0) {
      console.error("usage: main.js --stdio | --port N");
      process.exit(2);
    }
    runTcp(port);
  } else {
    runStdio();
  }
}

main();
