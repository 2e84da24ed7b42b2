/**
 * Test plumbing: a node TCP transport for the NDJSON protocol, a fake
 * transport for unit tests, and a child-process harness that boots the real
 * Python engine server.
 */

import { spawn, ChildProcess } from "node:child_process";
import net from "node:net";
import path from "node:path";
import { fileURLToPath } from "node:url";

import { Transport, LineSplitter } from "../src/transport.js";
import { ServerMessage, parseServerMessage } from "../src/protocol.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
export const REPO_ROOT = path.resolve(HERE, "..", "..");

export class TcpTransport implements Transport {
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;
  private splitter = new LineSplitter((line) => this.lineCb?.(line));

  private constructor(private socket: net.Socket) {
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) => this.splitter.push(chunk));
    socket.on("close", () => this.closeCb?.());
    socket.on("error", () => this.closeCb?.());
  }

  static connect(host: string, port: number): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () =>
        resolve(new TcpTransport(socket))
      );
      socket.on("error", reject);
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.socket.end();
    this.socket.destroy();
  }
}

/** Unit-test transport: records sends, lets tests push server lines. */
export class FakeTransport implements Transport {
  sent: string[] = [];
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  send(line: string): void {
    this.sent.push(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {}

  pushServer(msg: object): void {
    this.lineCb?.(JSON.stringify(msg));
  }

  dropConnection(): void {
    this.closeCb?.();
  }
}

export interface LiveServer {
  host: string;
  port: number;
  proc: ChildProcess;
  stop(): Promise<void>;
}

/** Boot `lively serve` paused on an ephemeral port; resolves once bound. */
export function startEngineServer(seed: number, extraArgs: string[] = []): Promise<LiveServer> {
  return new Promise((resolve, reject) => {
    const proc = spawn(
      "python3",
      ["-m", "lively", "serve", "--listen", "127.0.0.1:0", "--paused",
       "--seed", String(seed), ...extraArgs],
      {
        cwd: REPO_ROOT,
        env: { ...process.env, PYTHONPATH: path.join(REPO_ROOT, "src") },
        stdio: ["ignore", "pipe", "pipe"],
      }
    );
    let out = "";
    let err = "";
    const timer = setTimeout(() => {
      proc.kill();
      reject(new Error(`server did not bind. stdout=${out} stderr=${err}`));
    }, 15000);
    proc.stdout!.setEncoding("utf8");
    proc.stderr!.setEncoding("utf8");
    proc.stderr!.on("data", (d: string) => (err += d));
    proc.stdout!.on("data", (d: string) => {
      out += d;
      const m = out.match(/listening on ([\d.]+):(\d+)/);
      if (m) {
        clearTimeout(timer);
        resolve({
          host: m[1],
          port: Number(m[2]),
          proc,
          stop: () =>
            new Promise<void>((res) => {
              proc.once("exit", () => res());
              proc.kill("SIGTERM");
              setTimeout(() => {
                proc.kill("SIGKILL");
                res();
              }, 3000).unref();
            }),
        });
      }
    });
    proc.on("error", (e) => {
      clearTimeout(timer);
      reject(e);
    });
  });
}

/** Collects every server message and supports awaiting specific ones. */
export class MessageLog {
  all: ServerMessage[] = [];
  private waiters: { test: (m: ServerMessage) => boolean; resolve: (m: ServerMessage) => void }[] = [];

  attach(transport: Transport, alsoLine?: (line: string) => void): void {
    transport.onLine((line) => {
      alsoLine?.(line);
      const msg = parseServerMessage(line);
      this.all.push(msg);
      for (let i = 0; i < this.waiters.length; i++) {
        if (this.waiters[i].test(msg)) {
          const [w] = this.waiters.splice(i, 1);
          w.resolve(msg);
          break;
        }
      }
    });
  }

  waitFor(test: (m: ServerMessage) => boolean, timeoutMs = 10000): Promise<ServerMessage> {
    const existing = this.all.find(test);
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error(`timeout waiting for message; saw ${this.all.length}`)),
        timeoutMs
      );
      this.waiters.push({
        test,
        resolve: (m) => {
          clearTimeout(timer);
          resolve(m);
        },
      });
      if (existing) {
        // already seen before the waiter registered
        const idx = this.waiters.length - 1;
        this.waiters.splice(idx, 1);
        clearTimeout(timer);
        resolve(existing);
      }
    });
  }

  ackOf(cmdId: string, timeoutMs = 10000): Promise<ServerMessage> {
    return this.waitFor((m) => (m.type === "ack" || m.type === "error") && m.cmd_id === cmdId, timeoutMs);
  }

  telemetryCount(): number {
    return this.all.filter((m) => m.type === "telemetry").length;
  }

  waitForTelemetryCount(n: number, timeoutMs = 10000): Promise<void> {
    return new Promise((resolve, reject) => {
      const t0 = Date.now();
      const poll = () => {
        if (this.telemetryCount() >= n) return resolve();
        if (Date.now() - t0 > timeoutMs) {
          return reject(new Error(`timeout: ${this.telemetryCount()}/${n} frames`));
        }
        setTimeout(poll, 10);
      };
      poll();
    });
  }
}
