/**
 * Line transports. The browser uses a WebSocket (the server upgrades an HTTP
 * GET on the same port); tests under node use a raw TCP socket speaking
 * newline-delimited JSON directly.
 */

export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export class WsTransport implements Transport {
  private ws: WebSocket;
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => this.lineCb?.(String(ev.data));
    this.ws.onclose = () => this.closeCb?.();
    this.ws.onerror = () => this.closeCb?.();
  }

  ready(): Promise<void> {
    if (this.ws.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve, reject) => {
      this.ws.addEventListener("open", () => resolve(), { once: true });
      this.ws.addEventListener("error", () => reject(new Error("connect failed")), { once: true });
    });
  }

  send(line: string): void {
    this.ws.send(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.ws.close();
  }
}

/** Splits a byte stream into newline-terminated lines. */
export class LineSplitter {
  private buffer = "";

  constructor(private emit: (line: string) => void) {}

  push(chunk: string): void {
    this.buffer += chunk;
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      if (line.trim().length > 0) this.emit(line);
    }
  }
}
