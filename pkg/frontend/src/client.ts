/** WebSocket wrapper with automatic reconnect and exponential backoff.
 *
 * The socket constructor and timer are injectable so tests can drive the
 * whole lifecycle with fakes; the browser entry point uses the real ones.
 */

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export interface ClientOptions {
  socketFactory?: (url: string) => SocketLike;
  schedule?: (fn: () => void, ms: number) => unknown;
  baseRetryMs?: number;
  maxRetryMs?: number;
  onOpen?: () => void;
  onMessage?: (text: string) => void;
  /** called with the delay until the next reconnect attempt */
  onDisconnect?: (retryInMs: number) => void;
}

export class ReconnectingClient {
  private readonly url: string;
  private readonly factory: (url: string) => SocketLike;
  private readonly schedule: (fn: () => void, ms: number) => unknown;
  private readonly baseRetryMs: number;
  private readonly maxRetryMs: number;
  private readonly handlers: Pick<ClientOptions, "onOpen" | "onMessage" | "onDisconnect">;

  private socket: SocketLike | null = null;
  private retryMs: number;
  private stopped = false;
  private closing = false;

  constructor(url: string, options: ClientOptions = {}) {
    this.url = url;
    this.factory = options.socketFactory ?? ((u) => new WebSocket(u) as unknown as SocketLike);
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.baseRetryMs = options.baseRetryMs ?? 500;
    this.maxRetryMs = options.maxRetryMs ?? 8000;
    this.retryMs = this.baseRetryMs;
    this.handlers = options;
  }

  connect(): void {
    if (this.stopped) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.retryMs = this.baseRetryMs;
      this.handlers.onOpen?.();
    };
    socket.onmessage = (ev) => {
      if (typeof ev.data === "string") this.handlers.onMessage?.(ev.data);
    };
    socket.onclose = () => this.handleDown();
    socket.onerror = () => {
      /* the close event follows and drives the retry */
    };
  }

  private handleDown(): void {
    if (this.stopped || this.closing) return;
    this.closing = true;
    const delay = this.retryMs;
    this.handlers.onDisconnect?.(delay);
    this.retryMs = Math.min(this.retryMs * 2, this.maxRetryMs);
    this.schedule(() => {
      this.closing = false;
      this.connect();
    }, delay);
  }

  send(text: string): boolean {
    try {
      this.socket?.send(text);
      return true;
    } catch {
      return false;
    }
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }
}
