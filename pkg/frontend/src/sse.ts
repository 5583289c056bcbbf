// Minimal server-sent-events reader over fetch streaming. Works both in
// the browser and under node (no EventSource dependency), and retries
// with a fixed backoff until aborted so a dropped connection shows a
// stale banner instead of silently dying.

export interface SseEvent {
  event: string;
  data: string;
}

export interface SseHandlers {
  onEvent: (event: SseEvent) => void;
  onStatus?: (connected: boolean) => void;
}

export async function subscribeSse(
  url: string,
  handlers: SseHandlers,
  signal: AbortSignal,
  retryMs = 2000,
): Promise<void> {
  while (!signal.aborted) {
    try {
      const response = await fetch(url, {
        headers: { Accept: 'text/event-stream' },
        signal,
      });
      if (!response.ok || !response.body) throw new Error(`stream ${response.status}`);
      handlers.onStatus?.(true);
      await readStream(response.body, handlers, signal);
    } catch (err) {
      if (signal.aborted) break;
    }
    handlers.onStatus?.(false);
    if (signal.aborted) break;
    await sleep(retryMs, signal);
  }
}

async function readStream(
  body: ReadableStream<Uint8Array>,
  handlers: SseHandlers,
  signal: AbortSignal,
): Promise<void> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = '';
  try {
    while (!signal.aborted) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let sep: number;
      while ((sep = buffer.indexOf('\n\n')) >= 0) {
        const frame = buffer.slice(0, sep);
        buffer = buffer.slice(sep + 2);
        const event = parseFrame(frame);
        if (event) handlers.onEvent(event);
      }
    }
  } finally {
    reader.releaseLock();
  }
}

export function parseFrame(frame: string): SseEvent | null {
  let event = 'message';
  const data: string[] = [];
  for (const line of frame.split('\n')) {
    if (line.startsWith(':')) continue; // comment / keepalive
    if (line.startsWith('event:')) event = line.slice(6).trim();
    else if (line.startsWith('data:')) data.push(line.slice(5).trim());
  }
  if (data.length === 0) return null;
  return { event, data: data.join('\n') };
}

function sleep(ms: number, signal: AbortSignal): Promise<void> {
  return new Promise((resolve) => {
    const timer = setTimeout(resolve, ms);
    signal.addEventListener('abort', () => {
      clearTimeout(timer);
      resolve();
    }, { once: true });
  });
}
