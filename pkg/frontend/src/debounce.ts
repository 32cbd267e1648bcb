/** Debounced, latest-wins async pipeline: at most one in-flight request per
 * panel; a newer call cancels both the pending timer and the in-flight fetch. */

export interface Runner<T> {
  (task: (signal: AbortSignal) => Promise<T>): void;
  cancel(): void;
}

export function debouncedLatest<T>(
  waitMs: number,
  onResult: (value: T) => void,
  onError?: (err: unknown) => void,
): Runner<T> {
  let timer: ReturnType<typeof setTimeout> | null = null;
  let controller: AbortController | null = null;
  let generation = 0;

  const run = ((task: (signal: AbortSignal) => Promise<T>) => {
    if (timer !== null) clearTimeout(timer);
    const myGen = ++generation;
    timer = setTimeout(() => {
      timer = null;
      controller?.abort();
      controller = new AbortController();
      const signal = controller.signal;
      task(signal).then(
        (value) => {
          if (myGen === generation) onResult(value);
        },
        (err) => {
          if (myGen === generation && !signal.aborted) onError?.(err);
        },
      );
    }, waitMs);
  }) as Runner<T>;

  run.cancel = () => {
    if (timer !== null) clearTimeout(timer);
    timer = null;
    generation++;
    controller?.abort();
  };
  return run;
}
