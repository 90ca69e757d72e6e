/**
 * Trailing-edge debounce: the wrapped function runs `delayMs` after the
 * last call. Used for slider- and keystroke-driven what-if updates.
 */
// eslint-disable-next-line @typescript-eslint/no-explicit-any
export function debounce<T extends (...args: any[]) => void>(
  fn: T,
  delayMs: number,
): T & { cancel(): void; flush(): void } {
  let timerId: ReturnType<typeof setTimeout> | null = null;
  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  let pendingArgs: any[] | null = null;

  // eslint-disable-next-line @typescript-eslint/no-explicit-any
  const debounced = ((...args: any[]) => {
    pendingArgs = args;
    if (timerId !== null) clearTimeout(timerId);
    timerId = setTimeout(() => {
      timerId = null;
      const callArgs = pendingArgs ?? [];
      pendingArgs = null;
      fn(...callArgs);
    }, delayMs);
  }) as T & { cancel(): void; flush(): void };

  debounced.cancel = () => {
    if (timerId !== null) {
      clearTimeout(timerId);
      timerId = null;
    }
    pendingArgs = null;
  };

  debounced.flush = () => {
    if (timerId !== null) {
      clearTimeout(timerId);
      timerId = null;
      const callArgs = pendingArgs ?? [];
      pendingArgs = null;
      fn(...callArgs);
    }
  };

  return debounced;
}
