// Ambient declaration for the optional pretrained-model backend, so the
// build succeeds when the package is not installed. The import is dynamic
// and guarded at runtime.
declare module '@xenova/transformers' {
  export function pipeline(task: string, model?: string, options?: unknown): Promise<any>;
}
