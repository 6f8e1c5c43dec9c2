// Keep main.ts from auto-booting against a real bundle when imported in tests.
(window as unknown as { __TRACEKIT_READER_TESTING__: boolean }).__TRACEKIT_READER_TESTING__ = true;
