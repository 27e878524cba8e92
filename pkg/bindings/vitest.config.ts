import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    include: ['tests/**/*.test.ts'],
    // Fixture corpora are generated through the Python CLI before the
    // suites run, so hooks get a generous budget.
    hookTimeout: 120_000,
    testTimeout: 120_000,
  },
});
