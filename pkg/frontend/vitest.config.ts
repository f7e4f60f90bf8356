import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // The integration test boots a real collection service in a child
    // process, so give it room.
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
