import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the e2e suite synthesizes a corpus and runs real projection jobs
    testTimeout: 300_000,
    hookTimeout: 300_000,
    pool: "forks",
  },
});
