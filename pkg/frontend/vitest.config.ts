import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // The parity suite drives a real service instance through ten thousand
    // randomized inputs; give it room.
    testTimeout: 300_000,
    hookTimeout: 120_000,
  },
});
