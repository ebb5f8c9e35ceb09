import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // The end-to-end file drives a really spawned review service and
    // must not share ports with a parallel copy of itself.
    fileParallelism: false,
  },
});
