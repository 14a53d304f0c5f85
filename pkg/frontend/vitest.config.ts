import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    globalSetup: ["./test/global_setup.ts"],
    // the fixture server trains a model before it comes up
    hookTimeout: 180_000,
    testTimeout: 60_000,
  },
});
