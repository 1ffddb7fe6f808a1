import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the e2e suite boots the Python service, give it room
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
