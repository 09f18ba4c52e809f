import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { SessionEvent } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

export function loadEpisode(name: string): SessionEvent[] {
  const text = readFileSync(join(here, "fixtures", name), "utf-8");
  return text
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as SessionEvent);
}
