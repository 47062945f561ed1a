// Spawns the Python service on a free loopback port for integration tests.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface LiveService {
  url: string;
  stop: () => void;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const address = srv.address();
      if (address === null || typeof address === "string") {
        reject(new Error("no port"));
        return;
      }
      srv.close(() => resolve(address.port));
    });
  });
}

export async function startService(): Promise<LiveService> {
  const port = await freePort();
  const child: ChildProcess = spawn(
    "python3",
    ["-c", "import sys; from rucs.service import main; sys.exit(main())", "--port", String(port)],
    // cwd in a temp dir so the service's trip-state files never land in the repo
    { stdio: ["ignore", "ignore", "pipe"], cwd: mkdtempSync(join(tmpdir(), "rucs-svc-")) },
  );
  let stderr = "";
  child.stderr?.on("data", (chunk) => (stderr += chunk));

  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20_000;
  for (;;) {
    if (child.exitCode !== null) {
      throw new Error(`service exited early (${child.exitCode}): ${stderr}`);
    }
    try {
      const resp = await fetch(`${url}/api/health`);
      if (resp.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      child.kill();
      throw new Error(`service did not come up: ${stderr}`);
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  return { url, stop: () => child.kill() };
}

export async function waitFor(
  predicate: () => boolean,
  timeoutMs = 5_000,
  what = "condition",
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (!predicate()) {
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 25));
  }
}
