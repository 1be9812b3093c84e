import express, { Express, NextFunction, Request, Response } from "express";

import { EncoderConfig, encodeBatch } from "./encoder.js";

export interface Service {
  app: Express;
  /** Resolves once the encoder is ready and /health turns 200. */
  whenReady: Promise<void>;
}

/**
 * Build the HTTP app around one encoder configuration.
 *
 * `load` stands in for model loading; endpoints answer 503 until it
 * resolves. The default loads instantly.
 */
export function createService(
  config: EncoderConfig,
  load: () => Promise<void> = async () => {}
): Service {
  const app = express();
  let ready = false;
  const whenReady = load().then(() => {
    ready = true;
  });

  app.use(express.json({ limit: "10mb" }));
  // body-parser SyntaxError -> client error, not a crash
  app.use((err: Error, _req: Request, res: Response, next: NextFunction) => {
    if (err instanceof SyntaxError) {
      res.status(400).json({ error: "body is not valid JSON" });
      return;
    }
    next(err);
  });

  const guard = (_req: Request, res: Response, next: NextFunction) => {
    if (!ready) {
      res.status(503).json({ error: "model loading" });
      return;
    }
    next();
  };

  app.get("/health", (_req, res) => {
    if (!ready) {
      res.status(503).send("loading");
      return;
    }
    res.status(200).send("ok");
  });

  app.get("/info", guard, (_req, res) => {
    res.json({ model: config.model, dim: config.dim, max_batch: config.maxBatch });
  });

  app.post("/embed", guard, (req, res) => {
    const body = req.body as { texts?: unknown };
    if (
      body === null ||
      typeof body !== "object" ||
      !Array.isArray(body.texts) ||
      body.texts.some((t) => typeof t !== "string")
    ) {
      res.status(400).json({ error: "body must be {\"texts\": [string, ...]}" });
      return;
    }
    const texts = body.texts as string[];
    if (texts.length > config.maxBatch) {
      res.status(413).json({
        error: `batch of ${texts.length} exceeds max_batch ${config.maxBatch}`,
      });
      return;
    }
    try {
      const vectors = encodeBatch(texts, config.dim);
      res.json({ vectors, model: config.model, dim: config.dim });
    } catch (err) {
      res.status(500).json({ error: String(err) });
    }
  });

  return { app, whenReady };
}
