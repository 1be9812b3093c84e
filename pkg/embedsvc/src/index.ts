import { configFromEnv } from "./encoder.js";
import { createService } from "./server.js";

const config = configFromEnv();
const host = process.env.EMBED_HOST ?? "127.0.0.1";
const port = Number(process.env.EMBED_PORT ?? process.env.PORT ?? 8901);

const { app, whenReady } = createService(config);
const server = app.listen(port, host, () => {
  const addr = server.address();
  const where = typeof addr === "string" ? addr : `${addr?.address}:${addr?.port}`;
  console.log(`embedsvc ${config.model} dim=${config.dim} listening on ${where}`);
});
whenReady.catch((err) => {
  console.error(`encoder failed to load: ${err}`);
  process.exit(1);
});
