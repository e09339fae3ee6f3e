import { createApp } from "./app";
import { DeterministicBackend } from "./backend";
import { DEFAULT_EMBED_DIM } from "./embedding";

const port = Number(process.env.PORT ?? "8750");
const embedDim = Number(process.env.EMBED_DIM ?? String(DEFAULT_EMBED_DIM));

if (!Number.isInteger(embedDim) || embedDim < 1) {
  console.error(`invalid EMBED_DIM: ${process.env.EMBED_DIM}`);
  process.exit(1);
}

const app = createApp(new DeterministicBackend(embedDim));
const server = app.listen(port, "127.0.0.1", () => {
  const address = server.address();
  const bound = typeof address === "object" && address ? address.port : port;
  // The launcher greps this line to discover the bound port.
  console.log(`sidecar listening on 127.0.0.1:${bound} (dim=${embedDim})`);
});
