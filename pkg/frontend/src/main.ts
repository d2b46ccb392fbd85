// Browser entry point: wire the store to the live server and mount.

import { ApiClient, FetchTransport } from "./api.js";
import { App } from "./app.js";
import { SessionStore } from "./store.js";

const host = document.getElementById("app");
if (host instanceof HTMLElement) {
  const store = new SessionStore(new ApiClient(new FetchTransport("")));
  new App(host, store);
}
