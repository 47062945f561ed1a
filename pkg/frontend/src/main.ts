// Entry point: the service base URL comes from ?service=… (default: same
// origin on the service's default port).

import { App } from "./app.js";
import { mount } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const baseUrl =
  params.get("service") ?? `${window.location.protocol}//${window.location.hostname}:8420`;

const app = new App(baseUrl);
mount(document.getElementById("root") as HTMLElement, app);
