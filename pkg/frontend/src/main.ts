import { ApiClient } from "./api.js";
import { App } from "./app.js";

const root = document.querySelector<HTMLElement>("#app");
if (!root) throw new Error("#app container missing");

const api = new ApiClient((url, init) => fetch(url, init));
const app = new App(root, api);
void app.refreshQueue();
