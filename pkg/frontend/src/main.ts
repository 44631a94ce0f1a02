import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { render } from "./render.js";
import type { IndexInfo } from "./types.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? "http://127.0.0.1:8000";

const api = new ApiClient(baseUrl);
const controller = new SessionController(api);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

let indexes: IndexInfo[] = [];
controller.onChange = () => render(root, controller, indexes);

api
  .indexes()
  .then((list) => {
    indexes = list;
    controller.onChange();
  })
  .catch((err) => {
    controller.message = `cannot reach ${baseUrl}: ${err}`;
    controller.onChange();
  });

controller.onChange();
