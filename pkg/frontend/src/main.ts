import { TutorApi } from "./api.js";
import { TutorConsole } from "./app.js";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}
new TutorConsole(new TutorApi()).mount(root);
