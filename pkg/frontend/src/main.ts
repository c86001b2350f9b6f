import { StudioApi } from "./api.js";
import { StudioSession } from "./session.js";
import { mountStudio } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

// Served at /app by the poster service, so API routes live at the origin root.
const api = new StudioApi("");
mountStudio(root, new StudioSession(api));
