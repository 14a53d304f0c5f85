// Browser entry point. Token and annotator id persist in localStorage so a
// reload does not re-prompt.

import { Api } from "./api.js";
import { createApp } from "./app.js";

function remembered(key: string, question: string): string {
  let value = localStorage.getItem(key);
  if (!value) {
    value = window.prompt(question) ?? "";
    localStorage.setItem(key, value);
  }
  return value;
}

const token = remembered("altriage-token", "service token (blank if auth is off)");
const oracleId = remembered("altriage-oracle-id", "your annotator id");

const api = new Api(window.location.origin, token || null);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");
void createApp(root, api, oracleId || "annotator");
