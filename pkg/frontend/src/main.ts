import { ConvKgClient } from "./api.js";
import { AppConfig, createChatApp } from "./app.js";

async function loadConfig(): Promise<AppConfig> {
  try {
    const resp = await fetch("config.json");
    if (!resp.ok) return { speakers: [] };
    return (await resp.json()) as AppConfig;
  } catch {
    return { speakers: [] };
  }
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const config = await loadConfig();
  createChatApp(root, new ConvKgClient(""), config);
}

void boot();
