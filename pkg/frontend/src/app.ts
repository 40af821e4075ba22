// Chat application: a thin view over the /v1 API. Every number and string
// shown in a turn comes verbatim from one server response.

import { ApiError, AskResponse, ConvKgClient, Reward } from "./api.js";

export interface AppConfig {
  speakers: string[];
}

export interface ChatApp {
  ready: Promise<void>;
  sessionId(): string | null;
  newSession(speakerId?: string): Promise<void>;
  sendQuestion(text: string): Promise<void>;
  giveReward(turn: number, reward: Reward): Promise<void>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function createChatApp(
  root: HTMLElement,
  client: ConvKgClient,
  config: AppConfig = { speakers: [] },
  doc: Document = root.ownerDocument,
): ChatApp {
  root.innerHTML = "";

  const banner = el(doc, "div", "banner hidden");
  const bannerText = el(doc, "span", "banner-text");
  const retryButton = el(doc, "button", "banner-retry", "retry");
  banner.append(bannerText, retryButton);

  const header = el(doc, "header", "topbar");
  header.append(el(doc, "h1", "title", "convkg chat"));
  const speakerSelect = el(doc, "select", "speaker-select");
  const anonymous = el(doc, "option", "", "no speaker profile");
  anonymous.value = "";
  speakerSelect.append(anonymous);
  for (const speaker of config.speakers) {
    const option = el(doc, "option", "", speaker);
    option.value = speaker;
    speakerSelect.append(option);
  }
  header.append(speakerSelect);

  const chat = el(doc, "main", "chat");
  const toast = el(doc, "div", "toast hidden");

  const form = el(doc, "form", "composer");
  const input = el(doc, "input", "composer-input") as HTMLInputElement;
  input.placeholder = "Ask a question…";
  const send = el(doc, "button", "composer-send", "Send") as HTMLButtonElement;
  send.type = "submit";
  form.append(input, send);

  root.append(banner, header, chat, toast, form);

  let session: string | null = null;
  let inFlight = false;

  function setBusy(busy: boolean): void {
    inFlight = busy;
    input.disabled = busy;
    send.disabled = busy || !input.value.trim();
  }

  function showBanner(message: string, retriable = true): void {
    bannerText.textContent = message;
    retryButton.classList.toggle("hidden", !retriable);
    banner.classList.remove("hidden");
  }

  function hideBanner(): void {
    banner.classList.add("hidden");
  }

  let toastTimer: ReturnType<typeof setTimeout> | undefined;
  function showToast(message: string): void {
    toast.textContent = message;
    toast.classList.remove("hidden");
    if (toastTimer) clearTimeout(toastTimer);
    toastTimer = setTimeout(() => toast.classList.add("hidden"), 4000);
  }

  async function startSession(): Promise<void> {
    const speaker = speakerSelect.value || undefined;
    try {
      session = await client.createSession(speaker);
      hideBanner();
    } catch (err) {
      session = null;
      showBanner(err instanceof ApiError ? `server error: ${err.message}` : "server unreachable");
      throw err;
    }
  }

  function renderUserBubble(text: string): HTMLElement {
    const turn = el(doc, "section", "turn");
    turn.append(el(doc, "div", "bubble user", text));
    chat.append(turn);
    return turn;
  }

  function panel(title: string, body: HTMLElement): HTMLDetailsElement {
    const details = el(doc, "details", "panel") as HTMLDetailsElement;
    details.append(el(doc, "summary", "", title), body);
    return details;
  }

  function renderAnswer(turnEl: HTMLElement, answer: AskResponse): void {
    const isClarification = answer.source === "NONE";
    const bubble = el(doc, "div", `bubble assistant${isClarification ? " clarification" : ""}`);
    bubble.dataset.turn = String(answer.turn);

    const text = answer.clarification ?? answer.long_text ?? answer.short_text;
    bubble.append(el(doc, "p", "answer-text", text));

    const meta = el(doc, "div", "meta");
    meta.append(el(doc, "span", `badge source-${answer.source}`, answer.source));
    const conf = el(doc, "div", "conf");
    const percent = Math.round(answer.confidence * 100);
    const bar = el(doc, "div", "conf-bar");
    const fill = el(doc, "div", "conf-fill");
    fill.style.width = `${percent}%`;
    bar.append(fill);
    conf.append(bar, el(doc, "span", "conf-num", `${percent}%`));
    meta.append(conf);
    bubble.append(meta);

    if (answer.provenance_triples.length > 0) {
      const pre = el(doc, "pre", "triples");
      pre.textContent = answer.provenance_triples.map((t) => t.join(" ")).join("\n");
      bubble.append(panel(`Explored triples (${answer.provenance_triples.length})`, pre));
    }
    if (answer.query_debug) {
      const pre = el(doc, "pre", "query-debug");
      pre.textContent = answer.query_debug;
      bubble.append(panel("Query", pre));
    }
    if (answer.excerpts.length > 0) {
      const list = el(doc, "div", "excerpts");
      for (const excerpt of answer.excerpts) {
        const quote = el(doc, "blockquote", "excerpt");
        quote.append(
          el(doc, "strong", "excerpt-title", excerpt.title),
          el(doc, "p", "excerpt-text", excerpt.text),
          el(doc, "span", "excerpt-score", excerpt.score.toFixed(2)),
        );
        list.append(quote);
      }
      bubble.append(panel(`Excerpts (${answer.excerpts.length})`, list));
    }
    if (answer.entity_sheets.length > 0) {
      const list = el(doc, "div", "sheets");
      for (const sheet of answer.entity_sheets) {
        const card = el(doc, "div", "sheet");
        card.append(el(doc, "strong", "sheet-label", sheet.label));
        if (sheet.description) card.append(el(doc, "p", "sheet-description", sheet.description));
        if (sheet.types.length > 0) {
          card.append(
            el(doc, "p", "sheet-types", sheet.types.map((t) => t.label).join(", ")),
          );
        }
        if (sheet.image) {
          const img = el(doc, "img", "sheet-image") as HTMLImageElement;
          img.src = sheet.image;
          img.alt = sheet.label;
          card.append(img);
        }
        list.append(card);
      }
      bubble.append(panel(`Entities (${answer.entity_sheets.length})`, list));
    }

    const rewardRow = el(doc, "div", "reward");
    const yes = el(doc, "button", "reward-yes", "✓ correct") as HTMLButtonElement;
    const no = el(doc, "button", "reward-no", "✗ incorrect") as HTMLButtonElement;
    yes.type = "button";
    no.type = "button";
    const lock = (label: string) => {
      yes.disabled = true;
      no.disabled = true;
      rewardRow.append(el(doc, "span", "reward-state", label));
    };
    const click = (reward: Reward) => async () => {
      if (yes.disabled) return; // already rewarded: no-op
      lock(reward === "CORRECT" ? "marked correct" : "marked incorrect");
      try {
        await giveReward(answer.turn, reward);
      } catch (err) {
        if (!(err instanceof ApiError && err.status === 409)) {
          showToast("could not record the reward");
        }
        // 409 = already recorded server-side; buttons stay locked either way
      }
    };
    yes.addEventListener("click", click("CORRECT"));
    no.addEventListener("click", click("INCORRECT"));
    rewardRow.append(yes, no);
    bubble.append(rewardRow);

    turnEl.append(bubble);
    chat.scrollTop = chat.scrollHeight;
  }

  async function askOnce(text: string): Promise<AskResponse> {
    if (!session) await startSession();
    try {
      return await client.ask(session as string, text);
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // stale or expired session: recreate transparently and retry once
        await startSession();
        showToast("session expired; started a new one");
        return client.ask(session as string, text);
      }
      throw err;
    }
  }

  async function sendQuestion(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || inFlight) return;
    const turnEl = renderUserBubble(trimmed);
    setBusy(true);
    try {
      const answer = await askOnce(trimmed);
      renderAnswer(turnEl, answer);
      hideBanner();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        showToast("previous question still processing");
      } else if (err instanceof ApiError) {
        showToast(`server error: ${err.message}`);
      } else {
        showBanner("server unreachable");
      }
      turnEl.append(el(doc, "div", "bubble assistant failed", "(no answer)"));
    } finally {
      setBusy(false);
    }
  }

  async function giveReward(turn: number, reward: Reward): Promise<void> {
    if (!session) throw new Error("no session");
    await client.reward(session, turn, reward);
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    input.value = "";
    send.disabled = true;
    void sendQuestion(text);
  });
  input.addEventListener("input", () => {
    send.disabled = inFlight || !input.value.trim();
  });
  send.disabled = true;

  speakerSelect.addEventListener("change", () => {
    chat.innerHTML = "";
    void startSession().catch(() => undefined);
  });
  retryButton.addEventListener("click", () => {
    void startSession().catch(() => undefined);
  });

  const ready = startSession().catch(() => undefined) as Promise<void>;

  return {
    ready,
    sessionId: () => session,
    newSession: async (speakerId?: string) => {
      speakerSelect.value = speakerId ?? "";
      chat.innerHTML = "";
      await startSession();
    },
    sendQuestion,
    giveReward,
  };
}
