import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { App } from "../src/main.js";
import { Api } from "../src/api.js";
import {
  BoardDoc,
  PredictRequest,
  PredictResponse,
  PredictItem,
} from "../src/types.js";

const ROLE_COLORS = {
  quem: "#e8862d",
  verbo: "#e3c229",
  o_que: "#3da45c",
  onde: "#3f7fc1",
  quando: "#8a6550",
  como: "#8e5bb5",
};

const BOARD: BoardDoc = {
  name: "test-board",
  cards: [
    { id: "eu", caption: "eu", role_hint: "quem", pictogram: null, folder: null },
    { id: "mamãe", caption: "mamãe", role_hint: "quem", pictogram: null, folder: null },
    { id: "querer_comer", caption: "querer comer", role_hint: "verbo", pictogram: null, folder: null },
    { id: "comer", caption: "comer", role_hint: "verbo", pictogram: null, folder: null },
    { id: "pipoca", caption: "pipoca", role_hint: "o_que", pictogram: null, folder: null },
    { id: "em_casa", caption: "em casa", role_hint: "onde", pictogram: null, folder: null },
    { id: "na_escola", caption: "na escola", role_hint: "onde", pictogram: null, folder: null },
    { id: "no_parque", caption: "no parque", role_hint: "onde", pictogram: null, folder: null },
    { id: "hoje", caption: "hoje", role_hint: "quando", pictogram: null, folder: null },
  ],
  folders: [
    { name: "pessoas", cards: ["eu", "mamãe"] },
    { name: "lugares", cards: ["em_casa", "na_escola", "no_parque"] },
  ],
  role_colors: ROLE_COLORS,
};

function item(id: string, prob: number, role: PredictItem["role"]): PredictItem {
  const caption = BOARD.cards.find((c) => c.id === id)!.caption;
  return { card_id: id, caption, prob, role };
}

const CANNED: Record<string, PredictItem[]> = {
  quem: [item("eu", 0.6234567890123, "quem"), item("mamãe", 0.2, "quem")],
  verbo: [item("querer_comer", 0.55, "verbo"), item("comer", 0.3, "verbo")],
  o_que: [item("pipoca", 0.71, "o_que")],
  onde: [
    item("em_casa", 0.4812345678901, "onde"),
    item("na_escola", 0.302109, "onde"),
    item("no_parque", 0.11, "onde"),
  ],
  quando: [item("hoje", 0.9, "quando")],
};

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

interface FetchLog {
  bodies: PredictRequest[];
}

function installFetch(
  log: FetchLog,
  predict: (body: PredictRequest) => Promise<Response> | Response = (body) =>
    jsonResponse({
      items: CANNED[body.mask_role] ?? [],
      mode: "cs",
      mask_role: body.mask_role,
      k: body.k,
      model: "test",
    } satisfies PredictResponse),
): void {
  vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
    if (String(url).endsWith("/board")) return jsonResponse(BOARD);
    if (String(url).endsWith("/predict")) {
      const body = JSON.parse(String(init?.body)) as PredictRequest;
      log.bodies.push(body);
      return predict(body);
    }
    return jsonResponse({ error: { code: "not_found", message: "no route" } }, 404);
  });
}

function mountDom(): void {
  document.body.innerHTML = `
    <div id="banner" class="banner hidden"></div>
    <section id="strip"></section>
    <nav id="roles"></nav>
    <main id="grid"></main>
    <aside id="folders"></aside>
  `;
}

function gridTiles(): HTMLElement[] {
  return Array.from(document.querySelectorAll<HTMLElement>("#grid .card-tile"));
}

function clickTile(cardId: string): void {
  const tile = gridTiles().find((t) => t.dataset.cardId === cardId);
  expect(tile, `tile ${cardId} should be on the grid`).toBeTruthy();
  tile!.click();
}

function clickRoleTab(role: string): void {
  const tab = document.querySelector<HTMLButtonElement>(
    `#roles .role-tab[data-role="${role}"]`,
  );
  expect(tab).toBeTruthy();
  tab!.click();
}

async function settle(): Promise<void> {
  for (let i = 0; i < 6; i++) await Promise.resolve();
  await new Promise((r) => setTimeout(r, 0));
}

describe("board UI flow", () => {
  let log: FetchLog;

  beforeEach(() => {
    mountDom();
    log = { bodies: [] };
  });

  afterEach(() => {
    vi.unstubAllGlobals();
  });

  it("loads the board, fills eu + querer comer, then asks for locations", async () => {
    installFetch(log);
    const app = new App(new Api(""));
    await app.start();
    await settle();

    // initial query masks quem with no context
    expect(log.bodies[0]).toEqual({ mode: "cs", slots: {}, mask_role: "quem", k: 12 });
    expect(gridTiles().map((t) => t.dataset.cardId)).toEqual(["eu", "mamãe"]);

    clickTile("eu");
    await settle();
    expect(log.bodies.at(-1)).toEqual({
      mode: "cs", slots: { quem: "eu" }, mask_role: "verbo", k: 12,
    });

    clickTile("querer_comer");
    await settle();
    expect(log.bodies.at(-1)).toEqual({
      mode: "cs",
      slots: { quem: "eu", verbo: "querer comer" },
      mask_role: "o_que",
      k: 12,
    });

    // user overrides the suggested next role and asks where instead
    clickRoleTab("onde");
    await settle();
    expect(log.bodies.at(-1)).toEqual({
      mode: "cs",
      slots: { quem: "eu", verbo: "querer comer" },
      mask_role: "onde",
      k: 12,
    });

    // the grid re-rendered with the location cards...
    const tiles = gridTiles();
    expect(tiles.map((t) => t.dataset.cardId)).toEqual(
      CANNED.onde.map((i) => i.card_id),
    );
    for (const [tile, expected] of tiles.map((t, i) => [t, CANNED.onde[i]] as const)) {
      // ...colored per the served role_colors map...
      expect(tile.style.background).toBe("rgb(63, 127, 193)"); // #3f7fc1
      // ...showing the service probability unmodified
      expect(tile.querySelector(".card-prob")!.textContent).toBe(
        String(expected.prob),
      );
      expect(tile.dataset.prob).toBe(String(expected.prob));
      expect(tile.querySelector(".card-caption")!.textContent).toBe(
        expected.caption,
      );
    }

    // sentence strip keeps canonical order with both filled slots
    const strip = Array.from(
      document.querySelectorAll<HTMLElement>("#strip .strip-tile.filled"),
    );
    expect(strip.map((t) => t.dataset.role)).toEqual(["quem", "verbo"]);
    expect(app.state.activeRole).toBe("onde");
  });

  it("clear resets to the initial suggestions", async () => {
    installFetch(log);
    const app = new App(new Api(""));
    await app.start();
    await settle();
    clickTile("eu");
    await settle();
    document.querySelector<HTMLButtonElement>(".clear-button")!.click();
    await settle();
    expect(app.state.filled).toEqual({});
    expect(log.bodies.at(-1)).toEqual({
      mode: "cs", slots: {}, mask_role: "quem", k: 12,
    });
    expect(gridTiles().map((t) => t.dataset.cardId)).toEqual(["eu", "mamãe"]);
  });

  it("unfilling a slot re-activates it", async () => {
    installFetch(log);
    const app = new App(new Api(""));
    await app.start();
    await settle();
    clickTile("eu");
    await settle();
    clickTile("querer_comer");
    await settle();
    const filledVerbo = document.querySelector<HTMLElement>(
      '#strip .strip-tile.filled[data-role="verbo"]',
    );
    filledVerbo!.click();
    await settle();
    expect(app.state.activeRole).toBe("verbo");
    expect(app.state.filled.quem?.caption).toBe("eu");
    expect(log.bodies.at(-1)!.mask_role).toBe("verbo");
  });

  it("folder navigation can fill a slot with an unsuggested card", async () => {
    installFetch(log);
    const app = new App(new Api(""));
    await app.start();
    await settle();
    // open the places folder and pick a location the model never suggested
    const chip = Array.from(
      document.querySelectorAll<HTMLButtonElement>("#folders .folder-chip"),
    ).find((c) => c.textContent === "lugares");
    expect(chip).toBeTruthy();
    chip!.click();
    await settle();
    const card = document.querySelector<HTMLButtonElement>(
      '#folders .folder-card[data-card-id="no_parque"]',
    );
    expect(card).toBeTruthy();
    card!.click();
    await settle();
    // the card filled the active role (quem) and the browser closed
    expect(app.state.filled.quem?.caption).toBe("no parque");
    expect(app.state.browsingFolder).toBeNull();
    expect(log.bodies.at(-1)).toEqual({
      mode: "cs", slots: { quem: "no parque" }, mask_role: "verbo", k: 12,
    });
  });

  it("grid size selector re-queries with the new k", async () => {
    installFetch(log);
    const app = new App(new Api(""));
    await app.start();
    await settle();
    const select = document.querySelector<HTMLSelectElement>(".grid-size")!;
    select.value = "36";
    select.dispatchEvent(new Event("change"));
    await settle();
    expect(log.bodies.at(-1)!.k).toBe(36);
    expect(app.state.k).toBe(36);
  });

  it("stale responses are discarded", async () => {
    const resolvers: ((r: Response) => void)[] = [];
    let calls = 0;
    installFetch(log, (body) => {
      calls++;
      if (calls === 1) {
        // initial load resolves immediately
        return jsonResponse({
          items: CANNED.quem, mode: "cs", mask_role: body.mask_role,
          k: body.k, model: "t",
        });
      }
      return new Promise<Response>((res) => resolvers.push(res));
    });
    const app = new App(new Api(""));
    await app.start();
    await settle();

    // two competing requests: verbo first, then como supersedes it
    clickRoleTab("verbo");
    await settle();
    clickRoleTab("como");
    await settle();
    expect(resolvers).toHaveLength(2);

    // resolve out of order: newest first, stale afterwards
    resolvers[1](jsonResponse({
      items: CANNED.verbo.slice(0, 1), mode: "cs", mask_role: "como",
      k: 12, model: "t",
    }));
    await settle();
    const after = gridTiles().map((t) => t.dataset.cardId);
    resolvers[0](jsonResponse({
      items: CANNED.quem, mode: "cs", mask_role: "verbo", k: 12, model: "t",
    }));
    await settle();
    // the stale verbo response must not overwrite the newer como one
    expect(gridTiles().map((t) => t.dataset.cardId)).toEqual(after);
    expect(app.state.suggestions.map((i) => i.card_id)).toEqual(
      CANNED.verbo.slice(0, 1).map((i) => i.card_id),
    );
  });

  it("service failure shows a retry banner and preserves state", async () => {
    let fail = true;
    installFetch(log, (body) => {
      if (fail) return jsonResponse({ error: { code: "oops", message: "boom" } }, 500);
      return jsonResponse({
        items: CANNED[body.mask_role] ?? [], mode: "cs",
        mask_role: body.mask_role, k: body.k, model: "t",
      });
    });
    const app = new App(new Api(""));
    await app.start();
    await settle();
    const banner = document.getElementById("banner")!;
    expect(banner.classList.contains("hidden")).toBe(false);
    expect(banner.textContent).toContain("boom");
    expect(app.state.activeRole).toBe("quem");

    fail = false;
    banner.querySelector<HTMLButtonElement>(".banner-retry")!.click();
    await settle();
    expect(document.getElementById("banner")!.classList.contains("hidden")).toBe(true);
    expect(gridTiles()).toHaveLength(2);
  });
});
