import { folderCards, stripEntries, GRID_SIZES, UiState } from "./state.js";
import { BoardCard, Role, ROLE_LABELS, ROLE_ORDER } from "./types.js";

export interface Handlers {
  onSelect(item: { card_id: string; caption: string }): void;
  onActivateRole(role: Role): void;
  onUnfill(role: Role): void;
  onGridSize(k: number): void;
  onClear(): void;
  onRetry(): void;
  onBrowseFolder(folder: string | null): void;
}

function roleColor(state: UiState, role: Role | null): string {
  const colors = state.board?.role_colors;
  if (!colors || !role) return "#9e9e9e";
  return colors[role] ?? "#9e9e9e";
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStrip(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";
  for (const entry of stripEntries(state)) {
    const tile = el("button", "strip-tile");
    tile.dataset.role = entry.role;
    tile.style.background = roleColor(state, entry.role);
    if (entry.slot) {
      tile.classList.add("filled");
      tile.append(el("span", "strip-caption", entry.slot.caption));
      tile.append(el("span", "strip-hint", "×"));
      tile.title = `remover ${entry.slot.caption}`;
      tile.addEventListener("click", () => handlers.onUnfill(entry.role));
    } else {
      tile.classList.add(entry.active ? "active" : "empty");
      tile.append(el("span", "strip-caption", entry.active ? "?" : ""));
      tile.append(el("span", "strip-hint", ROLE_LABELS[entry.role]));
      tile.addEventListener("click", () => handlers.onActivateRole(entry.role));
    }
    root.append(tile);
  }
  const clear = el("button", "clear-button", "limpar");
  clear.addEventListener("click", () => handlers.onClear());
  root.append(clear);
}

function renderRoleTabs(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";
  for (const role of ROLE_ORDER) {
    const tab = el("button", "role-tab", ROLE_LABELS[role]);
    tab.dataset.role = role;
    tab.style.borderColor = roleColor(state, role);
    if (role === state.activeRole) tab.classList.add("active");
    if (state.filled[role]) tab.disabled = true;
    tab.addEventListener("click", () => handlers.onActivateRole(role));
    root.append(tab);
  }
  const select = el("select", "grid-size");
  for (const k of GRID_SIZES) {
    const option = document.createElement("option");
    option.value = String(k);
    option.textContent = `${k} cartões`;
    if (k === state.k) option.selected = true;
    select.append(option);
  }
  select.addEventListener("change", () =>
    handlers.onGridSize(Number(select.value)),
  );
  root.append(select);
}

function renderGrid(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";
  const pictograms = new Map(
    (state.board?.cards ?? []).map((c) => [c.id, c.pictogram]),
  );
  for (const item of state.suggestions) {
    const tile = el("button", "card-tile");
    tile.dataset.cardId = item.card_id;
    tile.dataset.prob = String(item.prob);
    tile.style.background = roleColor(state, item.role ?? state.activeRole);
    const pictogram = pictograms.get(item.card_id);
    if (pictogram) {
      const img = document.createElement("img");
      img.src = pictogram;
      img.alt = item.caption;
      img.className = "card-picto";
      tile.append(img);
    } else {
      tile.append(el("div", "card-placeholder", item.caption.slice(0, 2)));
    }
    tile.append(el("div", "card-caption", item.caption));
    // the probability is displayed exactly as the service returned it
    tile.append(el("div", "card-prob", String(item.prob)));
    tile.addEventListener("click", () => handlers.onSelect(item));
    root.append(tile);
  }
}

function renderFolders(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";
  const folders = state.board?.folders ?? [];
  if (!folders.length) return;
  for (const folder of folders) {
    const chip = el("button", "folder-chip", folder.name);
    if (folder.name === state.browsingFolder) chip.classList.add("open");
    chip.addEventListener("click", () =>
      handlers.onBrowseFolder(
        folder.name === state.browsingFolder ? null : folder.name,
      ),
    );
    root.append(chip);
  }
  if (!state.browsingFolder) return;
  const listing = el("div", "folder-cards");
  for (const card of folderCards(state)) {
    const tile = el("button", "folder-card");
    tile.dataset.cardId = card.id;
    tile.style.background = roleColor(state, (card as BoardCard).role_hint);
    tile.textContent = card.caption;
    tile.addEventListener("click", () =>
      handlers.onSelect({ card_id: card.id, caption: card.caption }),
    );
    listing.append(tile);
  }
  root.append(listing);
}

function renderBanner(root: HTMLElement, state: UiState, handlers: Handlers): void {
  root.textContent = "";
  if (!state.error) {
    root.classList.add("hidden");
    return;
  }
  root.classList.remove("hidden");
  root.append(el("span", "banner-text", state.error));
  const retry = el("button", "banner-retry", "tentar de novo");
  retry.addEventListener("click", () => handlers.onRetry());
  root.append(retry);
}

export function render(state: UiState, handlers: Handlers): void {
  renderStrip(document.getElementById("strip")!, state, handlers);
  renderRoleTabs(document.getElementById("roles")!, state, handlers);
  renderGrid(document.getElementById("grid")!, state, handlers);
  renderFolders(document.getElementById("folders")!, state, handlers);
  renderBanner(document.getElementById("banner")!, state, handlers);
}
