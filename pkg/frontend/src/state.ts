import {
  BoardDoc,
  PredictItem,
  PredictRequest,
  Role,
  ROLE_ORDER,
} from "./types.js";

export interface FilledSlot {
  cardId: string;
  caption: string;
}

export interface UiState {
  board: BoardDoc | null;
  filled: Partial<Record<Role, FilledSlot>>;
  activeRole: Role;
  k: number;
  suggestions: PredictItem[];
  error: string | null;
  browsingFolder: string | null; // open folder in the board browser
}

export const GRID_SIZES = [9, 12, 18, 25, 36];

export function initialState(): UiState {
  return {
    board: null,
    filled: {},
    activeRole: "quem",
    k: 12,
    suggestions: [],
    error: null,
    browsingFolder: null,
  };
}

export function nextUnfilledRole(
  filled: Partial<Record<Role, FilledSlot>>,
  after?: Role,
): Role | null {
  const start = after ? ROLE_ORDER.indexOf(after) + 1 : 0;
  for (let i = start; i < ROLE_ORDER.length; i++) {
    if (!filled[ROLE_ORDER[i]]) return ROLE_ORDER[i];
  }
  for (const role of ROLE_ORDER) {
    if (!filled[role]) return role;
  }
  return null;
}

/** The /predict body is a pure function of the state (slots, active role, k). */
export function requestBodyFor(state: UiState): PredictRequest {
  const slots: Record<string, string> = {};
  for (const role of ROLE_ORDER) {
    const slot = state.filled[role];
    if (slot) slots[role] = slot.caption;
  }
  return { mode: "cs", slots, mask_role: state.activeRole, k: state.k };
}

/** Fill the active role with a card; the next unfilled role becomes active. */
export function selectCard(
  state: UiState,
  card: { card_id: string; caption: string },
): UiState {
  const filled = {
    ...state.filled,
    [state.activeRole]: { cardId: card.card_id, caption: card.caption },
  };
  const next = nextUnfilledRole(filled, state.activeRole) ?? state.activeRole;
  return {
    ...state,
    filled,
    activeRole: next,
    suggestions: [],
    error: null,
    browsingFolder: null,
  };
}

export function toggleFolder(state: UiState, folder: string | null): UiState {
  return { ...state, browsingFolder: folder };
}

/** Cards of the open folder, for picking something the model did not suggest. */
export function folderCards(state: UiState) {
  if (!state.board || !state.browsingFolder) return [];
  const entry = state.board.folders.find((f) => f.name === state.browsingFolder);
  if (!entry) return [];
  const byId = new Map(state.board.cards.map((c) => [c.id, c]));
  return entry.cards.flatMap((id) => {
    const card = byId.get(id);
    return card ? [card] : [];
  });
}

export function setActiveRole(state: UiState, role: Role): UiState {
  if (state.filled[role]) return state; // filled roles need an explicit un-fill
  return { ...state, activeRole: role, suggestions: [], error: null };
}

export function setGridSize(state: UiState, k: number): UiState {
  if (!GRID_SIZES.includes(k)) return state;
  return { ...state, k, suggestions: [] };
}

export function unfill(state: UiState, role: Role): UiState {
  if (!state.filled[role]) return state;
  const filled = { ...state.filled };
  delete filled[role];
  return { ...state, filled, activeRole: role, suggestions: [], error: null };
}

export function clearAll(state: UiState): UiState {
  return {
    ...state,
    filled: {},
    activeRole: "quem",
    suggestions: [],
    error: null,
  };
}

export function applySuggestions(state: UiState, items: PredictItem[]): UiState {
  return { ...state, suggestions: items, error: null };
}

export function applyError(state: UiState, message: string): UiState {
  return { ...state, error: message };
}

/** Sentence strip entries, always in canonical role order. */
export function stripEntries(
  state: UiState,
): { role: Role; slot: FilledSlot | null; active: boolean }[] {
  return ROLE_ORDER.map((role) => ({
    role,
    slot: state.filled[role] ?? null,
    active: role === state.activeRole,
  }));
}
