import { Api } from "./api.js";
import {
  applyError,
  applySuggestions,
  clearAll,
  initialState,
  requestBodyFor,
  selectCard,
  setActiveRole,
  setGridSize,
  toggleFolder,
  unfill,
  UiState,
} from "./state.js";
import { Handlers, render } from "./render.js";
import { Role } from "./types.js";

export class App {
  state: UiState = initialState();

  constructor(private api: Api) {}

  private sync(): void {
    render(this.state, this.handlers);
  }

  async start(): Promise<void> {
    try {
      const board = await this.api.board();
      this.state = { ...this.state, board };
    } catch (err) {
      this.state = applyError(this.state, String(err));
      this.sync();
      return;
    }
    await this.refresh();
  }

  /** Re-query /predict for the current state and re-render. */
  async refresh(): Promise<void> {
    this.sync();
    try {
      const response = await this.api.predict(requestBodyFor(this.state));
      if (response === null) return; // superseded by a newer request
      this.state = applySuggestions(this.state, response.items);
    } catch (err) {
      this.state = applyError(this.state, String(err));
    }
    this.sync();
  }

  readonly handlers: Handlers = {
    onSelect: (item: { card_id: string; caption: string }) => {
      this.state = selectCard(this.state, item);
      void this.refresh();
    },
    onActivateRole: (role: Role) => {
      const next = setActiveRole(this.state, role);
      if (next === this.state) return;
      this.state = next;
      void this.refresh();
    },
    onUnfill: (role: Role) => {
      this.state = unfill(this.state, role);
      void this.refresh();
    },
    onGridSize: (k: number) => {
      this.state = setGridSize(this.state, k);
      void this.refresh();
    },
    onClear: () => {
      this.state = clearAll(this.state);
      void this.refresh();
    },
    onRetry: () => {
      void this.refresh();
    },
    onBrowseFolder: (folder: string | null) => {
      this.state = toggleFolder(this.state, folder);
      this.sync();
    },
  };
}

export function boot(base = ""): App {
  const app = new App(new Api(base));
  void app.start();
  return app;
}

declare global {
  interface Window {
    pictoApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("grid")) {
  window.pictoApp = boot();
}
