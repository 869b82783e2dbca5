export type Role = "quem" | "verbo" | "o_que" | "como" | "onde" | "quando";

export const ROLE_ORDER: Role[] = ["quem", "verbo", "o_que", "como", "onde", "quando"];

export const ROLE_LABELS: Record<Role, string> = {
  quem: "quem?",
  verbo: "o que faz?",
  o_que: "o quê?",
  como: "como?",
  onde: "onde?",
  quando: "quando?",
};

export interface BoardCard {
  id: string;
  caption: string;
  role_hint: Role | null;
  pictogram: string | null;
  folder: string | null;
}

export interface BoardDoc {
  name: string;
  cards: BoardCard[];
  folders: { name: string; cards: string[] }[];
  role_colors: Record<Role, string>;
}

export interface PredictItem {
  card_id: string;
  caption: string;
  prob: number;
  role: Role | null;
}

export interface PredictResponse {
  items: PredictItem[];
  mode: string;
  mask_role: string | null;
  k: number;
  model: string;
}

export interface PredictRequest {
  mode: "cs";
  slots: Record<string, string>;
  mask_role: Role;
  k: number;
}
