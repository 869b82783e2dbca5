"""Train a small model, start the HTTP service, and query it like the UI does.

The service loads a checkpoint plus a board, builds the card decoder once,
and answers /predict with ranked cards.  This script runs the server on a
background thread, issues a few requests, and shuts it down.
"""

import json
import logging
import urllib.request

logging.basicConfig(level=logging.INFO, format="%(message)s")

from pictocs import checkpoint as ckpt_io
from pictocs import default_grammar, generate_corpus
from pictocs.board import board_from_grammar, save_board
from pictocs.pipeline import train_from_split
from pictocs.server import ServiceConfig, start_background
from pictocs.training import TrainConfig

grammar = default_grammar()
split = generate_corpus(grammar, 400, 0, seed=42)
board = board_from_grammar(grammar, name="demo")

ckpt, _ = train_from_split(
    split, "cs", seed=42,
    model_overrides=dict(hidden=64, n_layers=1, n_heads=2, ff_size=128),
    train_config=TrainConfig.desk(seed=42, epochs=6),
)
ckpt_io.save_checkpoint(ckpt, "/tmp/demo.ckpt")
save_board(board, "/tmp/demo-board.json")

server, _ = start_background(
    ServiceConfig(checkpoint_path="/tmp/demo.ckpt", board_path="/tmp/demo-board.json",
                  port=0, default_k=6)
)
base = f"http://127.0.0.1:{server.server_address[1]}"
print(f"\nserver up at {base}")


def get(path):
    with urllib.request.urlopen(base + path, timeout=10) as resp:
        return json.loads(resp.read().decode())


def post(path, body):
    req = urllib.request.Request(
        base + path, data=json.dumps(body).encode(), method="POST",
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req, timeout=10) as resp:
        return json.loads(resp.read().decode())


print("\nGET /health ->", get("/health"))
info = get("/model/info")
print("GET /model/info -> hidden", info["config"]["hidden"], "fingerprint", info["fingerprint"])
board_doc = get("/board")
print("GET /board ->", len(board_doc["cards"]), "cards, colors", board_doc["role_colors"])

body = post("/predict", {"mode": "cs", "slots": {"quem": "eu", "verbo": "querer comer"},
                         "mask_role": "o_que", "k": 6})
print("\nPOST /predict (eu / querer comer / <o_que>):")
for item in body["items"]:
    print(f"  {item['prob']:.4f}  {item['caption']}")

server.shutdown()
server.server_close()
print("\nserver stopped")
