"""Train a small role-aware model end to end and predict cards for a slot.

Uses a reduced model (h=64, 2 layers) so it finishes in a few minutes on a
laptop; drop the overrides to train the full desk-scale model instead.
"""

import logging

logging.basicConfig(level=logging.INFO, format="%(message)s")

from pictocs import default_grammar, generate_corpus
from pictocs.board import board_from_grammar
from pictocs.pipeline import train_from_split
from pictocs.prediction import Query, build_decoder, predict_cards, prediction_items
from pictocs.roles import Role
from pictocs.training import TrainConfig

grammar = default_grammar()
split = generate_corpus(grammar, 1200, 50, seed=42)
board = board_from_grammar(grammar, name="demo")

ckpt, trace = train_from_split(
    split,
    "cs",
    seed=42,
    model_overrides=dict(hidden=64, n_layers=2, n_heads=2, ff_size=128),
    train_config=TrainConfig.desk(seed=42, epochs=40, batch_size=32),
)
print(f"\nloss: {trace[0]:.3f} -> {trace[-1]:.3f}")

decoder = build_decoder(board, ckpt)
print(f"card decoder: {decoder.matrix.shape[0]}x{decoder.matrix.shape[1]}")

query = Query(
    mode="cs",
    filled={Role.QUEM: "eu", Role.VERBO: "querer comer"},
    mask_role=Role.O_QUE,
    k=9,
)
prediction = predict_cards(query, ckpt, decoder)
print("\n== top cards for: eu / querer comer / <o_que> [MASK]")
for item in prediction_items(prediction, board):
    print(f"  {item['prob']:.4f}  {item['caption']:<20} ({item['role']})")

query = Query(mode="cs", filled=dict(query.filled), mask_role=Role.ONDE, k=5)
prediction = predict_cards(query, ckpt, decoder)
print("\n== same context, asking for a location instead")
for item in prediction_items(prediction, board):
    print(f"  {item['prob']:.4f}  {item['caption']:<20} ({item['role']})")
