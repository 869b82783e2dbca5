"""Compare a role-tagged model against a flat baseline on held-out sentences.

Both models train on the same sentences; only the rendering differs.  The
report mirrors the ACC@K / MRR and Entropy@K table layout.  Small scale here;
the full desk-scale comparison runs in the acceptance suite.
"""

import logging

logging.basicConfig(level=logging.WARNING)

from pictocs import default_grammar, generate_corpus
from pictocs.board import board_from_grammar
from pictocs.evaluation import compare, render_tables
from pictocs.pipeline import train_from_split
from pictocs.training import TrainConfig

grammar = default_grammar()
split = generate_corpus(grammar, 800, 80, seed=42)
board = board_from_grammar(grammar, name="demo")

small = dict(hidden=64, n_layers=1, n_heads=2, ff_size=128)
config = TrainConfig.desk(seed=42, epochs=12)

print("training tagged model...")
cs, _ = train_from_split(split, "cs", seed=42, model_overrides=small, train_config=config)
print("training flat baseline...")
flat, _ = train_from_split(split, "flat", seed=42, model_overrides=small, train_config=config)

report = compare(cs, flat, split.test, board, k_list=(1, 9, 18, 25, 36))
print()
print(render_tables(report))

cs_row, flat_row = report.models
print()
print(f"role tags help: ACC@1 {cs_row.acc[1]:.3f} vs {flat_row.acc[1]:.3f}, "
      f"MRR {cs_row.mrr:.3f} vs {flat_row.mrr:.3f}")
