import numpy as np
import pytest

from pictocs import corpus as corpus_mod
from pictocs import pipeline
from pictocs.board import board_from_grammar
from pictocs.corpus import Grammar, default_grammar, generate_corpus
from pictocs.roles import Role
from pictocs.training import TrainConfig

TINY_GRAMMAR_TEXT = """
[slot_presence]
quem = 0.8
verbo = 1.0
o_que = 0.7
como = 0.2
onde = 0.4
quando = 0.4

[lexicon.quem]
eu = 4
você = 2
mamãe = 1
papai = 1

[lexicon.verbo]
comer = 3
querer comer = 2
beber = 2
dormir = 1
brincar = 1

[lexicon.o_que]
pipoca = 2
banana = 1
pão = 1
sopa = 1
água = 1
suco de uva = 1
leite = 1
bola = 1
boneca = 1

[lexicon.como]
devagar = 1
rápido = 1
feliz = 1
sozinho = 1

[lexicon.onde]
na escola = 1
em casa = 1
no parque = 1
na cozinha = 1

[lexicon.quando]
hoje = 1
amanhã = 1
agora = 1
de manhã = 1

[compat.comer]
pipoca
banana
pão
sopa

[compat.querer comer]
pipoca
banana
pão

[compat.beber]
água
suco de uva
leite

[compat.brincar]
bola
boneca
"""


@pytest.fixture(scope="session")
def tiny_grammar() -> Grammar:
    return corpus_mod.parse_grammar(TINY_GRAMMAR_TEXT)


@pytest.fixture(scope="session")
def tiny_split(tiny_grammar):
    return generate_corpus(tiny_grammar, 250, 40, seed=7)


@pytest.fixture(scope="session")
def tiny_board(tiny_grammar):
    return board_from_grammar(tiny_grammar, name="tiny")


TINY_MODEL = dict(hidden=32, n_layers=1, n_heads=2, ff_size=64, dropout=0.1)


def train_tiny(split, mode, seed=7, epochs=8):
    """Small but genuinely trained model for integration-level tests."""
    return pipeline.train_from_split(
        split,
        mode,
        seed=seed,
        vocab_size=400,
        model_overrides=dict(TINY_MODEL),
        train_config=TrainConfig.desk(seed=seed, epochs=epochs, batch_size=32),
    )


@pytest.fixture(scope="session")
def tiny_cs(tiny_split):
    ckpt, trace = train_tiny(tiny_split, "cs")
    return ckpt


@pytest.fixture(scope="session")
def tiny_flat(tiny_split):
    ckpt, trace = train_tiny(tiny_split, "flat")
    return ckpt


@pytest.fixture(scope="session")
def default_grammar_board():
    grammar = default_grammar()
    return grammar, board_from_grammar(grammar, name="sample")
