"""Communication-card prediction with Colourful Semantics role tagging."""

from .roles import ROLE_COLORS, ROLE_ORDER, Role
from .corpus import (
    CorpusSplit,
    Grammar,
    GrammarError,
    ParseError,
    Sentence,
    Slot,
    default_grammar,
    generate_corpus,
    load_corpus,
    load_grammar,
    parse_tagged,
    render_flat,
    render_tagged,
    save_corpus,
    validate_sentence,
)
from .tokenizer import (
    SPECIALS,
    TokenSeq,
    TokenizerError,
    Vocab,
    add_mwe_tokens,
    add_role_tokens,
    decode,
    encode,
    encode_pieces,
    load_vocab,
    save_vocab,
    train_subword,
)
from .model import (
    Checkpoint,
    ConfigError,
    ModelConfig,
    extend_embeddings,
    forward_logits,
    init_model,
    mlm_hidden,
    mlm_loss,
)
from .training import MaskedBatch, TrainConfig, TrainingDiverged, mask_collate, train
from .checkpoint import (
    CheckpointError,
    fingerprint,
    load_checkpoint,
    save_checkpoint,
)
from .board import Board, BoardError, Card, board_from_grammar, load_board, sample_board, save_board
from .prediction import (
    CardDecoder,
    Prediction,
    PredictionError,
    Query,
    build_decoder,
    build_masked_sequence,
    card_vector,
    predict_cards,
)
from .evaluation import (
    EvalCase,
    EvalError,
    acc_at_k,
    build_eval_cases,
    compare,
    entropy_at_k,
    mrr,
)
from . import pipeline

__version__ = "0.1.0"
