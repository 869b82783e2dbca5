"""Train the subword tokenizer and extend it with role tags and MWE tokens.

The interesting part is the extension: each new token gets an embedding
vector that is the mean of its constituent pieces, so '<o_que>' starts from
the average of the rows for '<', 'o', '_', 'que', '>'.
"""

import numpy as np

from pictocs import (
    add_mwe_tokens,
    add_role_tokens,
    decode,
    default_grammar,
    encode,
    encode_pieces,
    generate_corpus,
    render_tagged,
    train_subword,
)

split = generate_corpus(default_grammar(), 500, 0, seed=1)
texts = [render_tagged(s) for s in split.train]
vocab = train_subword(texts, target_vocab_size=1500)
print(f"trained vocab: {len(vocab)} tokens")

print("\n== pre-extension segmentation of a role tag")
pieces = encode_pieces(vocab, "<o_que>")
print("  <o_que> ->", [vocab.tokens[i] for i in pieces])

# a small stand-in embedding table; real code uses the model's table
table = np.random.default_rng(0).normal(size=(len(vocab), 16)).astype(np.float32)

vocab, tag_rows = add_role_tokens(vocab, lambda i: table[i])
table = np.vstack([table] + [v for _, v in tag_rows])
print("\n== role tags appended")
print("  first three:", [t for t, _ in tag_rows[:3]], "ids", vocab.role_tag_ids[:3])

vocab, mwe_rows = add_mwe_tokens(vocab, ["querer comer", "fazer xixi"], lambda i: table[i])
print("  MWE tokens:", [t for t, _ in mwe_rows])

print("\n== post-extension encoding")
seq = encode(vocab, "<quem> eu </quem> <verbo> querer comer </verbo>", max_seq=33)
print("  ids ->", [vocab.tokens[i] for i in seq.ids[: seq.length]])
print("  decoded:", decode(vocab, seq))
