"""Transformer encoder with a masked-token head, in plain numpy.

Forward and backward passes are written by hand so training runs anywhere
numpy does.  The decoder of the prediction head shares its weight matrix with
the input embedding table (the same ndarray, not a copy); the gradient of the
tied table therefore accumulates both the lookup and the decoder terms, which
the finite-difference test validates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .tokenizer import Vocab


class ConfigError(ValueError):
    """A model or training configuration field is invalid."""


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    hidden: int = 128
    n_layers: int = 2
    n_heads: int = 4
    ff_size: int = 512
    max_seq: int = 33
    dropout: float = 0.1

    def validate(self) -> None:
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be positive")
        if self.hidden < 1:
            raise ConfigError("hidden must be positive")
        if self.n_layers < 1:
            raise ConfigError("n_layers must be positive")
        if self.n_heads < 1 or self.hidden % self.n_heads != 0:
            raise ConfigError("n_heads must be positive and divide hidden")
        if self.ff_size < 1:
            raise ConfigError("ff_size must be positive")
        if self.max_seq < 3:
            raise ConfigError("max_seq must be at least 3")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")

    @classmethod
    def desk(cls, vocab_size: int, **overrides) -> "ModelConfig":
        """Desk-scale defaults: h=128, 2 layers, 4 heads, ff 512, seq 33."""
        return cls(vocab_size=vocab_size, **overrides)


@dataclass
class Checkpoint:
    """Model configuration plus named parameter tensors.

    `params["embeddings.word"]` doubles as the decoder weight; treat loaded
    checkpoints as immutable.
    """

    config: ModelConfig
    params: dict[str, np.ndarray]
    meta: dict[str, Any] = field(default_factory=dict)
    vocab: Vocab | None = None

    @property
    def decoder_weight(self) -> np.ndarray:
        return self.params["embeddings.word"]


def param_names(config: ModelConfig) -> list[str]:
    names = [
        "embeddings.word",
        "embeddings.position",
        "embeddings.ln.gamma",
        "embeddings.ln.beta",
    ]
    for i in range(config.n_layers):
        p = f"layer{i}"
        names += [f"{p}.attn.{n}" for n in ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")]
        names += [f"{p}.attn.ln.gamma", f"{p}.attn.ln.beta"]
        names += [f"{p}.ffn.w1", f"{p}.ffn.b1", f"{p}.ffn.w2", f"{p}.ffn.b2"]
        names += [f"{p}.ffn.ln.gamma", f"{p}.ffn.ln.beta"]
    names += [
        "head.transform.w",
        "head.transform.b",
        "head.transform.ln.gamma",
        "head.transform.ln.beta",
        "head.decoder.bias",
    ]
    return names


def init_model(config: ModelConfig, seed: int) -> Checkpoint:
    """Random initialization, deterministic in (config, seed)."""
    config.validate()
    rng = np.random.default_rng(seed)
    h, ff, V, S = config.hidden, config.ff_size, config.vocab_size, config.max_seq

    def normal(*shape):
        return rng.normal(0.0, 0.02, size=shape).astype(np.float32)

    def zeros(*shape):
        return np.zeros(shape, dtype=np.float32)

    def ones(*shape):
        return np.ones(shape, dtype=np.float32)

    p: dict[str, np.ndarray] = {
        "embeddings.word": normal(V, h),
        "embeddings.position": normal(S, h),
        "embeddings.ln.gamma": ones(h),
        "embeddings.ln.beta": zeros(h),
    }
    for i in range(config.n_layers):
        pre = f"layer{i}"
        p[f"{pre}.attn.wq"] = normal(h, h)
        p[f"{pre}.attn.bq"] = zeros(h)
        p[f"{pre}.attn.wk"] = normal(h, h)
        p[f"{pre}.attn.bk"] = zeros(h)
        p[f"{pre}.attn.wv"] = normal(h, h)
        p[f"{pre}.attn.bv"] = zeros(h)
        p[f"{pre}.attn.wo"] = normal(h, h)
        p[f"{pre}.attn.bo"] = zeros(h)
        p[f"{pre}.attn.ln.gamma"] = ones(h)
        p[f"{pre}.attn.ln.beta"] = zeros(h)
        p[f"{pre}.ffn.w1"] = normal(h, ff)
        p[f"{pre}.ffn.b1"] = zeros(ff)
        p[f"{pre}.ffn.w2"] = normal(ff, h)
        p[f"{pre}.ffn.b2"] = zeros(h)
        p[f"{pre}.ffn.ln.gamma"] = ones(h)
        p[f"{pre}.ffn.ln.beta"] = zeros(h)
    p["head.transform.w"] = normal(h, h)
    p["head.transform.b"] = zeros(h)
    p["head.transform.ln.gamma"] = ones(h)
    p["head.transform.ln.beta"] = zeros(h)
    p["head.decoder.bias"] = zeros(V)
    meta = {"seed": seed, "epochs": 0, "final_loss": None, "mode": None}
    return Checkpoint(config=config, params=p, meta=meta)


def extend_embeddings(
    ckpt: Checkpoint, new_tokens: list[tuple[str, np.ndarray]]
) -> Checkpoint:
    """Append rows to the tied embedding/decoder table; existing rows and all
    other parameters are unchanged (shared, not copied)."""
    if not new_tokens:
        return ckpt
    h = ckpt.config.hidden
    rows = []
    for token, vector in new_tokens:
        vec = np.asarray(vector, dtype=np.float32).reshape(-1)
        if vec.shape != (h,):
            raise ValueError(
                f"init vector for {token!r} has length {vec.size}, expected {h}"
            )
        if not np.all(np.isfinite(vec)):
            raise ValueError(f"init vector for {token!r} has non-finite entries")
        rows.append(vec)
    params = dict(ckpt.params)
    params["embeddings.word"] = np.vstack([ckpt.params["embeddings.word"], rows])
    params["head.decoder.bias"] = np.concatenate(
        [ckpt.params["head.decoder.bias"], np.zeros(len(rows), dtype=np.float32)]
    )
    config = dataclasses.replace(
        ckpt.config, vocab_size=ckpt.config.vocab_size + len(rows)
    )
    return Checkpoint(config=config, params=params, meta=dict(ckpt.meta), vocab=ckpt.vocab)


# --- math pieces -----------------------------------------------------------

_GELU_C = math.sqrt(2.0 / math.pi)


def _gelu_forward(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tanh-approximation gelu; returns (value, tanh term) so the backward
    pass can reuse the expensive tanh.  Written with in-place ops: these run
    on the largest activations in the net."""
    inner = x * x
    inner *= x
    inner *= 0.044715
    inner += x
    inner *= _GELU_C
    t = np.tanh(inner, out=inner)
    y = 1.0 + t
    y *= x
    y *= 0.5
    return y, t


def _gelu(x: np.ndarray) -> np.ndarray:
    return _gelu_forward(x)[0]


def _gelu_backward(dy: np.ndarray, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    u = t * t
    np.subtract(1.0, u, out=u)  # 1 - tanh^2
    g = x * x
    g *= 0.134145
    g += 1.0
    g *= u
    g *= x
    g *= 0.5 * _GELU_C
    g += 0.5
    g += 0.5 * t
    g *= dy
    return g


_LN_EPS = 1e-12


def _layer_norm(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (x - mu) * inv_std
    return gamma * xhat + beta, (xhat, inv_std)


def _layer_norm_backward(dy, cache, gamma):
    xhat, inv_std = cache
    dxhat = dy * gamma
    dx = inv_std * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    axes = tuple(range(dy.ndim - 1))
    dgamma = (dy * xhat).sum(axis=axes)
    dbeta = dy.sum(axis=axes)
    return dx, dgamma, dbeta


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))


def _dropout_mask(rng, shape, rate, dtype):
    draw_dtype = np.float32 if dtype == np.float32 else np.float64
    draws = rng.random(shape, dtype=draw_dtype)
    return (draws >= rate).astype(dtype) / (1.0 - rate)


def _validate_inputs(config: ModelConfig, ids: np.ndarray) -> None:
    if ids.ndim != 2:
        raise ValueError("ids must be a [batch, seq] array")
    if ids.shape[1] > config.max_seq:
        raise ValueError(
            f"sequence length {ids.shape[1]} exceeds max_seq {config.max_seq}"
        )
    if ids.size and (ids.min() < 0 or ids.max() >= config.vocab_size):
        raise ValueError("token id outside vocabulary")


def _encoder_forward(params, config, ids, lengths, *, rng=None, dropout=0.0):
    """Returns (encoder output [B,S,h], cache for backward)."""
    _validate_inputs(config, ids)
    B, S = ids.shape
    dtype = params["embeddings.word"].dtype
    train = rng is not None and dropout > 0.0
    positions = np.arange(S)
    valid = positions[None, :] < np.asarray(lengths).reshape(-1, 1)
    attn_bias = np.where(valid, 0.0, -1e9).astype(dtype)[:, None, None, :]

    emb = params["embeddings.word"][ids] + params["embeddings.position"][:S]
    x, ln0_cache = _layer_norm(
        emb, params["embeddings.ln.gamma"], params["embeddings.ln.beta"]
    )
    d0 = _dropout_mask(rng, x.shape, dropout, dtype) if train else None
    if d0 is not None:
        x = x * d0

    H = config.n_heads
    dh = config.hidden // H
    scale = 1.0 / math.sqrt(dh)
    layer_caches = []
    for i in range(config.n_layers):
        pre = f"layer{i}"
        x_in = x
        q = x @ params[f"{pre}.attn.wq"] + params[f"{pre}.attn.bq"]
        k = x @ params[f"{pre}.attn.wk"] + params[f"{pre}.attn.bk"]
        v = x @ params[f"{pre}.attn.wv"] + params[f"{pre}.attn.bv"]
        qh = q.reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        kh = k.reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        vh = v.reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        scores = qh @ kh.transpose(0, 1, 3, 2) * scale + attn_bias
        probs = softmax(scores)
        dp = _dropout_mask(rng, probs.shape, dropout, dtype) if train else None
        probs_used = probs * dp if dp is not None else probs
        ctx = (probs_used @ vh).transpose(0, 2, 1, 3).reshape(B, S, config.hidden)
        attn_out = ctx @ params[f"{pre}.attn.wo"] + params[f"{pre}.attn.bo"]
        da = _dropout_mask(rng, attn_out.shape, dropout, dtype) if train else None
        if da is not None:
            attn_out = attn_out * da
        y, ln1_cache = _layer_norm(
            x_in + attn_out,
            params[f"{pre}.attn.ln.gamma"],
            params[f"{pre}.attn.ln.beta"],
        )
        f1 = y @ params[f"{pre}.ffn.w1"] + params[f"{pre}.ffn.b1"]
        act, act_t = _gelu_forward(f1)
        ffn_out = act @ params[f"{pre}.ffn.w2"] + params[f"{pre}.ffn.b2"]
        df = _dropout_mask(rng, ffn_out.shape, dropout, dtype) if train else None
        if df is not None:
            ffn_out = ffn_out * df
        x, ln2_cache = _layer_norm(
            y + ffn_out,
            params[f"{pre}.ffn.ln.gamma"],
            params[f"{pre}.ffn.ln.beta"],
        )
        layer_caches.append(
            dict(
                x_in=x_in, qh=qh, kh=kh, vh=vh, probs=probs, dp=dp, ctx=ctx,
                da=da, ln1=ln1_cache, y=y, f1=f1, act=act, act_t=act_t, df=df,
                ln2=ln2_cache,
            )
        )
    cache = dict(
        ids=ids, emb_ln=ln0_cache, d0=d0, layers=layer_caches, scale=scale,
        B=B, S=S, H=H, dh=dh,
    )
    return x, cache


def _head_forward(params, h_in):
    """Prediction-head transform: dense + gelu + layer norm."""
    t = h_in @ params["head.transform.w"] + params["head.transform.b"]
    act, act_t = _gelu_forward(t)
    out, ln_cache = _layer_norm(
        act, params["head.transform.ln.gamma"], params["head.transform.ln.beta"]
    )
    return out, (h_in, t, act_t, ln_cache)


def decode_hidden(params, hidden: np.ndarray) -> np.ndarray:
    """Logits over the full vocabulary: hidden @ E.T + bias, with E the tied
    input embedding table."""
    return hidden @ params["embeddings.word"].T + params["head.decoder.bias"]


def mlm_hidden(ckpt: Checkpoint, ids: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Head-transform output at every position, [B,S,h]; no dropout."""
    enc, _ = _encoder_forward(ckpt.params, ckpt.config, np.asarray(ids), lengths)
    out, _ = _head_forward(ckpt.params, enc)
    return out


def forward_logits(ckpt: Checkpoint, ids: np.ndarray, lengths: np.ndarray) -> np.ndarray:
    """Per-position logits over the vocabulary, [B,S,V]; no dropout."""
    return decode_hidden(ckpt.params, mlm_hidden(ckpt, ids, lengths))


def mlm_loss(
    logits: np.ndarray, target_ids: np.ndarray, selection: np.ndarray
) -> float:
    """Cross-entropy averaged over selected positions only; logits may cover
    all positions, unselected ones are ignored."""
    sel = np.asarray(selection, dtype=bool)
    if not sel.any():
        return 0.0
    picked = logits[sel]
    targets = np.asarray(target_ids)[sel]
    logp = log_softmax(picked)
    return float(-logp[np.arange(len(targets)), targets].mean())


def loss_and_grads(
    params: dict[str, np.ndarray],
    config: ModelConfig,
    input_ids: np.ndarray,
    lengths: np.ndarray,
    target_ids: np.ndarray,
    selection: np.ndarray,
    *,
    rng=None,
    dropout: float = 0.0,
):
    """One training step's loss and gradients for every parameter.

    The head is evaluated only at selected positions; the tied embedding
    gradient accumulates both the decoder and the lookup contributions.
    """
    ids = np.asarray(input_ids)
    sel = np.asarray(selection, dtype=bool)
    enc, cache = _encoder_forward(
        params, config, ids, lengths, rng=rng, dropout=dropout
    )
    grads = {name: np.zeros_like(p) for name, p in params.items()}
    if not sel.any():
        return 0.0, grads
    b_idx, s_idx = np.nonzero(sel)
    h_sel = enc[b_idx, s_idx]
    hm, (h_in, t, t_tanh, ln_cache) = _head_forward(params, h_sel)
    logits = decode_hidden(params, hm)
    targets = np.asarray(target_ids)[b_idx, s_idx]
    logp = log_softmax(logits)
    n = len(targets)
    loss = float(-logp[np.arange(n), targets].mean())

    dlogits = np.exp(logp)
    dlogits[np.arange(n), targets] -= 1.0
    dlogits /= n

    E = params["embeddings.word"]
    dE = grads["embeddings.word"]
    dhm = dlogits @ E
    dE += dlogits.T @ hm
    grads["head.decoder.bias"] += dlogits.sum(axis=0)

    dact, dg, db = _layer_norm_backward(dhm, ln_cache, params["head.transform.ln.gamma"])
    grads["head.transform.ln.gamma"] += dg
    grads["head.transform.ln.beta"] += db
    dt = _gelu_backward(dact, t, t_tanh)
    grads["head.transform.w"] += h_in.T @ dt
    grads["head.transform.b"] += dt.sum(axis=0)
    dh_sel = dt @ params["head.transform.w"].T

    denc = np.zeros_like(enc)
    denc[b_idx, s_idx] = dh_sel

    B, S, H, dh = cache["B"], cache["S"], cache["H"], cache["dh"]
    hsize = config.hidden
    scale = cache["scale"]
    dx = denc
    for i in reversed(range(config.n_layers)):
        pre = f"layer{i}"
        c = cache["layers"][i]
        dsum2, dg, db = _layer_norm_backward(dx, c["ln2"], params[f"{pre}.ffn.ln.gamma"])
        grads[f"{pre}.ffn.ln.gamma"] += dg
        grads[f"{pre}.ffn.ln.beta"] += db
        dffn = dsum2 * c["df"] if c["df"] is not None else dsum2
        act2d = c["act"].reshape(-1, config.ff_size)
        dffn2d = dffn.reshape(-1, hsize)
        grads[f"{pre}.ffn.w2"] += act2d.T @ dffn2d
        grads[f"{pre}.ffn.b2"] += dffn2d.sum(axis=0)
        dact = dffn @ params[f"{pre}.ffn.w2"].T
        df1 = _gelu_backward(dact, c["f1"], c["act_t"])
        y2d = c["y"].reshape(-1, hsize)
        df1_2d = df1.reshape(-1, config.ff_size)
        grads[f"{pre}.ffn.w1"] += y2d.T @ df1_2d
        grads[f"{pre}.ffn.b1"] += df1_2d.sum(axis=0)
        dy = dsum2 + df1 @ params[f"{pre}.ffn.w1"].T

        dsum1, dg, db = _layer_norm_backward(dy, c["ln1"], params[f"{pre}.attn.ln.gamma"])
        grads[f"{pre}.attn.ln.gamma"] += dg
        grads[f"{pre}.attn.ln.beta"] += db
        dattn = dsum1 * c["da"] if c["da"] is not None else dsum1
        ctx2d = c["ctx"].reshape(-1, hsize)
        dattn2d = dattn.reshape(-1, hsize)
        grads[f"{pre}.attn.wo"] += ctx2d.T @ dattn2d
        grads[f"{pre}.attn.bo"] += dattn2d.sum(axis=0)
        dctx = (dattn @ params[f"{pre}.attn.wo"].T).reshape(B, S, H, dh).transpose(0, 2, 1, 3)
        probs_used = c["probs"] * c["dp"] if c["dp"] is not None else c["probs"]
        dprobs_used = dctx @ c["vh"].transpose(0, 1, 3, 2)
        dvh = probs_used.transpose(0, 1, 3, 2) @ dctx
        dprobs = dprobs_used * c["dp"] if c["dp"] is not None else dprobs_used
        dscores = c["probs"] * (
            dprobs - (dprobs * c["probs"]).sum(axis=-1, keepdims=True)
        )
        dqh = dscores @ c["kh"] * scale
        dkh = dscores.transpose(0, 1, 3, 2) @ c["qh"] * scale
        dq = dqh.transpose(0, 2, 1, 3).reshape(B, S, hsize)
        dk = dkh.transpose(0, 2, 1, 3).reshape(B, S, hsize)
        dv = dvh.transpose(0, 2, 1, 3).reshape(B, S, hsize)
        x2d = c["x_in"].reshape(-1, hsize)
        for mat, bias, d in (
            ("wq", "bq", dq), ("wk", "bk", dk), ("wv", "bv", dv),
        ):
            d2d = d.reshape(-1, hsize)
            grads[f"{pre}.attn.{mat}"] += x2d.T @ d2d
            grads[f"{pre}.attn.{bias}"] += d2d.sum(axis=0)
        dx = (
            dsum1
            + dq @ params[f"{pre}.attn.wq"].T
            + dk @ params[f"{pre}.attn.wk"].T
            + dv @ params[f"{pre}.attn.wv"].T
        )

    if cache["d0"] is not None:
        dx = dx * cache["d0"]
    demb, dg, db = _layer_norm_backward(
        dx, cache["emb_ln"], params["embeddings.ln.gamma"]
    )
    grads["embeddings.ln.gamma"] += dg
    grads["embeddings.ln.beta"] += db
    np.add.at(dE, ids.reshape(-1), demb.reshape(-1, hsize))
    grads["embeddings.position"][:S] += demb.sum(axis=0)
    return loss, grads
