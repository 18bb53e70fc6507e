"""Hierarchical document model: token -> sentence -> document encoders.

Wiring per document:

  1. token embeddings feed a sentence-level BiGRU, giving token reps
     u[i][t] (2H) and a sentence vector v[i] = [last_fwd ; last_bwd] (2H);
  2. a document-level BiGRU over (v[1]..v[m]) gives doc-contextual sentence
     vectors c[i] (2D);
  3. sentence class logits are an affine map of c[i];
  4. every token's tagging features are [u[i][t] ; c[i]], so document
     context reaches the tagger, not just the classifier;
  5. emissions feed either a per-token softmax or a linear-chain CRF.

The joint loss is tag_nll / total_tokens + lambda_sent * class_ce / m, both
terms per-unit normalized so the weight means the same thing for any
document size. ``ablate_doc_context`` zeroes c[i] out of the token features
(step 4) to let the document level's contribution be measured.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import crf as crf_mod
from .crf import CrfParams, viterbi
from .linalg import ContractError, Matrix, Rng
from .nn import (BiGruCache, GruCell, ParamTensor, bigru_backward, bigru_forward,
                 embed_backward, embed_forward, gru_cell, param, softmax, softmax_ce,
                 zero_grads)

TAGGER_MODES = ("softmax", "crf")


@dataclass
class HierConfig:
    vocab_size: int
    tag_count: int
    class_count: int
    embed_dim: int = 32
    sent_hidden: int = 32
    doc_hidden: int = 32
    tagger_mode: str = "crf"
    lambda_sent: float = 0.5
    ablate_doc_context: bool = False

    def validate(self) -> None:
        dims = {"vocab_size": self.vocab_size, "tag_count": self.tag_count,
                "class_count": self.class_count, "embed_dim": self.embed_dim,
                "sent_hidden": self.sent_hidden, "doc_hidden": self.doc_hidden}
        for name, v in dims.items():
            if not isinstance(v, int) or v < 1:
                raise ContractError(f"HierConfig.{name} must be an integer >= 1, got {v!r}")
        if self.tagger_mode not in TAGGER_MODES:
            raise ContractError(f"HierConfig.tagger_mode must be one of {TAGGER_MODES}")
        if not (np.isfinite(self.lambda_sent) and self.lambda_sent >= 0.0):
            raise ContractError(f"HierConfig.lambda_sent must be finite and >= 0")

    def to_dict(self) -> dict:
        return {
            "vocab_size": self.vocab_size, "tag_count": self.tag_count,
            "class_count": self.class_count, "embed_dim": self.embed_dim,
            "sent_hidden": self.sent_hidden, "doc_hidden": self.doc_hidden,
            "tagger_mode": self.tagger_mode, "lambda_sent": self.lambda_sent,
            "ablate_doc_context": self.ablate_doc_context,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HierConfig":
        return cls(**d)


def expected_param_count(cfg: HierConfig) -> int:
    """Closed-form trainable scalar count implied by a config."""
    def gru(inp: int, hid: int) -> int:
        return 3 * (hid * inp + hid * hid + hid)

    e, h, d = cfg.embed_dim, cfg.sent_hidden, cfg.doc_hidden
    k, c = cfg.tag_count, cfg.class_count
    n = cfg.vocab_size * e
    n += 2 * gru(e, h) + 2 * gru(2 * h, d)
    n += k * (2 * h + 2 * d) + k
    n += c * (2 * d) + c
    if cfg.tagger_mode == "crf":
        n += k * k + 2 * k
    return n


@dataclass
class DocForward:
    """Everything forward_document computes, kept for the backward pass."""

    token_reps: list[Matrix]        # per sentence, len_i x 2H
    sent_vecs: Matrix               # m x 2H
    doc_vecs: Matrix                # m x 2D (the c_i rows)
    class_logits: Matrix            # m x C
    feats: list[Matrix]             # per sentence, len_i x (2H+2D)
    emissions: list[Matrix]         # per sentence, len_i x K
    sent_caches: list[BiGruCache] = field(repr=False, default_factory=list)
    doc_cache: BiGruCache | None = field(repr=False, default=None)
    embedded: list[Matrix] = field(repr=False, default_factory=list)


class HierModel:
    """Parameter container plus forward / loss / predict over one document."""

    def __init__(self, cfg: HierConfig, rng: Rng | None):
        cfg.validate()
        self.cfg = cfg
        v, e, h, d = cfg.vocab_size, cfg.embed_dim, cfg.sent_hidden, cfg.doc_hidden
        k, c = cfg.tag_count, cfg.class_count
        self.embedding = param("embed", v, e, rng)
        self.sent_fwd = gru_cell("sent_fwd", e, h, rng)
        self.sent_bwd = gru_cell("sent_bwd", e, h, rng)
        self.doc_fwd = gru_cell("doc_fwd", 2 * h, d, rng)
        self.doc_bwd = gru_cell("doc_bwd", 2 * h, d, rng)
        self.emit_w = param("emit.W", k, 2 * h + 2 * d, rng)
        self.emit_b = param("emit.b", k, 1, None)
        self.cls_w = param("cls.W", c, 2 * d, rng)
        self.cls_b = param("cls.b", c, 1, None)
        self.crf: CrfParams | None = crf_mod.crf_params(k) if cfg.tagger_mode == "crf" else None

    def params(self) -> list[ParamTensor]:
        ps = [self.embedding]
        for cell in (self.sent_fwd, self.sent_bwd, self.doc_fwd, self.doc_bwd):
            ps.extend(cell.params())
        ps.extend([self.emit_w, self.emit_b, self.cls_w, self.cls_b])
        if self.crf is not None:
            ps.extend(self.crf.params())
        return ps

    def param_count(self) -> int:
        return sum(p.value.size for p in self.params())

    def zero_grads(self) -> None:
        zero_grads(self.params())

    # -- forward ------------------------------------------------------------

    def forward_document(self, id_seqs: list[list[int]]) -> DocForward:
        if not id_seqs:
            raise ContractError("forward_document: empty document")
        h2 = 2 * self.cfg.sent_hidden
        m = len(id_seqs)
        embedded, token_reps, sent_caches = [], [], []
        sent_vecs = np.empty((m, h2))
        for i, ids in enumerate(id_seqs):
            if not ids:
                raise ContractError(f"forward_document: sentence {i} is empty")
            xs = embed_forward(ids, self.embedding)
            u, last_f, last_b, cache = bigru_forward(self.sent_fwd, self.sent_bwd, xs)
            embedded.append(xs)
            token_reps.append(u)
            sent_caches.append(cache)
            sent_vecs[i, : self.cfg.sent_hidden] = last_f
            sent_vecs[i, self.cfg.sent_hidden:] = last_b

        doc_vecs, _, _, doc_cache = bigru_forward(self.doc_fwd, self.doc_bwd, sent_vecs)
        class_logits = doc_vecs @ self.cls_w.value.T + self.cls_b.value[:, 0]

        feats, emissions = [], []
        for i, u in enumerate(token_reps):
            if self.cfg.ablate_doc_context:
                ctx = np.zeros((u.shape[0], doc_vecs.shape[1]))
            else:
                ctx = np.broadcast_to(doc_vecs[i], (u.shape[0], doc_vecs.shape[1]))
            f = np.hstack([u, ctx])
            feats.append(f)
            emissions.append(f @ self.emit_w.value.T + self.emit_b.value[:, 0])
        return DocForward(token_reps, sent_vecs, doc_vecs, class_logits, feats,
                          emissions, sent_caches, doc_cache, embedded)

    # -- training loss ------------------------------------------------------

    def loss_document(self, id_seqs: list[list[int]], gold_tags: list[list[int]],
                      gold_classes: list[int]) -> float:
        """Joint loss; populates (accumulates into) every parameter grad."""
        if len(gold_tags) != len(id_seqs) or len(gold_classes) != len(id_seqs):
            raise ContractError("loss_document: gold lists must match sentence count")
        for i, (ids, tags) in enumerate(zip(id_seqs, gold_tags)):
            if tags is None or len(tags) != len(ids):
                raise ContractError(f"loss_document: sentence {i} lacks aligned gold tags")
            if gold_classes[i] is None:
                raise ContractError(f"loss_document: sentence {i} lacks a gold class")
        fwd = self.forward_document(id_seqs)
        m = len(id_seqs)
        total_tokens = sum(len(ids) for ids in id_seqs)
        inv_tok = 1.0 / total_tokens

        tag_nll = 0.0
        d_emissions: list[Matrix] = []
        for i, em in enumerate(fwd.emissions):
            if self.crf is not None:
                nll, d_em = crf_mod.crf_nll_and_grads(em, gold_tags[i], self.crf, scale=inv_tok)
                tag_nll += nll
            else:
                d_em = np.empty_like(em)
                for t in range(em.shape[0]):
                    ce, dl = softmax_ce(em[t], gold_tags[i][t])
                    tag_nll += ce
                    d_em[t] = dl
                d_em *= inv_tok
            d_emissions.append(d_em)
        tag_loss = tag_nll * inv_tok

        class_loss = 0.0
        d_cls_logits = np.empty_like(fwd.class_logits)
        for i in range(m):
            ce, dl = softmax_ce(fwd.class_logits[i], gold_classes[i])
            class_loss += ce
            d_cls_logits[i] = dl
        class_loss /= m
        d_cls_logits *= self.cfg.lambda_sent / m

        self._backward(id_seqs, fwd, d_emissions, d_cls_logits)
        return tag_loss + self.cfg.lambda_sent * class_loss

    def _backward(self, id_seqs: list[list[int]], fwd: DocForward,
                  d_emissions: list[Matrix], d_cls_logits: Matrix) -> None:
        h2 = 2 * self.cfg.sent_hidden
        m = len(id_seqs)
        d_doc_vecs = np.zeros_like(fwd.doc_vecs)
        d_token_reps: list[Matrix] = []
        for i, d_em in enumerate(d_emissions):
            f = fwd.feats[i]
            self.emit_w.grad += d_em.T @ f
            self.emit_b.grad[:, 0] += d_em.sum(axis=0)
            d_f = d_em @ self.emit_w.value
            d_token_reps.append(np.ascontiguousarray(d_f[:, :h2]))
            if not self.cfg.ablate_doc_context:
                d_doc_vecs[i] += d_f[:, h2:].sum(axis=0)

        self.cls_w.grad += d_cls_logits.T @ fwd.doc_vecs
        self.cls_b.grad[:, 0] += d_cls_logits.sum(axis=0)
        d_doc_vecs += d_cls_logits @ self.cls_w.value

        d_sent_vecs = bigru_backward(self.doc_fwd, self.doc_bwd, fwd.doc_cache, d_doc_vecs)
        hdim = self.cfg.sent_hidden
        for i in range(m):
            d_xs = bigru_backward(self.sent_fwd, self.sent_bwd, fwd.sent_caches[i],
                                  d_token_reps[i],
                                  d_last_fwd=d_sent_vecs[i, :hdim],
                                  d_last_bwd=d_sent_vecs[i, hdim:])
            embed_backward(id_seqs[i], d_xs, self.embedding)

    # -- inference ----------------------------------------------------------

    def predict_document(self, id_seqs: list[list[int]]
                         ) -> tuple[list[list[int]], list[int], Matrix]:
        """Decode tag ids per sentence, class ids, and class probabilities.

        Ties at any argmax break toward the smaller id. Pure function of the
        parameters and input: repeated calls are identical.
        """
        fwd = self.forward_document(id_seqs)
        tag_ids: list[list[int]] = []
        for em in fwd.emissions:
            if self.crf is not None:
                path, _ = viterbi(em, self.crf)
            else:
                path = [int(t) for t in np.argmax(em, axis=1)]
            tag_ids.append(path)
        class_ids = [int(i) for i in np.argmax(fwd.class_logits, axis=1)]
        class_probs = np.vstack([softmax(row) for row in fwd.class_logits])
        return tag_ids, class_ids, class_probs
