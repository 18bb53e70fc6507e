"""Linear-chain CRF output layer.

Sequence scoring, log-partition via the forward algorithm in log space,
gradients from forward-backward marginals (no autodiff), and Viterbi
decoding with backpointers. Ties at every argmax break toward the smaller
tag id, and a decoded path's returned score is bit-identical to
``crf_score`` of that path: both accumulate left to right as
((score + transition) + emission).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import ContractError, Matrix, ShapeError, logsumexp
from .nn import ParamTensor, param


@dataclass
class CrfParams:
    """Transition scores trans[i][j] for tag i -> j, plus start/end scores."""

    trans: ParamTensor  # K x K
    start: ParamTensor  # K x 1
    end: ParamTensor    # K x 1

    @property
    def n_tags(self) -> int:
        return self.trans.value.shape[0]

    def params(self) -> list[ParamTensor]:
        return [self.trans, self.start, self.end]


def crf_params(n_tags: int, prefix: str = "crf") -> CrfParams:
    """Zero-initialized CRF parameters (decoding then reduces to per-token argmax)."""
    return CrfParams(
        trans=param(f"{prefix}.trans", n_tags, n_tags, None),
        start=param(f"{prefix}.start", n_tags, 1, None),
        end=param(f"{prefix}.end", n_tags, 1, None),
    )


def _check(emissions: Matrix, p: CrfParams, tags: list[int] | None = None) -> None:
    n, k = emissions.shape
    if n < 1:
        raise ContractError("crf: empty emission sequence")
    if k != p.n_tags:
        raise ShapeError(f"crf: emissions have {k} tags, params have {p.n_tags}")
    if tags is not None:
        if len(tags) != n:
            raise ShapeError(f"crf: {n} emission rows vs {len(tags)} tags")
        for t, y in enumerate(tags):
            if not 0 <= y < k:
                raise ContractError(f"crf: tag id {y} at position {t} out of range [0, {k})")


def crf_score(emissions: Matrix, tags: list[int], p: CrfParams) -> float:
    """Path score: start + emissions along the path + transitions + end."""
    _check(emissions, p, tags)
    trans = p.trans.value
    s = float(p.start.value[tags[0], 0]) + float(emissions[0, tags[0]])
    for t in range(1, len(tags)):
        s = s + float(trans[tags[t - 1], tags[t]]) + float(emissions[t, tags[t]])
    return s + float(p.end.value[tags[-1], 0])


def crf_log_partition(emissions: Matrix, p: CrfParams) -> tuple[float, Matrix, Matrix]:
    """Forward algorithm in log space; also returns alphas and betas.

    alpha[t][k] includes the emission at t; beta[t][k] excludes it, so the
    unary marginal at (t, k) is exp(alpha[t][k] + beta[t][k] - logZ).
    """
    _check(emissions, p)
    n, k = emissions.shape
    trans = p.trans.value
    start = p.start.value[:, 0]
    end = p.end.value[:, 0]

    alphas = np.empty((n, k))
    alphas[0] = start + emissions[0]
    for t in range(1, n):
        alphas[t] = logsumexp(alphas[t - 1][:, None] + trans, axis=0) + emissions[t]
    log_z = float(logsumexp(alphas[n - 1] + end))

    betas = np.empty((n, k))
    betas[n - 1] = end
    for t in range(n - 2, -1, -1):
        betas[t] = logsumexp(trans + (emissions[t + 1] + betas[t + 1])[None, :], axis=1)
    return log_z, alphas, betas


def crf_nll_and_grads(emissions: Matrix, gold_tags: list[int], p: CrfParams,
                      scale: float = 1.0) -> tuple[float, Matrix]:
    """Negative log-likelihood logZ - score(gold) and its gradients.

    Returns (nll, d_emissions) and accumulates scale * grad into the CRF
    parameter grads. d_emissions[t][k] = P(y_t = k) - 1{gold_t = k}; the
    transition gradient uses pairwise marginals minus gold transition counts.
    """
    _check(emissions, p, gold_tags)
    n, k = emissions.shape
    log_z, alphas, betas = crf_log_partition(emissions, p)
    nll = log_z - crf_score(emissions, gold_tags, p)

    unary = np.exp(alphas + betas - log_z)  # n x k marginals
    d_emissions = unary.copy()
    for t, y in enumerate(gold_tags):
        d_emissions[t, y] -= 1.0

    trans = p.trans.value
    d_trans = np.zeros_like(trans)
    for t in range(1, n):
        pair = np.exp(alphas[t - 1][:, None] + trans
                      + (emissions[t] + betas[t])[None, :] - log_z)
        d_trans += pair
        d_trans[gold_tags[t - 1], gold_tags[t]] -= 1.0
    p.trans.grad += scale * d_trans

    d_start = unary[0].copy()
    d_start[gold_tags[0]] -= 1.0
    p.start.grad[:, 0] += scale * d_start
    d_end = unary[n - 1].copy()
    d_end[gold_tags[n - 1]] -= 1.0
    p.end.grad[:, 0] += scale * d_end

    if scale != 1.0:
        d_emissions *= scale
    return float(nll), d_emissions


def viterbi(emissions: Matrix, p: CrfParams) -> tuple[list[int], float]:
    """Highest-scoring tag path via max-product with backpointers.

    np.argmax returns the first maximum, which is exactly the smallest-id
    tie rule. The returned score is crf_score of the returned path.
    """
    _check(emissions, p)
    n, k = emissions.shape
    trans = p.trans.value

    delta = p.start.value[:, 0] + emissions[0]
    backptr = np.empty((n, k), dtype=np.intp)
    for t in range(1, n):
        scores = delta[:, None] + trans
        backptr[t] = np.argmax(scores, axis=0)
        delta = scores[backptr[t], np.arange(k)] + emissions[t]
    delta = delta + p.end.value[:, 0]

    last = int(np.argmax(delta))
    path = [last]
    for t in range(n - 1, 0, -1):
        path.append(int(backptr[t, path[-1]]))
    path.reverse()
    return path, crf_score(emissions, path, p)
