"""Neural layers with explicit forward and analytic backward passes.

No autodiff tape: every layer saves exactly what its backward pass needs and
the caller drives backpropagation in reverse order. Gradients are pure
accumulations into each parameter's ``grad`` buffer -- running backward twice
without zeroing doubles every gradient, and ``zero_grads`` is the only reset.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import ContractError, Matrix, Rng, ShapeError, glorot_init, logsumexp, sigmoid


@dataclass
class ParamTensor:
    """A named trainable matrix paired with its gradient accumulator."""

    name: str
    value: Matrix
    grad: Matrix = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        if self.value.shape != self.grad.shape:
            raise ShapeError(f"{self.name}: value {self.value.shape} vs grad {self.grad.shape}")


def param(name: str, rows: int, cols: int, rng: Rng | None = None) -> ParamTensor:
    """Glorot-initialized parameter, or zeros when no rng is given."""
    if rng is None:
        value = np.zeros((rows, cols), dtype=np.float64)
    else:
        value = glorot_init(rows, cols, rng)
    return ParamTensor(name, value)


def zero_grads(params: list[ParamTensor]) -> None:
    for p in params:
        p.grad[...] = 0.0


# ---------------------------------------------------------------------------
# Embedding lookup
# ---------------------------------------------------------------------------

def embed_forward(ids: list[int], table: ParamTensor) -> Matrix:
    """Row lookup: output row t is table row ids[t]."""
    vocab = table.value.shape[0]
    for t, i in enumerate(ids):
        if not 0 <= i < vocab:
            raise ContractError(f"embed_forward: id {i} at position {t} out of range [0, {vocab})")
    return table.value[np.asarray(ids, dtype=np.intp)].copy()


def embed_backward(ids: list[int], d_out: Matrix, table: ParamTensor) -> None:
    """Scatter-add upstream rows into the gradient, accumulating for repeats."""
    np.add.at(table.grad, np.asarray(ids, dtype=np.intp), d_out)


# ---------------------------------------------------------------------------
# Dense affine layer
# ---------------------------------------------------------------------------

def dense_forward(w: ParamTensor, b: ParamTensor, f: np.ndarray) -> np.ndarray:
    """Affine map W f + b for a single feature vector."""
    if w.value.shape[1] != f.shape[0] or w.value.shape[0] != b.value.shape[0]:
        raise ShapeError(f"dense: W {w.value.shape}, b {b.value.shape}, f {f.shape}")
    return w.value @ f + b.value[:, 0]


def dense_backward(w: ParamTensor, b: ParamTensor, f: np.ndarray, d_out: np.ndarray) -> np.ndarray:
    """Accumulate dW, db and return df."""
    w.grad += np.outer(d_out, f)
    b.grad[:, 0] += d_out
    return w.value.T @ d_out


# ---------------------------------------------------------------------------
# GRU cell and sequence runner
# ---------------------------------------------------------------------------

@dataclass
class GruCell:
    """Gated recurrent unit.

    r  = sigmoid(W_r x + U_r h + b_r)
    z  = sigmoid(W_z x + U_z h + b_z)
    hh = tanh(W_h x + U_h (r*h) + b_h)
    h' = (1 - z)*h + z*hh
    """

    w_r: ParamTensor
    w_z: ParamTensor
    w_h: ParamTensor
    u_r: ParamTensor
    u_z: ParamTensor
    u_h: ParamTensor
    b_r: ParamTensor
    b_z: ParamTensor
    b_h: ParamTensor

    @property
    def hidden(self) -> int:
        return self.w_r.value.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w_r.value.shape[1]

    def params(self) -> list[ParamTensor]:
        return [self.w_r, self.w_z, self.w_h, self.u_r, self.u_z, self.u_h,
                self.b_r, self.b_z, self.b_h]


def gru_cell(prefix: str, input_dim: int, hidden: int, rng: Rng | None) -> GruCell:
    """Build a cell whose parameter names carry the given prefix."""
    def w(gate: str) -> ParamTensor:
        return param(f"{prefix}.W_{gate}", hidden, input_dim, rng)

    def u(gate: str) -> ParamTensor:
        return param(f"{prefix}.U_{gate}", hidden, hidden, rng)

    def b(gate: str) -> ParamTensor:
        return param(f"{prefix}.b_{gate}", hidden, 1, None)

    return GruCell(w("r"), w("z"), w("h"), u("r"), u("z"), u("h"), b("r"), b("z"), b("h"))


@dataclass
class StepCache:
    """Activations one forward step saves for its backward pass."""

    x: np.ndarray
    h_prev: np.ndarray
    r: np.ndarray
    z: np.ndarray
    rh: np.ndarray
    hh: np.ndarray


def gru_step(cell: GruCell, x: np.ndarray, h_prev: np.ndarray) -> tuple[np.ndarray, StepCache]:
    """One GRU step on a single input vector."""
    if x.shape[0] != cell.input_dim or h_prev.shape[0] != cell.hidden:
        raise ShapeError(
            f"gru_step: x {x.shape} vs input_dim {cell.input_dim}, "
            f"h_prev {h_prev.shape} vs hidden {cell.hidden}")
    r = sigmoid(cell.w_r.value @ x + cell.u_r.value @ h_prev + cell.b_r.value[:, 0])
    z = sigmoid(cell.w_z.value @ x + cell.u_z.value @ h_prev + cell.b_z.value[:, 0])
    rh = r * h_prev
    hh = np.tanh(cell.w_h.value @ x + cell.u_h.value @ rh + cell.b_h.value[:, 0])
    h = (1.0 - z) * h_prev + z * hh
    return h, StepCache(x, h_prev, r, z, rh, hh)


def gru_step_backward(cell: GruCell, cache: StepCache, dh: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Backward through one step; accumulates cell grads, returns (dx, dh_prev)."""
    c = cache
    dz = dh * (c.hh - c.h_prev)
    dhh = dh * c.z
    dh_prev = dh * (1.0 - c.z)

    da_h = dhh * (1.0 - c.hh * c.hh)
    cell.w_h.grad += np.outer(da_h, c.x)
    cell.u_h.grad += np.outer(da_h, c.rh)
    cell.b_h.grad[:, 0] += da_h
    d_rh = cell.u_h.value.T @ da_h
    dr = d_rh * c.h_prev
    dh_prev = dh_prev + d_rh * c.r

    da_z = dz * c.z * (1.0 - c.z)
    cell.w_z.grad += np.outer(da_z, c.x)
    cell.u_z.grad += np.outer(da_z, c.h_prev)
    cell.b_z.grad[:, 0] += da_z

    da_r = dr * c.r * (1.0 - c.r)
    cell.w_r.grad += np.outer(da_r, c.x)
    cell.u_r.grad += np.outer(da_r, c.h_prev)
    cell.b_r.grad[:, 0] += da_r

    dx = cell.w_h.value.T @ da_h + cell.w_z.value.T @ da_z + cell.w_r.value.T @ da_r
    dh_prev = dh_prev + cell.u_z.value.T @ da_z + cell.u_r.value.T @ da_r
    return dx, dh_prev


@dataclass
class SeqCache:
    """Per-sequence activations for the batched BPTT backward."""

    xs: Matrix          # len x E
    h_prev: Matrix      # len x H, h_prev[t] is the state entering step t
    r: Matrix
    z: Matrix
    rh: Matrix
    hh: Matrix


def gru_sequence(cell: GruCell, xs: Matrix) -> tuple[Matrix, SeqCache]:
    """Run the cell over all rows of xs from a zero initial state.

    The input projections for all steps are hoisted into three matmuls; the
    recurrent part stays a per-step loop. Returns the stacked hidden states
    (len x H) and the cache for ``gru_sequence_backward``.
    """
    n = xs.shape[0]
    hdim = cell.hidden
    xr = xs @ cell.w_r.value.T + cell.b_r.value[:, 0]
    xz = xs @ cell.w_z.value.T + cell.b_z.value[:, 0]
    xh = xs @ cell.w_h.value.T + cell.b_h.value[:, 0]

    hs = np.empty((n, hdim))
    hp = np.empty((n, hdim))
    rs = np.empty((n, hdim))
    zs = np.empty((n, hdim))
    rhs = np.empty((n, hdim))
    hhs = np.empty((n, hdim))

    u_r, u_z, u_h = cell.u_r.value, cell.u_z.value, cell.u_h.value
    h = np.zeros(hdim)
    for t in range(n):
        r = sigmoid(xr[t] + u_r @ h)
        z = sigmoid(xz[t] + u_z @ h)
        rh = r * h
        hh = np.tanh(xh[t] + u_h @ rh)
        hp[t] = h
        rs[t] = r
        zs[t] = z
        rhs[t] = rh
        hhs[t] = hh
        h = (1.0 - z) * h + z * hh
        hs[t] = h
    return hs, SeqCache(xs, hp, rs, zs, rhs, hhs)


def gru_sequence_backward(cell: GruCell, cache: SeqCache, d_hs: Matrix,
                          d_last: np.ndarray | None = None) -> Matrix:
    """Full BPTT over a cached sequence.

    d_hs holds the per-step upstream gradients; d_last is an extra gradient
    on the final state (e.g. from a sentence vector consumer). Accumulates
    all cell grads and returns d_xs.
    """
    n = d_hs.shape[0]
    # Per-step activation derivatives, vectorized outside the loop.
    sdr = cache.r * (1.0 - cache.r)
    sdz = cache.z * (1.0 - cache.z)
    tdh = 1.0 - cache.hh * cache.hh

    da_r = np.empty_like(d_hs)
    da_z = np.empty_like(d_hs)
    da_h = np.empty_like(d_hs)

    u_rT, u_zT, u_hT = cell.u_r.value.T, cell.u_z.value.T, cell.u_h.value.T
    dh = np.zeros(cell.hidden) if d_last is None else d_last.copy()
    for t in range(n - 1, -1, -1):
        dht = d_hs[t] + dh
        dz = dht * (cache.hh[t] - cache.h_prev[t])
        dah = dht * cache.z[t] * tdh[t]
        da_h[t] = dah
        d_rh = u_hT @ dah
        daz = dz * sdz[t]
        dar = d_rh * cache.h_prev[t] * sdr[t]
        da_z[t] = daz
        da_r[t] = dar
        dh = dht * (1.0 - cache.z[t]) + d_rh * cache.r[t] + u_zT @ daz + u_rT @ dar

    cell.w_r.grad += da_r.T @ cache.xs
    cell.w_z.grad += da_z.T @ cache.xs
    cell.w_h.grad += da_h.T @ cache.xs
    cell.u_r.grad += da_r.T @ cache.h_prev
    cell.u_z.grad += da_z.T @ cache.h_prev
    cell.u_h.grad += da_h.T @ cache.rh
    cell.b_r.grad[:, 0] += da_r.sum(axis=0)
    cell.b_z.grad[:, 0] += da_z.sum(axis=0)
    cell.b_h.grad[:, 0] += da_h.sum(axis=0)
    return da_r @ cell.w_r.value + da_z @ cell.w_z.value + da_h @ cell.w_h.value


# ---------------------------------------------------------------------------
# Bidirectional GRU over one sequence
# ---------------------------------------------------------------------------

@dataclass
class BiGruCache:
    fwd: SeqCache
    bwd: SeqCache  # over the reversed input


def bigru_forward(fwd: GruCell, bwd: GruCell, xs: Matrix
                  ) -> tuple[Matrix, np.ndarray, np.ndarray, BiGruCache]:
    """Encode a sequence in both directions from zero initial states.

    Returns (token_reps, last_fwd, last_bwd, cache) where row t of
    token_reps is [h_fwd_t ; h_bwd_t], last_fwd is the forward state after
    the final step and last_bwd is the backward pass's state after reading
    position 0.
    """
    if xs.shape[0] < 1:
        raise ContractError("bigru_forward: empty sequence")
    hs_f, cache_f = gru_sequence(fwd, xs)
    hs_b_rev, cache_b = gru_sequence(bwd, xs[::-1].copy())
    hs_b = hs_b_rev[::-1]
    token_reps = np.hstack([hs_f, hs_b])
    return token_reps, hs_f[-1].copy(), hs_b[0].copy(), BiGruCache(cache_f, cache_b)


def bigru_backward(fwd: GruCell, bwd: GruCell, cache: BiGruCache, d_token_reps: Matrix,
                   d_last_fwd: np.ndarray | None = None,
                   d_last_bwd: np.ndarray | None = None) -> Matrix:
    """Backward through both directions; returns d_xs."""
    hdim = fwd.hidden
    d_hs_f = np.ascontiguousarray(d_token_reps[:, :hdim])
    d_hs_b_rev = np.ascontiguousarray(d_token_reps[::-1, hdim:])
    d_xs_f = gru_sequence_backward(fwd, cache.fwd, d_hs_f, d_last_fwd)
    d_xs_b_rev = gru_sequence_backward(bwd, cache.bwd, d_hs_b_rev, d_last_bwd)
    return d_xs_f + d_xs_b_rev[::-1]


# ---------------------------------------------------------------------------
# Softmax cross-entropy
# ---------------------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    m = float(np.max(logits))
    e = np.exp(logits - m)
    return e / e.sum()


def softmax_ce(logits: np.ndarray, gold: int) -> tuple[float, np.ndarray]:
    """Stable cross-entropy loss and its gradient w.r.t. the logits."""
    k = logits.shape[0]
    if not 0 <= gold < k:
        raise ContractError(f"softmax_ce: gold {gold} out of range [0, {k})")
    lse = logsumexp(logits)
    loss = lse - float(logits[gold])
    dlogits = np.exp(logits - lse)
    dlogits[gold] -= 1.0
    return loss, dlogits


# ---------------------------------------------------------------------------
# Finite-difference gradient checker
# ---------------------------------------------------------------------------

@dataclass
class TensorCheck:
    name: str
    max_rel: float
    mean_rel: float
    checked: int


@dataclass
class GradCheckReport:
    tensors: list[TensorCheck]

    @property
    def max_rel(self) -> float:
        return max((t.max_rel for t in self.tensors), default=0.0)

    def passed(self, threshold: float) -> bool:
        return self.max_rel < threshold


def _rel_err(a: float, n: float) -> float:
    return abs(a - n) / max(1e-8, abs(a) + abs(n))


def grad_check(loss_fn, params: list[ParamTensor], eps: float = 1e-5,
               sample: int = 25, rng: Rng | None = None) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    ``loss_fn`` must be a deterministic closure that recomputes the loss from
    the current parameter values and, as a side effect, repopulates grads.
    For each tensor, ``sample`` distinct coordinates are drawn from ``rng``
    and checked at (L(t+eps) - L(t-eps)) / 2 eps. Relative error is
    |a - n| / max(1e-8, |a| + |n|).
    """
    rng = rng or Rng(0)
    zero_grads(params)
    base = loss_fn()
    if not np.isfinite(base):
        raise ContractError(f"grad_check: non-finite base loss {base}")
    analytic = {p.name: p.grad.copy() for p in params}

    checks = []
    for p in params:
        size = p.value.size
        n_coords = min(sample, size)
        coords = list(range(size))
        rng.shuffle(coords)
        coords = coords[:n_coords]
        flat = p.value.reshape(-1)
        rels = []
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            lp = loss_fn()
            flat[c] = orig - eps
            lm = loss_fn()
            flat[c] = orig
            if not (np.isfinite(lp) and np.isfinite(lm)):
                raise ContractError(f"grad_check: non-finite loss at {p.name}[{c}]")
            numeric = (lp - lm) / (2.0 * eps)
            rels.append(_rel_err(float(analytic[p.name].reshape(-1)[c]), numeric))
        checks.append(TensorCheck(p.name, max(rels), sum(rels) / len(rels), n_coords))
    zero_grads(params)
    return GradCheckReport(checks)
