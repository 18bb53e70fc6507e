"""The linear-chain CRF: scoring, the forward pass, and Viterbi decoding.

Small enough to verify against full path enumeration in this very script.
Run me:

    python3 demos/03_crf_decoding.py
"""

import itertools

import numpy as np

from hierex import Rng, crf_params, crf_score, crf_log_partition, glorot_init, \
    logsumexp, viterbi

rng = Rng(12)
n_steps, n_tags = 4, 3
emissions = glorot_init(n_steps, n_tags, rng) * 4.0
p = crf_params(n_tags)
p.trans.value[...] = glorot_init(n_tags, n_tags, rng) * 2.0
p.start.value[...] = glorot_init(n_tags, 1, rng)
p.end.value[...] = glorot_init(n_tags, 1, rng)

print(f"{n_steps} steps, {n_tags} tags, {n_tags ** n_steps} possible paths")

all_paths = list(itertools.product(range(n_tags), repeat=n_steps))
scores = np.array([crf_score(emissions, list(path), p) for path in all_paths])
brute_logz = float(logsumexp(scores))
logz, _, _ = crf_log_partition(emissions, p)
print(f"log-partition: forward algorithm {logz:.10f}, "
      f"enumeration {brute_logz:.10f}, gap {abs(logz - brute_logz):.2e}")

best_idx = int(np.argmax(scores))
path, score = viterbi(emissions, p)
print(f"viterbi path {path} score {score:.6f}")
print(f"best enumerated path {list(all_paths[best_idx])} score {scores[best_idx]:.6f}")

gold = [0, 1, 2, 1]
print(f"\nNLL of an arbitrary gold path {gold}: "
      f"{logz - crf_score(emissions, gold, p):.6f} (logZ minus its score)")
