"""End to end: generate a corpus, train a small model, extract from raw text.

Uses the same entry points as the ``hierex`` command line, so everything
below can also be done from a shell. Takes a couple of minutes. Run me:

    python3 demos/05_train_extract.py
"""

import json
import os
import tempfile

from hierex.cli import main

work = tempfile.mkdtemp(prefix="hierex-demo-")
corpus = os.path.join(work, "corpus")
model = os.path.join(work, "model.bin")

print("== 1. generate a corpus ==")
main(["gen-corpus", "--out", corpus, "--n", "400", "--seed", "7",
      "--split", "0.9,0.1,0"])

print("\n== 2. train (small dims, early stopping on dev F1, deterministic) ==")
main(["train", "--train", os.path.join(corpus, "train.jsonl"),
      "--dev", os.path.join(corpus, "dev.jsonl"), "--out-model", model,
      "--set", "embed_dim=16", "--set", "sent_hidden=16", "--set", "doc_hidden=16",
      "--set", "max_epochs=30"])

print("\n== 3. extract from raw, never-seen text ==")
records = os.path.join(work, "records.jsonl")
with open(records, "w", encoding="utf-8") as f:
    f.write(json.dumps({
        "id": "demo-1",
        "text": "Maria Reyes, petitioner, against Henry Dawson, respondent, "
                "Superior Court of Hartley County, No. 12-4418. "
                "On March 3, 2019, Maria Reyes filed a complaint against "
                "Henry Dawson in the Superior Court of Hartley County. "
                "Maria Reyes seeks $ 5,000 in damages together with costs "
                "and interest.",
    }) + "\n")
out = os.path.join(work, "extracted.jsonl")
main(["extract", "--model", model, "--input", records, "--out", out])

with open(out, encoding="utf-8") as f:
    rec = json.loads(f.readline())
print(f"record {rec['id']}:")
for sent in rec["sentences"]:
    print(f"  [{sent['class']}]")
    for ent in sent["entities"]:
        print(f"    {ent['label']:6s} {ent['text']!r}")

print(f"\nartifacts kept under {work}")
