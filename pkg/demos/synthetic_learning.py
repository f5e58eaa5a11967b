"""Train on a corpus where argument names give away their types, then knock out the name encoder.

Run: python demos/synthetic_learning.py  (about a minute on a laptop CPU)
"""

import time

from typeslot.evaluation import metrics_table, naive_baseline, topk_metrics, truth_of
from typeslot.extract import extract_functions
from typeslot.pipeline import Settings, train_from_corpus, train_predictor
from typeslot.synthetic import TYPE_WORDS, names_corpus
from typeslot.vocab import slot_types

files = names_corpus(250, 8, seed=0)
first = sorted(files)[0]
print(f"{len(files)} files; the start of {first}:\n")
print("\n".join(files[first].splitlines()[:12]), "\n")
print("name words per type:")
for type_name, words in TYPE_WORDS.items():
    print(f"  {type_name:<15} {', '.join(words)}")

records = [r for path, src in sorted(files.items()) for r in extract_functions(src, path)]
settings = Settings(hidden=32, embedding_dim=50, embedding_epochs=3, epochs=5)

start = time.perf_counter()
model = train_from_corpus(records, files, settings, seed=0)
print(f"\ntrained on {len(model.train_files)} files in {time.perf_counter() - start:.0f}s")

held_out = set(model.valid_files)
train = [r for r in records if r.file_path not in held_out]
valid = [r for r in records if r.file_path in held_out]
truth = truth_of(valid)
vocab = model.predictor.vocab

# Same embeddings, but the identifier encoder is switched off.
blind = train_predictor(train, model.predictor.code, model.predictor.words, settings.updated({"disabled": ("ids",)}))

rows = {}
for k in (1, 3):
    rows["full model"] = topk_metrics(model.predictor.predict(valid, k), truth, k, vocab)
    rows["without identifiers"] = topk_metrics(blind.predict(valid, k), truth, k, vocab)
    rows["naive (frequency)"] = topk_metrics(naive_baseline(slot_types(train), truth, k), truth, k, vocab)
    print(f"\nheld-out top-{k}, {len(truth)} slots")
    print(metrics_table(rows))
