"""Time the compiled and pure-numpy kernel backends on one training run.

Backend selection happens at import time, so each measurement runs in a
fresh subprocess: once normally (numba, if installed) and once with
RADTEXT_DISABLE_NUMBA=1.  The workload is a small but realistic slice of
the pipeline: embedding training, LSTM training, and a prediction pass.

Usage: python benchmarks/bench_backends.py [--n 200] [--epochs 5]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def run_workload(n: int, epochs: int) -> dict:
    from radtext._accel import backend_name
    from radtext.classifier import ModelConfig, predict, train_classifier
    from radtext.corpus import clean_and_tokenize, default_stopwords
    from radtext.embeddings import EmbedTrainConfig, build_vocab, train_embeddings
    from radtext.synth import SynthConfig, generate_corpus

    corpus = generate_corpus(SynthConfig(n_records=n, seed=3))
    stopwords = default_stopwords()
    pairs = []
    for item in corpus:
        if item.label not in ("R", "NR"):
            continue
        seq = clean_and_tokenize(item.record, stopwords)
        if seq.tokens:
            pairs.append((seq, item.label))

    vocab = build_vocab([seq for seq, _ in pairs])

    start = time.perf_counter()
    emb = train_embeddings(
        [seq for seq, _ in pairs],
        vocab,
        EmbedTrainConfig(dimension=16, epochs=2, seed=3),
    )
    embed_seconds = time.perf_counter() - start

    # tiny throwaway run first so JIT compilation is not billed to training
    warm = pairs[:4]
    train_classifier(warm, emb, vocab, ModelConfig(hidden=4, epochs=1, seed=3))

    config = ModelConfig(hidden=16, epochs=epochs, seed=3)
    start = time.perf_counter()
    model = train_classifier(pairs, emb, vocab, config)
    train_seconds = time.perf_counter() - start

    start = time.perf_counter()
    for seq, _ in pairs:
        predict(model, seq)
    predict_seconds = time.perf_counter() - start

    return {
        "backend": backend_name(),
        "examples": len(pairs),
        "embed_seconds": embed_seconds,
        "train_seconds": train_seconds,
        "predict_seconds": predict_seconds,
    }


def measure(disable_numba: bool, n: int, epochs: int) -> dict:
    env = dict(os.environ)
    env["RADTEXT_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    out = subprocess.run(
        [sys.executable, __file__, "--workload", "--n", str(n), "--epochs", str(epochs)],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=200, help="synthetic corpus size")
    parser.add_argument("--epochs", type=int, default=5, help="classifier epochs")
    parser.add_argument("--workload", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.workload:
        print(json.dumps(run_workload(args.n, args.epochs)))
        return

    results = []
    for disable in (False, True):
        result = measure(disable, args.n, args.epochs)
        results.append(result)
        print(
            "%-6s  embed %.2fs  train %.2fs  predict %.2fs  (%d examples)"
            % (
                result["backend"],
                result["embed_seconds"],
                result["train_seconds"],
                result["predict_seconds"],
                result["examples"],
            )
        )
    if results[0]["backend"] == results[1]["backend"]:
        print("numba unavailable; both runs used the numpy fallback")
        return
    for key in ("train_seconds", "predict_seconds"):
        fast, slow = results[0][key], results[1][key]
        if fast > 0:
            print("%s speedup: %.1fx" % (key.split("_")[0], slow / fast))


if __name__ == "__main__":
    main()
