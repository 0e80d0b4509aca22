"""Smoke test for the relemb Python module.

Runs the whole pipeline on a small synthetic corpus. Uses an installed
``relemb`` if there is one (``maturin develop -m crates/python/Cargo.toml``),
otherwise loads the library built by ``cargo build -p relemb-python``.
"""

import importlib.machinery
import importlib.util
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_relemb():
    try:
        import relemb

        return relemb
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("librelemb_py.so", "librelemb_py.dylib", "relemb_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                loader = importlib.machinery.ExtensionFileLoader("relemb", str(lib))
                spec = importlib.util.spec_from_loader("relemb", loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                sys.modules["relemb"] = module
                return module
    sys.exit("relemb is not built; run `cargo build -p relemb-python` first")


def main():
    relemb = load_relemb()
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        relemb.write_synthetic(tmp, seed=7, sentences=10000)

        vocab = relemb.Vocabulary.from_corpus(tmp / "corpus.tagged", lowercase=False)
        vocab.save(tmp / "vocab.txt")
        assert relemb.Vocabulary.load(tmp / "vocab.txt").n_words == vocab.n_words
        print(vocab)

        contexts, targets = relemb.extract_contexts(
            tmp / "corpus.tagged", vocab, tmp / "contexts.bin", m_out=3
        )
        assert contexts == 10000 and targets > contexts
        emb, objective = relemb.pretrain(
            vocab, tmp / "contexts.bin", d=10, c=2, k=5, t=1e-2, epochs=3
        )
        early, late = objective
        assert late > early, objective
        print(emb, "objective %.4f -> %.4f" % objective)

        clf, tuned = relemb.Classifier.train(
            tmp / "train.txt", vocab, emb, eta=0.02, lambda_=1e-3, m_out=3
        )
        report = clf.evaluate(tmp / "test.txt", vocab, tuned)
        print(clf, "macro-F1 %.2f accuracy %.2f" % (report["macro_f1"], report["accuracy"]))
        assert report["macro_f1"] >= 90.0, report

        top = clf.top_ngrams(tuned, vocab, tmp / "train.txt", "Cause-Effect(e1,e2)")
        print("Cause-Effect(e1,e2):", [g for g, _ in top])
        assert "that caused the" in [g for g, _ in top]

        preds = clf.predict(tmp / "test.txt", vocab, tuned)
        assert len(preds) == report["instances"]
        labels = [label for _, label in preds]
        assert relemb.score(labels, labels)["macro_f1"] == 100.0

        rand = relemb.Embeddings.random(vocab, 4, 1)
        grid = relemb.cross_validate(
            tmp / "train.txt", vocab, rand, [0.05], [1e-5, 1e-4], folds=5, epochs=2, m_out=3
        )
        assert len(grid) == 2 and all(0.0 <= f <= 100.0 for _, _, f in grid)

        try:
            relemb.score(["Other"], ["Not-A-Label"])
        except ValueError as e:
            print("rejected:", e)
        else:
            raise AssertionError("bad label accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
