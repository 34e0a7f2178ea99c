import random

import pytest

from passagekit.corpus import Corpus, Document, Passage


def make_corpus(spec: dict) -> Corpus:
    """Build a corpus from {doc_id: (title, [passage texts])}."""
    documents = []
    for doc_id, (title, texts) in spec.items():
        passages = tuple(
            Passage(f"{doc_id}#{i}", text, doc_id, i)
            for i, text in enumerate(texts, start=1)
        )
        documents.append(Document(doc_id, title, passages))
    return Corpus(documents)


def random_corpus(rng: random.Random, num_docs: int, max_passages: int = 6) -> Corpus:
    vocab = ["quark", "lepton", "boson", "gluon", "photon", "meson", "hadron",
             "proton", "neutron", "muon", "tau", "spin", "charm", "braid"]
    spec = {}
    for d in range(num_docs):
        texts = [
            " ".join(rng.choices(vocab, k=rng.randint(3, 12)))
            for _ in range(rng.randint(1, max_passages))
        ]
        title = rng.choice([None, " ".join(rng.choices(vocab, k=2))])
        spec[f"d{d:03d}"] = (title, texts)
    return make_corpus(spec)


@pytest.fixture
def tiny_corpus():
    return make_corpus(
        {
            "d1": ("Alpha Title", ["quark lepton boson", "gluon photon"]),
            "d2": (None, ["meson hadron quark", "proton neutron", "muon tau"]),
            "d3": ("Gamma Ray", ["spin charm quark lepton"]),
        }
    )
