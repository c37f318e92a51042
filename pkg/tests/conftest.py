import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from attriq.corpus import Corpus, Document

settings.register_profile(
    "deterministic",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("deterministic")


@pytest.fixture
def tiny_corpus() -> Corpus:
    return Corpus(
        [
            Document(id="d1", text="heart disease diet advice", title="cardiology"),
            Document(id="d2", text="heart attack symptoms heart"),
            Document(id="d3", text="diet plans for weight loss"),
            Document(id="d4", text="sleep and heart health"),
            Document(id="d5", text="weight training for health"),
        ]
    )


def random_corpus(rng: np.random.Generator, n_docs: int, vocab_size: int = 30) -> Corpus:
    """Small seeded corpus for brute-force comparisons."""
    words = [f"w{i:02d}" for i in range(vocab_size)]
    docs = []
    for d in range(n_docs):
        length = int(rng.integers(1, 12))
        body = " ".join(words[int(i)] for i in rng.integers(0, vocab_size, size=length))
        docs.append(Document(id=f"doc{d:04d}", text=body))
    return Corpus(docs)
