import json

import pytest
import torch


def _build_tiny_model(target_dir) -> None:
    """A deterministic word-piece BERT small enough for CI.

    The vocabulary keeps every lowercase letter and digit both as a start
    piece and a continuation piece, so any ASCII word tokenizes without
    UNK and most words split into several pieces, which is exactly what
    the word-merging logic needs to chew on.
    """
    from transformers import BertConfig, BertForMaskedLM, BertTokenizer

    letters = list("abcdefghijklmnopqrstuvwxyz")
    digits = [str(d) for d in range(10)]
    vocab_list = (
        ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
        + letters
        + ["##" + c for c in letters]
        + digits
        + ["##" + d for d in digits]
        + ["the", "and", "heart", "disease", "diet", "##ing", "##tion"]
    )
    seen = set()
    vocab_list = [t for t in vocab_list if not (t in seen or seen.add(t))]
    tokenizer = BertTokenizer(vocab={t: i for i, t in enumerate(vocab_list)}, do_lower_case=True)
    config = BertConfig(
        vocab_size=len(vocab_list),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=512,
    )
    torch.manual_seed(0)
    model = BertForMaskedLM(config)
    model.save_pretrained(target_dir)
    tokenizer.save_pretrained(target_dir)


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    target = tmp_path_factory.mktemp("tiny-model")
    _build_tiny_model(target)
    return target


TOPIC_TERMS = [
    ("cardiopathy", "heart"),
    ("neuritis", "nerve"),
    ("hepatitis", "liver"),
    ("dermatitis", "skin"),
    ("gastritis", "stomach"),
    ("anemia", "iron"),
    ("asthma", "lungs"),
    ("arthritis", "joints"),
    ("diabetes", "sugar"),
    ("migraine", "headache"),
]

FILLERS = [
    "diet", "fiber", "vitamin", "omega", "protein", "fasting", "exercise",
    "sleep", "stress", "smoking", "alcohol", "sodium", "calcium", "zinc",
    "magnesium", "berries", "greens", "grains", "nuts", "beans",
]


def build_sample(n_queries: int = 50):
    """A deterministic 50-query biomedical-flavoured retrieval sample."""
    docs = []
    queries = []
    qrels = []
    for i in range(n_queries):
        term, organ = TOPIC_TERMS[i % len(TOPIC_TERMS)]
        variant = f"{term[:-2]}{i:02d}"  # unique per query, still word-piece friendly
        filler_a = FILLERS[(3 * i) % len(FILLERS)]
        filler_b = FILLERS[(3 * i + 1) % len(FILLERS)]
        queries.append((f"q{i:02d}", f"{variant} {organ} {filler_a}"))
        for j in range(2):
            doc_id = f"rel-{i:02d}-{j}"
            text = f"{variant} {variant} {organ} {filler_a} {filler_b} study notes"
            docs.append((doc_id, text))
            qrels.append((f"q{i:02d}", doc_id, 1))
        docs.append((f"near-{i:02d}", f"{organ} {filler_b} {filler_a} general overview"))
    for f in range(50):
        words = [FILLERS[(f + m) % len(FILLERS)] for m in range(6)]
        docs.append((f"fill-{f:02d}", " ".join(words)))
    return docs, queries, qrels


@pytest.fixture(scope="session")
def sample_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("sample")
    docs, queries, qrels = build_sample()
    corpus_path = root / "corpus.jsonl"
    with open(corpus_path, "w", encoding="utf-8") as f:
        for doc_id, text in docs:
            f.write(json.dumps({"_id": doc_id, "title": "", "text": text}) + "\n")
    queries_path = root / "queries.jsonl"
    with open(queries_path, "w", encoding="utf-8") as f:
        for query_id, text in queries:
            f.write(json.dumps({"_id": query_id, "text": text}) + "\n")
    qrels_dir = root / "qrels"
    qrels_dir.mkdir()
    qrels_path = qrels_dir / "test.tsv"
    with open(qrels_path, "w", encoding="utf-8") as f:
        f.write("query-id\tcorpus-id\tscore\n")
        for query_id, doc_id, grade in qrels:
            f.write(f"{query_id}\t{doc_id}\t{grade}\n")
    return {
        "corpus": corpus_path,
        "queries": queries_path,
        "qrels": qrels_path,
        "query_texts": {qid: text for qid, text in queries},
    }


@pytest.fixture(scope="session")
def sparse_scorer(tiny_model_dir, sample_files):
    from retriever_bridge.corpus import load_corpus
    from retriever_bridge.scorers import load_scorer

    scorer = load_scorer(str(tiny_model_dir), "sparse", max_seq_len=128)
    scorer.index_documents(load_corpus(sample_files["corpus"]))
    return scorer
