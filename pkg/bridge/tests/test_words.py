from retriever_bridge.words import word_tokenize


def test_matches_engine_examples():
    assert word_tokenize("What is actually in chicken nuggets?") == [
        "what",
        "is",
        "actually",
        "in",
        "chicken",
        "nuggets",
    ]
    assert word_tokenize("Self-driving cars, today!") == ["self-driving", "cars", "today"]
    assert word_tokenize("???") == []
    assert word_tokenize("") == []


def test_agrees_with_engine_tokenizer_on_ascii():
    # The engine package is the reference for this shared convention.
    from attriq.corpus import tokenize

    samples = [
        "cardiopathy heart diet",
        "omega-3 fish oil, daily?",
        "Vitamin D and sleep",
        "don't smoke",
        "a1c sugar levels",
    ]
    for text in samples:
        assert word_tokenize(text) == tokenize(text)
