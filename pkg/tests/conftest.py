from __future__ import annotations

import pytest

from bugprio import synth, textprep, topics


@pytest.fixture(scope="session")
def planted():
    return synth.planted_topic_corpus(
        n_docs=300, n_topics=3, lexicon_size=10, doc_length=50, seed=7
    )


@pytest.fixture(scope="session")
def planted_fit(planted):
    """One shared LDA fit over the planted corpus (the fit is the slow part).

    Summary-only tokenization keeps each document exactly its 50 planted
    lexicon tokens, so the generator distributions are the literal target.
    """
    config = textprep.TokenizerConfig(fields_used=("summary",))
    token_lists = [textprep.tokenize(r, config) for r in planted.reports]
    vocab = textprep.build_vocabulary(token_lists, min_count=1)
    vectors = [textprep.vectorize(t, vocab) for t in token_lists]
    lda_config = topics.LdaConfig(
        topics=3, iterations=200, burn_in=50, inference_iterations=50, seed=42
    )
    model = topics.fit_lda(vectors, lda_config, vocab)
    return {"vocab": vocab, "vectors": vectors, "model": model, "tokenizer": config}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and "test_acceptance" in item.nodeid:
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {item.name}: {status}")
