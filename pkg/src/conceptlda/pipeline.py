"""Run detection methods over a concept set and collect (segment, concept) hits."""
from .detect import (OutOfVocabularyError, detect, hybrid,
                     keyword_baseline, make_query, parse_method)

__all__ = ["ONLINE_METHODS", "GIBBS_METHODS", "default_methods", "query_set",
           "run_method", "method_predictions"]

ONLINE_METHODS = ("online/most_likely", "online/highest_rank", "online/top_n")
GIBBS_METHODS = ("gibbs/most_likely", "gibbs/highest_rank", "gibbs/top_n",
                 "gibbs/concrete_assignment")


def default_methods(online=True, gibbs=True, top_n=30):
    names = ["keyword"]
    if online:
        names += [m.replace("top_n", f"top_{top_n}") for m in ONLINE_METHODS]
    if gibbs:
        names += [m.replace("top_n", f"top_{top_n}") for m in GIBBS_METHODS]
    if online:
        names.append("hybrid")
    return names


def query_set(concepts, corpus):
    """Concepts whose keyword survived preprocessing, sorted."""
    return sorted({c for c in concepts if make_query(corpus, c).in_vocabulary})


def run_method(name, corpus, word, online_model=None, gibbs_model=None, gibbs_state=None,
               top_n=30, theta_threshold=0.01, fallback="online/top_30"):
    """Segment ids hit by method ``name`` for one keyword."""
    q = make_query(corpus, word)
    if name == "keyword":
        return keyword_baseline(corpus, q)
    if name == "hybrid":
        fb = parse_method(fallback, top_n, theta_threshold)
        model = online_model if fb.engine == "online" else gibbs_model
        _require(model, fb.engine)
        return hybrid(corpus, model, gibbs_state, q, fb)
    method = parse_method(name, top_n, theta_threshold)
    if method.engine == "online":
        _require(online_model, "online")
        return detect(corpus, online_model, None, q, method)
    _require(gibbs_model, "gibbs")
    if gibbs_state is None:
        raise ValueError("gibbs methods need a Gibbs state")
    return detect(corpus, gibbs_model, gibbs_state, q, method)


def _require(model, engine):
    if model is None:
        raise ValueError(f"method needs a trained {engine} model")


def method_predictions(methods, corpus, concepts, **models):
    """``{method: {(segment, concept), ...}}`` over every in-lexicon concept."""
    out = {}
    for name in methods:
        pairs = set()
        for c in concepts:
            try:
                hits = run_method(name, corpus, c, **models)
            except OutOfVocabularyError:
                continue
            pairs.update((sid, c) for sid in hits)
        out[name] = pairs
    return out

