import random

import pytest

from slp.corpus import ParsedSentence, Token
from slp.features import (
    DependencyGraph,
    PathExtractionError,
    between_words,
    endpoint_placeholders,
    extract_features,
    load_title_lexicon,
    no_verb_pattern,
    pattern_words,
    shortest_dependency_path,
)
from tests.conftest import mention

TITLES = load_title_lexicon()

RAY_YOUNG_EXPECTED = {
    "sdp=PERSON<-appos<-officer->prep_of->ORGANIZATION",
    'mid_seq=", the chief financial officer of"',
    "n_between=6",
    "first_between=,",
    "last_between=of",
    "tok_between=the",
    "tok_between=chief",
    "tok_between=financial",
    "tok_between=officer",
    "before1_e1=nil",
    "before2_e1=nil",
    "after1_e2=,",
    "after2_e2=said",
    "e1_head=said",
    "e2_head=officer",
    "heads_equal=false",
    "e1_dep=officer",
    "e2_dep=nil",
    "e1_str=Ray_Young",
    "e2_str=General_Motors",
    "e1e2=Ray_Young--General_Motors",
    "et1=PERSON",
    "et2=ORGANIZATION",
    "et1et2=PERSON--ORGANIZATION",
    "title_between=true",
    "order=1",
    "pos_path=NNP->DT->JJ->JJ->NN->IN->NNP",
}


def test_fig2_sdp(sherman_sentence, sherman_mentions):
    subj, obj = sherman_mentions
    result = shortest_dependency_path(subj, obj, DependencyGraph(sherman_sentence))
    assert result.sdp == "PERSON<-nsubj<-grew->prep_in->neighborhood->prep_of->LOCATION"
    assert result.no_verb is False
    assert result.interior_words == ("grew", "neighborhood")


def test_table1_sdp_and_features(ray_young_sentence, ray_young_mentions):
    subj, obj = ray_young_mentions
    graph = DependencyGraph(ray_young_sentence)
    result = shortest_dependency_path(subj, obj, graph)
    assert result.sdp == "PERSON<-appos<-officer->prep_of->ORGANIZATION"
    feats = extract_features(subj, obj, ray_young_sentence, result, TITLES)
    assert set(feats) == RAY_YOUNG_EXPECTED


def test_reverse_direction_order_feature(ray_young_sentence, ray_young_mentions):
    subj, obj = ray_young_mentions
    graph = DependencyGraph(ray_young_sentence)
    result = shortest_dependency_path(obj, subj, graph)
    assert result.sdp == "ORGANIZATION<-prep_of<-officer->appos->PERSON"
    feats = extract_features(obj, subj, ray_young_sentence, result, TITLES)
    assert "order=2" in feats


def _chain_sentence(surfaces, heads, deprels, pos=None, ner=None):
    pos = pos or ["NN"] * len(surfaces)
    ner = ner or ["NONE"] * len(surfaces)
    tokens = tuple(
        Token(i + 1, s, s.lower(), pos[i], ner[i], heads[i], deprels[i])
        for i, s in enumerate(surfaces)
    )
    return ParsedSentence("chain", 1, tokens)


def test_single_edge_path():
    # object's head IS the subject head token: one-hop path
    sent = _chain_sentence(
        ["Acme", "Boston"],
        [0, 1],
        ["root", "appos"],
        pos=["NNP", "NNP"],
        ner=["ORGANIZATION", "LOCATION-CITY"],
    )
    subj = mention(sent, 1, 1, 1, "ORGANIZATION", "A")
    obj = mention(sent, 2, 2, 2, "LOCATION-CITY", "B")
    result = shortest_dependency_path(subj, obj, DependencyGraph(sent))
    assert result.sdp == "ORGANIZATION->appos->LOCATION"
    assert result.no_verb is True  # no interior token at all


def test_adjacent_mentions_feature_edges():
    sent = _chain_sentence(
        ["Acme", "Boston"],
        [0, 1],
        ["root", "appos"],
        pos=["NNP", "NNP"],
        ner=["ORGANIZATION", "LOCATION-CITY"],
    )
    subj = mention(sent, 1, 1, 1, "ORGANIZATION", "A")
    obj = mention(sent, 2, 2, 2, "LOCATION-CITY", "B")
    result = shortest_dependency_path(subj, obj, DependencyGraph(sent))
    feats = extract_features(subj, obj, sent, result, TITLES)
    assert "n_between=0" in feats
    assert 'mid_seq=""' in feats
    assert "first_between=nil" in feats
    assert "last_between=nil" in feats
    assert not any(f.startswith("tok_between=") for f in feats)


def test_shared_type_placeholders():
    assert endpoint_placeholders("PERSON", "PERSON") == ("PER-1", "PER-2")
    assert endpoint_placeholders("ORGANIZATION", "ORGANIZATION") == ("ORG-1", "ORG-2")
    assert endpoint_placeholders("LOCATION-CITY", "LOCATION-COUNTRY") == ("LOC-1", "LOC-2")
    assert endpoint_placeholders("PERSON", "ORGANIZATION") == ("PERSON", "ORGANIZATION")
    assert endpoint_placeholders("TITLE", "TITLE") == ("TITLE-1", "TITLE-2")


def test_disconnected_heads_raise(tmp_path):
    # two roots: token 2 forms its own island
    sent = _chain_sentence(["A", "B"], [0, 0], ["root", "root"], ner=["PERSON", "PERSON"])
    subj = mention(sent, 1, 1, 1, "PERSON", "A")
    obj = mention(sent, 2, 2, 2, "PERSON", "B")
    with pytest.raises(PathExtractionError):
        shortest_dependency_path(subj, obj, DependencyGraph(sent))


def test_number_and_date_collapse(sherman_sentence):
    subj = mention(sherman_sentence, 1, 1, 1, "PERSON", "E1")
    obj = mention(sherman_sentence, 12, 12, 12, "LOCATION-CITY", "E2")
    words = between_words(subj, obj, sherman_sentence)
    assert "⟨NUM⟩" in words
    words_raw = between_words(subj, obj, sherman_sentence, collapse=False)
    assert "63" in words_raw


def test_no_verb_pattern_key():
    sent = _chain_sentence(
        ["Acme", "CEO", "Jane"],
        [0, 3, 1],
        ["root", "nn", "appos"],
        pos=["NNP", "NN", "NNP"],
        ner=["ORGANIZATION", "TITLE", "PERSON"],
    )
    subj = mention(sent, 3, 3, 3, "PERSON", "P")
    obj = mention(sent, 1, 1, 1, "ORGANIZATION", "O")
    key = no_verb_pattern(subj, obj, sent)
    assert key == "PERSON[ceo]ORGANIZATION"


def test_pattern_words_roundtrip():
    assert pattern_words("PERSON<-nsubj<-grew->prep_in->neighborhood->prep_of->LOCATION") == [
        "grew",
        "neighborhood",
    ]
    assert pattern_words("PERSON<-appos<-officer->prep_of->ORGANIZATION") == ["officer"]
    assert pattern_words("ORGANIZATION->appos->LOCATION") == []
    assert pattern_words("PERSON[, resident of]LOCATION") == [",", "resident", "of"]
    assert pattern_words("PERSON[]LOCATION") == []
    assert pattern_words("PER-1<-appos<-son->prep_of->PER-2") == ["son"]


# --- minimality against a brute-force oracle --------------------------------

def random_tree_sentence(rng, n):
    # single root, every other token attaches to an earlier one: a labeled tree
    heads = [0] + [rng.randrange(1, i + 1) for i in range(1, n)]
    pos = [rng.choice(["NN", "VBD", "JJ", "IN", "NNP"]) for _ in range(n)]
    tokens = tuple(
        Token(i + 1, f"w{i + 1}", f"w{i + 1}", pos[i], "NONE", heads[i], "dep" if heads[i] else "root")
        for i in range(n)
    )
    return ParsedSentence("rand", 1, tokens)


def all_simple_paths(adjacency, source, target):
    paths = []
    stack = [(source, [source])]
    while stack:
        node, path = stack.pop()
        if node == target:
            paths.append(path)
            continue
        for nxt in adjacency[node]:
            if nxt not in path:
                stack.append((nxt, path + [nxt]))
    return paths


def test_bfs_path_is_minimal_on_random_trees():
    rng = random.Random(51)
    for _ in range(200):
        n = rng.randrange(2, 16)
        sent = random_tree_sentence(rng, n)
        graph = DependencyGraph(sent)
        adjacency = {
            i: sorted(e.neighbor for e in edges) for i, edges in graph.adjacency.items()
        }
        a, b = rng.sample(range(1, n + 1), 2)
        got = graph.shortest_path(a, b)
        oracle = all_simple_paths(adjacency, a, b)
        assert oracle, "tree must connect every pair"
        shortest = min(len(p) for p in oracle)
        assert len(got) == shortest
        # trees have a unique path, so the whole path must match
        unique = [p for p in oracle if len(p) == shortest]
        assert got in unique
        assert len(unique) == 1


def test_lexicographic_tie_break():
    # diamond: 1-2-4 and 1-3-4 are both shortest; interior 2 < 3
    tokens = (
        Token(1, "a", "a", "NN", "NONE", 2, "x"),
        Token(2, "b", "b", "NN", "NONE", 4, "x"),
        Token(3, "c", "c", "NN", "NONE", 4, "x"),
        Token(4, "d", "d", "NN", "NONE", 0, "root"),
    )
    # add a second edge 1->3 is impossible in tree form; emulate with head on 1 via 2 and
    # a co-dependent: build a non-tree by linking 1 under 2 and 3 under 4, then 1 also
    # reaches 4 via 2. For a real tie we need two length-2 routes.
    sent = ParsedSentence("tie", 1, tokens)
    graph = DependencyGraph(sent)
    # 1->2->4 is the only route here; real tie coverage comes from the diamond below.
    assert graph.shortest_path(1, 4) == [1, 2, 4]

    class FakeSentence:
        doc_id = "fake"
        sentence_id = 1
        tokens = (
            Token(1, "a", "a", "NN", "NONE", 0, ""),
            Token(2, "b", "b", "NN", "NONE", 1, "l"),
            Token(3, "c", "c", "NN", "NONE", 1, "l"),
            Token(4, "d", "d", "NN", "NONE", 2, "l"),
        )

        def token(self, index):
            return self.tokens[index - 1]

    diamond = DependencyGraph(FakeSentence())
    # splice an extra edge 3-4 to create two equal routes 1-2-4 / 1-3-4
    from slp.features import Edge

    diamond.adjacency[3].append(Edge(neighbor=4, deprel="l", downward=True))
    diamond.adjacency[4].append(Edge(neighbor=3, deprel="l", downward=False))
    assert diamond.shortest_path(1, 4) == [1, 2, 4]


def test_extraction_is_deterministic(ray_young_sentence, ray_young_mentions):
    subj, obj = ray_young_mentions
    graph = DependencyGraph(ray_young_sentence)
    runs = {
        tuple(
            extract_features(
                subj, obj, ray_young_sentence, shortest_dependency_path(subj, obj, graph), TITLES
            )
        )
        for _ in range(3)
    }
    assert len(runs) == 1


def test_n_between_arithmetic(ray_young_sentence, ray_young_mentions):
    subj, obj = ray_young_mentions
    graph = DependencyGraph(ray_young_sentence)
    feats = extract_features(
        subj, obj, ray_young_sentence, shortest_dependency_path(subj, obj, graph), TITLES
    )
    n = next(int(f.split("=")[1]) for f in feats if f.startswith("n_between="))
    assert n == obj.first - subj.last - 1
