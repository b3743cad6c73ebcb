import numpy as np
import pytest

from slp.instances import DISCARDED, KEPT, NEGATIVE, POSITIVE, PROPAGATED
from slp.patterns import ACCEPTED, REJECTED, SdpPattern
from slp.propagation import (
    PatternVectors,
    PropagationUnavailable,
    RankedPattern,
    Schedule,
    assemble_training_set,
    build_pattern_vectors,
    centroid,
    rank_candidates,
    schedule_size,
)
from slp.semantic import BOW, EMBEDDING, SVD, EmbeddingTable, PatternVector
from tests.test_patterns import make_instance

FIG4_PERCENTS = [5.0, 6.7464142384, 9.1028210151, 12.2822802612, 16.5722700867,
                 22.360679775, 30.1708816827, 40.7090531537, 54.9280271653, 74.1134449107, 100.0]


def test_schedule_endpoints():
    assert schedule_size(Schedule(5, 100, 10, 0)) == 5
    assert schedule_size(Schedule(5, 100, 10, 10)) == 100


def test_schedule_fig4_values():
    # N_filtered = 5% of N_DS: the published fraction series
    n_ds = 10000
    n_f = 500
    for k, pct in enumerate(FIG4_PERCENTS):
        got = schedule_size(Schedule(n_f, n_ds, 10, k))
        assert abs(got - pct * n_ds / 100) <= 1


def test_schedule_midpoint_value():
    assert schedule_size(Schedule(5, 100, 10, 5)) == 22


def test_schedule_geometric_ratio():
    sizes = [schedule_size(Schedule(50, 5000, 10, k)) for k in range(11)]
    assert sizes == sorted(sizes)
    ratios = [sizes[k + 1] / sizes[k] for k in range(10)]
    expected = (5000 / 50) ** (1 / 10)
    assert all(abs(r - expected) < 0.05 for r in ratios)


def test_schedule_validation():
    with pytest.raises(ValueError):
        Schedule(0, 10, 10, 0)
    with pytest.raises(ValueError):
        Schedule(5, 4, 10, 0)
    with pytest.raises(ValueError):
        Schedule(5, 10, 10, 11)


def pv(*values):
    return PatternVector(vector=np.array(values, dtype=float), contributing_words=["w"])


def test_centroid_single_and_mean():
    v = pv(1.0, 2.0)
    assert np.allclose(centroid([v]).vector, [1.0, 2.0])
    vs = [pv(1.0, 0.0), pv(0.0, 1.0), pv(2.0, 2.0)]
    assert np.allclose(centroid(vs).vector, [1.0, 1.0])


def test_centroid_ignores_empty_vectors():
    vs = [pv(2.0, 0.0), PatternVector(vector=np.zeros(2), empty_flag=True)]
    assert np.allclose(centroid(vs).vector, [2.0, 0.0])


def test_centroid_all_empty_raises():
    with pytest.raises(PropagationUnavailable):
        centroid([PatternVector(vector=np.zeros(2), empty_flag=True)])


def test_degenerate_centroid_fails_ranking():
    center = centroid([pv(1.0, 0.0), pv(-1.0, 0.0)])
    assert np.allclose(center.vector, 0.0)
    vectors = PatternVectors(EMBEDDING, {"P": pv(1.0, 0.0)})
    with pytest.raises(PropagationUnavailable):
        rank_candidates(center, [SdpPattern("r", "P", pos_count=1)], vectors)


def test_rank_candidates_order_and_exclusions():
    center = pv(1.0, 0.0)
    patterns = [
        SdpPattern("r", "near", pos_count=5),
        SdpPattern("r", "orthogonal", pos_count=9),
        SdpPattern("r", "accepted", pos_count=9, verdict=ACCEPTED),
        SdpPattern("r", "rejected", pos_count=2, verdict=REJECTED),
        SdpPattern("r", "unrankable", pos_count=3),
    ]
    vectors = PatternVectors(
        EMBEDDING,
        {
            "near": pv(0.97, 0.24),
            "orthogonal": pv(0.0, 1.0),
            "accepted": pv(1.0, 0.0),
            "rejected": pv(0.9, 0.44),
            "unrankable": PatternVector(vector=np.zeros(2), empty_flag=True),
        },
    )
    ranking = rank_candidates(center, patterns, vectors)
    names = [r.sdp for r in ranking]
    assert names == ["near", "rejected", "orthogonal"]  # accepted + empty excluded
    assert ranking[0].similarity == pytest.approx(0.97, abs=0.01)
    assert ranking[-1].similarity == 0.0


def test_rank_ties_broken_by_count_then_name():
    center = pv(1.0, 0.0)
    patterns = [
        SdpPattern("r", "b", pos_count=2),
        SdpPattern("r", "a", pos_count=2),
        SdpPattern("r", "big", pos_count=7),
    ]
    vectors = PatternVectors(
        EMBEDDING, {"a": pv(1.0, 0.0), "b": pv(2.0, 0.0), "big": pv(3.0, 0.0)}
    )
    ranking = rank_candidates(center, patterns, vectors)
    assert [r.sdp for r in ranking] == ["big", "a", "b"]


def _instances(pattern, n, ds_label=POSITIVE, stage=DISCARDED):
    out = []
    for i in range(n):
        inst = make_instance("r", f"{pattern}-{i:03d}", pattern, ds_label)
        inst.stage_label = stage
        out.append(inst)
    return out


def test_assemble_k0_is_kept_set():
    kept = _instances("K", 5, stage=KEPT)
    discarded = _instances("D", 20)
    ranking = [RankedPattern("D", 0.9, 20)]
    schedule = Schedule(5, 25, 10, 0)
    result = assemble_training_set(kept, discarded, ranking, schedule)
    assert result == kept


def test_assemble_mid_pattern_cut():
    kept = _instances("K", 5, stage=KEPT)
    discarded = _instances("D", 7)
    ranking = [RankedPattern("D", 0.9, 7)]
    result = assemble_training_set(kept, discarded, ranking, Schedule(5, 12, 10, 4))
    # N_4 = 5 * (12/5)^0.4 = 7.08 -> 7: two propagated instances in canonical order
    assert len(result) == 7
    propagated = [i for i in result if i.stage_label == PROPAGATED]
    assert [i.doc_id for i in propagated] == ["D-000", "D-001"]


def test_assemble_k_max_includes_unrankable():
    kept = _instances("K", 4, stage=KEPT)
    ranked = _instances("D", 6)
    unrankable = _instances("U", 2)
    ranking = [RankedPattern("D", 0.5, 6)]
    schedule = Schedule(4, 12, 10, 10)
    result = assemble_training_set(kept, ranked + unrankable, ranking, schedule)
    assert len(result) == 12
    assert {i.pattern_key for i in result} == {"K", "D", "U"}


def test_assemble_below_k_max_excludes_unrankable():
    kept = _instances("K", 4, stage=KEPT)
    ranked = _instances("D", 6)
    unrankable = _instances("U", 2)
    ranking = [RankedPattern("D", 0.5, 6)]
    schedule = Schedule(4, 12, 10, 9)
    result = assemble_training_set(kept, ranked + unrankable, ranking, schedule)
    assert "U" not in {i.pattern_key for i in result}


def test_assemble_monotone_nesting():
    kept = _instances("K", 3, stage=KEPT)
    blocks = [_instances(f"D{j}", 4) for j in range(5)]
    discarded = [inst for block in blocks for inst in block]
    ranking = [RankedPattern(f"D{j}", 1.0 - j / 10, 4) for j in range(5)]
    previous = set()
    for k in range(11):
        schedule = Schedule(3, 23, 10, k)
        for inst in discarded:
            inst.stage_label = DISCARDED
        result = assemble_training_set(kept, discarded, ranking, schedule)
        ids = {i.instance_id for i in result}
        assert previous <= ids
        previous = ids


def test_assemble_never_includes_negatives():
    kept = _instances("K", 2, stage=KEPT)
    discarded = _instances("D", 3)
    ranking = [RankedPattern("D", 0.9, 3)]
    result = assemble_training_set(kept, discarded, ranking, Schedule(2, 5, 10, 10))
    assert all(i.ds_label == POSITIVE for i in result)
    assert {i.instance_id for i in kept} <= {i.instance_id for i in result}


def test_build_pattern_vectors_representations():
    patterns = [
        SdpPattern("r", "PERSON<-nsubj<-lives->prep_in->LOCATION", pos_count=5),
        SdpPattern("r", "PERSON<-nsubj<-resides->prep_in->LOCATION", pos_count=3),
        SdpPattern("r", "PERSON->appos->LOCATION", pos_count=2),  # no interior words
    ]
    table = EmbeddingTable(
        dimension=2,
        vectors={"lives": np.array([1.0, 0.0]), "resides": np.array([0.97, 0.24])},
        stopwords=frozenset(),
    )
    emb = build_pattern_vectors(patterns, EMBEDDING, table=table)
    assert not emb.get(patterns[0].sdp).empty_flag
    assert emb.get(patterns[2].sdp).empty_flag

    bow = build_pattern_vectors(patterns, BOW)
    assert bow.get(patterns[0].sdp).vector.shape == bow.get(patterns[1].sdp).vector.shape
    assert bow.get(patterns[2].sdp).empty_flag

    svd = build_pattern_vectors(patterns, SVD, svd_rank=2)
    assert svd.get(patterns[0].sdp).vector.shape == (2,)
