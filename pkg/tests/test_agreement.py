import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from radtext.agreement import (
    AnnotationSet,
    ConfusionMatrix,
    LabelEvent,
    adjudicate,
    annotation_sets_from_log,
    append_label_event,
    cohens_kappa,
    confusion_matrix,
    read_label_log,
    write_label_log,
)
from radtext.corpus import LABELS, Record, RecordDate
from radtext.errors import (
    EmptyMatrixError,
    EmptyOverlapError,
    UndefinedKappaError,
    ValidationError,
)


def kappa_by_hand(counts):
    """Independent agreement computation used as the oracle.

    Written directly from the definition: observed agreement is the
    diagonal fraction; chance agreement multiplies the marginal label
    frequencies of the two raters.
    """
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    p_o = sum(counts[i, i] for i in range(counts.shape[0])) / n
    p_e = 0.0
    for k in range(counts.shape[0]):
        p_e += (counts[k, :].sum() / n) * (counts[:, k].sum() / n)
    return p_o, p_e, (p_o - p_e) / (1.0 - p_e)


def matrix(counts, classes=LABELS):
    arr = np.asarray(counts, dtype=np.int64)
    return ConfusionMatrix(classes=tuple(classes), counts=arr, n=int(arr.sum()))


class TestConfusionMatrix:
    def test_perfect_agreement_diagonal(self):
        a = AnnotationSet("a1", {"r1": "R", "r2": "NR"})
        b = AnnotationSet("a2", {"r1": "R", "r2": "NR"})
        m = confusion_matrix(a, b)
        assert m.n == 2
        assert np.diag(m.counts).tolist() == [1, 1, 0]
        assert m.counts.sum() == 2

    def test_single_disagreement_cell(self):
        a = AnnotationSet("a1", {"r1": "R"})
        b = AnnotationSet("a2", {"r1": "I"})
        m = confusion_matrix(a, b)
        assert m.n == 1
        assert m.counts[0, 2] == 1

    def test_matches_brute_force_tally(self):
        labels_a = {"r1": "R", "r2": "R", "r3": "NR", "r4": "I", "r5": "NR", "r6": "R"}
        labels_b = {"r1": "R", "r2": "NR", "r3": "NR", "r4": "R", "r5": "I", "r6": "R"}
        m = confusion_matrix(AnnotationSet("a", labels_a), AnnotationSet("b", labels_b))
        # Oracle: pairwise tally without touching the implementation.
        expect = np.zeros((3, 3), dtype=int)
        pos = {"R": 0, "NR": 1, "I": 2}
        for rid in labels_a:
            expect[pos[labels_a[rid]], pos[labels_b[rid]]] += 1
        assert np.array_equal(m.counts, expect)
        assert m.n == 6

    def test_only_shared_ids_counted(self):
        a = AnnotationSet("a1", {"r1": "R", "r2": "NR", "rX": "I"})
        b = AnnotationSet("a2", {"r1": "R", "r2": "NR", "rY": "I"})
        assert confusion_matrix(a, b).n == 2

    def test_no_overlap_raises(self):
        a = AnnotationSet("a1", {"r1": "R"})
        b = AnnotationSet("a2", {"r2": "R"})
        with pytest.raises(EmptyOverlapError):
            confusion_matrix(a, b)

    def test_invalid_label_rejected_at_construction(self):
        with pytest.raises(ValidationError):
            AnnotationSet("a1", {"r1": "Q"})

    def test_counts_must_sum_to_n(self):
        with pytest.raises(ValidationError):
            ConfusionMatrix(classes=LABELS, counts=np.ones((3, 3), dtype=int), n=5)


class TestKappa:
    def test_perfect_agreement_is_one(self):
        m = matrix([[4, 0, 0], [0, 3, 0], [0, 0, 2]])
        rep = cohens_kappa(m)
        assert rep.p_o == 1.0
        assert rep.kappa == 1.0

    def test_two_class_hand_case(self):
        m = matrix([[45, 10], [10, 35]], classes=("R", "NR"))
        rep = cohens_kappa(m)
        assert rep.p_o == pytest.approx(0.80, abs=1e-12)
        assert rep.p_e == pytest.approx(0.505, abs=1e-12)
        assert rep.kappa == pytest.approx((0.80 - 0.505) / (1 - 0.505), abs=1e-12)
        assert rep.kappa == pytest.approx(0.59596, abs=5e-6)
        assert (rep.n, rep.c) == (100, 2)

    def test_single_cell_matrix_undefined(self):
        m = matrix([[7, 0, 0], [0, 0, 0], [0, 0, 0]])
        with pytest.raises(UndefinedKappaError):
            cohens_kappa(m)

    def test_empty_matrix_rejected(self):
        m = matrix([[0, 0, 0], [0, 0, 0], [0, 0, 0]])
        with pytest.raises(EmptyMatrixError):
            cohens_kappa(m)

    def test_permutation_invariance(self):
        counts = np.array([[10, 2, 1], [3, 8, 0], [2, 1, 9]])
        base = cohens_kappa(matrix(counts)).kappa
        perm = [2, 0, 1]
        shuffled = counts[np.ix_(perm, perm)]
        assert cohens_kappa(matrix(shuffled)).kappa == pytest.approx(base, abs=1e-15)

    def test_scaling_invariance(self):
        counts = np.array([[10, 2, 1], [3, 8, 0], [2, 1, 9]])
        base = cohens_kappa(matrix(counts))
        scaled = cohens_kappa(matrix(counts * 7))
        assert scaled.p_o == pytest.approx(base.p_o, abs=1e-15)
        assert scaled.p_e == pytest.approx(base.p_e, abs=1e-15)
        assert scaled.kappa == pytest.approx(base.kappa, abs=1e-15)

    def test_kappa_one_iff_diagonal(self):
        diag = matrix([[5, 0, 0], [0, 1, 0], [0, 0, 3]])
        assert cohens_kappa(diag).kappa == 1.0
        off = matrix([[5, 1, 0], [0, 1, 0], [0, 0, 3]])
        assert cohens_kappa(off).kappa < 1.0

    @given(
        counts=arrays(
            np.int64,
            (3, 3),
            elements=st.integers(min_value=0, max_value=200),
        )
    )
    @settings(max_examples=150, deadline=None)
    def test_matches_independent_reimplementation(self, counts):
        if counts.sum() == 0:
            return
        nz_rows = (counts.sum(axis=1) > 0).sum()
        nz_cols = (counts.sum(axis=0) > 0).sum()
        if nz_rows == 1 and nz_cols == 1:
            return
        rep = cohens_kappa(matrix(counts))
        p_o, p_e, k = kappa_by_hand(counts)
        assert rep.p_o == pytest.approx(p_o, abs=1e-12)
        assert rep.p_e == pytest.approx(p_e, abs=1e-12)
        assert rep.kappa == pytest.approx(k, abs=1e-12)
        # Agreement beyond chance can never exceed raw agreement.
        assert rep.kappa <= rep.p_o + 1e-12


def make_records(ids):
    return {
        rid: Record(
            id=rid,
            source_name="Tribune",
            source_type="news",
            date=RecordDate(2010),
            title="",
            body=f"body of {rid}",
        )
        for rid in ids
    }


class TestAdjudicate:
    def setup_method(self):
        self.ids = [f"r{i}" for i in range(5)]
        self.records = make_records(self.ids)

    def test_full_agreement_drop_policy(self):
        labels = {rid: "R" for rid in self.ids}
        gold, rep = adjudicate(
            AnnotationSet("a1", labels),
            AnnotationSet("a2", dict(labels)),
            self.records,
        )
        assert len(gold) == 5
        assert rep.agreements == 5 and rep.disagreements == 0
        assert all(g.annotator_id == "gold" for g in gold)

    def test_one_disagreement_dropped(self):
        la = {rid: "R" for rid in self.ids}
        lb = dict(la)
        lb["r3"] = "NR"
        gold, rep = adjudicate(
            AnnotationSet("a1", la), AnnotationSet("a2", lb), self.records
        )
        assert len(gold) == 4
        assert rep.disagreements == 1
        assert "r3" not in {g.record.id for g in gold}
        assert rep.pair_counts[("R", "NR")] == 1

    def test_prefer_annotator_keeps_all(self):
        la = {rid: "R" for rid in self.ids}
        lb = dict(la)
        lb["r3"] = "NR"
        gold, rep = adjudicate(
            AnnotationSet("a1", la),
            AnnotationSet("a2", lb),
            self.records,
            policy="prefer_annotator",
            prefer="a1",
        )
        assert len(gold) == 5
        byid = {g.record.id: g.label for g in gold}
        assert byid["r3"] == "R"

        gold_b, _ = adjudicate(
            AnnotationSet("a1", la),
            AnnotationSet("a2", lb),
            self.records,
            policy="prefer_annotator",
            prefer="a2",
        )
        assert {g.record.id: g.label for g in gold_b}["r3"] == "NR"

    def test_unknown_preferred_annotator(self):
        la = {"r0": "R"}
        with pytest.raises(ValidationError):
            adjudicate(
                AnnotationSet("a1", la),
                AnnotationSet("a2", dict(la)),
                self.records,
                policy="prefer_annotator",
                prefer="nobody",
            )

    def test_unknown_policy(self):
        la = {"r0": "R"}
        with pytest.raises(ValidationError):
            adjudicate(
                AnnotationSet("a1", la),
                AnnotationSet("a2", dict(la)),
                self.records,
                policy="majority",
            )


class TestLabelLog:
    def test_roundtrip(self, tmp_path):
        p = tmp_path / "labels.csv"
        events = [
            LabelEvent("r1", "a1", "R", "2026-01-01T10:00:00"),
            LabelEvent("r1", "a2", "NR", "2026-01-01T10:05:00"),
        ]
        write_label_log(events, p)
        assert read_label_log(p) == events

    def test_append_creates_header_once(self, tmp_path):
        p = tmp_path / "labels.csv"
        append_label_event(LabelEvent("r1", "a1", "R", "t1"), p)
        append_label_event(LabelEvent("r2", "a1", "NR", "t2"), p)
        events = read_label_log(p)
        assert len(events) == 2
        assert p.read_text().count("record_id") == 1

    def test_latest_event_wins(self, tmp_path):
        events = [
            LabelEvent("r1", "a1", "R", "t1"),
            LabelEvent("r1", "a1", "I", "t2"),
            LabelEvent("r2", "a1", "NR", "t3"),
        ]
        sets = annotation_sets_from_log(events)
        assert sets["a1"].labels == {"r1": "I", "r2": "NR"}

    def test_bad_header_rejected(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("record,annotator,label\nr1,a1,R\n")
        with pytest.raises(ValidationError):
            read_label_log(p)

    def test_bad_label_rejected(self):
        with pytest.raises(ValidationError):
            LabelEvent("r1", "a1", "QQ", "t")
