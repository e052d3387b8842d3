import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcmu.hurwitz import (BranchData, DegreeCapError, DegreeMismatchError, InvalidBranchShapeError, Partition,
                          boccara_data, boccara_realizable, boccara_shapes, oracle_realizable, partitions_of,
                          song_xu_data, song_xu_realizable, song_xu_shapes, source_genus, total_branching)

P = Partition


def bd(d, text, allow_trivial=False):
    return BranchData.parse(d, text, allow_trivial)


@pytest.mark.parametrize("d,text,v", [(3, "2,1|2,1", 2), (6, "2,2,2|3,3|4,1,1", 10), (2, "2|2", 2)])
def test_total_branching(d, text, v):
    assert total_branching(bd(d, text)) == v


@pytest.mark.parametrize("d,text,g", [(2, "2|2", 0), (4, "2,2|2,2|3,1", 0), (4, "3,1|2,2", None),
                                      (4, "2,2|2,2|2,2|2,2", 1)])
def test_source_genus(d, text, g):
    assert source_genus(bd(d, text)) == g


def test_boccara_examples():
    assert boccara_realizable(P((2, 2, 2)), P((3, 3)), 3)
    assert not boccara_realizable(P((4,)), P((4,)), 3)
    assert not boccara_realizable(P((2,)), P((2,)), 1)
    with pytest.raises(DegreeMismatchError):
        boccara_realizable(P((2, 2)), P((3,)), 1)


def test_song_xu_examples():
    assert song_xu_realizable(P((2, 2, 2)), P((3, 3)), (1, 2))
    with pytest.raises(InvalidBranchShapeError):
        song_xu_realizable(P((2, 2)), P((2, 2)), (2, 1))
    with pytest.raises(InvalidBranchShapeError):
        song_xu_realizable(P((4,)), P((4,)), (1, 1))  # hypothesis needs sum(ms) = 0 > 0
    assert not oracle_realizable(bd(4, "4|4|2,1,1|2,1,1"))


def test_oracle_examples():
    assert oracle_realizable(bd(2, "2|2"))
    assert oracle_realizable(bd(6, "2,2,2|3,3|4,1,1"))
    assert not oracle_realizable(bd(4, "2,2|2,2|3,1"))
    assert not oracle_realizable(bd(4, "2,2|2,2|3,1"), require_genus=None)


def test_oracle_degree_cap():
    with pytest.raises(DegreeCapError):
        oracle_realizable(bd(8, "8|8"))


def test_parse_and_validation():
    assert P.parse("1, 3,2").parts == (3, 2, 1)
    with pytest.raises(DegreeMismatchError):
        bd(4, "2,1|2,2")
    with pytest.raises(ValueError):
        bd(3, "1,1,1|3")
    assert oracle_realizable(bd(3, "1,1,1|3|3", allow_trivial=True))


def test_partition_counts():
    assert [len(partitions_of(n)) for n in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]


def _naive(data: BranchData, genus):
    """Plain product search over all tuples (tiny degree only)."""
    d = data.d
    perms = list(itertools.permutations(range(d)))

    def ctype(p):
        seen, out = set(), []
        for i in range(d):
            if i in seen:
                continue
            n, j = 0, i
            while j not in seen:
                seen.add(j)
                j = p[j]
                n += 1
            out.append(n)
        return tuple(sorted(out, reverse=True))

    classes = [[p for p in perms if ctype(p) == q.parts] for q in data.partitions]
    if genus is not None and source_genus(data) != genus:
        return False
    for combo in itertools.product(*classes):
        prod = tuple(range(d))
        for s in combo:
            prod = tuple(prod[i] for i in s)
        if prod != tuple(range(d)):
            continue
        reach, todo = {0}, [0]
        while todo:
            x = todo.pop()
            for s in combo:
                if s[x] not in reach:
                    reach.add(s[x])
                    todo.append(s[x])
        if len(reach) == d:
            return True
    return False


def test_oracle_matches_naive_search_small_degree():
    for d in range(2, 5):
        shapes = [P(p) for p in partitions_of(d) if len(p) < d]
        for k in (2, 3):
            for combo in itertools.combinations_with_replacement(shapes, k):
                data = BranchData(d, combo)
                for g in (0, None):
                    assert oracle_realizable(data, g) == _naive(data, g), (str(data), g)


def test_criteria_match_oracle_up_to_degree_five():
    for d in range(2, 6):
        for a, b, m in boccara_shapes(d):
            assert boccara_realizable(a, b, m) == oracle_realizable(boccara_data(a, b, m), None)
        for a, b, ms in song_xu_shapes(d):
            assert song_xu_realizable(a, b, ms) == oracle_realizable(song_xu_data(a, b, ms), 0)


@st.composite
def branch_data(draw):
    d = draw(st.integers(2, 5))
    shapes = [p for p in partitions_of(d) if len(p) < d]
    k = draw(st.integers(2, 4))
    return BranchData(d, tuple(P(draw(st.sampled_from(shapes))) for _ in range(k)))


@settings(max_examples=60, deadline=None)
@given(branch_data(), st.randoms(use_true_random=False))
def test_oracle_permutation_invariant(data, rnd):
    parts = list(data.partitions)
    rnd.shuffle(parts)
    shuffled = BranchData(data.d, tuple(parts))
    for g in (0, None):
        assert oracle_realizable(data, g) == oracle_realizable(shuffled, g)
    if total_branching(data) % 2:
        assert not oracle_realizable(data, None)
