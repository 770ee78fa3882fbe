import pytest
from hypothesis import given, strategies as st

from solarfed.namespace import MalformedPath, match_prefix, normalize_path, path_from_url


def P(s):
    return normalize_path(s)


@pytest.mark.parametrize("raw, expected", [
    ("/bbso//raw/img1.fits/", "/bbso/raw/img1.fits"),
    ("/a", "/a"),
    ("a/b", "/a/b"),
    ("///x///", "/x"),
])
def test_normalize(raw, expected):
    assert str(normalize_path(raw)) == expected


@pytest.mark.parametrize("raw", ["/a/../b", "/a/./b", "", "/", "//", "/a/\x00b", "/a\nb"])
def test_normalize_rejects(raw):
    with pytest.raises(MalformedPath):
        normalize_path(raw)


def test_case_sensitive():
    assert normalize_path("/BBSO") != normalize_path("/bbso")


def test_url_decoding():
    assert str(path_from_url("/bbso/a%20b.fits")) == "/bbso/a b.fits"
    with pytest.raises(MalformedPath):
        path_from_url("/bbso/a%2Fb")
    with pytest.raises(MalformedPath):
        path_from_url("/bbso/%2E%2E/x")


segment = st.text(st.characters(min_codepoint=0x21, max_codepoint=0x7E, blacklist_characters="/"),
                  min_size=1, max_size=6).filter(lambda s: s not in (".", ".."))
raw_path = st.lists(segment, min_size=1, max_size=6).flatmap(
    lambda segs: st.lists(st.integers(1, 3), min_size=len(segs) + 1, max_size=len(segs) + 1).map(
        lambda seps: "".join("/" * n + s for n, s in zip(seps, segs)) + "/" * (seps[-1] - 1)))


@given(raw_path)
def test_normalize_idempotent(raw):
    once = normalize_path(raw)
    assert normalize_path(str(once)) == once
    text = str(once)
    assert text.startswith("/") and not text.endswith("/") and "//" not in text


def test_match_prefix_examples():
    assert match_prefix(P("/bbso/raw/x.fits"), {P("/bbso"), P("/bbso/raw")}) == P("/bbso/raw")
    assert match_prefix(P("/other/x"), {P("/bbso")}) is None
    assert match_prefix(P("/bbso/raw/a/b"), {P("/bbso/raw"), P("/bbso/processed")}) == P("/bbso/raw")
    # segment-wise, not character-wise
    assert match_prefix(P("/bbsox/a"), {P("/bbso")}) is None


def _brute_force_match(path, prefixes):
    hits = [q for q in prefixes if (str(path) + "/").startswith(str(q) + "/")]
    return max(hits, key=lambda q: len(str(q)), default=None)


short_seg = st.sampled_from(["a", "b", "ab", "raw"])
short_path = st.lists(short_seg, min_size=1, max_size=4).map(lambda s: P("/" + "/".join(s)))


@given(short_path, st.sets(short_path, max_size=6))
def test_match_prefix_agrees_with_text_rule(path, prefixes):
    assert match_prefix(path, prefixes) == _brute_force_match(path, prefixes)


@given(short_path, short_path)
def test_single_prefix_iff_text_prefix(path, prefix):
    expected = (str(path) + "/").startswith(str(prefix) + "/")
    assert (match_prefix(path, {prefix}) == prefix) == expected
