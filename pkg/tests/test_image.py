"""Reverse image search: letterboxing, similarity scoring, and reranking."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from clio.backends import (
    StaticImageHostBackend,
    StaticReverseImageBackend,
    offline_backends,
)
from clio.tools.image import (
    SIMILARITY_THRESHOLD,
    ImageMatch,
    compute_similarity,
    letterbox_gray,
    rank_matches,
    reverse_image_search,
)
from tests.conftest import make_image


def make_noise_image(path, size=(100, 80), seed=7):
    from PIL import Image

    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, (size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(pixels).save(str(path))
    return str(path)


def test_letterbox_output_always_matches_canvas(tmp_path):
    wide = make_image(tmp_path / "wide.png", size=(400, 100))
    tall = make_image(tmp_path / "tall.png", size=(50, 300))
    for path in (wide, tall):
        board = letterbox_gray(path)
        assert board.shape == (256, 256)
        assert board.dtype == np.uint8


def test_letterbox_pads_the_short_axis_with_black(tmp_path):
    path = make_image(tmp_path / "wide.png", size=(400, 100),
                      color=(255, 255, 255))
    board = letterbox_gray(path)
    # 400x100 scales to 256x64, centered: rows 96..160 carry the image.
    assert board[:96, :].max() == 0
    assert board[160:, :].max() == 0
    assert board[100, :].min() == 255


def test_identical_images_have_similarity_one(tmp_path):
    path = make_image(tmp_path / "a.png", size=(120, 90))
    assert compute_similarity(path, path) == 1.0


def test_distinct_images_score_below_one(tmp_path):
    a = make_image(tmp_path / "a.png", color=(255, 255, 255))
    b = make_image(tmp_path / "b.png", color=(10, 10, 10))
    score = compute_similarity(a, b)
    assert -1.0 <= score < 1.0


def _fresh_matches(similarities):
    return [
        ImageMatch(match_url=f"https://pages.example/{i}",
                   page_title=f"page {i}", description="", similarity=sim)
        for i, sim in enumerate(similarities)
    ]


def _oracle_order(similarities, threshold):
    """Reference ranking: stable sort of confident scores, rest untouched."""
    scored = [i for i, sim in enumerate(similarities)
              if sim is not None and sim >= threshold]
    rest = [i for i, sim in enumerate(similarities)
            if sim is None or sim < threshold]
    scored.sort(key=lambda i: (-similarities[i], i))
    return scored + rest


@settings(max_examples=100)
@given(st.lists(
    st.one_of(st.none(), st.floats(min_value=0.0, max_value=1.0)),
    max_size=12,
))
def test_rank_matches_agrees_with_reference_ranking(similarities):
    ranked = rank_matches(_fresh_matches(similarities))
    expected = _oracle_order(similarities, SIMILARITY_THRESHOLD)
    got = [int(m.match_url.rsplit("/", 1)[1]) for m in ranked]
    assert got == expected


def test_scored_below_threshold_is_demoted_but_kept():
    matches = _fresh_matches([0.9, 0.2, None, 0.6])
    ranked = rank_matches(matches)
    urls = [m.match_url for m in ranked]
    assert urls == ["https://pages.example/0", "https://pages.example/3",
                    "https://pages.example/1", "https://pages.example/2"]
    by_url = {m.match_url: m for m in ranked}
    assert by_url["https://pages.example/1"].demoted is True
    assert by_url["https://pages.example/2"].demoted is False
    assert by_url["https://pages.example/0"].demoted is False


def test_unscored_matches_keep_backend_order():
    matches = _fresh_matches([None, None, None])
    ranked = rank_matches(matches)
    assert [m.match_url for m in ranked] == [
        "https://pages.example/0",
        "https://pages.example/1",
        "https://pages.example/2",
    ]
    assert all(not m.demoted for m in ranked)


def test_tied_scores_keep_backend_order():
    matches = _fresh_matches([0.8, 0.8, 0.8])
    ranked = rank_matches(matches)
    assert [m.match_url for m in ranked] == [
        "https://pages.example/0",
        "https://pages.example/1",
        "https://pages.example/2",
    ]


def test_reverse_image_search_uploads_scores_and_reranks(tmp_path):
    query = make_image(tmp_path / "query.png", size=(100, 80),
                       color=(40, 90, 200))
    same = make_image(tmp_path / "same.png", size=(100, 80),
                      color=(40, 90, 200))
    other = make_noise_image(tmp_path / "other.png", size=(100, 80))
    host = StaticImageHostBackend()
    matcher = StaticReverseImageBackend(matches=[
        {"match_url": "https://a.example/unscored",
         "page_title": "no thumbnail", "description": "text only"},
        {"match_url": "https://b.example/weak", "page_title": "weak",
         "description": "", "image_path": other},
        {"match_url": "https://c.example/strong", "page_title": "strong",
         "description": "", "image_path": same},
    ])
    backends = offline_backends(image_host=host, image_match=matcher)

    results = reverse_image_search(query, backends)

    assert host.uploads == [query]
    assert matcher.calls == ["https://img.example.org/query.png"]
    assert results[0].match_url == "https://c.example/strong"
    assert results[0].similarity == 1.0
    # Unscored and weak candidates trail in backend order.
    assert [m.match_url for m in results[1:]] == [
        "https://a.example/unscored", "https://b.example/weak"]
    assert results[1].similarity is None and results[1].demoted is False


def test_weak_match_is_flagged_demoted(tmp_path):
    query = make_image(tmp_path / "query.png", color=(0, 0, 0))
    far = make_noise_image(tmp_path / "far.png")
    backends = offline_backends(
        image_host=StaticImageHostBackend(),
        image_match=StaticReverseImageBackend(matches=[
            {"match_url": "https://d.example/far", "page_title": "far",
             "description": "", "image_path": far},
        ]),
    )
    results = reverse_image_search(query, backends)
    assert len(results) == 1
    assert results[0].similarity is not None
    assert results[0].similarity < SIMILARITY_THRESHOLD
    assert results[0].demoted is True
