"""Reverse image search with similarity-based reranking.

Candidate matches come back from a search backend in its own rank order.
When a candidate ships a local thumbnail we score it against the query
image with SSIM on letterboxed grayscale copies; confident matches rise
to the top and weak ones are demoted but kept, since a low-similarity
page can still name the right source.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from PIL import Image
from skimage.metrics import structural_similarity

SIMILARITY_THRESHOLD = 0.5
_CANVAS = (256, 256)


@dataclass
class ImageMatch:
    match_url: str
    page_title: str
    description: str
    similarity: Optional[float] = None
    demoted: bool = False

    def to_dict(self) -> dict:
        return {
            "match_url": self.match_url,
            "page_title": self.page_title,
            "description": self.description,
            "similarity": self.similarity,
            "demoted": self.demoted,
        }


def letterbox_gray(path: str, canvas: tuple[int, int] = _CANVAS) -> np.ndarray:
    """Load an image as grayscale, fit it into a fixed canvas, pad with 0."""
    with Image.open(path) as img:
        gray = img.convert("L")
        scale = min(canvas[0] / gray.width, canvas[1] / gray.height)
        new_size = (max(1, round(gray.width * scale)),
                    max(1, round(gray.height * scale)))
        resized = gray.resize(new_size, Image.BILINEAR)
    board = np.zeros((canvas[1], canvas[0]), dtype=np.uint8)
    left = (canvas[0] - new_size[0]) // 2
    top = (canvas[1] - new_size[1]) // 2
    board[top:top + new_size[1], left:left + new_size[0]] = np.asarray(resized)
    return board


def compute_similarity(query_path: str, candidate_path: str) -> float:
    """Structural similarity of two images after letterboxing; 1.0 = same."""
    a = letterbox_gray(query_path)
    b = letterbox_gray(candidate_path)
    return float(structural_similarity(a, b, data_range=255))


def rank_matches(matches: list[ImageMatch],
                 threshold: float = SIMILARITY_THRESHOLD) -> list[ImageMatch]:
    """Order matches: scored ones at/above threshold first (best first),
    then everything else in its original backend order, flagged demoted
    when it was scored and fell below the threshold."""
    above = [m for m in matches
             if m.similarity is not None and m.similarity >= threshold]
    rest = [m for m in matches
            if m.similarity is None or m.similarity < threshold]
    for match in rest:
        if match.similarity is not None:
            match.demoted = True
    above.sort(key=lambda m: -m.similarity)
    return above + rest


def reverse_image_search(image_path: str, backends,
                         threshold: float = SIMILARITY_THRESHOLD) -> list[ImageMatch]:
    """Upload a query image, search for visually matching pages, rerank.

    Candidates without a retrievable thumbnail keep their backend rank and
    an unset similarity. UploadFailed/BackendError propagate from the seam.
    """
    image_url = backends.require("image_host").upload(image_path)
    raw = backends.require("image_match").search(image_url)
    matches: list[ImageMatch] = []
    for item in raw:
        match = ImageMatch(
            match_url=item.get("match_url", ""),
            page_title=item.get("page_title", ""),
            description=item.get("description", ""),
        )
        candidate_path = item.get("image_path")
        if candidate_path:
            match.similarity = compute_similarity(image_path, candidate_path)
        matches.append(match)
    return rank_matches(matches, threshold)
