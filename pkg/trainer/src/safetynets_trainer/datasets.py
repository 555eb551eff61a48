"""Bundled desk-scale datasets.

Everything is generated in-process from fixed glyph templates or Gaussian
centers; nothing is fetched from the network.  Samples are returned
column-major (one column per sample) to match the layout the inference
tooling expects in its input files.
"""

from __future__ import annotations

import numpy as np

# 8x8 digit glyphs.  '#' marks an inked pixel.  The renderer jitters each
# sample by up to one pixel and adds noise, so classifiers must cope with
# more than the bare template.
_GLYPHS = {
    0: (
        "..####..",
        ".#....#.",
        ".#....#.",
        ".#....#.",
        ".#....#.",
        ".#....#.",
        "..####..",
        "........",
    ),
    1: (
        "...##...",
        "..###...",
        "...##...",
        "...##...",
        "...##...",
        "...##...",
        ".######.",
        "........",
    ),
    2: (
        "..####..",
        ".#....#.",
        "......#.",
        ".....#..",
        "...##...",
        "..#.....",
        ".######.",
        "........",
    ),
    3: (
        "..####..",
        ".#....#.",
        "......#.",
        "...###..",
        "......#.",
        ".#....#.",
        "..####..",
        "........",
    ),
    4: (
        "....##..",
        "...#.#..",
        "..#..#..",
        ".#...#..",
        ".######.",
        ".....#..",
        ".....#..",
        "........",
    ),
    5: (
        ".######.",
        ".#......",
        ".#####..",
        "......#.",
        "......#.",
        ".#....#.",
        "..####..",
        "........",
    ),
    6: (
        "..####..",
        ".#......",
        ".#......",
        ".#####..",
        ".#....#.",
        ".#....#.",
        "..####..",
        "........",
    ),
    7: (
        ".######.",
        "......#.",
        ".....#..",
        "....#...",
        "...#....",
        "...#....",
        "...#....",
        "........",
    ),
    8: (
        "..####..",
        ".#....#.",
        ".#....#.",
        "..####..",
        ".#....#.",
        ".#....#.",
        "..####..",
        "........",
    ),
    9: (
        "..####..",
        ".#....#.",
        ".#....#.",
        "..#####.",
        "......#.",
        "......#.",
        "..####..",
        "........",
    ),
}


def _glyph_array(digit: int) -> np.ndarray:
    rows = _GLYPHS[digit]
    return np.array([[1.0 if ch == "#" else 0.0 for ch in row] for row in rows])


def toy_digits(n_per_class: int = 100, seed: int = 0):
    """Noisy 8x8 digit images derived from fixed glyph templates.

    Each sample is the class glyph shifted by up to one pixel in each
    direction, scaled into [0, 1], and perturbed with Gaussian noise.
    Returns (X, labels) with X of shape (64, n) and labels of shape (n,).
    """
    rng = np.random.default_rng(seed)
    images = []
    labels = []
    for digit in range(10):
        base = _glyph_array(digit)
        for _ in range(n_per_class):
            dy, dx = rng.integers(-1, 2, size=2)
            img = np.roll(base, (int(dy), int(dx)), axis=(0, 1))
            img = img * 0.85 + 0.05 + rng.normal(0.0, 0.12, size=(8, 8))
            images.append(np.clip(img, 0.0, 1.0).reshape(64))
            labels.append(digit)
    order = rng.permutation(len(labels))
    x = np.stack(images, axis=1)[:, order]
    y = np.array(labels, dtype=np.int64)[order]
    return x, y


def synthetic_blobs(n_per_class: int = 100, seed: int = 0):
    """Two well-separated 2-D Gaussian clusters, one per class.

    Returns (X, labels) with X of shape (2, n) and labels in {0, 1}.
    """
    rng = np.random.default_rng(seed)
    centers = np.array([[-1.25, -1.25], [1.25, 1.25]])
    points = []
    labels = []
    for cls in range(2):
        pts = rng.normal(0.0, 0.5, size=(n_per_class, 2)) + centers[cls]
        points.append(pts)
        labels.extend([cls] * n_per_class)
    order = rng.permutation(2 * n_per_class)
    x = np.concatenate(points, axis=0).T[:, order]
    y = np.array(labels, dtype=np.int64)[order]
    return x, y


def load_dataset(name: str, n_per_class: int = 100, seed: int = 0):
    """Dispatch on the dataset id used by TrainConfig."""
    if name == "digits":
        return toy_digits(n_per_class=n_per_class, seed=seed)
    if name == "blobs":
        return synthetic_blobs(n_per_class=n_per_class, seed=seed)
    raise ValueError(f"unknown dataset {name!r} (expected 'digits' or 'blobs')")


def input_feature_count(name: str) -> int:
    if name == "digits":
        return 64
    if name == "blobs":
        return 2
    raise ValueError(f"unknown dataset {name!r} (expected 'digits' or 'blobs')")


def class_count(name: str) -> int:
    if name == "digits":
        return 10
    if name == "blobs":
        return 2
    raise ValueError(f"unknown dataset {name!r} (expected 'digits' or 'blobs')")
