"""Dataset sources: synthetic block-model graphs and the MovieLens-100K download."""

from __future__ import annotations

import hashlib
import logging
import shutil
import tempfile
import urllib.request
import zipfile
from pathlib import Path

import numpy as np

from sgcl.graph import InteractionGraph, parse_interactions

log = logging.getLogger(__name__)

ML100K_URL = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
ML100K_MD5 = "0e33842e24a9c977be4e0107933c0723"
ML100K_MEMBER = "ml-100k/u.data"


class FetchError(RuntimeError):
    pass


def synth_dataset(users: int, items: int, clusters: int, density: float, seed: int) -> InteractionGraph:
    """Bipartite stochastic block model.

    Users and items are split into ``clusters`` contiguous groups; a pair in
    the same group is linked with probability ``density``, otherwise with
    ``density / 10``.  With one cluster every pair uses ``density``.
    """
    if clusters < 1:
        raise ValueError("clusters must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    ucl = np.arange(users) * clusters // users
    icl = np.arange(items) * clusters // items
    prob = np.where(ucl[:, None] == icl[None, :], density, density / 10.0)
    u, i = np.nonzero(rng.random((users, items)) < prob)
    return InteractionGraph(
        users, items, np.stack([u, i], axis=1),
        tuple(f"u{k}" for k in range(users)), tuple(f"i{k}" for k in range(items)),
    )


def expected_synth_edges(users: int, items: int, clusters: int, density: float):
    """Mean and variance of the edge count produced by :func:`synth_dataset`."""
    ucl = np.arange(users) * clusters // users
    icl = np.arange(items) * clusters // items
    prob = np.where(ucl[:, None] == icl[None, :], density, density / 10.0)
    return float(prob.sum()), float((prob * (1 - prob)).sum())


def _md5(path: Path) -> str:
    h = hashlib.md5()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def fetch_ml100k(cache_dir, url: str = ML100K_URL, md5: str = ML100K_MD5,
                 member: str = ML100K_MEMBER, timeout: float = 60.0) -> Path:
    """Download, verify and extract the MovieLens-100K ratings file; returns its path.

    A cached ratings file is returned without touching the network.  A
    download whose checksum does not match is discarded and the cache is
    left as it was.
    """
    cache = Path(cache_dir)
    target = cache / Path(member).name
    if target.exists():
        return target
    cache.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        archive = Path(tmp) / "archive.zip"
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp, open(archive, "wb") as out:
                shutil.copyfileobj(resp, out)
        except OSError as exc:
            raise FetchError(f"download failed: {exc}") from exc
        digest = _md5(archive)
        if digest != md5:
            raise FetchError(f"checksum mismatch: got {digest}, expected {md5}")
        with zipfile.ZipFile(archive) as zf:
            partial = target.with_suffix(".part")
            with zf.open(member) as src, open(partial, "wb") as dst:
                shutil.copyfileobj(src, dst)
        partial.replace(target)
    log.info("cached %s", target)
    return target


def load_ratings_file(path, sep: str | None = None, rating_col: int | None = 2,
                      threshold: float = 4.0) -> InteractionGraph:
    with open(path, encoding="utf-8", errors="replace") as fh:
        return parse_interactions(fh, sep=sep, rating_col=rating_col, rating_threshold=threshold)
