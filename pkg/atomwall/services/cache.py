"""Disk cache of permittivities on the Matsubara grid"""

import contextlib
import hashlib
import json
import os
import tempfile
from collections.abc import Callable
from pathlib import Path

import numpy as np

from atomwall.models.interfaces import DielectricModel
from atomwall.services.optics import model_fingerprint
from atomwall.utils.config import get_settings
from atomwall.utils.logging import get_logger

logger = get_logger("cache")

CACHE_FORMAT = 1


class EpsBlockCache:
    """Stores eps(i xi_l) for consecutive Matsubara indices as compressed npz files"""

    def __init__(self, directory: Path | str) -> None:
        self.directory = Path(directory)
        self.hits = 0
        self.misses = 0

    @staticmethod
    def key(model: DielectricModel, T: float, start: int, count: int) -> str:  # noqa: N803
        """SHA-256 of the canonical JSON description of a block"""
        payload = {
            "format": CACHE_FORMAT,
            "model": model_fingerprint(model),
            "T": repr(float(T)),
            "start": start,
            "count": count,
        }
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def path(self, key: str) -> Path:
        return self.directory / f"{key}.npz"

    def get_or_compute(
        self,
        model: DielectricModel,
        T: float,  # noqa: N803
        start: int,
        xis: np.ndarray,
        compute: Callable[[], np.ndarray],
    ) -> np.ndarray:
        """Permittivities of a block, read from disk or computed and stored

        Args:
            model (DielectricModel): wall model
            T (float): temperature in K
            start (int): Matsubara index of the first frequency
            xis (np.ndarray): frequencies of the block
            compute (Callable[[], np.ndarray]): evaluation used on a miss

        Returns:
            np.ndarray: eps at every frequency of the block
        """
        path = self.path(self.key(model, T, start, len(xis)))
        eps = self._load(path, xis)
        if eps is not None:
            self.hits += 1
            logger.debug("eps block %s hit (l=%s..%s)", path.name, start, start + len(xis) - 1)
            return eps
        self.misses += 1
        eps = compute()
        self._store(path, xis, eps)
        return eps

    @staticmethod
    def _load(path: Path, xis: np.ndarray) -> np.ndarray | None:
        if not path.exists():
            return None
        try:
            with np.load(path) as data:
                stored_xis = data["xis"]
                eps = data["eps"]
        except (OSError, KeyError, ValueError):
            logger.warning("Ignoring unreadable cache file %s", path)
            return None
        if not np.array_equal(stored_xis, xis):
            logger.warning("Cache file %s holds other frequencies, recomputing", path)
            return None
        return eps

    def _store(self, path: Path, xis: np.ndarray, eps: np.ndarray) -> None:
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp_path = tempfile.mkstemp(prefix=path.stem + ".", suffix=".npz", dir=str(self.directory))
        except OSError as ose:
            logger.warning("Cannot write cache directory %s: %s", self.directory, ose.strerror)
            return
        os.close(fd)
        try:
            np.savez_compressed(tmp_path, xis=xis, eps=eps)
            os.replace(tmp_path, path)
        except OSError:
            with contextlib.suppress(OSError):
                os.remove(tmp_path)
            logger.warning("Cannot write cache file %s", path)


def get_eps_cache(cache_dir: Path | str | None = None) -> EpsBlockCache | None:
    """Cache in the given directory, ATOMWALL_CACHE_DIR otherwise; none in DEV_MODE"""
    settings = get_settings()
    if settings.dev_mode:
        logger.debug("DEV_MODE set, eps cache disabled")
        return None
    directory = cache_dir if cache_dir is not None else settings.cache_dir
    if directory is None:
        return None
    return EpsBlockCache(directory)
