"""Utility to fill the on-disk series cache ahead of the suite runs.

Can be used as:
1. Standalone script: python export_series_cache.py --order 500 F theta
2. Imported module: from export_series_cache import export_series
"""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

import argparse
import logging
import sys
from pathlib import Path

from dotenv import load_dotenv

# Add src directory to path
src_path = str(Path(__file__).parents[1] / "src" / "gfunction_lab")
sys.path.insert(0, src_path)

from lib.modular_qexp import SeriesName, named_series  # noqa: E402
from lib.storage_manager import StorageManager  # noqa: E402

# Only set up logging if running as standalone script
if __name__ == "__main__":
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

logger = logging.getLogger(__name__)

# %% --------------------------------------------
# * Code Execution


def export_series(
    names: list[str],
    order: int,
    cache_dir: str | Path | None = None,
) -> int:
    """Generate each series and write it to the cache.

    Parameters
    ----------
    names : list[str]
        Series names; see ``SeriesName``.
    order : int
        Truncation order of the cached files.
    cache_dir : str or Path, optional
        Cache folder; GFLAB_CACHE_DIR when omitted.

    Returns
    -------
    int
        Number of series written.

    """
    storage = (
        StorageManager(str(cache_dir)) if cache_dir else StorageManager.from_env()
    )
    if storage.cache_dir is None:
        logger.error("No cache folder: pass --cache-dir or set GFLAB_CACHE_DIR")
        return 0

    written = 0
    for name in names:
        if storage.load_series(name, order) is not None:
            logger.info("%s already cached at order >= %d", name, order)
            continue
        series = named_series(name, order).series
        if storage.store_series(name, series):
            written += 1
            logger.info('Cached "%s" -> %s', name, storage.cache_path(name, order))
    return written


if __name__ == "__main__":
    load_dotenv(dotenv_path=Path(__file__).parents[1] / ".env.local")

    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "names",
        nargs="*",
        help=f"Series names among {', '.join(SeriesName)}",
        default=["F", "theta", "alpha", "a4_tate", "a6_tate"],
    )
    parser.add_argument("--order", type=int, default=500)
    parser.add_argument("--cache-dir")
    args = parser.parse_args()

    count = export_series(args.names, args.order, args.cache_dir)
    logger.info("%d series written", count)
