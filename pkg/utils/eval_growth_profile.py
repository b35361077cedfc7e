"""Evaluation module for the coefficient growth of the named series."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

import logging
import sys
from pathlib import Path

import polars as pl

# Add src directory to path
src_path = str(Path(__file__).parents[1] / "src" / "gfunction_lab")
sys.path.insert(0, src_path)

from lib.modular_qexp import growth_profile, named_series  # noqa: E402

logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SERIES = ("F", "theta", "alpha", "G")
ORDER = 400
WINDOW = 50

# %% --------------------------------------------
# * Code Execution


def collect_profiles(order: int = ORDER) -> pl.DataFrame:
    """Stack the growth profiles of every series with a ``series`` column."""
    frames = [
        growth_profile(named_series(name, order).series).with_columns(
            pl.lit(name).alias("series")
        )
        for name in SERIES
    ]
    return pl.concat(frames)


def summarize(profiles: pl.DataFrame, window: int = WINDOW) -> pl.DataFrame:
    """Max of |a_n|^(1/n) per series and per window of ``window`` coefficients."""
    return (
        profiles.with_columns(((pl.col("n") - 1) // window * window + 1).alias("from"))
        .group_by(["series", "from"])
        .agg(
            pl.col("root").max().alias("max_root"),
            pl.col("n").max().alias("to"),
        )
        .sort(["series", "from"])
    )


def eval_growth_profile() -> None:
    """Log windowed growth estimates and write the full profile to data/."""
    project_root = Path(__file__).parents[1]
    output_folder = project_root / "data" / "growth"
    output_folder.mkdir(parents=True, exist_ok=True)

    profiles = collect_profiles()
    summary = summarize(profiles)

    logger.info("\nGrowth of |a_n|^(1/n) (archimedean radius 1/1728 for F):")
    for row in summary.iter_rows(named=True):
        logger.info(
            "  %-6s n=%3d..%3d  max root %.3f",
            row["series"],
            row["from"],
            row["to"],
            row["max_root"],
        )

    profiles.write_csv(output_folder / f"growth_profile_order_{ORDER}.csv")
    summary.write_csv(output_folder / f"growth_summary_order_{ORDER}.csv")
    logger.info("Profiles written to %s", output_folder)


if __name__ == "__main__":
    eval_growth_profile()
