"""Main module running the verification suites of the G-function lab."""

# * Creation : Oct 2026
# * License: MIT license

# %% --------------------------------------------
# * Libraries

from __future__ import annotations

import logging
import os
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

import yaml

from lib.modular_qexp import named_series
from lib.series_core import QSeries
from lib.storage_manager import StorageManager
from lib.suites import (
    SUITES,
    CheckStatus,
    SuiteOptions,
    UnknownSuiteError,
    build_report,
    run_checks,
    suite_checks,
)

# Set up logging
logger = logging.getLogger(__name__)

CONFIG_FOLDER = Path(__file__).parent / "cfg"
MAIN_CONFIG = "gfunction_lab_config.yaml"
EVALUATION_CONFIG = "evaluation_config.yaml"

# %% --------------------------------------------
# * Configuration


def load_config(file_name: str, config_folder: Path = CONFIG_FOLDER) -> dict[str, Any]:
    """Read one YAML file from the cfg folder.

    Raises
    ------
    FileNotFoundError
        If the file does not exist.

    """
    config_path = config_folder / file_name
    try:
        with config_path.open(encoding="utf-8") as f:
            return yaml.safe_load(f) or {}
    except FileNotFoundError as exc:
        logger.exception("Configuration file not found: %s", config_path)
        msg = f"Missing configuration file {config_path}"
        raise FileNotFoundError(msg) from exc


# %% --------------------------------------------
# * GFunctionLab Class Definition


class GFunctionLab:
    """Runs the verification suites and writes their reports.

    Parameters
    ----------
    config : dict, optional
        Main configuration (suite defaults); read from ``cfg`` when omitted.
    evaluation_config : dict, optional
        Coefficient bounds and reconstruction settings; read from ``cfg`` when
        omitted.
    storage_manager : StorageManager, optional
        Series cache and report storage; built from GFLAB_CACHE_DIR when omitted.

    Attributes
    ----------
    debug : bool
        Set from GFLAB_DEBUG; enables DEBUG logging and a log file.
    warnings : list[dict[str, Any]]
        Warnings collected while running suites.
    errors : list[dict[str, Any]]
        Errors collected while running suites.

    """

    # Set project root
    project_root = Path(__file__).parent.parent.parent

    def __init__(
        self,
        config: dict[str, Any] | None = None,
        evaluation_config: dict[str, Any] | None = None,
        storage_manager: StorageManager | None = None,
    ) -> None:
        """Initialize the GFunctionLab class."""
        # Read debug settings from environment
        self.debug = os.environ.get("GFLAB_DEBUG", "FALSE").upper() == "TRUE"
        log_dir = os.environ.get("GFLAB_LOG_DIR")
        self.log_dir = Path(log_dir) if log_dir else self.project_root / "logs"

        # Initialize warning/error tracking
        self.warnings: list[dict[str, Any]] = []
        self.errors: list[dict[str, Any]] = []

        # Initialize logging
        log_level = logging.DEBUG if self.debug else logging.INFO
        self._setup_logging(log_level)
        if self.debug:
            logger.info("Debug mode is enabled...")

        self.config = config if config is not None else load_config(MAIN_CONFIG)
        self.evaluation_config = (
            evaluation_config
            if evaluation_config is not None
            else load_config(EVALUATION_CONFIG)
        )
        if storage_manager is None:
            storage_manager = StorageManager.from_env(debug=self.debug)
            export_folder = self.config.get("export_folder")
            if export_folder:
                storage_manager.export_dir = self.project_root / export_folder
        self.storage_manager = storage_manager
        logger.debug("Project root directory: %s", self.project_root)

    def add_warning(self, message: str, context: str | None = None) -> None:
        """Add a warning to the tracking system."""
        self.warnings.append(
            {
                "message": message,
                "context": context,
                "timestamp": datetime.now(tz=UTC).isoformat(),
            }
        )

    def add_error(self, message: str, context: str | None = None) -> None:
        """Add an error to the tracking system."""
        self.errors.append(
            {
                "message": message,
                "context": context,
                "timestamp": datetime.now(tz=UTC).isoformat(),
            }
        )

    def _setup_logging(self, log_level: int) -> None:
        """Set up logging with a console handler and a log file in debug mode."""
        formatter = logging.Formatter(
            fmt="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )

        # Get root logger and clear existing handlers
        root_logger = logging.getLogger()
        root_logger.setLevel(log_level)
        root_logger.handlers.clear()

        console_handler = logging.StreamHandler()
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

        if self.debug:
            try:
                self.log_dir.mkdir(parents=True, exist_ok=True)
                timestamp = datetime.now(tz=UTC).strftime("%Y%m%d_%H%M%S")
                log_filename = self.log_dir / f"gfunction_lab_debug_{timestamp}.log"
                file_handler = logging.FileHandler(log_filename, encoding="utf-8")
                file_handler.setLevel(log_level)
                file_handler.setFormatter(formatter)
                root_logger.addHandler(file_handler)
            except OSError:
                logger.exception("Could not create the debug log file")
            else:
                logger.info("Debug logging enabled - log file: %s", log_filename)

    def series(self, name: str, order: int) -> QSeries:
        """Named series through the on-disk cache."""
        return self.storage_manager.get_or_generate(
            name,
            order,
            lambda n: named_series(name, n).series,
        )

    def suite_options(self, suite: str, **overrides: Any) -> SuiteOptions:
        """Merge defaults, the suite section, evaluation settings and overrides.

        Raises
        ------
        UnknownSuiteError
            If the suite name is not known.
        ValueError
            If the merged options are invalid.

        """
        if suite not in SUITES:
            msg = f"Unknown suite '{suite}'; choose from {', '.join(SUITES)}"
            raise UnknownSuiteError(msg)
        sections = self.config.get("suites", {})
        settings = {
            **self.evaluation_config,
            **self.config.get("defaults", {}),
            **(sections.get(suite) or {}),
        }
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return SuiteOptions(
            order=int(settings["order"]),
            bits=int(settings["bits"]),
            primes=tuple(int(p) for p in settings["primes"]),
            precision=int(settings["precision"]),
            samples=int(settings["samples"]),
            seed=int(settings["seed"]),
            settings=settings,
            series_source=self.series,
        )

    def run_suite(
        self,
        suite: str,
        out_path: str | Path | None = None,
        **overrides: Any,
    ) -> dict[str, Any]:
        """Run a suite and return its report.

        Parameters
        ----------
        suite : str
            One of the configured suite names.
        out_path : str or Path, optional
            File receiving the JSON report.
        **overrides
            Option overrides (order, bits, primes, precision, samples, seed);
            None values are ignored.

        Returns
        -------
        dict[str, Any]
            Report with the checks sorted by name.

        """
        options = self.suite_options(suite, **overrides)
        logger.info("Running suite %s with %s", suite, options.to_json())
        results = run_checks(suite_checks(suite, options))
        for result in results:
            if result.status == CheckStatus.FAIL:
                error = result.detail.get("error")
                if error:
                    self.add_error(error, f"{suite}/{result.name}")
                else:
                    self.add_warning(f"Check failed: {result.name}", suite)

        report = build_report(suite, results, options)
        if out_path is not None or self.storage_manager.export_dir is not None:
            if not self.storage_manager.store_report(report, out_path, suite):
                self.add_error("Report could not be written", suite)
        self._log_suite_summary(suite, results)
        return report

    def _log_suite_summary(self, suite: str, results: list[Any]) -> None:
        """Log pass/fail counts and the tracked warnings and errors."""
        counts = {status: 0 for status in CheckStatus}
        for result in results:
            counts[result.status] += 1
        if counts[CheckStatus.FAIL] or self.errors:
            logger.warning(
                "Suite %s completed with issues: %d passed, %d failed, %d skipped,"
                " %d errors",
                suite,
                counts[CheckStatus.PASS],
                counts[CheckStatus.FAIL],
                counts[CheckStatus.SKIP],
                len(self.errors),
            )
            for error in self.errors:
                logger.warning("- %s [%s]", error["message"], error["context"])
        else:
            logger.info(
                "Suite %s passed: %d checks, %d skipped",
                suite,
                counts[CheckStatus.PASS],
                counts[CheckStatus.SKIP],
            )


# %% --------------------------------------------
# * Default Workflow

if __name__ == "__main__":
    from dotenv import load_dotenv

    # Read env.local (local development)
    load_dotenv(dotenv_path=GFunctionLab.project_root / ".env.local")

    lab = GFunctionLab()
    for suite_name in ("identities", "heights"):
        lab.run_suite(suite_name)
