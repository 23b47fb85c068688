"""Configuration defaults for fairrank, loaded from the environment."""

import os
from dataclasses import dataclass

from dotenv import load_dotenv

load_dotenv()

# Validation constants
VALID_OUTPUT_FORMATS = ("csv", "json")
VALID_DATABASE_EXTENSIONS = (".db", ".sqlite", ".sqlite3")

DEFAULT_NU = 0.15
DEFAULT_DENSE_CAP = 5000
DEFAULT_GMRES_RESTART = 50
DEFAULT_GMRES_TOL = 1e-10
DEFAULT_OUTPUT_FORMAT = "csv"


@dataclass
class Config:
    """Process-wide defaults; command-line flags override every field."""

    nu: float = DEFAULT_NU
    dense_cap: int = DEFAULT_DENSE_CAP
    gmres_restart: int = DEFAULT_GMRES_RESTART
    gmres_tol: float = DEFAULT_GMRES_TOL
    output_format: str = DEFAULT_OUTPUT_FORMAT
    results_db: str = ""

    @classmethod
    def from_env(cls) -> "Config":
        """Load configuration from environment variables.

        Returns:
            Config populated from FAIRRANK_* variables, defaults elsewhere.

        Raises:
            ValueError: If a variable is set to an invalid value.
        """
        nu = cls._parse_float("FAIRRANK_NU", DEFAULT_NU)
        cls._validate_nu(nu)

        dense_cap = cls._parse_int("FAIRRANK_DENSE_CAP", DEFAULT_DENSE_CAP)
        cls._validate_positive(dense_cap, "FAIRRANK_DENSE_CAP")

        gmres_restart = cls._parse_int("FAIRRANK_GMRES_RESTART", DEFAULT_GMRES_RESTART)
        cls._validate_positive(gmres_restart, "FAIRRANK_GMRES_RESTART")

        gmres_tol = cls._parse_float("FAIRRANK_GMRES_TOL", DEFAULT_GMRES_TOL)
        cls._validate_positive(gmres_tol, "FAIRRANK_GMRES_TOL")

        output_format = os.getenv("FAIRRANK_OUTPUT_FORMAT", DEFAULT_OUTPUT_FORMAT).lower()
        cls._validate_output_format(output_format)

        results_db = os.getenv("FAIRRANK_RESULTS_DB", "")
        if results_db:
            cls._validate_database_path(results_db)

        return cls(
            nu=nu,
            dense_cap=dense_cap,
            gmres_restart=gmres_restart,
            gmres_tol=gmres_tol,
            output_format=output_format,
            results_db=results_db,
        )

    @staticmethod
    def _parse_float(var_name: str, default: float) -> float:
        raw = os.getenv(var_name)
        if raw is None or raw == "":
            return default
        try:
            return float(raw)
        except ValueError as e:
            raise ValueError(f"{var_name} must be a number, got: {raw}") from e

    @staticmethod
    def _parse_int(var_name: str, default: int) -> int:
        raw = os.getenv(var_name)
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError as e:
            raise ValueError(f"{var_name} must be a valid integer, got: {raw}") from e

    @staticmethod
    def _validate_nu(nu: float) -> None:
        """Validate the teleport probability.

        Args:
            nu: Teleport probability.

        Raises:
            ValueError: If nu is outside (0, 1].
        """
        if not 0.0 < nu <= 1.0:
            raise ValueError(f"FAIRRANK_NU must be in (0, 1], got: {nu}")

    @staticmethod
    def _validate_positive(value: float, var_name: str) -> None:
        if value <= 0:
            raise ValueError(f"{var_name} must be positive, got: {value}")

    @staticmethod
    def _validate_output_format(output_format: str) -> None:
        if output_format not in VALID_OUTPUT_FORMATS:
            raise ValueError(
                f"FAIRRANK_OUTPUT_FORMAT must be one of {VALID_OUTPUT_FORMATS}, "
                f"got: {output_format}"
            )

    @staticmethod
    def _validate_database_path(path: str) -> None:
        """Validate the results database path has a SQLite extension.

        Args:
            path: The database file path to validate.

        Raises:
            ValueError: If the path extension is invalid.
        """
        if not path.lower().endswith(VALID_DATABASE_EXTENSIONS):
            raise ValueError(
                f"FAIRRANK_RESULTS_DB must end with one of {VALID_DATABASE_EXTENSIONS}, "
                f"got: {path}"
            )


def get_config() -> Config:
    """Get the process configuration."""
    return Config.from_env()
