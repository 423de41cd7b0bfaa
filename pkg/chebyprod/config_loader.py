import json
import logging
import os
from dataclasses import dataclass, fields

from dotenv import load_dotenv

DEFAULT_CONFIG = "chebyprod.json"

DEFAULTS = {
    "FEAS_TOL": 1e-8,
    "GAP_TOL": 1e-9,
    "TRUST_RADIUS": 1e3,
    "TRUST_RADIUS_CAP": 1e9,
    "MAX_ITERATIONS": 2000,
    "LP_TOL": 1e-9,
    "GRID_POINTS": 60,
    "GRID_SPAN_SIGMAS": 6.0,
    "BISECT_TOL": 1e-6,
    "THREADS": 1,
    "VERIFY_GAP_TOL": 1e-3,
    "SLACK_WEBHOOK_URL": None,
    "SLACK_RESULTS_ONLY": True,
}

ENV_OVERRIDES = {
    "CHEBYPROD_THREADS": ("THREADS", int),
    "CHEBYPROD_SLACK_WEBHOOK_URL": ("SLACK_WEBHOOK_URL", str),
}


class ConfigLoader:
    """
    Loads JSON configuration files and merges them with defaults and environment overrides.
    """

    @staticmethod
    def load_config(file_name: str) -> dict:
        """
        Loads a JSON configuration file.

        Args:
            file_name (str): A file name under ./config, or a path to an existing file.

        Returns:
            dict: The configuration data as a dictionary.
        """
        config_path = file_name if os.path.exists(file_name) else os.path.join("./config", file_name)
        if not os.path.exists(config_path):
            logging.error("Configuration file not found: %s", config_path)
            raise FileNotFoundError(f"Configuration file {file_name} not found.")

        with open(config_path, "r") as file:
            try:
                return json.load(file)
            except json.JSONDecodeError as e:
                logging.error("Error decoding JSON in %s: %s", file_name, e)
                raise

    @staticmethod
    def load_settings(file_name: str = None) -> dict:
        """
        Builds the effective configuration: defaults, then the JSON file, then the environment.

        Args:
            file_name (str): Optional config file; ./config/chebyprod.json is used when it exists.

        Returns:
            dict: The merged configuration.
        """
        load_dotenv()
        settings = dict(DEFAULTS)
        if file_name is not None:
            settings.update(ConfigLoader.load_config(file_name))
        elif os.path.exists(os.path.join("./config", DEFAULT_CONFIG)):
            settings.update(ConfigLoader.load_config(DEFAULT_CONFIG))

        for variable, (key, cast) in ENV_OVERRIDES.items():
            raw = os.getenv(variable)
            if raw is None or raw == "":
                continue
            try:
                settings[key] = cast(raw)
            except ValueError:
                logging.warning("Ignoring %s=%r: not a valid %s", variable, raw, cast.__name__)
        return settings


@dataclass(frozen=True)
class SolverSettings:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-9
    trust_radius: float = 1e3
    trust_radius_cap: float = 1e9
    max_iterations: int = 2000
    lp_tol: float = 1e-9
    grid_points: int = 60
    grid_span_sigmas: float = 6.0
    bisect_tol: float = 1e-6
    threads: int = 1
    verify_gap_tol: float = 1e-3

    @classmethod
    def from_config(cls, config: dict) -> "SolverSettings":
        """Picks the UPPER_SNAKE_CASE solver keys out of a configuration dict."""
        values = {}
        for f in fields(cls):
            key = f.name.upper()
            if key in config and config[key] is not None:
                values[f.name] = type(f.default)(config[key])
        return cls(**values)
