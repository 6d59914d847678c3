import copy
import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from back_end.vlc_core.shared.common import REFERENCE_DEFAULTS
from back_end.vlc_core.shared.errors import ConfigError

SUPPORTED_EXTENSIONS = [".toml", ".json"]


class ConfigService:
    def load_config(self, config_path: str) -> dict:
        """
        Read an experiment config (TOML or JSON) from disk
        """
        # Preparation
        extension = os.path.splitext(config_path)[1].lower()
        if extension not in SUPPORTED_EXTENSIONS:
            raise ConfigError([f"Unsupported config format '{extension}', expected one of {SUPPORTED_EXTENSIONS}"])

        # Parse file
        with open(config_path, "rb") as f:
            if extension == ".toml":
                return tomllib.load(f)
            return json.load(f)

    def resolve_config(self, raw_config: dict, overrides: dict = None) -> dict:
        """
        Merge the reference defaults, the file contents and CLI overrides
        """
        resolved = copy.deepcopy(REFERENCE_DEFAULTS)
        for section, values in raw_config.items():
            if isinstance(values, dict) and isinstance(resolved.get(section), dict):
                resolved[section].update(copy.deepcopy(values))
            else:
                resolved[section] = copy.deepcopy(values)

        # CLI overrides are (section, key) -> value; None means not given
        for (section, key), value in (overrides or {}).items():
            if value is not None:
                resolved.setdefault(section, {})[key] = value
        return resolved

    def config_hash(self, resolved_config: dict) -> str:
        """
        sha256 of the canonical JSON form of the resolved config
        """
        canonical = json.dumps(resolved_config, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
