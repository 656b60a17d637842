# lunarnet/utils/yaml_parser.py
import os
import re
from typing import Any, Dict

import yaml


class YamlConfigParser:
    """Scenario YAML with ${NAME} or ${NAME:-default} environment substitution.

    Unset variables without a default are left as written.
    """

    ENV_VAR_PATTERN = re.compile(r"\$\{(\w+)(?::-([^}]*))?\}")

    @classmethod
    def load_config(cls, file_path: str) -> Dict[str, Any]:
        with open(file_path, "r", encoding="utf-8") as f:
            return cls.loads(f.read())

    @classmethod
    def loads(cls, content: str) -> Dict[str, Any]:
        config = yaml.safe_load(cls._substitute_env_vars(content))
        if config is None:
            return {}
        if not isinstance(config, dict):
            raise yaml.YAMLError(f"Top level must be a mapping, got {type(config).__name__}")
        return config

    @classmethod
    def _substitute_env_vars(cls, content: str) -> str:
        def replace_env_var(match: re.Match) -> str:
            name, default = match.group(1), match.group(2)
            value = os.getenv(name)
            if value is not None:
                return value
            return default if default is not None else match.group(0)

        return cls.ENV_VAR_PATTERN.sub(replace_env_var, content)
