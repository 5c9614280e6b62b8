"""Server configuration: defaults, config file, environment, CLI overrides.

The config file named by the ``SURVIVRS_CONFIG`` environment variable (or
``--config``) uses one ``key = value`` pair per line; ``#`` starts a
comment.  Every key can be overridden by a CLI flag.  Keys:

    host            bind address          (default 127.0.0.1)
    port            bind port             (default 8765)
    recordings_dir  where .svrs files go  (default ./recordings)
    ring_capacity   frames retained per stream (default 64)
    max_payload     per-frame payload cap, bytes (default 8388608)
    proto_version   handshake version, exact match (default 1)
    log_level       debug|info|warning|error (default info)
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

from .model import MAX_PAYLOAD, PROTO_VERSION

ENV_VAR = "SURVIVRS_CONFIG"


class ConfigError(Exception):
    pass


@dataclass(frozen=True, slots=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    recordings_dir: Path = Path("recordings")
    ring_capacity: int = 64
    max_payload: int = MAX_PAYLOAD
    proto_version: int = PROTO_VERSION
    log_level: str = "info"

    def validate(self) -> "ServerConfig":
        if self.ring_capacity < 1:
            raise ConfigError("ring_capacity must be positive")
        if self.max_payload < 1:
            raise ConfigError("max_payload must be positive")
        if not 0 < self.port < 65536:
            raise ConfigError(f"port out of range: {self.port}")
        if self.log_level not in ("debug", "info", "warning", "error"):
            raise ConfigError(f"unknown log_level: {self.log_level}")
        return self

    def ensure_recordings_dir(self) -> Path:
        """Create the recordings directory and prove it is writable."""
        d = self.recordings_dir
        d.mkdir(parents=True, exist_ok=True)
        probe = d / ".write-probe"
        try:
            probe.write_bytes(b"")
            probe.unlink()
        except OSError as exc:
            raise ConfigError(f"recordings directory not writable: {exc}") from None
        return d


_INT_KEYS = {"port", "ring_capacity", "max_payload", "proto_version"}


def parse_config_file(path: Path) -> dict:
    values: dict = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in ServerConfig.__dataclass_fields__:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in _INT_KEYS:
            try:
                values[key] = int(value)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: {key} must be an integer") from None
        elif key == "recordings_dir":
            values[key] = Path(value)
        else:
            values[key] = value
    return values


def load_config(path: str | Path | None = None, **overrides) -> ServerConfig:
    """Defaults, then the config file (argument or env), then overrides."""
    cfg = ServerConfig()
    source = path or os.environ.get(ENV_VAR)
    if source:
        p = Path(source)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        cfg = replace(cfg, **parse_config_file(p))
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    if "recordings_dir" in cleaned:
        cleaned["recordings_dir"] = Path(cleaned["recordings_dir"])
    if cleaned:
        cfg = replace(cfg, **cleaned)
    return cfg.validate()
