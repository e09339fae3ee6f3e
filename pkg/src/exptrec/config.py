"""Run configuration: serializable settings plus a stable fingerprint that
every report embeds."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

from .errors import DataError
from .providers import DEFAULT_EMBED_DIM, ProviderConfig
from .retrieval import DEFAULT_SHORTLIST, DEFAULT_TASK_INSTRUCTION, DEFAULT_TEMPERATURE

AUTH_TOKEN_ENV = "EXPTREC_PROVIDER_TOKEN"


@dataclass
class RunConfig:
    corpus: str = ""
    perception_cache: str = ""
    index_dir: str = ""
    out_dir: str = "reports"
    provider: str = "mock"
    embed_dim: int = DEFAULT_EMBED_DIM
    temperature: float = DEFAULT_TEMPERATURE
    reg_weight: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 16
    shortlist_k: int = DEFAULT_SHORTLIST
    radius: int = 1
    alpha: float = 0.5
    task_instruction: str = DEFAULT_TASK_INSTRUCTION
    seed: int = 0
    jobs: int = 1

    def fingerprint(self) -> str:
        canonical = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def provider_config(self) -> ProviderConfig:
        return ProviderConfig(
            endpoint_base=self.provider,
            embed_dim=self.embed_dim,
            auth_token=os.environ.get(AUTH_TOKEN_ENV),
        )


def load_run_config(path: str | None, overrides: dict) -> RunConfig:
    """Config file values first, then explicit flag overrides on top."""
    values: dict = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read config file {path}: {exc}") from exc
        unknown = set(values) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise DataError(f"unknown config keys: {', '.join(sorted(unknown))}")
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)
