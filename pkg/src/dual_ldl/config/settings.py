"""Application settings, loaded from environment variables.

Usage:
    from dual_ldl.config.settings import settings
    print(settings.batch_size)
"""

from __future__ import annotations

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Defaults for every CLI run, overridable through DUAL_LDL_* env vars or .env.

    # Desk-scale defaults; the published protocol (batch 256, 90 epochs, decay
    # every 30) remains reachable through CLI flags.

    model_config = SettingsConfigDict(
        env_prefix="DUAL_LDL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # ── Run ────────────────────────────────────────────────────────────────
    output_dir: str = Field(default="runs", description="Directory every artifact is written to")
    seed: int = Field(default=7)

    # ── Synthetic data ─────────────────────────────────────────────────────
    n_samples: int = Field(default=500, ge=1)
    feature_dim: int = Field(default=16, ge=1)
    raters_per_sample: int = Field(default=60, ge=1)
    rater_noise: float = Field(default=0.6)
    feature_noise: float = Field(default=0.1)

    # ── Training ───────────────────────────────────────────────────────────
    epochs: int = Field(default=120, ge=1)
    batch_size: int = Field(default=64, ge=1)
    step_every: int = Field(default=40, ge=1)
    hidden_dims: list[int] = Field(default_factory=lambda: [64, 64])
    cv_folds: int = Field(default=5, ge=2)
    cv_workers: int = Field(default=1, ge=1)

    # ── Logging ────────────────────────────────────────────────────────────
    log_level: str = Field(default="INFO")
    log_format: str = Field(default="console")  # 'console' | 'json'
    log_file: bool = Field(default=False)

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Only the two structlog renderers are supported."""
        if v not in ("console", "json"):
            raise ValueError(f"log_format {v!r} must be 'console' or 'json'")
        return v

    @field_validator("rater_noise", "feature_noise")
    @classmethod
    def validate_noise(cls, v: float) -> float:
        if v < 0:
            raise ValueError("noise levels must be non-negative")
        return v


settings = Settings()
