from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from back_end.utils.config import format_config, parse_config_text, read_config_file
from back_end.utils.exceptions import ConfigError

# Modèles Pydantic pour la configuration des expériences


class OptimizerConfig(BaseModel):
    """Réglages de la descente de gradient et du multistart."""

    model_config = ConfigDict(extra="forbid")

    eta: float = Field(0.001, gt=0)
    delta: float = Field(0.01, gt=0)
    max_iters: int = Field(100_000, ge=1)
    restarts: int = Field(1, ge=1)
    seed: int = 0
    grid_depth: int = Field(10, ge=0, le=20)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    # environnement
    env: Literal["cartpole", "cycle", "constant", "two_state"] = "cartpole"
    cost: Literal["quadratic", "reward"] = "quadratic"
    gamma: float = Field(0.8, gt=0, lt=1)
    gammas: Optional[List[float]] = None
    n_states: int = Field(3, ge=2)
    state: Optional[List[float]] = None

    # évaluation
    horizon: Optional[int] = Field(None, ge=0)
    tail_tol: float = Field(1e-6, gt=0)
    depth: int = Field(10, ge=1, le=20)
    samples: int = Field(1000, ge=1)
    sample_mode: Literal["uniform", "dyadic"] = "uniform"
    sweep_tol: float = Field(1e-9, gt=0)
    max_sweeps: int = Field(10_000, ge=1)

    # représentations
    order: int = Field(10, ge=0, le=16)
    degree: int = Field(2, ge=1)
    n_samples: int = Field(200, ge=2)
    overlay_degree: Optional[int] = Field(None, ge=1)

    # optimiseur
    eta: float = Field(0.001, gt=0)
    delta: float = Field(0.01, gt=0)
    max_iters: int = Field(100_000, ge=1)
    restarts: int = Field(4, ge=1)
    grid_depth: int = Field(10, ge=0, le=20)

    # contrôle
    method: Literal["exact", "approx"] = "approx"
    prefix: int = Field(10, ge=1)
    episode_cap: int = Field(500, ge=1)
    seeds: int = Field(5, ge=1)
    seed: int = 0
    use_transform: bool = False

    # entrées / sorties
    policy: Optional[str] = None
    base: Optional[str] = None
    out_dir: str = "resultats"
    out: Optional[str] = None
    qualitative: bool = False

    @field_validator("*", mode="before")
    @classmethod
    def empty_is_none(cls, value):
        if isinstance(value, str) and value.strip() == "":
            return None
        return value

    @field_validator("gammas", "state", mode="before")
    @classmethod
    def split_list(cls, value):
        if isinstance(value, str):
            values = [float(v) for v in value.split(",") if v.strip()]
            return values or None
        return value

    def optimizer(self):
        return OptimizerConfig(
            eta=self.eta,
            delta=self.delta,
            max_iters=self.max_iters,
            restarts=self.restarts,
            seed=self.seed,
            grid_depth=self.grid_depth,
        )

    def gamma_list(self):
        return list(self.gammas) if self.gammas else [self.gamma]

    def to_text(self):
        """Echo form: every field, defaults included, as `key = value` lines."""
        return format_config(self.model_dump())

    @classmethod
    def build(cls, config_path=None, **overrides):
        """
        Merge a config file with CLI overrides (flags left at None are ignored).

        Raises:
            ConfigError: unreadable file, unknown key or invalid value
        """
        values = read_config_file(config_path) if config_path else {}
        values.update({k.replace("-", "_"): v for k, v in overrides.items() if v is not None})
        try:
            return cls(**values)
        except ValidationError as e:
            raise ConfigError(f"Configuration invalide: {e}") from e

    @classmethod
    def from_text(cls, text):
        try:
            return cls(**parse_config_text(text))
        except ValidationError as e:
            raise ConfigError(f"Configuration invalide: {e}") from e
