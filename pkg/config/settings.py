import os
from typing import Dict, List, Literal, Optional
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Settings:
    # Environment
    ENVIRONMENT: str = os.getenv("ENVIRONMENT", "development")

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE: str = os.getenv("LOG_FILE", "logs/blicket.log")

    # Process pool width for generation and solving
    WORKERS: int = int(os.getenv("WORKERS", 1))

    # Dataset defaults
    MASTER_SEED: int = int(os.getenv("MASTER_SEED", 0))
    PROBLEMS_PER_SPLIT: int = int(os.getenv("PROBLEMS_PER_SPLIT", 10000))

    # Label shares used when balancing queries (activated share matches the always-on baseline)
    DEFAULT_LABEL_SHARES: Dict[str, float] = {
        "activated": 0.37,
        "inactivated": 0.315,
        "undetermined": 0.315,
    }

    @property
    def is_production(self) -> bool:
        return self.ENVIRONMENT.lower() == "production"

    @property
    def log_file(self) -> Optional[Path]:
        """Log file path, or None when production runs without an explicit LOG_FILE"""
        if self.is_production and "LOG_FILE" not in os.environ:
            return None
        return Path(self.LOG_FILE)

    def validate(self) -> List[str]:
        """Return a list of problems with the environment configuration"""
        problems = []
        if self.WORKERS < 1:
            problems.append("WORKERS must be >= 1")
        if self.PROBLEMS_PER_SPLIT < 1:
            problems.append("PROBLEMS_PER_SPLIT must be >= 1")
        if self.MASTER_SEED < 0:
            problems.append("MASTER_SEED must be non-negative")
        return problems


settings = Settings()


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GenConfig(_Strict):
    split: Literal["iid", "comp", "sys"] = "iid"
    fold: Literal["train", "val", "test"] = "train"
    problems_per_split: int = Field(default_factory=lambda: settings.PROBLEMS_PER_SPLIT, ge=1)
    target_label_shares: Dict[str, float] = Field(
        default_factory=lambda: dict(settings.DEFAULT_LABEL_SHARES)
    )
    max_rejections: int = Field(1000, ge=1)
    activation_count_main: Literal["one", "two", "either"] = "either"
    # Probability that a remaining object also joins one of the other main trials
    main_overlap: float = Field(0.25, ge=0.0, le=1.0)
    max_added: int = Field(3, ge=1)

    @model_validator(mode="after")
    def _check_shares(self) -> "GenConfig":
        expected = {"activated", "inactivated", "undetermined"}
        if set(self.target_label_shares) != expected:
            raise ValueError(f"target_label_shares must have keys {sorted(expected)}")
        if any(v < 0 for v in self.target_label_shares.values()):
            raise ValueError("target_label_shares must be non-negative")
        if abs(sum(self.target_label_shares.values()) - 1.0) > 1e-9:
            raise ValueError("target_label_shares must sum to 1")
        return self


class RWConfig(_Strict):
    theta: float = Field(0.5, ge=0.0, le=1.0)
    variant: Literal["cooccurrence", "iterative"] = "cooccurrence"
    learning_rate: float = Field(0.25, gt=0.0, le=1.0)
    epochs: int = Field(10, ge=1)


class PCConfig(_Strict):
    eps_ci: float = Field(0.01, ge=0.0)
    delta: float = Field(0.1, ge=0.0, lt=0.5)
    max_condition_size: int = Field(2, ge=0, le=2)


class OptConfig(_Strict):
    hidden: int = Field(8, ge=1)
    lambda1: float = Field(0.01, ge=0.0)
    # ridge on second-layer weights
    lambda2: float = Field(0.01, ge=0.0)
    rho_init: float = Field(1.0, gt=0.0)
    rho_escalation: float = Field(10.0, gt=1.0)
    h_shrink: float = Field(0.25, gt=0.0, lt=1.0)
    h_tol: float = Field(1e-8, gt=0.0)
    rho_max: float = Field(1e16, gt=0.0)
    max_outer: int = Field(100, ge=1)
    inner_max_iter: int = Field(500, ge=1)
    init_scale: float = Field(0.1, ge=0.0)
    second_init_scale: float = Field(1.0, ge=0.0)
    # split first-layer weights live in [0, weight_bound]
    weight_bound: float = Field(2.0, gt=0.0)
    # no edge from the machine into an object node
    machine_sink: bool = True
    tau_lo: float = Field(0.35, ge=0.0, le=1.0)
    tau_hi: float = Field(0.65, ge=0.0, le=1.0)
    w_prune: float = Field(0.3, ge=0.0)
    query_tol: float = Field(1e-6, gt=0.0)
    grid_points: int = Field(101, ge=2)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_thresholds(self) -> "OptConfig":
        if not self.tau_lo < self.tau_hi:
            raise ValueError("tau_lo must be smaller than tau_hi")
        return self


class SolverConfig(_Strict):
    rw: RWConfig = RWConfig()
    pc: PCConfig = PCConfig()
    opt: OptConfig = OptConfig()


def load_solver_config(path: Optional[str]) -> SolverConfig:
    """Load solver hyperparameters from a JSON file; defaults when no path is given"""
    if not path:
        return SolverConfig()
    return SolverConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))
