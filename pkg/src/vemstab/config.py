"""Run-time configuration objects shared by the solver, diagnostics and CLI."""

from __future__ import annotations

from dataclasses import dataclass, field

from .stab_classic import NU0
from .stab_decoupled import DecoupledConfig

STAB_MODES = ("classical", "decoupled")


@dataclass(frozen=True)
class StabilizationConfig:
    mode: str = "decoupled"
    decoupled: DecoupledConfig = field(default_factory=DecoupledConfig)
    nu0: float = NU0

    def __post_init__(self):
        if self.mode not in STAB_MODES:
            raise ValueError(f"unknown stabilization mode {self.mode!r}; expected one of {STAB_MODES}")


@dataclass(frozen=True)
class NewtonConfig:
    n_load_steps: int = 10
    max_iters: int = 50
    tol_residual: float = 1e-8
    tol_increment: float = 1e-10
    line_search: bool = False

    def __post_init__(self):
        if self.n_load_steps < 1 or self.max_iters < 1:
            raise ValueError("load steps and iteration limit must be positive")
        if self.tol_residual <= 0 or self.tol_increment <= 0:
            raise ValueError("tolerances must be positive")
