"""The ``stats`` config section."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any

from core.errors import ConfigError

from .cmi import DEFAULT_DEPTH, DEFAULT_PAIR_CAP
from .gaps import parse_targets
from .sign_error import DEFAULT_N_EFF_THRESHOLD


@dataclass(frozen=True)
class StatsSettings:
    """``axes`` of ``None`` means every grid axis except the seed."""

    targets: str = "iid,shift"
    n_eff_threshold: float = DEFAULT_N_EFF_THRESHOLD
    cmi_depth: int = DEFAULT_DEPTH
    pair_cap: int = DEFAULT_PAIR_CAP
    pair_seed: int = 0
    seed_conditional: bool = False
    axes: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.axes is not None:
            object.__setattr__(self, "axes", tuple(str(a) for a in self.axes))
        parse_targets(self.targets)
        if self.n_eff_threshold < 0:
            raise ConfigError("n_eff_threshold must be >= 0")
        if self.cmi_depth < 0:
            raise ConfigError("cmi_depth must be >= 0")
        if self.pair_cap < 1:
            raise ConfigError("pair_cap must be >= 1")

    @property
    def target_names(self) -> list[str]:
        return parse_targets(self.targets)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: dict[str, Any] | None) -> StatsSettings:
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown stats settings: {', '.join(unknown)}")
        if isinstance(data.get("targets"), list):
            data["targets"] = ",".join(str(t) for t in data["targets"])
        return cls(**data)
