import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from .cocycle import SkewSystem
from .errors import ConfigInvalid
from .groups import CompactGroup, make_group
from .sft import MetricConstant, Shift, build_shift
from .thermo import LocallyConstantFn
from .utils import canonical_json, parse_word, sha256_text

logger = logging.getLogger(__name__)


class FnConfig(BaseModel):
    """A locally constant function: a table over admissible words or a constant."""
    depth: int = Field(default=1, ge=1, description="Number of leading symbols the function reads")
    values: Optional[Dict[str, Any]] = Field(default=None, description="Word (\"011\" or \"0,1,12\") to value")
    constant: Optional[Any] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.values is None) == (self.constant is None):
            raise ValueError("Give exactly one of 'values' or 'constant'")
        return self

    def build(self, shift: Shift, codomain: str = "real", group: Optional[CompactGroup] = None,
              what: str = "table") -> LocallyConstantFn:
        if self.constant is not None:
            return LocallyConstantFn.constant(shift, self.constant, self.depth, codomain, group)
        try:
            mapping = {parse_word(key): value for key, value in self.values.items()}
        except ValueError as e:
            raise ConfigInvalid(f"{what}: {e}")
        return LocallyConstantFn.from_mapping(shift, self.depth, mapping, codomain, group, what=what)


class GroupConfig(BaseModel):
    kind: Literal["torus", "su2", "so3"] = "torus"
    d: int = Field(default=1, ge=1, description="Torus dimension; ignored for su2/so3")

    def build(self) -> CompactGroup:
        return make_group(self.kind, self.d)


class SystemConfig(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    transition: List[List[int]]
    lambda_: float = Field(default=0.5, alias="lambda", gt=0, lt=1)
    potential: Optional[FnConfig] = None
    roof: FnConfig = Field(default_factory=lambda: FnConfig(constant=1.0))
    cocycle: Optional[FnConfig] = None
    group: GroupConfig = Field(default_factory=GroupConfig)

    def build(self) -> SkewSystem:
        shift = build_shift(self.transition)
        group = self.group.build()
        if self.cocycle is None:
            cocycle = LocallyConstantFn.constant(shift, group.identity(), 1, "group", group)
        else:
            cocycle = self.cocycle.build(shift, "group", group, what="cocycle")
        potential = self.potential.build(shift, what="potential") if self.potential else None
        return SkewSystem(
            shift=shift,
            lam=MetricConstant(self.lambda_),
            roof=self.roof.build(shift, what="roof"),
            cocycle=cocycle,
            group=group,
            potential=potential,
        )


class ExperimentConfig(BaseModel):
    """Configuration for one experiment run."""
    system: SystemConfig
    experiment: str
    parameters: Dict[str, Any] = Field(default_factory=dict)
    seed: int = 0
    output_dir: str = Field(default="results", description="Directory receiving artifacts and the manifest")
    threads: Optional[int] = Field(default=None, ge=1)

    @classmethod
    def from_data(cls, data: Any) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigInvalid(f"Invalid experiment config: {e}")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ExperimentConfig":
        """Read a JSON or YAML config file."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigInvalid(f"Cannot read config {path}: {e}")
        try:
            data = YAML(typ="safe").load(text)
        except YAMLError as e:
            raise ConfigInvalid(f"Cannot parse config {path}: {e}")
        logger.debug(f"Loaded config from {path}")
        return cls.from_data(data)

    def config_hash(self) -> str:
        return sha256_text(canonical_json(self.model_dump(by_alias=True)))


class Settings(BaseModel):
    """Process-level settings taken from the environment (and a .env file)."""
    threads: int = Field(default=1, ge=1)
    index_db: Optional[str] = None

    @classmethod
    def from_env(cls) -> "Settings":
        load_dotenv()
        try:
            return cls(
                threads=os.environ.get("MIXLAB_THREADS", 1),
                index_db=os.environ.get("MIXLAB_INDEX_DB") or None,
            )
        except ValidationError as e:
            raise ConfigInvalid(f"Invalid environment settings: {e}")


def grid(spec: Union[List[float], Dict[str, Any]]) -> np.ndarray:
    """A list of values, or {"start", "stop", "num"} for an evenly spaced grid."""
    if isinstance(spec, dict):
        try:
            return np.linspace(float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        except KeyError as e:
            raise ConfigInvalid(f"Grid spec is missing {e}")
    return np.asarray(spec, dtype=float)


def as_complex(value: Union[float, List[float]]) -> complex:
    """A real number or a [re, im] pair."""
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ConfigInvalid(f"Complex values are [re, im] pairs, got {value}")
        return complex(float(value[0]), float(value[1]))
    return complex(value)
