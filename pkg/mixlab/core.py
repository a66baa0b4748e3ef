import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple, Type

from pydantic import BaseModel, ConfigDict, ValidationError

from .cocycle import SkewSystem
from .config import ExperimentConfig
from .errors import ConfigInvalid, UnknownExperiment

logger = logging.getLogger(__name__)

# Listing order of `mixlab list`
EXPERIMENT_ORDER = (
    "pressure",
    "gibbs",
    "correlations",
    "dolgopyat",
    "diophantine",
    "brin",
    "equidistribution",
    "lfunction",
)


class ExperimentParams(BaseModel):
    model_config = ConfigDict(extra="forbid")


@dataclass
class ExperimentContext:
    config: ExperimentConfig
    system: SkewSystem
    seed: int
    threads: int


@dataclass
class ExperimentResult:
    """Named CSV tables (lists of flat rows) and JSON documents produced by one run."""
    tables: Dict[str, List[dict]] = field(default_factory=dict)
    documents: Dict[str, Any] = field(default_factory=dict)


ExperimentFn = Callable[[ExperimentContext, ExperimentParams], ExperimentResult]


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    params_model: Type[ExperimentParams]
    fn: ExperimentFn

    def parse_params(self, parameters: Dict[str, Any]) -> ExperimentParams:
        try:
            return self.params_model.model_validate(parameters)
        except ValidationError as e:
            raise ConfigInvalid(f"Invalid parameters for experiment '{self.name}': {e}")


class ExperimentRegistry:
    def __init__(self):
        self._experiments: Dict[str, Experiment] = {}

    def register(self, name: str, description: str, params: Type[ExperimentParams] = ExperimentParams):
        def decorator(fn: ExperimentFn) -> ExperimentFn:
            if name in self._experiments:
                raise ValueError(f"Experiment '{name}' is already registered")
            self._experiments[name] = Experiment(name, description, params, fn)
            logger.debug(f"Registered experiment {name}")
            return fn
        return decorator

    def names(self) -> List[str]:
        ordered = [n for n in EXPERIMENT_ORDER if n in self._experiments]
        return ordered + sorted(n for n in self._experiments if n not in EXPERIMENT_ORDER)

    def describe(self) -> List[Tuple[str, str]]:
        return [(n, self._experiments[n].description) for n in self.names()]

    def get(self, name: str) -> Experiment:
        try:
            return self._experiments[name]
        except KeyError:
            raise UnknownExperiment(
                f"Unknown experiment '{name}', expected one of: {', '.join(self.names())}"
            )

    def run(self, config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
        """Validate everything, build the system, then compute."""
        experiment = self.get(config.experiment)
        params = experiment.parse_params(config.parameters)
        system = config.system.build()
        threads = threads or config.threads or 1
        logger.info(f"Running {experiment.name} (seed {config.seed}, {threads} threads)")
        ctx = ExperimentContext(config=config, system=system, seed=config.seed, threads=threads)
        return experiment.fn(ctx, params)


registry = ExperimentRegistry()

# Import experiments so their decorators register them
from . import experiments  # noqa: E402,F401
