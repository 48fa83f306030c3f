"""Run configuration files.

A run configuration is a JSON document describing one simulation plan plus
output options. The schema is strict: unknown keys are rejected. See docs/config-schema.md.
"""

import json
import logging
import math
from typing import List, Literal, Optional, Tuple

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_serializer,
    field_validator,
    model_validator,
)

from config.settings import settings
from src.contagion_engine import CounterpartyParams, IntensityParams
from src.copulas import CopulaSpec
from src.errors import ConfigurationError
from src.mc_driver import SimulationPlan, Target
from src.pricing import ContractTerms, TrancheSpec

logger = logging.getLogger(__name__)


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class CopulaConfig(_Strict):
    kind: Literal['product', 'exponential', 'gaussian'] = 'product'
    c0: Optional[float] = Field(None, gt=0)
    c1: Optional[float] = Field(None, gt=0)
    rho: Optional[float] = Field(None, ge=-1, le=1)

    @model_validator(mode='after')
    def _parameters_match_kind(self):
        if self.kind == 'exponential' and (self.c0 is None or self.c1 is None):
            raise ValueError("exponential copula needs c0 and c1")
        if self.kind == 'gaussian' and self.rho is None:
            raise ValueError("gaussian copula needs rho")
        return self

    def build(self) -> CopulaSpec:
        if self.kind == 'exponential':
            return CopulaSpec.exponential(self.c0, self.c1)
        if self.kind == 'gaussian':
            return CopulaSpec.gaussian(self.rho)
        return CopulaSpec.product()


class IntensityConfig(_Strict):
    a: float = Field(settings.BASE_HAZARD, gt=0)
    c: float = Field(0.0, ge=0)
    d: float = Field(settings.DECAY, ge=0)

    @field_validator('d', mode='before')
    @classmethod
    def _parse_infinity(cls, value):
        if isinstance(value, str) and value.strip().lower() in ('inf', 'infinity'):
            return math.inf
        return value

    @field_serializer('d')
    def _dump_infinity(self, value: float):
        return 'inf' if math.isinf(value) else value

    def build(self) -> IntensityParams:
        return IntensityParams(a=self.a, c=self.c, d=self.d)


class CounterpartyConfig(_Strict):
    a_B: float = Field(..., gt=0)
    c_B: float = Field(0.0, ge=0)
    independent: bool = False

    def build(self) -> CounterpartyParams:
        return CounterpartyParams(a_B=self.a_B, c_B=self.c_B, independent=self.independent)


class TermsConfig(_Strict):
    maturity: float = Field(settings.MATURITY, gt=0)
    payments: int = Field(settings.PAYMENTS, ge=1)
    recovery: float = Field(settings.RECOVERY, ge=0, le=1)
    rate: float = Field(settings.RATE, ge=0)

    def build(self) -> ContractTerms:
        return ContractTerms.equally_spaced(self.maturity, self.payments, self.recovery, self.rate)


class TranchesConfig(_Strict):
    attachments: List[float] = Field(default_factory=lambda: list(settings.ATTACHMENTS))

    def build(self) -> TrancheSpec:
        return TrancheSpec(tuple(self.attachments))


class OutputConfig(_Strict):
    csv: Optional[str] = None
    precision: int = Field(settings.PRECISION, ge=0, le=12)
    table: Optional[Literal[1, 2, 3, 4]] = None
    loss_given_default_scaling: bool = False


class RunConfig(_Strict):
    n_names: int = Field(settings.N_NAMES, ge=1)
    paths: int = Field(settings.DEFAULT_PATHS, ge=1)
    seed: int = Field(settings.DEFAULT_SEED, ge=0)
    workers: int = Field(settings.WORKERS, ge=1)
    blocks: int = Field(settings.BLOCK_COUNT, ge=1)
    copula: CopulaConfig = Field(default_factory=CopulaConfig)
    intensity: IntensityConfig = Field(default_factory=IntensityConfig)
    counterparty: Optional[CounterpartyConfig] = None
    terms: TermsConfig = Field(default_factory=TermsConfig)
    tranches: Optional[TranchesConfig] = None
    targets: List[str] = Field(default_factory=lambda: ['cds_k1'])
    output: OutputConfig = Field(default_factory=OutputConfig)

    @field_validator('targets')
    @classmethod
    def _targets_parse(cls, value: List[str]):
        for label in value:
            Target.parse(label)
        return value

    def dump(self) -> str:
        """Serialise back to config text"""
        return self.model_dump_json(indent=2)

    def to_plan(self, **overrides) -> SimulationPlan:
        """Build the simulation plan; keyword overrides win over file values"""
        values = {
            'n_names': self.n_names,
            'paths': self.paths,
            'seed': self.seed,
            'workers': self.workers,
            'blocks': self.blocks,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return SimulationPlan(
            copula=self.copula.build(),
            intensity=self.intensity.build(),
            counterparty=self.counterparty.build() if self.counterparty else None,
            terms=self.terms.build(),
            tranches=self.tranches.build() if self.tranches else None,
            targets=tuple(Target.parse(label) for label in self.targets),
            chunk_paths=settings.CHUNK_PATHS,
            loss_given_default_scaling=self.output.loss_given_default_scaling,
            **values,
        )


def _field_path(location: Tuple) -> str:
    return '.'.join(str(part) for part in location)


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text.

    Raises:
        ConfigurationError: with ``line`` set for syntax errors and ``field``
            set to the dotted path for schema violations
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON: {e.msg}", line=e.lineno) from e

    if not isinstance(data, dict):
        raise ConfigurationError("config must be a JSON object", line=1)

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = _field_path(first['loc']) or '<root>'
        raise ConfigurationError(first['msg'], field=location) from e

    logger.debug(f"Parsed config with targets {config.targets}")
    return config
