"""
Config File Schemas
Validated views of the key/value config files for the estimate, simulate
and validate commands
"""
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Type, TypeVar
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from estimnet.exceptions import ConfigurationError, InputFormatError
from estimnet.io_formats import ConfigEntry, EffectItem, parse_effect_list, read_config
from estimnet.models.effect import DEFAULT_LAMBDA, Effect, EffectKind, ModelSpec
from estimnet.models.estimation import EEConfig, SimSpec

logger = logging.getLogger(__name__)

LIST_KEYS = ("structParams", "attrParams")

ConfigT = TypeVar("ConfigT", bound="ConfigFileBase")


def effect_from_item(item: EffectItem) -> Effect:
    """Effect for `Name`, `Name(lambda)` or `Name(column)`."""
    kind = EffectKind.parse(item.name)
    attribute = None
    lam = DEFAULT_LAMBDA
    if kind.attribute_kind is not None:
        attribute = item.argument
    elif item.argument is not None:
        if not kind.is_alternating:
            raise ConfigurationError(f"effect {kind.value} takes no argument, got '{item.argument}'")
        try:
            lam = float(item.argument)
        except ValueError:
            raise ConfigurationError(f"bad lambda '{item.argument}' for {kind.value}") from None
    try:
        return Effect(kind=kind, attribute=attribute, lam=lam)
    except ValidationError as e:
        raise ConfigurationError(f"bad effect '{item.name}': {e.errors()[0]['msg']}") from None


class ConfigFileBase(BaseModel):
    """Keys shared by every command. Keys are matched case-insensitively."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True, arbitrary_types_allowed=True)

    seed: int = Field(default=0, alias="seed")
    output_dir: Optional[str] = Field(default=None, alias="outputDir")
    binattr_file: Optional[str] = Field(default=None, alias="binattrFile")
    catattr_file: Optional[str] = Field(default=None, alias="catattrFile")
    contattr_file: Optional[str] = Field(default=None, alias="contattrFile")
    struct_params: List[EffectItem] = Field(default_factory=list, alias="structParams")
    attr_params: List[EffectItem] = Field(default_factory=list, alias="attrParams")

    _base_dir: Optional[Path] = None

    @classmethod
    def key_map(cls) -> Dict[str, str]:
        return {(field.alias or name).lower(): field.alias or name for name, field in cls.model_fields.items()}

    @classmethod
    def from_entries(cls: Type[ConfigT], entries: Dict[str, ConfigEntry], path: Optional[str] = None) -> ConfigT:
        keys = cls.key_map()
        data = {}
        for lowered, entry in entries.items():
            if lowered not in keys:
                raise InputFormatError(f"unknown key '{entry.key}'", path, entry.line_number)
            canonical = keys[lowered]
            if canonical in LIST_KEYS:
                data[canonical] = parse_effect_list(entry, path)
            else:
                data[canonical] = entry.value
        try:
            return cls(**data)
        except ValidationError as e:
            problems = "; ".join(f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors())
            raise ConfigurationError(f"{path or 'config'}: {problems}") from None

    @classmethod
    def load(cls: Type[ConfigT], path) -> ConfigT:
        config = cls.from_entries(read_config(path), str(path))
        config._base_dir = Path(path).resolve().parent
        return config

    def resolve(self, name: Optional[str]) -> Optional[Path]:
        """Paths in a config file are relative to the config file."""
        if name is None:
            return None
        p = Path(name)
        if p.is_absolute() or self._base_dir is None:
            return p
        return self._base_dir / p

    def items(self) -> List[EffectItem]:
        return list(self.struct_params) + list(self.attr_params)

    def model_spec(self) -> ModelSpec:
        effects = [effect_from_item(item) for item in self.items()]
        if not effects:
            raise ConfigurationError("no effects: set structParams and/or attrParams")
        try:
            return ModelSpec(effects=effects)
        except ValidationError as e:
            raise ConfigurationError(e.errors()[0]["msg"]) from None

    def effect_values(self) -> List[float]:
        """Parameter values given inline as `Name = value`."""
        missing = [item.name for item in self.items() if item.value is None]
        if missing:
            raise ConfigurationError(f"effects without a parameter value: {missing}")
        return [item.value for item in self.items()]


class AlgorithmSection(BaseModel):
    """EE settings; defaults are those used for simulated networks."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    aca_s: float = Field(default=0.1, alias="ACA_S", ge=0)
    aca_ee: float = Field(default=1e-9, alias="ACA_EE", ge=0)
    comp_c: float = Field(default=1e-2, alias="compC", gt=0)
    sampler_steps: int = Field(default=1000, alias="samplerSteps", gt=0)
    s_steps: int = Field(default=50, alias="Ssteps", ge=0)
    ee_steps: int = Field(default=500, alias="EEsteps", gt=0)
    e_inner_steps: int = Field(default=100, alias="EinnerSteps", ge=2)
    use_ifd_sampler: bool = Field(default=False, alias="useIFDsampler")
    ifd_k: float = Field(default=0.1, alias="ifd_K", gt=0)
    num_runs: int = Field(default=8, alias="numRuns", gt=0)
    snapshot_interval: int = Field(default=0, alias="snapshotInterval", ge=0)

    def ee_config(self) -> EEConfig:
        try:
            return EEConfig(
                K_A=self.aca_ee,
                c2=self.comp_c,
                K1_A=self.aca_s,
                m=self.sampler_steps,
                M1=self.s_steps,
                M_outer=self.ee_steps,
                M_inner=self.e_inner_steps,
                use_ifd=self.use_ifd_sampler,
                K_ifd=self.ifd_k,
                snapshot_every=self.snapshot_interval,
            )
        except ValidationError as e:
            raise ConfigurationError(e.errors()[0]["msg"]) from None


class SimulationSection(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    num_nodes: int = Field(alias="numNodes", gt=1)
    sample_size: int = Field(default=1, alias="sampleSize", gt=0)
    interval: int = Field(default=100_000, alias="interval", gt=0)
    burnin: Optional[int] = Field(default=None, alias="burnin", gt=0)
    density_target: float = Field(default=0.005, alias="densityTarget", gt=0, le=1)
    num_binary_true: Optional[int] = Field(default=None, alias="numBinaryTrue", ge=0)
    num_categories: int = Field(default=3, alias="numCategories", gt=0)
    sim_net_file_prefix: str = Field(default="sim", alias="simNetFilePrefix")
    stats_file: Optional[str] = Field(default=None, alias="statsFile")

    def sim_spec(self, model: ModelSpec, theta: List[float], seed: int) -> SimSpec:
        try:
            return SimSpec(
                n=self.num_nodes,
                model=model,
                theta=theta,
                burnin=self.burnin,
                interval=self.interval,
                n_samples=self.sample_size,
                seed=seed,
                density_target=self.density_target,
                n_binary_true=self.num_binary_true,
                n_categories=self.num_categories,
            )
        except ValidationError as e:
            raise ConfigurationError(e.errors()[0]["msg"]) from None


class EstimationConfigFile(ConfigFileBase, AlgorithmSection):
    """Config for `estimate`."""

    arclist_file: str = Field(alias="arclistFile")
    max_degree: Optional[int] = Field(default=None, alias="maxDegree", gt=0)


class SimulationConfigFile(ConfigFileBase, SimulationSection):
    """Config for `simulate`; parameter values are given inline."""

    def spec(self) -> SimSpec:
        return self.sim_spec(self.model_spec(), self.effect_values(), self.seed)


class StudyConfigFile(ConfigFileBase, SimulationSection, AlgorithmSection):
    """Config for `validate`: simulation settings plus estimation settings."""

    num_networks: int = Field(default=20, alias="numNetworks", gt=0)
    zero_effect: Optional[str] = Field(default=None, alias="zeroEffect")

    def true_theta(self) -> Tuple[ModelSpec, List[float]]:
        return self.model_spec(), self.effect_values()

    def zero_effect_label(self, model: ModelSpec) -> Optional[str]:
        """zeroEffect names an effect as written in the list, e.g. `Reciprocity`."""
        if self.zero_effect is None:
            return None
        item = EffectItem(*_split_effect_name(self.zero_effect))
        label = effect_from_item(item).label
        if label not in model.labels:
            raise ConfigurationError(f"zeroEffect '{self.zero_effect}' is not in the model {model.labels}")
        return label


def _split_effect_name(text: str) -> Tuple[str, Optional[str]]:
    text = text.strip()
    if text.endswith(")") and "(" in text:
        name, argument = text[:-1].split("(", 1)
        return name.strip(), argument.strip() or None
    return text, None
