import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from .errors import ConfigError, ModelError
from .log import get_logger
from .model import make_arch1, make_custom, make_normal_walk, make_two_state_demo

logger = get_logger(__name__)

SEED_ENV = "PERPSIM_SEED"
SEPARATOR = "---"


class Scenario(BaseModel):
    """
    One simulation request: model keys, estimator, delta and the replication budget.

    Exactly one of ``reps`` / ``budget_ms`` is set. For ``model=arch1`` the delta is the ARCH
    level unless ``raw_level`` is true.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str | None = None
    model: Literal["arch1", "two_state", "normal", "custom"] = "arch1"
    alpha0: float = 1.0
    alpha1: float = 0.75
    mu0: float = 1.0
    sigma: float = 1.0
    kernel: str | None = None
    increments: str | None = None
    rewards: str | None = None
    initial_state: int = 0
    estimator: Literal["crude", "naive", "si", "sd"] = "si"
    delta: float | None = None
    deltas: list[float] | None = None
    reps: int | None = None
    budget_ms: int | None = None
    seed: int = 0
    a: float = 0.9
    n_star: int | None = None
    step_cap: int | None = None
    raw_level: bool = False
    force_sd: bool = False
    debug: bool = False

    @field_validator("delta")
    @classmethod
    def _delta_range(cls, v):
        if v is not None and not 0 < v < 1:
            raise ValueError("delta must be in (0,1)")
        return v

    @field_validator("deltas", mode="before")
    @classmethod
    def _split_deltas(cls, v):
        if isinstance(v, str):
            v = [part.strip() for part in v.split(",") if part.strip()]
        return v

    @field_validator("deltas")
    @classmethod
    def _deltas_range(cls, v):
        if v is not None and not all(0 < d < 1 for d in v):
            raise ValueError("every delta must be in (0,1)")
        return v

    @field_validator("reps", "budget_ms")
    @classmethod
    def _positive(cls, v, info):
        if v is not None and v < 1:
            raise ValueError(f"{info.field_name} must be >= 1")
        return v

    @field_validator("seed")
    @classmethod
    def _seed_range(cls, v):
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @field_validator("a")
    @classmethod
    def _a_range(cls, v):
        if not 0 < v < 1:
            raise ValueError("a must be in (0,1)")
        return v

    @model_validator(mode="after")
    def _check(self):
        if (self.reps is None) == (self.budget_ms is None):
            raise ValueError("exactly one of reps/budget_ms must be set")
        if self.model == "custom" and not (self.kernel and self.increments and self.rewards):
            raise ValueError("model=custom needs kernel, increments and rewards")
        if (self.delta is None) == (self.deltas is None):
            raise ValueError("exactly one of delta/deltas must be set")
        return self

    @property
    def label(self):
        return self.name or f"{self.model}-{self.estimator}-{self.delta!r}"

    def build_model(self):
        try:
            if self.model == "arch1":
                return make_arch1(self.alpha0, self.alpha1)
            if self.model == "two_state":
                return make_two_state_demo()
            if self.model == "normal":
                return make_normal_walk(self.mu0, self.sigma)
            kernel = [[float(v) for v in row.split(",")] for row in self.kernel.split(";")]
            return make_custom(
                kernel,
                self.increments.split(";"),
                self.rewards.split(";"),
                initial_state=self.initial_state,
            )
        except (ModelError, ValueError) as e:
            raise ConfigError(f"scenario {self.label}: {e}") from e

    def perpetuity_delta(self, delta=None):
        """Map the requested level to the perpetuity delta (ARCH level 1/delta -> perpetuity level alpha1/delta)."""
        delta = self.delta if delta is None else delta
        if delta is None:
            raise ConfigError(f"scenario {self.label}: delta is required")
        if self.model != "arch1" or self.raw_level:
            return delta

        mapped = delta / self.alpha1
        if not mapped < 1:
            raise ConfigError(
                f"scenario {self.label}: ARCH delta={delta} maps to perpetuity delta {mapped} >= 1; lower delta or set raw_level=true"
            )
        return mapped

    def to_text(self):
        values = self.model_dump(exclude_none=True, exclude_defaults=True)
        values = {"model": self.model, "estimator": self.estimator, **values}
        lines = []
        for key, value in values.items():
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, list):
                value = ",".join(repr(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines)


class PerpConfigParser:
    """
    Parser for flat ``key=value`` scenario files.

    ``#`` starts a comment, a line ``---`` separates scenarios.

    Attributes
    ----------
    verbose : bool
        Log what was parsed
    env_seed : bool
        Let the PERPSIM_SEED environment variable override every scenario seed
    """

    def __init__(self, options=None):
        """
        Parameters
        ----------
        options : dict
            Example:
                {
                    'verbose': False,
                    'env_seed': True,
                }
        """
        self.verbose = False
        self.env_seed = False

        self.__scenarios: list[Scenario] = []

        if options:
            self.set(options)

    def set(self, options):
        for key, value in options.items():
            setattr(self, key, value)
        return self

    def parse(self, text):
        self.__scenarios = []
        seed_override = self.__seed_override()

        for index, (first_line, values, lines) in enumerate(self.__iter_blocks(text)):
            if seed_override is not None:
                values["seed"] = seed_override
            try:
                scenario = Scenario(**values)
            except ValidationError as e:
                raise ConfigError(self.__describe(e, index, first_line, lines)) from None
            self.__scenarios.append(scenario)

        if self.verbose:
            logger.info("Parsed %d scenario(s)", len(self.__scenarios))
        return self

    def parse_file(self, path):
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        return self.parse(text)

    def get(self, index=None):
        if index is None:
            return list(self.__scenarios)
        return self.__scenarios[index]

    def count(self):
        return len(self.__scenarios)

    def __iter_blocks(self, text):
        values, lines, first_line = {}, {}, None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line == SEPARATOR:
                if values:
                    yield first_line, values, lines
                values, lines, first_line = {}, {}, None
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")

            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError(f"line {lineno}: empty key")
            if key not in Scenario.model_fields:
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate key '{key}'")

            values[key] = value
            lines[key] = lineno
            first_line = first_line or lineno

        if values:
            yield first_line, values, lines

    def __seed_override(self):
        if not self.env_seed or SEED_ENV not in os.environ:
            return None
        raw = os.environ[SEED_ENV]
        try:
            seed = int(raw, 0)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={raw!r} is not an integer") from None
        if self.verbose:
            logger.info("%s overrides the config seed with %d", SEED_ENV, seed)
        return seed

    @staticmethod
    def __describe(error, index, first_line, lines):
        messages = []
        for err in error.errors():
            key = ".".join(str(part) for part in err["loc"])
            msg = err["msg"].removeprefix("Value error, ")
            where = f"line {lines[key]}: " if key in lines else ""
            messages.append(f"{where}{key}: {msg}" if key else msg)
        return f"scenario {index + 1} (line {first_line}): " + "; ".join(messages)


def parse_config(text):
    return PerpConfigParser().parse(text).get()


def load_config(path, verbose=False):
    """Parse a scenario file; PERPSIM_SEED, when set, replaces every seed."""
    return PerpConfigParser({"env_seed": True, "verbose": verbose}).parse_file(path).get()
