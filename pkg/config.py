"""
Pipeline configuration.

Defaults are the published parameter values; a plain-text key=value file and
command-line flags override them in that order.
"""

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from census import DEFAULT_OFFSETS, CensusPattern
from sgm import SgmParams, default_directions

FINAL_METRICS = ("l2", "census")
SUBPIXEL_COSTS = ("matching", "aggregated")
TRUE_WORDS = ("1", "true", "yes", "on")
FALSE_WORDS = ("0", "false", "no", "off")


class ConfigError(ValueError):
    """Raised for invalid pipeline parameters."""


@dataclass(frozen=True)
class PipelineConfig:
    n_hypotheses: int = 64
    p1_init: float = 21.0
    p2_init: float = 45.0
    p1_final: float = 17.0
    p2_final: float = 35.0
    num_directions: int = 16
    census_pattern: tuple = DEFAULT_OFFSETS
    phi: float = 3.0
    lam: int = 2
    median_window: int = 3
    fill_window: int = 3
    fill_passes: int = 2
    fill_min_support: int = 3
    sobel_threshold: float = 96.0
    final_metric: str = "l2"
    # cost slices the sub-pixel parabola is fitted to
    subpixel_costs: str = "matching"
    bounding: bool = True
    workers: int = 1

    def validate(self):
        """Check every invariant; returns self so calls can be chained."""
        checks = [
            (self.n_hypotheses >= 2, f"n_hypotheses must be >= 2, got {self.n_hypotheses}"),
            (0 <= self.p1_init <= self.p2_init, "initial penalties must satisfy 0 <= P1 <= P2"),
            (0 <= self.p1_final <= self.p2_final, "final penalties must satisfy 0 <= P1 <= P2"),
            (self.num_directions in (4, 8, 16), "num_directions must be 4, 8 or 16"),
            (self.phi > 0, f"phi must be positive, got {self.phi}"),
            (self.lam >= 0, f"lam must be nonnegative, got {self.lam}"),
            (self.median_window % 2 == 1 and self.median_window > 0, "median_window must be odd"),
            (self.fill_window % 2 == 1 and self.fill_window > 0, "fill_window must be odd"),
            (self.fill_passes in (1, 2), "fill_passes must be 1 or 2"),
            (self.fill_min_support >= 1, "fill_min_support must be >= 1"),
            (self.sobel_threshold >= 0, "sobel_threshold must be nonnegative"),
            (self.final_metric in FINAL_METRICS, f"final_metric must be one of {FINAL_METRICS}"),
            (self.subpixel_costs in SUBPIXEL_COSTS, f"subpixel_costs must be one of {SUBPIXEL_COSTS}"),
            (self.workers >= 1, f"workers must be >= 1, got {self.workers}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        try:
            CensusPattern(self.census_pattern)
        except ValueError as e:
            raise ConfigError(f"census_pattern: {e}") from e
        return self

    @classmethod
    def field_names(cls):
        """Names of every setting, in declaration order."""
        return [f.name for f in dataclasses.fields(cls)]

    @classmethod
    def parse_value(cls, name, text):
        """Convert a textual setting to the field's type."""
        if name not in cls.field_names():
            raise ConfigError(f"unknown setting: {name}")
        default = getattr(cls, name)
        text = str(text).strip()
        try:
            if name == "census_pattern":
                return CensusPattern.parse(text).offsets
            if isinstance(default, bool):
                if text.lower() in TRUE_WORDS:
                    return True
                if text.lower() in FALSE_WORDS:
                    return False
                raise ValueError(f"not a boolean: {text!r}")
            if isinstance(default, int):
                return int(text)
            if isinstance(default, float):
                return float(text)
            return text
        except ValueError as e:
            raise ConfigError(f"bad value for {name}: {e}") from e

    @classmethod
    def from_file(cls, path):
        """Read key=value lines; '#' starts a comment, [section] headers are ignored."""
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        values = {}
        for number, line in enumerate(lines, 1):
            line = line.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected key=value")
            key, text = line.split("=", 1)
            key = key.strip().replace("-", "_")
            values[key] = cls.parse_value(key, text)
        return cls(**values).validate()

    def merged(self, **overrides):
        """Copy with every non-None override applied."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        unknown = set(changes) - set(self.field_names())
        if unknown:
            raise ConfigError(f"unknown settings: {sorted(unknown)}")
        return dataclasses.replace(self, **changes).validate()

    def pattern(self):
        """The census sampling pattern."""
        return CensusPattern(self.census_pattern)

    def init_params(self):
        """SGM penalties and directions for the cross-view maps."""
        return SgmParams(self.p1_init, self.p2_init, default_directions(self.num_directions))

    def final_params(self):
        """SGM penalties and directions for the all-views volume."""
        return SgmParams(self.p1_final, self.p2_final, default_directions(self.num_directions))

    def to_dict(self):
        """Plain values for reports, with the census pattern as text."""
        data = dataclasses.asdict(self)
        data["census_pattern"] = self.pattern().format()
        return data
