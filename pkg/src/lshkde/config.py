"""Run configuration: the constants bundle plus kernel and accuracy knobs.

Round-trips losslessly through a flat key=value text file (floats written
with ``repr``), so a config can be committed next to the data it produced.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .errors import ParameterError

_AUTO = "auto"


@dataclass
class RunConfig:
    kernel: str = "gaussian"
    bandwidth: float = 1.0
    epsilon: float = 0.25
    f_kde: float = 0.1  # may be replaced by an auto probe at build time
    seed: int = 0
    group_scale: float = 4.0
    table_scale: float = 3.0
    level_slack: float = 1.0
    bucket_width_factor: float = 1.5
    median_blocks: int = 1
    max_levels: int = 64
    max_tables: int = 4096
    boost_scale: float = 1.0

    def validate(self):
        if self.kernel not in ("gaussian", "exponential"):
            raise ParameterError(f"unknown kernel {self.kernel!r}")
        if not (self.bandwidth > 0):
            raise ParameterError("bandwidth must be positive")
        if not (0.0 < self.epsilon < 1.0):
            raise ParameterError("epsilon must lie in (0, 1)")
        if not (0.0 < self.f_kde < 1.0):
            raise ParameterError("f_kde must lie in (0, 1)")
        if not (0.0 < self.level_slack <= 1.0):
            raise ParameterError("level_slack must lie in (0, 1]")
        for name in ("group_scale", "table_scale", "bucket_width_factor", "boost_scale"):
            if not (getattr(self, name) > 0):
                raise ParameterError(f"{name} must be positive")
        for name in ("median_blocks", "max_levels", "max_tables"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be at least 1")
        return self

    def estimator_params(self) -> dict:
        params = asdict(self)
        params.pop("boost_scale")
        return params

    def to_file(self, path):
        with open(path, "w") as fh:
            for f in fields(self):
                value = getattr(self, f.name)
                fh.write(f"{f.name}={value!r}\n" if isinstance(value, float)
                         else f"{f.name}={value}\n")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        values = {}
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ParameterError(f"{path}:{lineno}: expected key=value")
                key, _, text = line.partition("=")
                values[key.strip()] = text.strip()
        return cls.from_mapping(values)

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        kwargs = {}
        by_name = {f.name: f for f in fields(cls)}
        for key, text in values.items():
            if key not in by_name:
                raise ParameterError(f"unknown config key {key!r}")
            ftype = by_name[key].type
            if ftype == "int" or by_name[key].name in ("seed", "median_blocks",
                                                       "max_levels", "max_tables"):
                kwargs[key] = int(text)
            elif by_name[key].name == "kernel":
                kwargs[key] = text
            else:
                kwargs[key] = float(text)
        return cls(**kwargs).validate()
