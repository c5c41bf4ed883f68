"""Run configuration and deterministic reports for the CLI."""

import dataclasses
import hashlib
import json
import time
from dataclasses import dataclass, field

from .errors import ValidationFailure
from .eigensolve import EigConfig
from .scmap import SCConfig
from .varform import VarConfig
from .zetadet import ZetaConfig


@dataclass(frozen=True)
class RunConfig:
    sc: SCConfig = field(default_factory=SCConfig)
    eig: EigConfig = field(default_factory=EigConfig)
    zeta: ZetaConfig = field(default_factory=ZetaConfig)
    var: VarConfig = field(default_factory=VarConfig)
    lambda_max: float = None      # None: 10 * Weyl lambda_1 estimate * margin
    lambda_max_factor: float = 28.0   # auto lambda_max = factor / tau0-scale
    fd_step: float = 5e-3
    cache_dir: str = None
    out_format: str = "json"
    threads: int = 1
    seed: int = 1234

    def __post_init__(self):
        for name, cfg in (("sc", self.sc), ("eig", self.eig),
                          ("zeta", self.zeta), ("var", self.var)):
            for f in dataclasses.fields(cfg):
                v = getattr(cfg, f.name)
                if isinstance(v, float) and f.name.endswith(("tol", "frac")) and v <= 0:
                    raise ValidationFailure(f"{name}.{f.name} must be positive")
        if self.out_format not in ("json", "csv"):
            raise ValidationFailure(f"unknown output format {self.out_format!r}")

    def to_dict(self):
        return {
            "sc": dataclasses.asdict(self.sc),
            "eig": dataclasses.asdict(self.eig),
            "zeta": dataclasses.asdict(self.zeta),
            "var": dataclasses.asdict(self.var),
            "lambda_max": self.lambda_max,
            "lambda_max_factor": self.lambda_max_factor,
            "fd_step": self.fd_step,
            "out_format": self.out_format,
            "threads": self.threads,
            "seed": self.seed,
        }

    def hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def pipeline_zeta(self, p):
        """Coordinated (lambda_max, ZetaConfig) for the determinant pipeline.

        tau0 is set so the short-time replacement error exp(-beta2/tau0) is
        negligible (beta2 ~ squared narrowest width), and lambda_max so that
        lambda_max * tau0 covers the tail-model decay budget.
        """
        import math

        # r_in >= A/P for convex domains, so 2A/P bounds the narrowest width
        width = 2 * p.area / p.perimeter
        tau0 = self.zeta.tau0 if self.zeta.tau0 is not None else width**2 / 14.0
        lam_max = self.lambda_max if self.lambda_max is not None \
            else self.lambda_max_factor / tau0
        lam1_est = 5.76 * math.pi / p.area
        if lam_max < 10 * lam1_est:
            raise ValidationFailure(
                f"lambda_max {lam_max:.1f} below 10x the first-eigenvalue "
                f"estimate {lam1_est:.1f}")
        zcfg = ZetaConfig(tau0=tau0, tail_tol=self.zeta.tail_tol,
                          require_weyl=self.zeta.require_weyl)
        return lam_max, zcfg


def config_from_file(path):
    """RunConfig from a JSON file of (nested) overrides."""
    with open(path) as fh:
        raw = json.load(fh)
    kwargs = {}
    for section, cls in (("sc", SCConfig), ("eig", EigConfig),
                         ("zeta", ZetaConfig), ("var", VarConfig)):
        if section in raw:
            kwargs[section] = cls(**raw.pop(section))
    kwargs.update(raw)
    return RunConfig(**kwargs)


@dataclass
class Report:
    command: list
    config_hash: str
    payload: dict
    diagnostics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({
            "command": self.command,
            "config_hash": self.config_hash,
            "payload": self.payload,
            "diagnostics": self.diagnostics,
            "timings": self.timings,
        }, indent=2, sort_keys=True, default=_json_default)

    def to_csv(self):
        """Flat key,value dump of the payload (., decimal; \\n endings)."""
        lines = ["key,value"]
        for k, v in sorted(_flatten(self.payload).items()):
            lines.append(f"{k},{v}")
        return "\n".join(lines) + "\n"


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = ";".join(str(x) for x in v)
        else:
            out[key] = v
    return out


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "tolist"):
        return o.tolist()
    return str(o)


class Timer:
    def __init__(self):
        self.marks = {}
        self._t0 = time.perf_counter()

    def mark(self, name):
        self.marks[name] = round(time.perf_counter() - self._t0, 6)
        self._t0 = time.perf_counter()
