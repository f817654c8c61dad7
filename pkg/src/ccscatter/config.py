"""Plain-text run configuration (INI sections, key = value)."""
from __future__ import annotations

import configparser
import io
import os
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigError
from .geometry import AlphaProfile, SpectralPoint, branch_sqrt

__all__ = ["RunConfig", "parse_profile", "format_profile", "parse_ladder", "output_root"]

OUTPUT_ENV = "CCSCATTER_OUT"


def output_root(default: str = "ccscatter_out") -> str:
    return os.environ.get(OUTPUT_ENV, default)


def parse_profile(text: str) -> list[tuple[int, float]]:
    """'0:1.0, 1:0.3' -> [(0, 1.0), (1, 0.3)]; m < 0 means a sine term."""
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            m, c = item.split(":")
            out.append((int(m), float(c)))
        except ValueError as err:
            raise ConfigError(f"bad profile term {item!r} (want m:coeff)") from err
    if not out:
        raise ConfigError("empty profile")
    return out


def format_profile(terms) -> str:
    return ", ".join(f"{m}:{float(c)!r}" for m, c in terms)


def parse_ladder(text) -> list[float]:
    """'1e-1:4' -> four values halving from 0.1; otherwise a comma list."""
    if isinstance(text, (list, tuple)):
        vals = [float(v) for v in text]
    else:
        text = str(text).strip()
        if not text:
            return []
        if ":" in text:
            start, count = text.split(":")
            vals = list(float(start) * 0.5 ** np.arange(int(count)))
        else:
            vals = [float(v) for v in text.split(",") if v.strip()]
    if any(b >= a for a, b in zip(vals, vals[1:])) or any(v < 0 for v in vals):
        raise ConfigError("eps ladder must be strictly decreasing and >= 0")
    return [float(v) for v in vals]


def _fmt_complex(z) -> str:
    z = complex(z)
    return repr(z).strip("()")


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "run"
    output: str = ""
    profile: tuple = ((0, 1.0),)
    circumference: float = 2 * np.pi
    n: int = 1
    zeta: complex | None = 0.75
    lam: float | None = None
    branch: int = 1
    alpha0: float | None = None
    x_min: float = 1e-6
    x_max: float = 12.0
    n_t: int = 2048
    n_y: int = 128
    mode: float | None = None
    eps_ladder: tuple = ()
    bc: str = "robin"
    delta: float = 0.1
    eps_w: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "profile", tuple((int(m), float(c)) for m, c in self.profile))
        object.__setattr__(self, "eps_ladder", tuple(parse_ladder(list(self.eps_ladder))))
        if self.zeta is not None:
            object.__setattr__(self, "zeta", complex(self.zeta))
        if self.zeta is None and self.lam is None:
            raise ConfigError("give zeta or lam")
        if self.zeta is not None and self.lam is not None:
            raise ConfigError("give only one of zeta and lam")
        if self.branch not in (1, -1):
            raise ConfigError("branch must be +1 or -1")
        if self.bc not in ("robin", "dirichlet"):
            raise ConfigError(f"unknown bc {self.bc!r}")
        self.alpha_profile()  # validates positivity

    # -- derived objects
    def alpha_profile(self) -> AlphaProfile:
        return AlphaProfile(list(self.profile), circumference=self.circumference)

    def spectral_point(self) -> SpectralPoint:
        prof = self.alpha_profile()
        a0 = self.alpha0 if self.alpha0 is not None else prof.alpha_min
        if self.zeta is not None:
            return SpectralPoint(self.zeta, self.n, a0)
        # lambda = a0^2 zeta (n - zeta): zeta = n/2 + sqrt(n^2/4 - lambda/a0^2)
        z = self.n / 2 + complex(branch_sqrt(self.n**2 / 4 - self.lam / a0**2, self.branch))
        return SpectralPoint(z, self.n, a0)

    def grid(self):
        from .solver import Grid
        if self.mode is not None:
            return Grid(self.x_min, self.x_max, self.n_t, 1, self.circumference, self.mode)
        return Grid(self.x_min, self.x_max, self.n_t, self.n_y, self.circumference)

    def metric(self):
        from .solver import ModelMetric
        return ModelMetric(self.alpha_profile(), 1.0, self.n)

    # -- text form
    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser()
        cp["run"] = {"experiment": self.experiment, "output": self.output}
        cp["profile"] = {"coefficients": format_profile(self.profile),
                         "circumference": repr(self.circumference)}
        sp = {"n": str(self.n), "branch": str(self.branch)}
        if self.zeta is not None:
            sp["zeta"] = _fmt_complex(self.zeta)
        if self.lam is not None:
            sp["lambda"] = repr(float(self.lam))
        if self.alpha0 is not None:
            sp["alpha0"] = repr(float(self.alpha0))
        cp["spectral"] = sp
        gr = {"x_min": repr(self.x_min), "x_max": repr(self.x_max), "n_t": str(self.n_t),
              "n_y": str(self.n_y)}
        if self.mode is not None:
            gr["mode"] = repr(float(self.mode))
        cp["grid"] = gr
        cp["solver"] = {"eps_ladder": ", ".join(repr(e) for e in self.eps_ladder), "bc": self.bc,
                        "delta": repr(self.delta), "eps_w": repr(self.eps_w)}
        return cp

    def serialize(self) -> str:
        buf = io.StringIO()
        self.to_parser().write(buf)
        return buf.getvalue()

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as err:
            raise ConfigError(f"unreadable config: {err}") from err
        known = {"run", "profile", "spectral", "grid", "solver"}
        extra = set(cp.sections()) - known
        if extra:
            raise ConfigError(f"unknown sections {sorted(extra)}")
        kw = {}
        try:
            if cp.has_section("run"):
                r = cp["run"]
                kw.update(experiment=r.get("experiment", "run"), output=r.get("output", ""))
            if cp.has_section("profile"):
                p = cp["profile"]
                if "coefficients" in p:
                    kw["profile"] = tuple(parse_profile(p["coefficients"]))
                if "circumference" in p:
                    kw["circumference"] = float(p["circumference"])
            if cp.has_section("spectral"):
                s = cp["spectral"]
                kw["n"] = s.getint("n", 1)
                kw["branch"] = s.getint("branch", 1)
                kw["zeta"] = complex(s["zeta"].replace(" ", "")) if "zeta" in s else None
                kw["lam"] = float(s["lambda"]) if "lambda" in s else None
                if "alpha0" in s:
                    kw["alpha0"] = float(s["alpha0"])
            if cp.has_section("grid"):
                g = cp["grid"]
                for key, typ in (("x_min", float), ("x_max", float), ("n_t", int), ("n_y", int),
                                 ("mode", float)):
                    if key in g:
                        kw[key] = typ(g[key])
            if cp.has_section("solver"):
                s = cp["solver"]
                if "eps_ladder" in s:
                    kw["eps_ladder"] = tuple(parse_ladder(s["eps_ladder"]))
                for key in ("delta", "eps_w"):
                    if key in s:
                        kw[key] = float(s[key])
                if "bc" in s:
                    kw["bc"] = s["bc"]
        except (KeyError, ValueError) as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(f"bad config value: {err}") from err
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.parse(fh.read())

    def updated(self, **changes) -> "RunConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        if "zeta" in changes:
            changes.setdefault("lam", None)
        if "lam" in changes and changes["lam"] is not None:
            changes["zeta"] = None
        return replace(self, **changes)

    def header(self) -> str:
        """One-line defaults summary for output headers."""
        return "; ".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))
