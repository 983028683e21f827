"""Experiment configuration: INI file + command-line overrides.

Example::

    [grid]
    dim = 2
    nx = 200
    ny = 200
    g = gaussian50          ; zero | gaussian50 | numpy expression in x, y

    [training]
    sqrt_D = 0.08:0.02:0.4
    V = 0:0.25:5
    n_max = 20
    seed_index = 0

    [test]
    sqrt_D = 0.085:0.01:0.395
    V = 0.4:0.5:4.4

    [solver]
    truth_tol = 1e-11
    online_tol = 1e-8
    max_iter = 500

    [output]
    dir = out
"""

import configparser
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .discretization import ParameterPoint

__all__ = ["ConfigError", "ExperimentConfig", "parse_range", "load_config", "make_g_function"]


class ConfigError(ValueError):
    pass


def parse_range(text):
    """``"a:h:b"`` -> ``a, a+h, ..., <= b`` with ``b`` included despite round-off.

    A single number gives a one-point grid.  Values are rounded to 12 decimals
    so that e.g. ``0.08:0.02:0.4`` yields exactly ``0.14`` and ``0.4``.
    """
    parts = [p.strip() for p in str(text).split(":")]
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad range {text!r}; expected start:step:stop") from None
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3:
        raise ConfigError(f"bad range {text!r}; expected start:step:stop")
    a, h, b = nums
    if not h > 0:
        raise ConfigError(f"range {text!r}: step must be positive")
    if b < a:
        raise ConfigError(f"range {text!r}: stop must be >= start")
    count = int(math.floor((b - a) / h + 1e-9)) + 1
    return np.round(a + h * np.arange(count), 12)


def make_g_function(spec):
    """Fixed-charge preset or expression -> ``g(x, y)`` (``None`` for zero)."""
    spec = (spec or "zero").strip()
    if spec == "zero":
        return None
    if spec == "gaussian50":
        return lambda x, y: np.exp(-50.0 * (x**2 + y**2))
    names = {k: getattr(np, k) for k in ("exp", "sin", "cos", "sinh", "cosh", "tanh", "sqrt", "abs", "pi")}
    try:
        code = compile(spec, "<g>", "eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad g expression {spec!r}: {exc}") from None
    for name in code.co_names:
        if name not in names and name not in ("x", "y"):
            raise ConfigError(f"g expression uses unknown name {name!r}")

    def g(x, y):
        return eval(code, {"__builtins__": {}}, {**names, "x": x, "y": y})

    return g


@dataclass
class ExperimentConfig:
    dim: int = 1
    nx: int = 2000
    ny: int = None
    g: str = "zero"
    train_sqrt_D: str = "0.08:0.02:0.4"
    train_V: str = "0:0.25:5"
    test_sqrt_D: str = "0.085:0.01:0.395"
    test_V: str = "0.4:0.5:4.4"
    n_max: int = 12
    seed_index: int = None
    truth_tol: float = 1e-11
    online_tol: float = 1e-8
    max_iter: int = 500
    out: str = "out"
    threads: int = 1
    extra: dict = field(default_factory=dict, repr=False)

    def validate(self):
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}")
        if self.nx < 2:
            raise ConfigError("nx must be >= 2")
        if self.dim == 2 and (self.ny is None or self.ny < 2):
            raise ConfigError("2D runs need ny >= 2")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if not (self.truth_tol > 0 and self.online_tol > 0):
            raise ConfigError("tolerances must be positive")
        for text in (self.train_sqrt_D, self.train_V, self.test_sqrt_D, self.test_V):
            parse_range(text)
        make_g_function(self.g)
        return self

    @staticmethod
    def _grid(sqrt_d, v):
        try:
            return [ParameterPoint.from_sqrt(s, x) for s in parse_range(sqrt_d) for x in parse_range(v)]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def training_set(self):
        """Parameters with ``V`` varying fastest, ``sqrt(D)`` slowest."""
        return self._grid(self.train_sqrt_D, self.train_V)

    def test_set(self):
        return self._grid(self.test_sqrt_D, self.test_V)

    def build_problem(self):
        from .discretization import build_problem

        return build_problem(self.dim, self.nx, self.ny if self.dim == 2 else None, make_g_function(self.g))

    def with_overrides(self, **kw):
        known = {f.name for f in fields(self)}
        return replace(self, **{k: v for k, v in kw.items() if k in known and v is not None})


_KEYS = {
    ("grid", "dim"): ("dim", int),
    ("grid", "nx"): ("nx", int),
    ("grid", "ny"): ("ny", int),
    ("grid", "g"): ("g", str),
    ("training", "sqrt_d"): ("train_sqrt_D", str),
    ("training", "v"): ("train_V", str),
    ("training", "n_max"): ("n_max", int),
    ("training", "seed_index"): ("seed_index", int),
    ("test", "sqrt_d"): ("test_sqrt_D", str),
    ("test", "v"): ("test_V", str),
    ("solver", "truth_tol"): ("truth_tol", float),
    ("solver", "online_tol"): ("online_tol", float),
    ("solver", "max_iter"): ("max_iter", int),
    ("output", "dir"): ("out", str),
    ("run", "threads"): ("threads", int),
}


def load_config(path=None):
    """Read an INI config; unknown sections/keys are an error.  ``None`` gives the defaults."""
    cfg = ExperimentConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            spec = _KEYS.get((section.lower(), key.lower()))
            if spec is None:
                raise ConfigError(f"{path}: unknown key [{section}] {key}")
            name, typ = spec
            if raw.strip() == "":
                continue
            try:
                values[name] = typ(raw.strip())
            except ValueError:
                raise ConfigError(f"{path}: [{section}] {key} = {raw!r} is not a valid {typ.__name__}") from None
    return replace(cfg, **values)
