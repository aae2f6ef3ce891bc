"""Declarative problem configurations (TOML) and their catalogue resolution.

Unknown keys anywhere in the file are hard errors: a typo must never
silently fall back to a default.  Loading resolves every default, checks
the exponent and radius constraints, and records the fully expanded
configuration for embedding into run reports.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .conditions import (
    Antiperiodic,
    Fixed,
    Integral,
    MeanValue,
    Multipoint,
    NonlocalCondition,
    Periodic,
)
from .errors import ConfigError
from .lp_space import Domain1D, GridFunction
from .nemytskii import (
    Nonlinearity,
    chafee_infante,
    damped_cubic,
    forced_linear,
    linear,
    odd_power,
    zero,
)
from .oracle import decaying_sine, manufacture, periodic_sine
from .sampling import smooth_profile
from .semigroup import SpectralOperator
from .solver import Shell, SolverConfig
from .trajectory import Trajectory

__all__ = ["ProblemConfig", "load_config"]


# Schema: nested dict mapping table -> key -> (required, type-check, default).
# "table" values mark nested tables with their own schema.

def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number_list(v) -> bool:
    return isinstance(v, list) and all(_is_number(x) for x in v)


def _is_int_list(v) -> bool:
    return isinstance(v, list) and all(_is_int(x) for x in v)


def _require_keys(table: dict, allowed: set, path: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in [{path}]")


def _get(table: dict, key: str, path: str, check: Callable, kind: str,
         default=None, required: bool = False):
    if key not in table:
        if required:
            raise ConfigError(f"missing required key '{key}' in [{path}]")
        return default
    value = table[key]
    if not check(value):
        raise ConfigError(f"key '{key}' in [{path}] must be {kind}, got {value!r}")
    return value


@dataclass(frozen=True)
class ProblemConfig:
    """A fully resolved problem description ready to build solver objects."""

    domain: Domain1D
    k_dim: int
    horizon: float
    n_steps: int
    p: float
    q: float
    nonlinearity_name: str
    nonlinearity_params: dict
    condition_variant: str
    condition_params: dict
    solver: SolverConfig
    initial_guess_spec: Optional[dict]
    n_list: tuple
    lambda_grid: tuple
    sample_seeds: tuple
    shell: Shell
    resolved: dict

    def build_operator(self) -> SpectralOperator:
        return SpectralOperator(self.domain, self.k_dim)

    def build_nonlinearity(self) -> Nonlinearity:
        return _build_nonlinearity(self)

    def build_condition(self) -> NonlocalCondition:
        return _build_condition(self)

    def build_initial_guess(self) -> Optional[Trajectory]:
        if self.initial_guess_spec is None:
            return None
        u = make_profile(self.domain, self.initial_guess_spec, "solver.initial_guess")
        return Trajectory.constant(u, self.horizon, self.n_steps)


def load_config(path) -> ProblemConfig:
    """Parse and validate a TOML problem file; ConfigError on any defect."""
    text = Path(path).read_bytes()
    try:
        raw = tomllib.loads(text.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return _validate(raw)


def _validate(raw: dict) -> ProblemConfig:
    _require_keys(raw, {"domain", "time", "exponents", "nonlinearity", "condition",
                        "solver", "verification"}, "")

    dom_t = raw.get("domain")
    if not isinstance(dom_t, dict):
        raise ConfigError("missing [domain] table")
    _require_keys(dom_t, {"L", "N", "k_dim"}, "domain")
    length = _get(dom_t, "L", "domain", _is_number, "a number", required=True)
    n_interior = _get(dom_t, "N", "domain", _is_int, "an integer", required=True)
    k_dim = _get(dom_t, "k_dim", "domain", _is_int, "an integer", default=1)
    if length <= 0:
        raise ConfigError("domain.L must be positive")
    if n_interior < 2:
        raise ConfigError("domain.N must be at least 2")
    if k_dim < 1:
        raise ConfigError("domain.k_dim must be a positive integer")

    time_t = raw.get("time")
    if not isinstance(time_t, dict):
        raise ConfigError("missing [time] table")
    _require_keys(time_t, {"T", "M"}, "time")
    horizon = _get(time_t, "T", "time", _is_number, "a number", required=True)
    n_steps = _get(time_t, "M", "time", _is_int, "an integer", required=True)
    if horizon <= 0:
        raise ConfigError("time.T must be positive")
    if n_steps < 1:
        raise ConfigError("time.M must be a positive integer")

    exp_t = raw.get("exponents")
    if not isinstance(exp_t, dict):
        raise ConfigError("missing [exponents] table")
    _require_keys(exp_t, {"p", "q"}, "exponents")
    p = float(_get(exp_t, "p", "exponents", _is_number, "a number", required=True))
    q = float(_get(exp_t, "q", "exponents", _is_number, "a number", required=True))
    if not (2.0 <= q < p):
        raise ConfigError(
            f"growth exponents must satisfy 2 <= q < p, got q={q}, p={p}"
        )
    if k_dim > 2 and not (p * q / (p - q) > k_dim / 2.0):
        raise ConfigError(
            f"for k_dim > 2 the exponents must satisfy p*q/(p-q) > k_dim/2, "
            f"got p*q/(p-q) = {p * q / (p - q)!r} with k_dim = {k_dim}"
        )

    nl_t = raw.get("nonlinearity")
    if not isinstance(nl_t, dict):
        raise ConfigError("missing [nonlinearity] table")
    _require_keys(nl_t, {"name", "params"}, "nonlinearity")
    nl_name = _get(nl_t, "name", "nonlinearity", lambda v: isinstance(v, str),
                   "a string", required=True)
    nl_params = nl_t.get("params", {})
    if not isinstance(nl_params, dict):
        raise ConfigError("[nonlinearity.params] must be a table")

    cond_t = raw.get("condition")
    if not isinstance(cond_t, dict):
        raise ConfigError("missing [condition] table")
    _require_keys(cond_t, {"variant", "params"}, "condition")
    cond_variant = _get(cond_t, "variant", "condition", lambda v: isinstance(v, str),
                        "a string", required=True)
    cond_params = cond_t.get("params", {})
    if not isinstance(cond_params, dict):
        raise ConfigError("[condition.params] must be a table")

    sol_t = raw.get("solver")
    if not isinstance(sol_t, dict):
        raise ConfigError("missing [solver] table")
    _require_keys(sol_t, {"R_ball", "r_inner", "R_outer", "picard_tol",
                          "picard_max_iter", "relaxation", "smoothing_n",
                          "stepper", "lambda", "initial_guess"}, "solver")
    smoothing_n = _get(sol_t, "smoothing_n", "solver", _is_int, "an integer")
    try:
        solver = SolverConfig(
            R_ball=float(_get(sol_t, "R_ball", "solver", _is_number, "a number",
                              required=True)),
            R_outer=float(_get(sol_t, "R_outer", "solver", _is_number, "a number",
                               required=True)),
            r_inner=float(_get(sol_t, "r_inner", "solver", _is_number, "a number",
                               default=0.0)),
            picard_tol=float(_get(sol_t, "picard_tol", "solver", _is_number,
                                  "a number", default=1e-10)),
            picard_max_iter=_get(sol_t, "picard_max_iter", "solver", _is_int,
                                 "an integer", default=200),
            relaxation=float(_get(sol_t, "relaxation", "solver", _is_number,
                                  "a number", default=1.0)),
            smoothing_n=smoothing_n,
            stepper=_get(sol_t, "stepper", "solver", lambda v: isinstance(v, str),
                         "a string", default="exponential_euler"),
            lam=float(_get(sol_t, "lambda", "solver", _is_number, "a number",
                           default=1.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [solver] table: {exc}") from exc

    guess_spec = sol_t.get("initial_guess")
    if guess_spec is not None and not isinstance(guess_spec, dict):
        raise ConfigError("[solver.initial_guess] must be a table")

    ver_t = raw.get("verification", {})
    if not isinstance(ver_t, dict):
        raise ConfigError("[verification] must be a table")
    _require_keys(ver_t, {"n_list", "lambda_grid", "sample_seeds", "shell"},
                  "verification")
    n_list = tuple(_get(ver_t, "n_list", "verification", _is_int_list,
                        "a list of integers", default=[8, 16, 32, 64]))
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])) or n_list[0] < 1:
        raise ConfigError("verification.n_list must be strictly increasing positive integers")
    lambda_grid = tuple(float(v) for v in _get(
        ver_t, "lambda_grid", "verification", _is_number_list, "a list of numbers",
        default=[0.0, 0.25, 0.5, 0.75, 1.0]))
    if any(not (0.0 <= v <= 1.0) for v in lambda_grid) or any(
            b <= a for a, b in zip(lambda_grid, lambda_grid[1:])):
        raise ConfigError("verification.lambda_grid must be strictly increasing in [0, 1]")
    sample_seeds = tuple(_get(ver_t, "sample_seeds", "verification", _is_int_list,
                              "a list of integers", default=[0]))
    if not sample_seeds:
        raise ConfigError("verification.sample_seeds must be nonempty")
    shell_t = ver_t.get("shell", {})
    if not isinstance(shell_t, dict):
        raise ConfigError("[verification.shell] must be a table")
    _require_keys(shell_t, {"r0", "R0"}, "verification.shell")
    default_r0 = max(solver.r_inner, solver.R_ball / 20.0)
    try:
        shell = Shell(
            r0=float(_get(shell_t, "r0", "verification.shell", _is_number,
                          "a number", default=default_r0)),
            R0=float(_get(shell_t, "R0", "verification.shell", _is_number,
                          "a number", default=solver.R_outer)),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid [verification.shell]: {exc}") from exc

    domain = Domain1D(float(length), int(n_interior))
    cfg = ProblemConfig(
        domain=domain,
        k_dim=int(k_dim),
        horizon=float(horizon),
        n_steps=int(n_steps),
        p=p,
        q=q,
        nonlinearity_name=nl_name,
        nonlinearity_params=dict(nl_params),
        condition_variant=cond_variant,
        condition_params=dict(cond_params),
        solver=solver,
        initial_guess_spec=None if guess_spec is None else dict(guess_spec),
        n_list=n_list,
        lambda_grid=lambda_grid,
        sample_seeds=sample_seeds,
        shell=shell,
        resolved={},
    )
    # Building the pieces validates catalogue names and their parameters.
    cfg.build_nonlinearity()
    cfg.build_condition()
    cfg.build_initial_guess()
    object.__setattr__(cfg, "resolved", _resolved_echo(cfg))
    return cfg


def _resolved_echo(cfg: ProblemConfig) -> dict:
    return {
        "domain": {"L": cfg.domain.length, "N": cfg.domain.n_interior,
                   "k_dim": cfg.k_dim},
        "time": {"T": cfg.horizon, "M": cfg.n_steps},
        "exponents": {"p": cfg.p, "q": cfg.q},
        "nonlinearity": {"name": cfg.nonlinearity_name,
                         "params": cfg.nonlinearity_params},
        "condition": {"variant": cfg.condition_variant,
                      "params": cfg.condition_params},
        "solver": {
            "R_ball": cfg.solver.R_ball,
            "r_inner": cfg.solver.r_inner,
            "R_outer": cfg.solver.R_outer,
            "picard_tol": cfg.solver.picard_tol,
            "picard_max_iter": cfg.solver.picard_max_iter,
            "relaxation": cfg.solver.relaxation,
            "smoothing_n": cfg.solver.smoothing_n,
            "stepper": cfg.solver.stepper,
            "lambda": cfg.solver.lam,
            "initial_guess": cfg.initial_guess_spec,
        },
        "verification": {
            "n_list": list(cfg.n_list),
            "lambda_grid": list(cfg.lambda_grid),
            "sample_seeds": list(cfg.sample_seeds),
            "shell": {"r0": cfg.shell.r0, "R0": cfg.shell.R0},
        },
    }


# --- catalogue builders -----------------------------------------------------

def _build_forcing(spec: dict, cfg: ProblemConfig, path: str):
    """Returns (callable s(t, x), fundamental period or None)."""
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"[{path}] needs a 'name' key")
    name = spec["name"]
    if name == "sine_mode":
        _require_keys(spec, {"name", "amplitude", "mode"}, path)
        amp = _get(spec, "amplitude", path, _is_number, "a number", default=1.0)
        mode = _get(spec, "mode", path, _is_int, "an integer", default=1)
        k = mode * np.pi / cfg.domain.length
        return (lambda t, x: amp * np.sin(k * x)), 0.0
    if name == "manufactured_decay":
        _require_keys(spec, {"name", "c"}, path)
        c = _get(spec, "c", path, _is_number, "a number", default=0.0)
        s = manufacture(decaying_sine(cfg.domain.length), linear(float(c)))
        return s, None
    if name == "manufactured_periodic":
        _require_keys(spec, {"name", "c"}, path)
        c = _get(spec, "c", path, _is_number, "a number", default=0.0)
        s = manufacture(periodic_sine(cfg.domain.length, cfg.horizon),
                        linear(float(c)))
        return s, cfg.horizon
    raise ConfigError(f"unknown forcing '{name}' in [{path}]")


def _build_nonlinearity(cfg: ProblemConfig) -> Nonlinearity:
    name = cfg.nonlinearity_name
    params = cfg.nonlinearity_params
    path = "nonlinearity.params"
    if name == "zero":
        _require_keys(params, set(), path)
        return zero(cfg.p, cfg.q)
    if name == "linear":
        _require_keys(params, {"c"}, path)
        c = _get(params, "c", path, _is_number, "a number", required=True)
        return linear(float(c), cfg.p, cfg.q)
    if name == "odd_power":
        _require_keys(params, {"alpha", "coefficient"}, path)
        alpha = _get(params, "alpha", path, _is_int, "an integer", default=3)
        coeff = _get(params, "coefficient", path, _is_number, "a number", default=-1.0)
        if abs(cfg.p - alpha * cfg.q) > 1e-12:
            raise ConfigError(
                f"odd_power growth needs p = alpha*q; got p={cfg.p}, alpha*q={alpha * cfg.q}"
            )
        return odd_power(alpha, float(coeff), cfg.q)
    if name == "damped_cubic":
        _require_keys(params, set(), path)
        if abs(cfg.p - 3.0 * cfg.q) > 1e-12:
            raise ConfigError(
                f"damped_cubic growth needs p = 3q; got p={cfg.p}, q={cfg.q}"
            )
        return damped_cubic(cfg.q)
    if name == "chafee_infante":
        _require_keys(params, {"lam"}, path)
        lam = _get(params, "lam", path, _is_number, "a number", required=True)
        if abs(cfg.p - 3.0 * cfg.q) > 1e-12:
            raise ConfigError(
                f"chafee_infante growth needs p = 3q; got p={cfg.p}, q={cfg.q}"
            )
        return chafee_infante(float(lam), cfg.q)
    if name == "forced_linear":
        _require_keys(params, {"c", "forcing"}, path)
        c = float(_get(params, "c", path, _is_number, "a number", default=0.0))
        forcing_spec = params.get("forcing")
        if forcing_spec is None:
            raise ConfigError(f"[{path}] needs a forcing table")
        s, period = _build_forcing(forcing_spec, cfg, path + ".forcing")
        return forced_linear(c, s, cfg.p, cfg.q, periodic_in_t=period)
    raise ConfigError(f"unknown nonlinearity '{name}'")


def make_profile(domain: Domain1D, spec: dict, path: str) -> GridFunction:
    if not isinstance(spec, dict) or "profile" not in spec:
        raise ConfigError(f"[{path}] needs a 'profile' key")
    kind = spec["profile"]
    if kind == "zero":
        _require_keys(spec, {"profile"}, path)
        return GridFunction.zeros(domain)
    if kind == "sine":
        _require_keys(spec, {"profile", "amplitude", "mode"}, path)
        amp = _get(spec, "amplitude", path, _is_number, "a number", default=1.0)
        mode = _get(spec, "mode", path, _is_int, "an integer", default=1)
        k = mode * np.pi / domain.length
        return GridFunction(domain, amp * np.sin(k * domain.nodes))
    if kind == "smooth_random":
        _require_keys(spec, {"profile", "seed", "amplitude", "decay"}, path)
        seed = _get(spec, "seed", path, _is_int, "an integer", default=0)
        amp = _get(spec, "amplitude", path, _is_number, "a number", default=1.0)
        decay = _get(spec, "decay", path, _is_number, "a number", default=3.0)
        values = smooth_profile(domain, np.random.default_rng(seed), decay)
        peak = np.max(np.abs(values))
        if peak > 0:
            values = values * (amp / peak)
        return GridFunction(domain, values)
    raise ConfigError(f"unknown profile '{kind}' in [{path}]")


def _build_gamma(spec: dict, path: str) -> Callable:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"[{path}] needs a 'name' key")
    name = spec["name"]
    if name == "identity":
        _require_keys(spec, {"name"}, path)
        return lambda v: v
    if name == "scale":
        _require_keys(spec, {"name", "factor"}, path)
        factor = _get(spec, "factor", path, _is_number, "a number", required=True)
        return lambda v: factor * v
    if name == "tanh":
        _require_keys(spec, {"name"}, path)
        return np.tanh
    raise ConfigError(f"unknown gamma '{name}' in [{path}]")


def _build_alpha(spec: dict, path: str) -> Callable:
    if not isinstance(spec, dict) or "name" not in spec:
        raise ConfigError(f"[{path}] needs a 'name' key")
    name = spec["name"]
    if name == "constant":
        _require_keys(spec, {"name", "value"}, path)
        value = _get(spec, "value", path, _is_number, "a number", required=True)
        if value < 0:
            raise ConfigError(f"alpha must be nonnegative in [{path}]")
        return lambda t: value
    raise ConfigError(f"unknown alpha '{name}' in [{path}]")


def _build_condition(cfg: ProblemConfig) -> NonlocalCondition:
    variant = cfg.condition_variant
    params = cfg.condition_params
    path = "condition.params"
    if variant == "periodic":
        _require_keys(params, set(), path)
        return Periodic()
    if variant == "antiperiodic":
        _require_keys(params, set(), path)
        return Antiperiodic()
    if variant == "multipoint":
        _require_keys(params, {"c", "t_points", "gamma"}, path)
        c = _get(params, "c", path, _is_number_list, "a list of numbers", required=True)
        t_points = _get(params, "t_points", path, _is_number_list,
                        "a list of numbers", required=True)
        gamma_spec = params.get("gamma", {"name": "identity"})
        if any(t > cfg.horizon * (1 + 1e-12) for t in t_points):
            raise ConfigError("multipoint times must lie in (0, T]")
        dt = cfg.horizon / cfg.n_steps
        for t in t_points:
            if abs(t - round(t / dt) * dt) > 1e-9 * dt:
                raise ConfigError(
                    f"multipoint time {t!r} does not sit on the time grid "
                    f"(T/M = {dt!r}); prescribed times are never interpolated"
                )
        try:
            return Multipoint(tuple(c), tuple(t_points),
                              _build_gamma(gamma_spec, path + ".gamma"))
        except ValueError as exc:
            raise ConfigError(f"invalid multipoint condition: {exc}") from exc
    if variant == "integral":
        _require_keys(params, {"eta"}, path)
        eta_spec = params.get("eta")
        if not isinstance(eta_spec, dict) or "name" not in eta_spec:
            raise ConfigError(f"[{path}.eta] needs a 'name' key")
        eta_name = eta_spec["name"]
        eta_path = path + ".eta"
        horizon = cfg.horizon
        if eta_name == "mean":
            _require_keys(eta_spec, {"name"}, eta_path)
            return Integral(lambda t, x, v: v / horizon)
        if eta_name == "linear":
            _require_keys(eta_spec, {"name", "alpha"}, eta_path)
            alpha = _build_alpha(eta_spec.get("alpha", {}), eta_path + ".alpha")
            return Integral(lambda t, x, v: alpha(t) * v)
        if eta_name == "abs_linear":
            _require_keys(eta_spec, {"name", "alpha"}, eta_path)
            alpha = _build_alpha(eta_spec.get("alpha", {}), eta_path + ".alpha")
            return Integral(lambda t, x, v: alpha(t) * np.abs(v) / horizon)
        raise ConfigError(f"unknown eta '{eta_name}' in [{eta_path}]")
    if variant == "mean_value":
        _require_keys(params, {"alpha"}, path)
        alpha_spec = params.get("alpha", {"name": "constant", "value": 1.0 / cfg.horizon})
        return MeanValue(_build_alpha(alpha_spec, path + ".alpha"))
    if variant == "fixed":
        _require_keys(params, {"u0"}, path)
        u0_spec = params.get("u0")
        if u0_spec is None:
            raise ConfigError(f"[{path}] needs a u0 profile table")
        return Fixed(make_profile(cfg.domain, u0_spec, path + ".u0"))
    raise ConfigError(f"unknown condition variant '{variant}'")
