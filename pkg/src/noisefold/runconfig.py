"""Run configuration: flat 'key = value' files with section headers.

Sections and keys are whitelisted; an unknown section or key is rejected
with its name so typos cannot silently fall back to defaults. Every key
has a documented default, listed in DEFAULTS.
"""

import configparser
import hashlib
from dataclasses import replace

from .experiments import ExperimentConfig, SweepSpec
from .sensing import MixtureSpec, NoiseSpec


class ConfigError(ValueError):
    pass


def _parse_grid(text):
    return tuple(float(tok) for tok in text.replace(",", " ").split())


# section -> key -> (parser, default)
SCHEMA = {
    "experiment": {
        "ensemble": (str, "gaussian"),
        "m": (int, 30),
        "n": (int, 30),
        "r": (int, 6),
        "measurements": (int, 750),
        "n_trials": (int, 100),
        "base_seed": (int, 0),
    },
    "noise": {
        "sigma": (float, 0.01),
        "sigma0": (float, 0.05),
    },
    "mixture": {
        "xi": (float, 0.0),
        "kappa": (float, 1.0),
        "eta": (float, 0.0),
        "gamma_mix": (float, 1.0),
    },
    "solver": {
        "lambda": (float, 1e-3),
        "tol": (float, 1e-8),
        "max_iter": (int, 500),
    },
    "sweep": {
        "axis": (str, ""),
        "grid": (_parse_grid, ()),
    },
}

DEFAULTS = {
    section: {key: default for key, (_, default) in keys.items()}
    for section, keys in SCHEMA.items()
}


def parse_config(path=None, overrides=None):
    """Resolve a config file plus 'section.key=value' overrides.

    Returns a flat {(section, key): value} dict with every schema key
    present. Unknown sections/keys raise ConfigError naming the offender.
    """
    resolved = {(s, k): d for s, keys in DEFAULTS.items() for k, d in keys.items()}
    mixture_given = False

    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except configparser.Error as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
                parse = SCHEMA[section][key][0]
                try:
                    resolved[(section, key)] = parse(raw)
                except ValueError as exc:
                    raise ConfigError(
                        f"{path}: bad value for {section}.{key}: {raw!r} ({exc})"
                    ) from exc
            if section == "mixture":
                mixture_given = True

    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        target, _, raw = item.partition("=")
        if "." not in target:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        section, _, key = target.strip().partition(".")
        raw = raw.strip()
        if section not in SCHEMA:
            raise ConfigError(f"override names unknown section [{section}]")
        if key not in SCHEMA[section]:
            raise ConfigError(f"override names unknown key '{key}' in [{section}]")
        try:
            resolved[(section, key)] = SCHEMA[section][key][0](raw)
        except ValueError as exc:
            raise ConfigError(f"bad override value for {section}.{key}: {raw!r}") from exc
        if section == "mixture":
            mixture_given = True

    resolved[("mixture", "_given")] = mixture_given
    return resolved


def to_experiment_config(resolved):
    """Build an ExperimentConfig from a resolved mapping."""
    mix = None
    if resolved.get(("mixture", "_given")):
        mix = MixtureSpec(
            xi=resolved[("mixture", "xi")], kappa=resolved[("mixture", "kappa")],
            eta=resolved[("mixture", "eta")], gamma_mix=resolved[("mixture", "gamma_mix")],
        )
    noise = NoiseSpec(sigma=resolved[("noise", "sigma")],
                      sigma0=resolved[("noise", "sigma0")], mixture=mix)
    sweep = None
    axis = resolved[("sweep", "axis")]
    if axis:
        grid = resolved[("sweep", "grid")]
        if not grid:
            raise ConfigError("sweep.axis given without sweep.grid")
        sweep = SweepSpec(axis=axis, grid=tuple(grid))
    try:
        return ExperimentConfig(
            ensemble=resolved[("experiment", "ensemble")],
            m=resolved[("experiment", "m")], n=resolved[("experiment", "n")],
            r=resolved[("experiment", "r")], M=resolved[("experiment", "measurements")],
            noise=noise,
            reg_lambda=resolved[("solver", "lambda")],
            n_trials=resolved[("experiment", "n_trials")],
            base_seed=resolved[("experiment", "base_seed")],
            sweep=sweep,
            solver_tol=resolved[("solver", "tol")],
            solver_max_iter=resolved[("solver", "max_iter")],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def canonical_lines(resolved):
    """Deterministic 'section.key = value' listing of a resolved config."""
    lines = []
    for (section, key), value in sorted(resolved.items()):
        if key.startswith("_"):
            continue
        if isinstance(value, tuple):
            value = ",".join(f"{v:.17g}" for v in value)
        elif isinstance(value, float):
            value = f"{value:.17g}"
        lines.append(f"{section}.{key} = {value}")
    return lines


def config_hash(resolved):
    """Short stable hash of the fully resolved configuration."""
    blob = "\n".join(canonical_lines(resolved)).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def write_sidecar(path, resolved):
    """Echo the resolved config (defaults included) next to an output file."""
    lines = [f"# config_hash: {config_hash(resolved)}"] + canonical_lines(resolved)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
