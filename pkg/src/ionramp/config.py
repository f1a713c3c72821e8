"""Run configuration: plain INI text in, validated settings out.

Configs talk in lab units (MHz for the trap frequency, microseconds for
ramp durations) because that is how the numbers are quoted in practice;
everything downstream of RunConfig is SI.  Parsing is strict: unknown
sections or keys, or values that fail validation, raise ConfigError
with the section/key spelled out.
"""

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, fields, replace
from typing import Optional, Tuple

from .chain_model import Chain, IonSpecies
from .constants import ISOTOPE_MASS_AMU, resolve_species_name
from .errors import ConfigError

PROTOCOL_KINDS = ("smoothstep", "shooting", "linear", "cosine")
ENERGY_CENTER_VARIANTS = ("printed", "instantaneous")

_SCHEMA = {
    "chain": ("species", "count"),
    "trap": ("omega0_mhz", "gamma_squared"),
    "protocol": ("kind", "order", "design_mode", "energy_center",
                 "tf_us", "tf_sweep_us"),
    "optimizer": ("max_iterations", "max_evaluations", "xatol",
                  "rtol", "atol"),
    "output": ("dir", "samples", "protocol_samples", "threads", "seed"),
}


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs, in boundary units.

    species hold canonical isotope names or bare amu masses as decimal
    strings; both forms build a Chain.  tf_us and tf_sweep_us are
    mutually exclusive ways of saying how long the ramp lasts.
    """

    species: Tuple[str, ...]
    omega0_mhz: float = 1.2
    gamma_squared: float = 3.0
    tf_us: Optional[float] = None
    tf_sweep_us: Tuple[float, ...] = ()
    kind: str = "smoothstep"
    order: int = 11
    design_mode: int = 0
    energy_center: str = "printed"
    max_iterations: int = 2000
    max_evaluations: int = 4000
    xatol: float = 1e-8
    rtol: float = 1e-10
    atol: float = 1e-12
    samples: int = 201
    protocol_samples: int = 1000
    out_dir: str = "."
    threads: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.species:
            raise ConfigError("[chain] species: at least one ion is required")
        for token in self.species:
            _species_from_token(token)
        if not (self.omega0_mhz > 0 and math.isfinite(self.omega0_mhz)):
            raise ConfigError("[trap] omega0_mhz must be positive, got %r"
                              % (self.omega0_mhz,))
        if not (self.gamma_squared > 0 and math.isfinite(self.gamma_squared)):
            raise ConfigError("[trap] gamma_squared must be positive, got %r"
                              % (self.gamma_squared,))
        if self.kind not in PROTOCOL_KINDS:
            raise ConfigError("[protocol] kind must be one of %s, got %r"
                              % ("/".join(PROTOCOL_KINDS), self.kind))
        if self.order not in (11, 13):
            raise ConfigError("[protocol] order must be 11 or 13, got %r"
                              % (self.order,))
        if not 0 <= self.design_mode < len(self.species):
            raise ConfigError("[protocol] design_mode must index a mode "
                              "(0..%d), got %r"
                              % (len(self.species) - 1, self.design_mode))
        if self.energy_center not in ENERGY_CENTER_VARIANTS:
            raise ConfigError("[protocol] energy_center must be one of %s, "
                              "got %r" % ("/".join(ENERGY_CENTER_VARIANTS),
                                          self.energy_center))
        if self.tf_us is None and not self.tf_sweep_us:
            raise ConfigError("[protocol] either tf_us or tf_sweep_us "
                              "is required")
        if self.tf_us is not None and self.tf_us <= 0:
            raise ConfigError("[protocol] tf_us must be positive, got %r"
                              % (self.tf_us,))
        for tf in self.tf_sweep_us:
            if tf <= 0:
                raise ConfigError("[protocol] tf_sweep_us entries must be "
                                  "positive, got %r" % (tf,))
        if list(self.tf_sweep_us) != sorted(self.tf_sweep_us):
            raise ConfigError("[protocol] tf_sweep_us must be ascending")
        for name in ("max_iterations", "max_evaluations", "samples",
                     "protocol_samples", "threads"):
            if getattr(self, name) < 1:
                raise ConfigError("%s must be a positive integer, got %r"
                                  % (name, getattr(self, name)))
        for name in ("xatol", "rtol", "atol"):
            if not getattr(self, name) > 0:
                raise ConfigError("%s must be positive, got %r"
                                  % (name, getattr(self, name)))

    @property
    def omega0(self):
        """Initial trap angular frequency [rad/s]."""
        return 2.0 * math.pi * self.omega0_mhz * 1e6

    @property
    def tf(self):
        return None if self.tf_us is None else self.tf_us * 1e-6

    def tf_values(self):
        """Ramp durations to run, in seconds."""
        if self.tf_sweep_us:
            return [tf * 1e-6 for tf in self.tf_sweep_us]
        return [self.tf]

    def chain(self):
        return Chain(tuple(_species_from_token(t) for t in self.species))


def _species_from_token(token):
    try:
        amu = float(token)
    except ValueError:
        name = resolve_species_name(token)
        if name is None:
            raise ConfigError(
                "[chain] species: %r is neither a known isotope name nor "
                "a mass in amu" % (token,)
            ) from None
        return IonSpecies.from_amu(ISOTOPE_MASS_AMU[name])
    if not (amu > 0 and math.isfinite(amu)):
        raise ConfigError("[chain] species: mass must be positive, got %r"
                          % (token,))
    return IonSpecies.from_amu(amu)


def _canonical_species_token(token):
    try:
        amu = float(token)
    except ValueError:
        name = resolve_species_name(token)
        if name is None:
            raise ConfigError(
                "[chain] species: %r is neither a known isotope name nor "
                "a mass in amu" % (token,)
            ) from None
        return name
    return repr(amu)


def _get_typed(parser, section, key, cast, default):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    try:
        return cast(raw)
    except (ValueError, TypeError):
        raise ConfigError("[%s] %s: cannot parse %r" % (section, key, raw)) \
            from None


def _parse_sweep(raw):
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise ValueError(raw)
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 2:
            raise ValueError(raw)
        step = (stop - start) / (count - 1)
        return tuple(start + step * i for i in range(count))
    return tuple(float(x) for x in raw.split(",") if x.strip())


def parse_config(text):
    """Parse INI text into a RunConfig. Raises ConfigError on anything off."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("config syntax error: %s" % exc) from None

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError("unknown config section [%s] (expected %s)"
                              % (section, ", ".join(sorted(_SCHEMA))))
        for key in parser.options(section):
            if key not in _SCHEMA[section]:
                raise ConfigError("unknown key %r in [%s] (expected %s)"
                                  % (key, section,
                                     ", ".join(_SCHEMA[section])))

    if not parser.has_section("chain") or \
            not parser.has_option("chain", "species"):
        raise ConfigError("[chain] species is required")
    tokens = [t.strip() for t in parser.get("chain", "species").split(",")
              if t.strip()]
    count = _get_typed(parser, "chain", "count", int, None)
    if count is not None:
        if len(tokens) != 1:
            raise ConfigError("[chain] count only applies to a single "
                              "species entry")
        if count < 1:
            raise ConfigError("[chain] count must be >= 1, got %d" % count)
        tokens = tokens * count
    species = tuple(_canonical_species_token(t) for t in tokens)

    tf_us = _get_typed(parser, "protocol", "tf_us", float, None)
    sweep_raw = None
    if parser.has_option("protocol", "tf_sweep_us"):
        sweep_raw = parser.get("protocol", "tf_sweep_us")
    if tf_us is not None and sweep_raw is not None:
        raise ConfigError("[protocol] tf_us and tf_sweep_us are mutually "
                          "exclusive")
    tf_sweep = ()
    if sweep_raw is not None:
        try:
            tf_sweep = _parse_sweep(sweep_raw)
        except ValueError:
            raise ConfigError("[protocol] tf_sweep_us: expected a comma "
                              "list or start:stop:count, got %r"
                              % sweep_raw.strip()) from None

    return RunConfig(
        species=species,
        omega0_mhz=_get_typed(parser, "trap", "omega0_mhz", float, 1.2),
        gamma_squared=_get_typed(parser, "trap", "gamma_squared", float, 3.0),
        tf_us=tf_us,
        tf_sweep_us=tf_sweep,
        kind=_get_typed(parser, "protocol", "kind", str, "smoothstep"),
        order=_get_typed(parser, "protocol", "order", int, 11),
        design_mode=_get_typed(parser, "protocol", "design_mode", int, 0),
        energy_center=_get_typed(parser, "protocol", "energy_center", str,
                                 "printed"),
        max_iterations=_get_typed(parser, "optimizer", "max_iterations",
                                  int, 2000),
        max_evaluations=_get_typed(parser, "optimizer", "max_evaluations",
                                   int, 4000),
        xatol=_get_typed(parser, "optimizer", "xatol", float, 1e-8),
        rtol=_get_typed(parser, "optimizer", "rtol", float, 1e-10),
        atol=_get_typed(parser, "optimizer", "atol", float, 1e-12),
        samples=_get_typed(parser, "output", "samples", int, 201),
        protocol_samples=_get_typed(parser, "output", "protocol_samples",
                                    int, 1000),
        out_dir=_get_typed(parser, "output", "dir", str, "."),
        threads=_get_typed(parser, "output", "threads", int, 1),
        seed=_get_typed(parser, "output", "seed", int, 0),
    )


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) \
            from None
    return parse_config(text)


def dump_config(cfg):
    """Serialize a RunConfig back to canonical INI text.

    The output parses back to an equal RunConfig; it is also the byte
    stream the config hash is computed over.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser["chain"] = {"species": ", ".join(cfg.species)}
    parser["trap"] = {
        "omega0_mhz": repr(cfg.omega0_mhz),
        "gamma_squared": repr(cfg.gamma_squared),
    }
    protocol = {
        "kind": cfg.kind,
        "order": str(cfg.order),
        "design_mode": str(cfg.design_mode),
        "energy_center": cfg.energy_center,
    }
    if cfg.tf_us is not None:
        protocol["tf_us"] = repr(cfg.tf_us)
    if cfg.tf_sweep_us:
        protocol["tf_sweep_us"] = ", ".join(repr(x) for x in cfg.tf_sweep_us)
    parser["protocol"] = protocol
    parser["optimizer"] = {
        "max_iterations": str(cfg.max_iterations),
        "max_evaluations": str(cfg.max_evaluations),
        "xatol": repr(cfg.xatol),
        "rtol": repr(cfg.rtol),
        "atol": repr(cfg.atol),
    }
    parser["output"] = {
        "dir": cfg.out_dir,
        "samples": str(cfg.samples),
        "protocol_samples": str(cfg.protocol_samples),
        "threads": str(cfg.threads),
        "seed": str(cfg.seed),
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def config_hash(cfg):
    """Short stable fingerprint of a RunConfig for output headers.

    Where files land and how many workers ran cannot change what is
    computed, so out_dir and threads are normalized away first; two
    runs that differ only in plumbing hash the same.
    """
    canonical = replace(cfg, out_dir=".", threads=1)
    return hashlib.sha256(dump_config(canonical).encode("utf-8")).hexdigest()[:12]


def with_overrides(cfg, **changes):
    """A copy of cfg with fields replaced (validation reruns)."""
    valid = {f.name for f in fields(RunConfig)}
    unknown = set(changes) - valid
    if unknown:
        raise ConfigError("unknown config fields: %s"
                          % ", ".join(sorted(unknown)))
    return replace(cfg, **changes)
