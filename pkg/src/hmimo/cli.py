"""Command-line front end.

Settings are resolved from, in increasing priority: built-in defaults, the
``HMIMO_SEED`` environment variable (seed only), a flat ``key = value``
config file given with ``--config``, and command-line flags.

Exit codes: 0 success, 1 usage error, 2 numerical error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, UsageError
from .harness import SWEEP_REGIMES, ExperimentSpec, Table, run_experiment
from .spectrum import ScatteringSpec

log = logging.getLogger("hmimo")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2

COMMANDS = {
    "dof": "dof",
    "eigs": "eig-spectrum",
    "capacity": "capacity-sweep",
    "compare": "regime-compare",
    "sumrate": "sumrate",
}


# -- value codecs ------------------------------------------------------------

def _float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise UsageError(f"not a finite number: {text!r}")
    return v


def _int(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"not an integer: {text!r}") from None


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise UsageError(f"{text!r} is not one of {', '.join(options)}")
        return text
    return parse


def _regimes(text: str) -> tuple[str, ...]:
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    bad = [t for t in items if t not in SWEEP_REGIMES]
    if bad or not items:
        raise UsageError(f"regimes must be drawn from {', '.join(SWEEP_REGIMES)}")
    return items


def _users(text: str) -> tuple[tuple[float, float], ...]:
    """``"p:eps,p:eps"``."""
    users = []
    for item in text.split(","):
        parts = item.strip().split(":")
        if len(parts) != 2:
            raise UsageError(f"user must be written as power:eps, got {item!r}")
        users.append((_float(parts[0]), _float(parts[1])))
    return tuple(users)


def _text(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ",".join(f"{p!r}:{e!r}" for p, e in value)
        return ",".join(value)
    return str(value)


@dataclass(frozen=True)
class Option:
    name: str
    parse: object
    default: object
    help: str
    commands: tuple[str, ...]
    flags: tuple[str, ...] = ()

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


_ALL = tuple(COMMANDS)
_ARRAY = ("eigs", "capacity", "compare")
_MC = ("capacity", "compare")

OPTIONS = [
    Option("out", str, "-", "output file, '-' for standard output", _ALL),
    Option("format", _choice("csv", "json"), "csv", "output format", _ALL),
    Option("verbosity", _int, 0, "log level: 0 warnings, 1 info, 2 debug", _ALL,
           ("-v", "--verbosity")),
    Option("seed", _int, 0, "random seed (also read from HMIMO_SEED)", _ALL),
    Option("workers", _int, 1, "worker threads for Monte Carlo trials", _ALL),
    Option("geometry", _choice("linear", "planar"), "planar", "array geometry", ("dof",)),
    Option("wavelength", _float, 0.1, "wavelength in metres", ("dof",)),
    Option("extent", _float, 1.0, "array length (m) or area (m^2)", ("dof",),
           ("--extent", "--area", "--length")),
    Option("L", _float, 10.0, "side length in wavelengths", _ARRAY),
    Option("L_y", _float, None, "y side length in wavelengths (defaults to L)", _ARRAY),
    Option("spacing", _float, 0.5, "element spacing in wavelengths", ("eigs",)),
    Option("spacing_sweep", str, "0.25:0.5:6",
           "spacings as start:stop:count or a comma list", _MC),
    Option("spectrum", _choice("isotropic", "directional"), "isotropic",
           "angular power spectrum", _ARRAY),
    Option("kappa", _float, 4.0, "directional lobe concentration", _ARRAY),
    Option("azimuth", _float, 0.0, "directional lobe azimuth in radians", _ARRAY),
    Option("elevation", _float, 0.0,
           "directional lobe elevation from the array plane in radians", _ARRAY),
    Option("resolution", _int, 32, "quadrature nodes per mode cell and axis", _ARRAY),
    Option("model", _choice("exact", "fourier"), "exact",
           "eigs: exact plane-wave correlation or its Fourier-series model", ("eigs",)),
    Option("snr_db", _float, 10.0, "receive SNR in dB", _MC),
    Option("trials", _int, 200, "Monte Carlo trials per sweep point", _MC),
    Option("regimes", _regimes, ",".join(("iid-asymptotic", "csir-uniform", "stat-csit",
                                          "perfect-csi", "asymptotic")),
           "comma list of regimes to evaluate", _MC),
    Option("users", _users, "1:1", "users as power:eps pairs, comma separated", ("sumrate",)),
    Option("radius", _float, 1.0, "LIS radius in metres", ("sumrate",)),
    Option("noise", _float, 1.0, "noise power in watts", ("sumrate",)),
]
_BY_NAME = {o.name: o for o in OPTIONS}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one invocation."""

    command: str
    values: tuple[tuple[str, object], ...]

    def __getitem__(self, name):
        return dict(self.values)[name]

    def dump(self) -> str:
        lines = [f"# hmimo {self.command}"]
        for name, value in self.values:
            if value is not None:
                lines.append(f"{name} = {_text(value)}")
        return "\n".join(lines) + "\n"


def _options_for(command: str):
    return [o for o in OPTIONS if command in o.commands]


def _coerce(option: Option, raw):
    if raw is None:
        return None
    value = option.parse(raw) if isinstance(raw, str) else raw
    if option.parse is _float and isinstance(value, int):
        value = float(value)
    return value


def load_config_text(text: str, command: str) -> dict[str, object]:
    """Parse flat ``key = value`` text; unknown keys are errors."""
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                       delimiters=("=",))
    parser.optionxform = str
    try:
        parser.read_string("[hmimo]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config: {exc}") from None
    allowed = {o.name: o for o in _options_for(command)}
    out = {}
    for key, raw in parser.items("hmimo"):
        if key not in allowed:
            raise UsageError(f"unknown config key {key!r} for '{command}'")
        out[key] = _coerce(allowed[key], raw.strip())
    return out


def resolve(command: str, file_values: dict | None = None, flag_values: dict | None = None,
            environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    values = {}
    for o in _options_for(command):
        values[o.name] = _coerce(o, o.default)
    if "HMIMO_SEED" in environ:
        values["seed"] = _coerce(_BY_NAME["seed"], environ["HMIMO_SEED"])
    values.update(file_values or {})
    for k, v in (flag_values or {}).items():
        values[k] = _coerce(_BY_NAME[k], v)
    return RunConfig(command, tuple(values.items()))


def parse_spacings(text: str, L: float) -> tuple[float, ...]:
    """Expand ``start:stop:count`` or ``a,b,c`` into spacings that divide ``L``.

    Each requested spacing is moved to the nearest ``L/k`` with integer
    ``k``; the adjusted values are what the output reports.
    """
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("spacing sweep must be start:stop:count")
        start, stop, count = _float(parts[0]), _float(parts[1]), _int(parts[2])
        if count < 1:
            raise UsageError("sweep count must be >= 1")
        requested = np.linspace(start, stop, count) if count > 1 else np.array([start])
    else:
        requested = np.array([_float(t) for t in text.split(",") if t.strip()])
    if requested.size == 0 or np.any(requested <= 0):
        raise UsageError("spacings must be positive")
    snapped = []
    for s in requested:
        k = max(round(L / s), 1)
        s2 = L / k
        if abs(s2 - s) > 1e-9:
            log.warning("spacing %.6g does not divide L=%g; using %.6g", s, L, s2)
        if s2 not in snapped:
            snapped.append(s2)
    return tuple(snapped)


def build_spec(cfg: RunConfig) -> ExperimentSpec:
    v = dict(cfg.values)
    kind = COMMANDS[cfg.command]
    kw = dict(kind=kind, seed=v["seed"], workers=v["workers"])
    if cfg.command == "dof":
        kw.update(geometry=v["geometry"], wavelength=v["wavelength"], extent=v["extent"])
    elif cfg.command == "sumrate":
        kw.update(users=v["users"], radius=v["radius"], noise=v["noise"])
    else:
        if v["spectrum"] == "isotropic":
            scat = ScatteringSpec(resolution=v["resolution"])
        else:
            scat = ScatteringSpec.directional(v["kappa"], v["azimuth"], v["elevation"],
                                              v["resolution"])
        kw.update(L=v["L"], L_y=v["L_y"], scattering=scat)
        if cfg.command == "eigs":
            kw.update(spacing=v["spacing"], model=v["model"])
        else:
            L_min = min(v["L"], v["L_y"] or v["L"])
            kw.update(spacings=parse_spacings(v["spacing_sweep"], L_min),
                      snr_db=v["snr_db"], trials=v["trials"], regimes=v["regimes"])
    return ExperimentSpec(**kw)


# -- serialization -------------------------------------------------------------

def _cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        rows = [{c: (float(x) if isinstance(x, np.floating) else x)
                 for c, x in zip(table.columns, r)} for r in table.rows]
        return json.dumps({table.name: rows}, indent=1, allow_nan=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_cell(x) for x in r])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hmimo-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hmimo", description="Holographic MIMO DoF and capacity analysis.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    helps = {
        "dof": "asymptotic spatial DoF and the evanescent-wave loss",
        "eigs": "sorted eigenvalues of the receive correlation matrix",
        "capacity": "ergodic capacity versus element spacing",
        "compare": "paired comparison of CSI regimes",
        "sumrate": "LIS uplink sum-rate approximation",
    }
    for command in COMMANDS:
        p = sub.add_parser(command, help=helps[command], description=helps[command])
        p.add_argument("--config", metavar="FILE", help="flat key = value config file")
        p.add_argument("--dump-config", metavar="FILE",
                       help="write the resolved config to FILE ('-' for stderr)")
        for o in _options_for(command):
            flags = o.flags or (o.flag,)
            p.add_argument(*flags, dest=o.name, default=argparse.SUPPRESS,
                           metavar=o.name.upper(),
                           help=f"{o.help} (default: {_text(o.default)})")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)
    log.propagate = False


def main(argv=None) -> int:
    try:
        args = vars(build_parser().parse_args(argv))
        command = args.pop("command")
        config_path = args.pop("config", None)
        dump_path = args.pop("dump_config", None)
        file_values = {}
        if config_path:
            try:
                with open(config_path, encoding="utf-8") as fh:
                    file_values = load_config_text(fh.read(), command)
            except OSError as exc:
                raise UsageError(f"cannot read config: {exc}") from None
        cfg = resolve(command, file_values, args)
        _configure_logging(cfg["verbosity"])
        if dump_path:
            if dump_path == "-":
                sys.stderr.write(cfg.dump())
            else:
                write_atomic(dump_path, cfg.dump())
        table = run_experiment(build_spec(cfg))
        text = render(table, cfg["format"])
        if cfg["out"] in (None, "-"):
            sys.stdout.write(text)
        else:
            write_atomic(cfg["out"], text)
        return EXIT_OK
    except UsageError as exc:
        print(f"hmimo: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"hmimo: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
