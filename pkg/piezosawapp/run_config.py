"""
Run configuration: a flat KEY=value document

Parsed with python-dotenv's dotenv_values (never exported to os.environ, no
variable interpolation) and checked against a schema. Every value accepts SI
numbers or an explicit unit suffix for its quantity kind, lists are comma
separated, and unknown keys are rejected.
"""

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

from dotenv import dotenv_values

from .models import ModelValidationError
from .units import parse_quantity

logger = logging.getLogger(__name__)


class RunConfigError(ModelValidationError):
    """Run configuration key or value rejected"""
    pass


@dataclass(frozen=True)
class ConfigKey:
    name: str
    kind: str
    default: Any = None
    is_list: bool = False
    help: str = ''


SCHEMA: Tuple[ConfigKey, ...] = (
    ConfigKey('label', 'str', 'run', help='Prefix of artifact names'),
    # transducer and scenario
    ConfigKey('n_periods', 'int', 50, help='IDT periods N'),
    ConfigKey('f0', 'frequency', 4.583e9, help='Electromechanical resonance'),
    ConfigKey('cg', 'capacitance', 318e-15, help='IDT geometric capacitance'),
    ConfigKey('preset', 'str', 'unity-ratio', help='Geometry preset for gamma/zeta'),
    ConfigKey('z0', 'impedance', 50.0),
    ConfigKey('k2', 'number', 2.32e-7, help='Injected electromechanical coupling'),
    ConfigKey('distances', 'length', [1323e-6], is_list=True, help='IDT separations'),
    ConfigKey('v_saw', 'velocity', 5063.0),
    ConfigKey('t_crosstalk', 'time', 2.5e-9),
    ConfigKey('crosstalk_db', 'decibel', -55.0),
    ConfigKey('decay_length', 'length', math.inf, help='Amplitude decay length, inf = lossless'),
    ConfigKey('temperature', 'temperature', None, help='Sweep metadata'),
    ConfigKey('noise_floor_db', 'decibel', None),
    ConfigKey('seed', 'int', 0),
    ConfigKey('grid_points', 'int', 1601),
    ConfigKey('grid_half_span', 'frequency', 0.6e9),
    # gating
    ConfigKey('inputs', 'path', [], is_list=True, help='Touchstone files analysed instead of synthesized sweeps'),
    ConfigKey('pad_factor', 'int', 8),
    ConfigKey('spectral_window', 'str', 'kaiser'),
    ConfigKey('kaiser_beta', 'number', 20.0),
    ConfigKey('peak_threshold_db', 'decibel', -140.0),
    ConfigKey('gate_lo', 'time', -25e-9, help='Gate start relative to t_s'),
    ConfigKey('gate_hi', 'time', 75e-9, help='Gate end relative to t_s'),
    ConfigKey('gate_taper', 'number', 0.0),
    # K² extraction
    ConfigKey('s21_res', 'number', None, help='Resonance amplitude; measured from sweeps when absent'),
    ConfigKey('s21_res_db', 'decibel', None),
    ConfigKey('prop_loss', 'number', None, help='Acoustic path transmission L; from decay_length when absent'),
    # qubit
    ConfigKey('l_j', 'inductance', None, help='Josephson inductance; tuned to f0 when absent'),
    ConfigKey('cg_q', 'capacitance', None, help='Qubit shunt capacitance; cg when absent'),
    ConfigKey('f_q', 'frequency', None),
    ConfigKey('f_min', 'frequency', None),
    ConfigKey('f_max', 'frequency', None),
    ConfigKey('q_points', 'int', 401),
    ConfigKey('admittance_table', 'path', None),
    # junction
    ConfigKey('metal_work_function', 'energy', 4.28),
    ConfigKey('electron_affinity', 'energy', 4.05),
    ConfigKey('band_gap', 'energy', 1.12),
    ConfigKey('intrinsic_density', 'number', 1.0e16),
    ConfigKey('relative_permittivity', 'number', 11.7),
    ConfigKey('junction_temperature', 'temperature', 300.0),
    ConfigKey('domain_length', 'length', 300e-6),
    ConfigKey('biases', 'voltage', [-2.0, -1.0, 0.0, 1.0, 2.0], is_list=True),
    ConfigKey('oxide_eot', 'length', 0.0),
    ConfigKey('mesh_h_min', 'length', 1e-10),
    ConfigKey('mesh_nodes', 'int', 600),
    ConfigKey('max_iterations', 'int', 200),
)

SCHEMA_BY_NAME: Dict[str, ConfigKey] = {key.name: key for key in SCHEMA}


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters; every schema key is present"""
    values: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None

    def __getitem__(self, name: str) -> Any:
        if name not in SCHEMA_BY_NAME:
            raise KeyError(name)
        return self.values.get(name, SCHEMA_BY_NAME[name].default)

    def explicitly_set(self, name: str) -> bool:
        return name in self.values


def _parse_scalar(key: ConfigKey, text: str) -> Any:
    text = text.strip()
    if key.kind == 'str':
        return text
    if key.kind == 'path':
        return Path(text)
    if key.kind == 'int':
        try:
            return int(text)
        except ValueError:
            raise RunConfigError(f"{key.name}: expected an integer, got '{text}'") from None
    try:
        return parse_quantity(text, key.kind)
    except ModelValidationError as e:
        raise RunConfigError(f"{key.name}: {e}") from None


def parse_value(name: str, text: Optional[str]) -> Any:
    """Validate one KEY=value pair against the schema"""
    key = SCHEMA_BY_NAME.get(name)
    if key is None:
        raise RunConfigError(f"unknown configuration key '{name}'")
    if text is None:
        raise RunConfigError(f"{name}: missing value (expected {name}=...)")
    if key.is_list:
        items = [item for item in text.split(',') if item.strip()]
        return [_parse_scalar(key, item) for item in items]
    if text.strip() == '':
        raise RunConfigError(f"{name}: empty value")
    return _parse_scalar(key, text)


def _collect(pairs: Iterable[Tuple[str, Optional[str]]]) -> Dict[str, Any]:
    values = {}
    for raw_name, text in pairs:
        name = raw_name.strip().lower()
        values[name] = parse_value(name, text)
    return values


def load_run_config(text: Optional[str] = None, path: Optional[Union[str, Path]] = None,
                    overrides: Iterable[str] = ()) -> RunConfig:
    """
    Build a RunConfig from a document and KEY=VALUE overrides

    Args:
        text: Configuration document content
        path: Configuration file, read when text is not given
        overrides: KEY=VALUE strings applied after the document

    Returns:
        RunConfig holding the explicitly set values

    Raises:
        RunConfigError: On unreadable files, unknown keys or invalid values
    """
    source = None
    if text is None and path is not None:
        source = str(path)
        try:
            text = Path(path).read_text(encoding='utf-8')
        except (OSError, UnicodeDecodeError) as e:
            raise RunConfigError(f"cannot read configuration {path}: {e}") from e

    values: Dict[str, Any] = {}
    if text:
        values.update(_collect(dotenv_values(stream=io.StringIO(text), interpolate=False).items()))

    override_pairs: List[Tuple[str, Optional[str]]] = []
    for item in overrides:
        name, equals, value = item.partition('=')
        if not equals:
            raise RunConfigError(f"override '{item}' must look like KEY=VALUE")
        override_pairs.append((name, value))
    values.update(_collect(override_pairs))

    logger.debug(f"Run configuration: {len(values)} explicit keys from {source or 'inline text'}")
    return RunConfig(values=values, source=source)
