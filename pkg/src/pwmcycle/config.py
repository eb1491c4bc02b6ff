"""Configuration file parsing.

The file is TOML with the normative section schema:

    [model]              kind = "buck" | "custom", buck parameters or
    [model.on_segment]   A, B, U, label        (custom kind)
    [model.off_segment]  A, B, U, label
    [model.output]       C_phys                (custom kind)
    [comparator]         K, Se, vc
    [pwm]                kind, fixed_duration
    [analysis.<command>] command-specific parameters

Unknown keys are errors in strict mode and warnings with --lenient.
``serialize_config`` writes the same schema back deterministically so
parse -> serialize -> parse round-trips entry-wise.
"""

import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import ConfigError, ModelError
from .model import (ComparatorSpec, ConverterModel, PwmKind, PwmLogic,
                    build_buck, validate)
from .propagation import PwlSegment

COMMANDS = ("steady", "eigen", "bode", "sweep", "duty", "distill",
            "simulate", "verify")

_MODEL_BUCK_KEYS = {"kind", "Vin", "L_f", "C_f", "R", "R_dcr", "R_esr",
                    "state_labels"}
_MODEL_CUSTOM_KEYS = {"kind", "state_labels", "on_segment", "off_segment",
                      "output"}
_SEGMENT_KEYS = {"A", "B", "U", "label"}
_ANALYSIS_KEYS = {
    "steady": set(),
    "eigen": set(),
    "bode": {"f_min_hz", "f_max_hz", "n_points", "amplitude"},
    "sweep": {"parameter", "values", "start", "stop", "count"},
    "duty": {"kind", "T_s", "T_w", "f_min_hz", "f_max_hz", "n_points"},
    "distill": set(),
    "simulate": {"n_cycles", "x0", "dense_per_segment"},
    "verify": {"quick"},
}


@dataclass
class AnalysisRequest:
    """One requested analysis: the command plus its parameters."""

    command: str
    params: dict = field(default_factory=dict)


def _key_error(path, msg):
    return ConfigError("config key [%s]: %s" % (path, msg))


def _need(table, key, path, types, what):
    if key not in table:
        raise _key_error("%s.%s" % (path, key), "missing required key (%s)" % what)
    val = table[key]
    if types and not isinstance(val, types):
        raise _key_error("%s.%s" % (path, key),
                         "expected %s, got %r" % (what, type(val).__name__))
    return val


def _number(table, key, path, default=None):
    if key not in table:
        if default is None:
            raise _key_error("%s.%s" % (path, key), "missing required number")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise _key_error("%s.%s" % (path, key), "expected a number")
    return float(val)


def _vector(table, key, path):
    val = _need(table, key, path, (list,), "array of numbers")
    try:
        arr = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise _key_error("%s.%s" % (path, key), "expected an array of numbers")
    return arr


def _check_unknown(table, allowed, path, lenient, warnings_out):
    for key in table:
        if key not in allowed:
            msg = "unknown key [%s.%s]" % (path, key)
            if lenient:
                warnings_out.append(msg)
            else:
                raise ConfigError(msg + " (use --lenient to ignore)")


def _parse_segment(table, path, lenient, warnings_out):
    _check_unknown(table, _SEGMENT_KEYS, path, lenient, warnings_out)
    a = _vector(table, "A", path)
    b = _vector(table, "B", path)
    u = _vector(table, "U", path)
    label = table.get("label", path.split(".")[-1])
    try:
        return PwlSegment(A=np.atleast_2d(a), B=np.atleast_2d(b),
                          U=np.atleast_1d(u), label=str(label))
    except ValueError as exc:
        raise _key_error(path, str(exc))


def _parse_model(doc, lenient, warnings_out):
    model_tbl = doc.get("model")
    if not isinstance(model_tbl, dict):
        raise ConfigError("config section [model] is required")
    kind = model_tbl.get("kind", "buck")
    comp_tbl = doc.get("comparator")
    if not isinstance(comp_tbl, dict):
        raise ConfigError("config section [comparator] is required")
    _check_unknown(comp_tbl, {"K", "Se", "vc"}, "comparator", lenient,
                   warnings_out)
    comparator = ComparatorSpec(
        K=_vector(comp_tbl, "K", "comparator"),
        Se=_number(comp_tbl, "Se", "comparator", default=0.0),
        vc_nominal=_number(comp_tbl, "vc", "comparator"),
    )
    pwm_tbl = doc.get("pwm")
    if not isinstance(pwm_tbl, dict):
        raise ConfigError("config section [pwm] is required")
    _check_unknown(pwm_tbl, {"kind", "fixed_duration"}, "pwm", lenient,
                   warnings_out)
    kind_str = _need(pwm_tbl, "kind", "pwm", (str,), "PWM kind")
    try:
        pwm_kind = PwmKind(kind_str)
    except ValueError:
        raise _key_error("pwm.kind", "unknown PWM kind %r (expected one of "
                         "COT, COFT, FF_TRAILING, FF_LEADING)" % kind_str)
    pwm = PwmLogic(kind=pwm_kind,
                   fixed_duration=_number(pwm_tbl, "fixed_duration", "pwm"))

    labels = model_tbl.get("state_labels", ())
    if labels and (not isinstance(labels, list)
                   or not all(isinstance(s, str) for s in labels)):
        raise _key_error("model.state_labels", "expected an array of strings")

    if kind == "buck":
        _check_unknown(model_tbl, _MODEL_BUCK_KEYS, "model", lenient,
                       warnings_out)
        try:
            model = build_buck(
                Vin=_number(model_tbl, "Vin", "model"),
                L_f=_number(model_tbl, "L_f", "model"),
                C_f=_number(model_tbl, "C_f", "model"),
                R=_number(model_tbl, "R", "model"),
                R_dcr=_number(model_tbl, "R_dcr", "model", default=0.0),
                R_esr=_number(model_tbl, "R_esr", "model", default=0.0),
                pwm=pwm, comparator=comparator,
                state_labels=tuple(labels) or ("i_L", "v_C"),
            )
        except ModelError as exc:
            raise ConfigError("in section [model]: %s" % exc)
    elif kind == "custom":
        _check_unknown(model_tbl, _MODEL_CUSTOM_KEYS, "model", lenient,
                       warnings_out)
        for sub in ("on_segment", "off_segment", "output"):
            if not isinstance(model_tbl.get(sub), dict):
                raise ConfigError(
                    "custom model requires section [model.%s]" % sub)
        on = _parse_segment(model_tbl["on_segment"], "model.on_segment",
                            lenient, warnings_out)
        off = _parse_segment(model_tbl["off_segment"], "model.off_segment",
                             lenient, warnings_out)
        out_tbl = model_tbl["output"]
        _check_unknown(out_tbl, {"C_phys"}, "model.output", lenient,
                       warnings_out)
        model = ConverterModel(
            on_segment=on, off_segment=off, comparator=comparator, pwm=pwm,
            C_phys=_vector(out_tbl, "C_phys", "model.output"),
            state_labels=tuple(labels),
        )
    else:
        raise _key_error("model.kind", "unknown model kind %r" % kind)

    diags = validate(model)
    if diags:
        raise ConfigError("model validation failed: " + "; ".join(diags))
    return model


def _parse_requests(doc, lenient, warnings_out):
    requests = []
    analysis = doc.get("analysis", {})
    if not isinstance(analysis, dict):
        raise ConfigError("config section [analysis] must hold sub-tables")
    for name, tbl in analysis.items():
        if name not in COMMANDS:
            msg = "unknown analysis command [analysis.%s]" % name
            if lenient:
                warnings_out.append(msg)
                continue
            raise ConfigError(msg)
        if not isinstance(tbl, dict):
            raise ConfigError("[analysis.%s] must be a table" % name)
        _check_unknown(tbl, _ANALYSIS_KEYS[name], "analysis.%s" % name,
                       lenient, warnings_out)
        params = dict(tbl)
        _validate_request(name, params)
        requests.append(AnalysisRequest(command=name, params=params))
    return requests


def _validate_request(name, params):
    path = "analysis.%s" % name
    if name in ("bode", "duty"):
        fmin = _number(params, "f_min_hz", path, default=0.0)
        fmax = _number(params, "f_max_hz", path, default=0.0)
        if params and ("f_min_hz" in params or "f_max_hz" in params):
            if not (0 < fmin < fmax):
                raise _key_error(path, "frequency grid requires "
                                 "0 < f_min_hz < f_max_hz")
        n = params.get("n_points", 15)
        if not isinstance(n, int) or n < 1:
            raise _key_error(path + ".n_points", "expected a positive integer")
    if name == "sweep":
        if "values" in params:
            if not isinstance(params["values"], list) or not params["values"]:
                raise _key_error(path + ".values", "expected a non-empty array")
        elif {"start", "stop", "count"} <= set(params):
            if not isinstance(params["count"], int) or params["count"] < 2:
                raise _key_error(path + ".count", "expected an integer >= 2")
        else:
            raise _key_error(path, "requires either values or start/stop/count")
        if not isinstance(params.get("parameter", "vc"), str):
            raise _key_error(path + ".parameter", "expected a string")
    if name == "duty":
        if "kind" in params and params["kind"] not in (
                "TRANSLATION", "FF_TRAILING_EDGE", "FF_LEADING_EDGE"):
            raise _key_error(path + ".kind", "unknown duty operator kind")
    if name == "simulate":
        n = params.get("n_cycles", 100)
        if not isinstance(n, int) or n < 1:
            raise _key_error(path + ".n_cycles", "expected a positive integer")
        pps = params.get("dense_per_segment", 1)
        if not isinstance(pps, int) or pps < 1:
            raise _key_error(path + ".dense_per_segment",
                             "expected a positive integer")


def parse_config(path, lenient=False):
    """Parse a configuration file.

    Returns (model, requests, warnings). Raises ConfigError with a
    line-numbered message on TOML syntax errors and a key-path message on
    schema violations.
    """
    try:
        with open(path, "rb") as fh:
            doc = _toml.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    except _toml.TOMLDecodeError as exc:
        raise ConfigError("config %s: %s" % (path, exc))
    warnings_out = []
    for section in doc:
        if section not in ("model", "comparator", "pwm", "analysis"):
            msg = "unknown section [%s]" % section
            if lenient:
                warnings_out.append(msg)
            else:
                raise ConfigError(msg + " (use --lenient to ignore)")
    model = _parse_model(doc, lenient, warnings_out)
    requests = _parse_requests(doc, lenient, warnings_out)
    return model, requests, warnings_out


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return "%.17g" % (value + 0.0 if value != 0 else 0.0)
    if isinstance(value, str):
        return '"%s"' % value.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError("cannot serialize %r" % (value,))


def _matrix_rows(m):
    return "[" + ", ".join(_fmt(list(row)) for row in np.atleast_2d(m)) + "]"


def serialize_config(model: ConverterModel, requests=()) -> str:
    """Deterministic TOML text for a model plus analysis requests.

    Always writes the custom-matrix form, which round-trips every model
    entry-wise regardless of how it was built.
    """
    lines = ["[model]", 'kind = "custom"']
    if model.state_labels:
        lines.append("state_labels = %s" % _fmt(list(model.state_labels)))
    for name in ("on_segment", "off_segment"):
        seg = getattr(model, name)
        lines += [
            "",
            "[model.%s]" % name,
            "A = %s" % _matrix_rows(seg.A),
            "B = %s" % _matrix_rows(seg.B),
            "U = %s" % _fmt(list(seg.U)),
            'label = %s' % _fmt(seg.label),
        ]
    lines += [
        "",
        "[model.output]",
        "C_phys = %s" % _fmt(list(model.C_phys)),
        "",
        "[comparator]",
        "K = %s" % _fmt(list(model.comparator.K)),
        "Se = %s" % _fmt(float(model.comparator.Se)),
        "vc = %s" % _fmt(float(model.comparator.vc_nominal)),
        "",
        "[pwm]",
        'kind = "%s"' % model.pwm.kind.value,
        "fixed_duration = %s" % _fmt(float(model.pwm.fixed_duration)),
    ]
    for req in requests:
        lines += ["", "[analysis.%s]" % req.command]
        for key in sorted(req.params):
            lines.append("%s = %s" % (key, _fmt(req.params[key])))
    return "\n".join(lines) + "\n"
