"""Command-line front end: INI configuration, experiment dispatch, CSV
emission, and SVG heatmap rendering.

Every configuration key maps 1:1 onto a library parameter.  Outputs are
written only after a run finishes (single writer), with floats printed to
9 significant digits, so identical configurations produce byte-identical
files at any parallelism level.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import cnot_success_min, fit_rabi
from .dynamics import DecoherenceParams, IntegrationConfig, evolve_complex
from .errors import ChargeSimError, InsufficientData, ParseError, ValidationError
from .experiments import (
    TOMOGRAPHY_ORDER,
    ProbabilityMap,
    run_cnot_tomography,
    run_conditional_rabi,
    run_controlled_universal,
    run_fidelity_vs_j,
    run_lzs_control,
    run_sync_scan,
    run_two_pulse,
)
from .model import QubitPairParams, ghz_to_uev, thermal_initial_state
from .pulses import (
    lzs_schedule,
    rabi_schedule,
    sync_schedule,
    two_pulse_schedule,
    waveform_table,
)

SUBCOMMANDS = (
    "rabi",
    "conditional-rabi",
    "two-pulse",
    "tomography",
    "fidelity-vs-j",
    "lzs",
    "controlled-universal",
    "sync-scan",
    "fit",
)


# ---------------------------------------------------------------------------
# configuration schema


def _float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(key, f"not a number: {raw!r}") from None


def _positive(key, raw):
    v = _float(key, raw)
    if not v > 0:
        raise ValidationError(key, f"must be > 0, got {v:g}")
    return v


def _nonnegative(key, raw):
    v = _float(key, raw)
    if not v >= 0:
        raise ValidationError(key, f"must be >= 0, got {v:g}")
    return v


def _decay_time(key, raw):
    if str(raw).strip().lower() in ("inf", "infinity"):
        return math.inf
    return _positive(key, raw)


def _stride(key, raw):
    try:
        v = int(raw)
    except ValueError:
        raise ValidationError(key, f"not an integer: {raw!r}") from None
    if v < 0:
        raise ValidationError(key, f"must be >= 0, got {v}")
    return v


def _range(key, raw):
    """min:max:step axis specification."""
    parts = str(raw).split(":")
    if len(parts) != 3:
        raise ValidationError(key, f"expected min:max:step, got {raw!r}")
    lo, hi, step = (_float(key, p) for p in parts)
    if step <= 0:
        raise ValidationError(key, f"step must be > 0, got {step:g}")
    if hi < lo:
        raise ValidationError(key, f"max {hi:g} below min {lo:g}")
    return (lo, hi, step)


def _float_list(key, raw):
    parts = [p.strip() for p in str(raw).split(",") if p.strip()]
    if not parts:
        raise ValidationError(key, "list must be non-empty")
    return tuple(_float(key, p) for p in parts)


def _coupling_list(key, raw):
    values = _float_list(key, raw)
    for v in values:
        if v <= 0:
            raise ValidationError(key, f"couplings must be > 0, got {v:g}")
    return values


def _delay_list(key, raw):
    values = _float_list(key, raw)
    if len(set(values)) != len(values):
        raise ValidationError(key, "delays must be distinct")
    return values


def _tomo_mode(key, raw):
    v = str(raw).strip()
    if v not in ("scan", "pin"):
        raise ValidationError(key, f"must be 'scan' or 'pin', got {raw!r}")
    return v


# section -> key -> (default, parser); key names are unique across
# sections and double as RunConfig field names
_SCHEMA = {
    "qubit": {
        "delta_u_ghz": (6.2, _positive),
        "delta_l_ghz": (6.0, _positive),
        "j_uev": (119.0, _positive),
        "eps_u0_uev": (-200.0, _float),
        "eps_l0_uev": (-200.0, _float),
        "temperature_k": (0.010, _positive),
    },
    "decoherence": {
        "t2_star_ps": (1200.0, _decay_time),
        "gamma1_per_ps": (0.0, _nonnegative),
    },
    "integration": {
        "dt_ps": (0.05, _positive),
        "record_stride": (0, _stride),
    },
    "pulses": {
        "rise_ps": (65.0, _nonnegative),
        "fall_ps": (65.0, _nonnegative),
        "gap_ps": (100.0, _nonnegative),
        "sync_offset_ps": (200.0, _nonnegative),
        "drive_rise_ps": (2.5, _nonnegative),
        "drive_fall_ps": (2.5, _nonnegative),
    },
    "sweeps": {
        "rabi_w1": ((4.0, 1000.0, 4.0), _range),
        "conditional_w1": ((4.0, 1000.0, 8.0), _range),
        "conditional_eps_l": ((-300.0, 300.0, 50.0), _range),
        "two_pulse_w1": ((4.0, 500.0, 8.0), _range),
        "two_pulse_w2": ((4.0, 340.0, 8.0), _range),
        "tomography_w_i": ((4.0, 500.0, 8.0), _range),
        "tomography_mode": ("scan", _tomo_mode),
        "fidelity_j": ((10.0, 25.0, 50.0, 80.0, 119.0, 160.0, 200.0),
                       _coupling_list),
        "lzs_w1": ((4.0, 200.0, 4.0), _range),
        "lzs_a2": ((250.0, 500.0, 10.0), _range),
        "universal_eps_u": ((-150.0, -50.0, 4.0), _range),
        "universal_eps_l": ((-150.0, -50.0, 4.0), _range),
        "sync_delays": ((0.0, -100.0, -200.0, -300.0, -400.0), _delay_list),
        "sync_w1": ((10.0, 300.0, 20.0), _range),
        "sync_w2": ((10.0, 300.0, 20.0), _range),
    },
}

_DEFAULTS = {key: entry[0]
             for section in _SCHEMA.values() for key, entry in section.items()}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run settings; defaults reproduce the reference
    device (6.2/6.0 GHz tunnel splittings, J = 119 ueV, -200 ueV
    baselines, 10 mK, 1200 ps dephasing)."""

    delta_u_ghz: float = 6.2
    delta_l_ghz: float = 6.0
    j_uev: float = 119.0
    eps_u0_uev: float = -200.0
    eps_l0_uev: float = -200.0
    temperature_k: float = 0.010
    t2_star_ps: float = 1200.0
    gamma1_per_ps: float = 0.0
    dt_ps: float = 0.05
    record_stride: int = 0
    rise_ps: float = 65.0
    fall_ps: float = 65.0
    gap_ps: float = 100.0
    sync_offset_ps: float = 200.0
    drive_rise_ps: float = 2.5
    drive_fall_ps: float = 2.5
    rabi_w1: tuple = (4.0, 1000.0, 4.0)
    conditional_w1: tuple = (4.0, 1000.0, 8.0)
    conditional_eps_l: tuple = (-300.0, 300.0, 50.0)
    two_pulse_w1: tuple = (4.0, 500.0, 8.0)
    two_pulse_w2: tuple = (4.0, 340.0, 8.0)
    tomography_w_i: tuple = (4.0, 500.0, 8.0)
    tomography_mode: str = "scan"
    fidelity_j: tuple = (10.0, 25.0, 50.0, 80.0, 119.0, 160.0, 200.0)
    lzs_w1: tuple = (4.0, 200.0, 4.0)
    lzs_a2: tuple = (250.0, 500.0, 10.0)
    universal_eps_u: tuple = (-150.0, -50.0, 4.0)
    universal_eps_l: tuple = (-150.0, -50.0, 4.0)
    sync_delays: tuple = (0.0, -100.0, -200.0, -300.0, -400.0)
    sync_w1: tuple = (10.0, 300.0, 20.0)
    sync_w2: tuple = (10.0, 300.0, 20.0)

    def qubit_params(self) -> QubitPairParams:
        return QubitPairParams(
            ghz_to_uev(self.delta_u_ghz),
            ghz_to_uev(self.delta_l_ghz),
            self.j_uev,
            eps_u0=self.eps_u0_uev,
            eps_l0=self.eps_l0_uev,
            temperature=self.temperature_k,
        )

    def decoherence(self) -> DecoherenceParams:
        return DecoherenceParams(t2_star=self.t2_star_ps,
                                 gamma1=self.gamma1_per_ps)

    def integration(self) -> IntegrationConfig:
        return IntegrationConfig(dt=self.dt_ps,
                                 record_stride=self.record_stride)


def parse_config(text: str) -> RunConfig:
    """Parse INI-style configuration text; omitted keys take defaults."""
    cp = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(exc.lineno, "missing [section] header") from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if getattr(exc, "errors", None) else 0
        raise ParseError(lineno, str(exc)) from None
    except configparser.Error as exc:
        raise ParseError(getattr(exc, "lineno", 0) or 0, str(exc)) from None

    values = dict(_DEFAULTS)
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ValidationError(section, "unknown section")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ValidationError(f"{section}.{key}", "unknown key")
            values[key] = _SCHEMA[section][key][1](f"{section}.{key}", raw)
    return RunConfig(**values)


def serialize_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`: reparsing the output yields an
    equal RunConfig (floats via repr, so no precision is lost)."""
    data = asdict(cfg)
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, parser) in keys.items():
            value = data[key]
            if parser is _range:
                text = ":".join(repr(float(v)) for v in value)
            elif parser in (_float_list, _coupling_list, _delay_list):
                text = ",".join(repr(float(v)) for v in value)
            elif isinstance(value, str):
                text = value
            elif isinstance(value, int) and not isinstance(value, bool):
                text = repr(value)
            else:
                text = repr(float(value))
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# output plumbing

_COLORMAPS = {
    "viridis": ((68, 1, 84), (59, 82, 139), (33, 145, 140),
                (94, 201, 98), (253, 231, 37)),
    "gray": ((0, 0, 0), (255, 255, 255)),
}


@dataclass(frozen=True)
class OutputSpec:
    """Destination directory plus rendering options."""

    path: str = "."
    format: str = "csv"
    colormap: str = "viridis"
    pixel_size: int = 8

    def __post_init__(self):
        if self.format not in ("csv", "svg"):
            raise ValidationError("format", f"must be csv or svg, got {self.format!r}")
        if self.colormap not in _COLORMAPS:
            known = ", ".join(sorted(_COLORMAPS))
            raise ValidationError("colormap", f"must be one of {known}")
        if self.pixel_size < 1:
            raise ValidationError("pixel_size", "must be >= 1")


def _fmt(v) -> str:
    return format(float(v), ".9g")


def _write_text(path: str, text: str) -> str:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _write_rows(path: str, header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(_fmt(v) if not isinstance(v, str) else v for v in row)
                 for row in rows)
    return _write_text(path, "\n".join(lines) + "\n")


def write_map_csv(path: str, pmap: ProbabilityMap) -> str:
    """1-D sweeps: x,p_u0,p_l0.  2-D sweeps: x,y,p_u0,p_l0 (y outer)."""
    g = pmap.grid
    if g.y_values is None:
        rows = ((x, pmap.p_u0[0, j], pmap.p_l0[0, j])
                for j, x in enumerate(g.x_values))
        return _write_rows(path, "x,p_u0,p_l0", rows)
    rows = ((x, y, pmap.p_u0[i, j], pmap.p_l0[i, j])
            for i, y in enumerate(g.y_values)
            for j, x in enumerate(g.x_values))
    return _write_rows(path, "x,y,p_u0,p_l0", rows)


def write_trace_csv(path: str, x_values, p_u0, p_l0) -> str:
    rows = zip(x_values, p_u0, p_l0)
    return _write_rows(path, "x,p_u0,p_l0", rows)


def write_tomography_csv(base: str, traces: dict, matrix, widths) -> list:
    """Long-format matrix, square matrix, and width-resolved traces."""
    written = []
    rows = ((inp, out, matrix.d[i, j])
            for i, inp in enumerate(TOMOGRAPHY_ORDER)
            for j, out in enumerate(TOMOGRAPHY_ORDER))
    written.append(_write_rows(base + ".csv", "input,output,probability", rows))

    header = "input," + ",".join(TOMOGRAPHY_ORDER)
    rows = ((inp, *matrix.d[i]) for i, inp in enumerate(TOMOGRAPHY_ORDER))
    written.append(_write_rows(base + "_matrix.csv", header, rows))

    def trace_rows():
        for inp in TOMOGRAPHY_ORDER:
            t = traces[inp]
            for k, x in enumerate(widths):
                for j, out in enumerate(TOMOGRAPHY_ORDER):
                    yield (x, inp, out, t[k, j])

    written.append(_write_rows(base + "_traces.csv",
                               "x,input_label,output_state,probability",
                               trace_rows()))
    return written


def write_fidelity_csv(path: str, curve) -> str:
    rows = zip(curve.j_values, curve.f, curve.f_prime)
    return _write_rows(path, "j_uev,f,f_prime", rows)


def write_fit_csv(path: str, fit) -> str:
    header = "a0,t2_star_ps,freq_ghz,b0,a1,a2,residual_rms"
    row = (fit.a0, fit.t2_star, fit.freq, fit.b0, fit.a1, fit.a2,
           fit.residual_rms)
    return _write_rows(path, header, [row])


def write_waveform_csv(path: str, schedule, dt: float = 1.0) -> str:
    t, eps_u, eps_l = waveform_table(schedule, dt)
    return _write_rows(path, "t_ps,eps_u_uev,eps_l_uev", zip(t, eps_u, eps_l))


def _color(v: float, anchors) -> str:
    t = min(max(float(v), 0.0), 1.0) * (len(anchors) - 1)
    i = min(int(t), len(anchors) - 2)
    frac = t - i
    rgb = tuple(round(a + (b - a) * frac)
                for a, b in zip(anchors[i], anchors[i + 1]))
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def render_svg(pmap: ProbabilityMap, base: str, *, colormap: str = "viridis",
               pixel_size: int = 8) -> list:
    """One heatmap file per probability field ({base}_p_u0.svg and
    {base}_p_l0.svg); linear color scale over [0, 1]; byte-deterministic."""
    g = pmap.grid
    if g.y_values is None:
        raise ValidationError("format", "svg rendering requires a 2-D map")
    anchors = _COLORMAPS[colormap]
    ny, nx = pmap.p_u0.shape
    px = pixel_size
    ml, mr, mt, mb = 64, 12, 20, 44
    width, height = ml + nx * px + mr, mt + ny * px + mb
    written = []
    for name in ("p_u0", "p_l0"):
        values = getattr(pmap, name)
        parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<title>{name}</title>',
        ]
        for i in range(ny):
            y = mt + (ny - 1 - i) * px
            for j in range(nx):
                parts.append(
                    f'<rect x="{ml + j * px}" y="{y}" width="{px}" '
                    f'height="{px}" fill="{_color(values[i, j], anchors)}"/>'
                )
        font = 'font-family="sans-serif" font-size="11"'
        parts.append(f'<text x="{ml}" y="13" {font}>{name}</text>')
        parts.append(
            f'<text x="{ml + nx * px // 2}" y="{height - 8}" {font} '
            f'text-anchor="middle">{g.x_name} [{g.x_unit}]</text>')
        parts.append(
            f'<text x="14" y="{mt + ny * px // 2}" {font} text-anchor="middle" '
            f'transform="rotate(-90 14 {mt + ny * px // 2})">'
            f'{g.y_name} [{g.y_unit}]</text>')
        parts.append(
            f'<text x="{ml}" y="{height - 26}" {font} '
            f'text-anchor="middle">{g.x_values[0]:g}</text>')
        parts.append(
            f'<text x="{ml + nx * px}" y="{height - 26}" {font} '
            f'text-anchor="middle">{g.x_values[-1]:g}</text>')
        parts.append(
            f'<text x="{ml - 4}" y="{mt + ny * px}" {font} '
            f'text-anchor="end">{g.y_values[0]:g}</text>')
        parts.append(
            f'<text x="{ml - 4}" y="{mt + 10}" {font} '
            f'text-anchor="end">{g.y_values[-1]:g}</text>')
        parts.append("</svg>")
        written.append(_write_text(f"{base}_{name}.svg", "\n".join(parts) + "\n"))
    return written


# ---------------------------------------------------------------------------
# subcommands


def _axis(rng) -> np.ndarray:
    lo, hi, step = rng
    return np.arange(lo, hi + 0.5 * step, step)


def _require_csv(out: OutputSpec, subcommand: str) -> None:
    if out.format == "svg":
        raise ValidationError(
            "format", f"svg requires a 2-D map; {subcommand} output is not one"
        )


def _maybe_svg(pmap, out: OutputSpec, base: str) -> None:
    if out.format == "svg":
        render_svg(pmap, base, colormap=out.colormap,
                   pixel_size=out.pixel_size)


def _no_waveform(dump: bool, subcommand: str) -> None:
    if dump:
        raise ValidationError(
            "dump-waveform",
            f"{subcommand} schedules are calibrated at run time; "
            "no single representative waveform exists",
        )


def _cmd_rabi(cfg, out, ctx) -> str:
    _require_csv(out, "rabi")
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    w1 = _axis(cfg.rabi_w1)
    m = run_conditional_rabi(params, w1, (cfg.eps_l0_uev,), dec, cfg=icfg,
                             rise=cfg.drive_rise_ps, fall=cfg.drive_fall_ps,
                             parallel=ctx["parallel"])
    write_trace_csv(os.path.join(out.path, "rabi.csv"),
                    w1, m.p_u0[0], m.p_l0[0])
    if ctx["dump_waveform"]:
        sched = rabi_schedule(float(w1[-1]), eps_u0=cfg.eps_u0_uev,
                              eps_l0=cfg.eps_l0_uev, rise=cfg.drive_rise_ps,
                              fall=cfg.drive_fall_ps)
        write_waveform_csv(os.path.join(out.path, "waveform.csv"), sched)
    if ctx["trajectory_width"] is not None:
        sched = rabi_schedule(ctx["trajectory_width"], eps_u0=cfg.eps_u0_uev,
                              eps_l0=cfg.eps_l0_uev, rise=cfg.drive_rise_ps,
                              fall=cfg.drive_fall_ps)
        rho0 = thermal_initial_state(params, sched.eps_u0, sched.eps_l0)
        record = IntegrationConfig(dt=cfg.dt_ps,
                                   record_stride=cfg.record_stride or 20)
        _, traj = evolve_complex(rho0, sched, params, dec, record)
        _write_rows(os.path.join(out.path, "trajectory.csv"),
                    "t_ps,p_u0,p_l0", zip(traj.times, traj.p_u0, traj.p_l0))
    contrast = float(m.p_u0[0].max() - m.p_u0[0].min())
    try:
        freq = f"{fit_rabi(np.column_stack([w1, m.p_u0[0]])).freq:.4f} GHz"
    except InsufficientData:
        freq = "n/a"
    return f"rabi: contrast={contrast:.4f} freq={freq}"


def _cmd_conditional_rabi(cfg, out, ctx) -> str:
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    m = run_conditional_rabi(params, _axis(cfg.conditional_w1),
                             _axis(cfg.conditional_eps_l), dec, cfg=icfg,
                             rise=cfg.drive_rise_ps, fall=cfg.drive_fall_ps,
                             parallel=ctx["parallel"])
    write_map_csv(os.path.join(out.path, "conditional-rabi.csv"), m)
    _maybe_svg(m, out, os.path.join(out.path, "conditional-rabi"))
    if ctx["dump_waveform"]:
        sched = rabi_schedule(float(_axis(cfg.conditional_w1)[-1]),
                              eps_u0=cfg.eps_u0_uev, eps_l0=cfg.eps_l0_uev,
                              rise=cfg.drive_rise_ps, fall=cfg.drive_fall_ps)
        write_waveform_csv(os.path.join(out.path, "waveform.csv"), sched)
    return (f"conditional-rabi: p_u0 in [{m.p_u0.min():.4f}, "
            f"{m.p_u0.max():.4f}] rows={m.p_u0.shape[0]}")


def _cmd_two_pulse(cfg, out, ctx) -> str:
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    w1, w2 = _axis(cfg.two_pulse_w1), _axis(cfg.two_pulse_w2)
    m = run_two_pulse(params, w1, w2, cfg.gap_ps, dec, cfg=icfg,
                      rise=cfg.drive_rise_ps, fall=cfg.drive_fall_ps,
                      parallel=ctx["parallel"])
    write_map_csv(os.path.join(out.path, "two-pulse.csv"), m)
    _maybe_svg(m, out, os.path.join(out.path, "two-pulse"))
    if ctx["dump_waveform"]:
        sched = two_pulse_schedule(float(w1[-1]), float(w2[-1]), cfg.gap_ps,
                                   eps_u0=cfg.eps_u0_uev, eps_l0=cfg.eps_l0_uev,
                                   rise=cfg.drive_rise_ps,
                                   fall=cfg.drive_fall_ps)
        write_waveform_csv(os.path.join(out.path, "waveform.csv"), sched)
    return (f"two-pulse: p_u0 in [{m.p_u0.min():.4f}, {m.p_u0.max():.4f}] "
            f"p_l0 in [{m.p_l0.min():.4f}, {m.p_l0.max():.4f}]")


def _cmd_tomography(cfg, out, ctx) -> str:
    _require_csv(out, "tomography")
    _no_waveform(ctx["dump_waveform"], "tomography")
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    w_i = _axis(cfg.tomography_w_i)
    traces, matrix = run_cnot_tomography(params, w_i, dec,
                                         mode=cfg.tomography_mode,
                                         gap=cfg.gap_ps, cfg=icfg,
                                         rise=cfg.drive_rise_ps,
                                         fall=cfg.drive_fall_ps,
                                         parallel=ctx["parallel"])
    write_tomography_csv(os.path.join(out.path, "tomography"), traces,
                         matrix, w_i)
    return f"cnot_min={cnot_success_min(matrix):.3f}"


def _cmd_fidelity(cfg, out, ctx) -> str:
    _require_csv(out, "fidelity-vs-j")
    _no_waveform(ctx["dump_waveform"], "fidelity-vs-j")
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    j_values = ctx["j_override"] or cfg.fidelity_j
    curve = run_fidelity_vs_j(params, j_values, dec=dec, cfg=icfg,
                              rise=cfg.drive_rise_ps, fall=cfg.drive_fall_ps,
                              parallel=ctx["parallel"])
    write_fidelity_csv(os.path.join(out.path, "fidelity.csv"), curve)
    j = curve.j_values[-1]
    return f"F(J={j:g})={curve.f[-1]:.3f} F'(J={j:g})={curve.f_prime[-1]:.3f}"


def _cmd_lzs(cfg, out, ctx) -> str:
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    w1, a2 = _axis(cfg.lzs_w1), _axis(cfg.lzs_a2)
    m = run_lzs_control(params, w1, a2_values=a2, dec=dec, cfg=icfg,
                        rise=cfg.rise_ps, fall=cfg.fall_ps,
                        upper_rise=cfg.drive_rise_ps,
                        upper_fall=cfg.drive_fall_ps,
                        parallel=ctx["parallel"])
    write_map_csv(os.path.join(out.path, "lzs.csv"), m)
    _maybe_svg(m, out, os.path.join(out.path, "lzs"))
    if ctx["dump_waveform"]:
        sched = lzs_schedule(float(w1[-1]), a2=float(a2[-1]),
                             eps_u0=cfg.eps_u0_uev, eps_l0=cfg.eps_l0_uev,
                             rise=cfg.rise_ps, fall=cfg.fall_ps,
                             upper_rise=cfg.drive_rise_ps,
                             upper_fall=cfg.drive_fall_ps)
        write_waveform_csv(os.path.join(out.path, "waveform.csv"), sched)
    return (f"lzs: p_u0 in [{m.p_u0.min():.4f}, {m.p_u0.max():.4f}] "
            f"p_l0 in [{m.p_l0.min():.4f}, {m.p_l0.max():.4f}]")


def _cmd_controlled_universal(cfg, out, ctx) -> str:
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    m = run_controlled_universal(params, _axis(cfg.universal_eps_u),
                                 _axis(cfg.universal_eps_l), dec, cfg=icfg,
                                 rise=cfg.rise_ps, fall=cfg.fall_ps,
                                 parallel=ctx["parallel"])
    write_map_csv(os.path.join(out.path, "controlled-universal.csv"), m)
    _maybe_svg(m, out, os.path.join(out.path, "controlled-universal"))
    if ctx["dump_waveform"]:
        eps_u = _axis(cfg.universal_eps_u)
        eps_l = _axis(cfg.universal_eps_l)
        sched = lzs_schedule(100.0, a2=-cfg.eps_l0_uev, w2=100.0, gap=0.0,
                             eps_u0=float(eps_u[-1]), eps_l0=float(eps_l[-1]),
                             amp_u=-cfg.eps_u0_uev,
                             rise=cfg.rise_ps, fall=cfg.fall_ps)
        write_waveform_csv(os.path.join(out.path, "waveform.csv"), sched)
    return (f"controlled-universal: p_u0 in [{m.p_u0.min():.4f}, "
            f"{m.p_u0.max():.4f}] p_l0 in [{m.p_l0.min():.4f}, "
            f"{m.p_l0.max():.4f}]")


def _cmd_sync_scan(cfg, out, ctx) -> str:
    params, dec, icfg = cfg.qubit_params(), cfg.decoherence(), cfg.integration()
    w1, w2 = _axis(cfg.sync_w1), _axis(cfg.sync_w2)
    maps = run_sync_scan(params, cfg.sync_delays, dec, w1_values=w1,
                         w2_values=w2, sync_offset=cfg.sync_offset_ps,
                         cfg=icfg, rise=cfg.rise_ps, fall=cfg.fall_ps,
                         parallel=ctx["parallel"])
    best = 0.0
    for delay in cfg.sync_delays:
        m = maps[float(delay)]
        base = os.path.join(out.path, f"sync-scan_d{_fmt(delay)}")
        write_map_csv(base + ".csv", m)
        _maybe_svg(m, out, base)
        best = max(best, float((m.p_u0.max(axis=0) - m.p_u0.min(axis=0)).max()))
    if ctx["dump_waveform"]:
        sched = sync_schedule(float(cfg.sync_delays[0]), w1=float(w1[-1]),
                              w2=float(w2[-1]),
                              sync_offset=cfg.sync_offset_ps,
                              eps_u0=cfg.eps_u0_uev, eps_l0=cfg.eps_l0_uev,
                              rise=cfg.rise_ps, fall=cfg.fall_ps)
        write_waveform_csv(os.path.join(out.path, "waveform.csv"), sched)
    return (f"sync-scan: delays={len(cfg.sync_delays)} "
            f"conditioning_contrast_max={best:.4f}")


def _read_trace_csv(path: str) -> np.ndarray:
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) < 2:
                    raise ParseError(lineno, f"expected at least 2 columns, got {line!r}")
                try:
                    rows.append((float(parts[0]), float(parts[1])))
                except ValueError:
                    if lineno == 1:
                        continue  # header
                    raise ParseError(lineno, f"non-numeric row: {line!r}") from None
    except OSError as exc:
        raise ValidationError("in", f"cannot read {path}: {exc}") from None
    return np.array(rows)


def _cmd_fit(cfg, out, ctx) -> str:
    _require_csv(out, "fit")
    _no_waveform(ctx["dump_waveform"], "fit")
    if ctx["fit_input"] is not None:
        samples = _read_trace_csv(ctx["fit_input"])
    else:
        params, dec, icfg = (cfg.qubit_params(), cfg.decoherence(),
                             cfg.integration())
        w1 = _axis(cfg.rabi_w1)
        m = run_conditional_rabi(params, w1, (cfg.eps_l0_uev,), dec, cfg=icfg,
                                 rise=cfg.drive_rise_ps,
                                 fall=cfg.drive_fall_ps,
                                 parallel=ctx["parallel"])
        samples = np.column_stack([w1, m.p_u0[0]])
    fit = fit_rabi(samples)
    write_fit_csv(os.path.join(out.path, "fit.csv"), fit)
    block = "\n".join(
        f"{name}={_fmt(value)}"
        for name, value in (
            ("a0", fit.a0), ("t2_star_ps", fit.t2_star),
            ("freq_ghz", fit.freq), ("b0", fit.b0), ("a1", fit.a1),
            ("a2", fit.a2), ("residual_rms", fit.residual_rms),
        )
    )
    return (f"fit: freq={fit.freq:.6g} GHz t2_star={fit.t2_star:.6g} ps "
            f"rms={fit.residual_rms:.4g}\n{block}")


_COMMANDS = {
    "rabi": _cmd_rabi,
    "conditional-rabi": _cmd_conditional_rabi,
    "two-pulse": _cmd_two_pulse,
    "tomography": _cmd_tomography,
    "fidelity-vs-j": _cmd_fidelity,
    "lzs": _cmd_lzs,
    "controlled-universal": _cmd_controlled_universal,
    "sync-scan": _cmd_sync_scan,
    "fit": _cmd_fit,
}


def dispatch(subcommand: str, config: RunConfig, out: OutputSpec, *,
             parallel: int | None = None, j_override=None,
             fit_input: str | None = None,
             trajectory_width: float | None = None,
             dump_waveform: bool = False) -> int:
    """Run one subcommand; 0 on success, 1 on validation problems, 2 on
    runtime failures.  Writes files under ``out.path`` and prints a
    one-line summary to stdout."""
    if subcommand not in _COMMANDS:
        known = ", ".join(SUBCOMMANDS)
        print(f"unknown subcommand {subcommand!r}; usage: chargesim "
              f"{{{known}}} [options]", file=sys.stderr)
        return 1
    ctx = {
        "parallel": parallel,
        "j_override": j_override,
        "fit_input": fit_input,
        "trajectory_width": trajectory_width,
        "dump_waveform": dump_waveform,
    }
    try:
        os.makedirs(out.path, exist_ok=True)
        summary = _COMMANDS[subcommand](config, out, ctx)
    except (ParseError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ChargeSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


# ---------------------------------------------------------------------------
# argument parsing


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 with usage, not argparse's exit 2
        raise _UsageError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="chargesim",
        description="Coupled charge-qubit simulator: sweeps, tomography, "
                    "fidelity analysis, and fits.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS, metavar="subcommand",
                        help=f"one of: {', '.join(SUBCOMMANDS)}")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--format", default="csv", choices=("csv", "svg"),
                        help="output format (svg renders heatmaps for 2-D "
                             "maps in addition to CSV)")
    parser.add_argument("--colormap", default="viridis",
                        help="svg colormap (viridis or gray)")
    parser.add_argument("--pixel-size", type=int, default=8,
                        help="svg cell size in pixels")
    parser.add_argument("--parallel", type=int, default=None,
                        help="worker count (default: all processors); "
                             "never affects results")
    parser.add_argument("--j", default=None,
                        help="fidelity-vs-j: comma-separated couplings (ueV) "
                             "overriding the configured list")
    parser.add_argument("--in", dest="fit_input", default=None,
                        help="fit: CSV trace to fit instead of simulating")
    parser.add_argument("--trajectory", type=float, default=None,
                        metavar="WIDTH_PS",
                        help="rabi: also export the time-resolved trajectory "
                             "of one run at this pulse width")
    parser.add_argument("--dump-waveform", action="store_true",
                        help="also write the representative schedule's "
                             "waveform as CSV")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr, end="")
        return 1

    try:
        if args.config is not None:
            try:
                with open(args.config, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ValidationError("config", str(exc)) from None
            config = parse_config(text)
        else:
            config = RunConfig()
        out = OutputSpec(path=args.out, format=args.format,
                         colormap=args.colormap, pixel_size=args.pixel_size)
        j_override = (_coupling_list("j", args.j)
                      if args.j is not None else None)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    return dispatch(args.subcommand, config, out, parallel=args.parallel,
                    j_override=j_override, fit_input=args.fit_input,
                    trajectory_width=args.trajectory,
                    dump_waveform=args.dump_waveform)


if __name__ == "__main__":
    sys.exit(main())
