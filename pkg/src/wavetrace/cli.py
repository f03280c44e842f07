"""Configuration parsing, scenario orchestration, and deterministic output.

A run is described by one YAML document (see README for the schema).
Built-in scenarios populate every knob; any key in the document overrides
the scenario default.  Outputs are plain delimited text and JSON, written
with fixed formatting so identical inputs give byte-identical data files.
"""

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from . import analysis
from .analysis import AnalysisError
from .dynamics import Medium, PhysicalUnits, RunConfig, RunDiagnostics, RunRecord, run
from .field import SimulationAbort
from .profiles import GaussianComponent, LaunchProfile

TRAJECTORY_COLUMNS = ("t", "ray_id", "x", "z", "p_x", "p_z", "R", "G")
_FLOAT_FMT = "%.17g"

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_SIMULATION_ABORT = 2
EXIT_ANALYSIS_ERROR = 3


class ConfigError(ValueError):
    """Configuration document rejected; message carries the field path."""


@dataclass(frozen=True)
class AnalysisRequest:
    metric: str
    z: float | None = None
    n_bins: int | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    profile: LaunchProfile
    medium: Medium
    config: RunConfig
    analyses: tuple


_CONFIG_KEYS = (
    "eps", "dt", "n_steps", "n_rays", "span", "stencil", "amp_floor_ratio",
    "grad_cap", "smooth_len", "contact_fraction", "sponge_rays",
    "sponge_strength", "output_every", "eikonal",
)
_TOP_KEYS = ("scenario", "profile", "medium", "physical_units", "analyses") + _CONFIG_KEYS
_METRICS = ("waist-deviation", "far-field-slope", "uncertainty", "intensity",
            "fringes", "conservation")


def _builtin_scenarios():
    gaussian_profile = (dict(center=0.0, half_width=1.0, weight=1.0),)
    slit_profile = (dict(center=-4.0, half_width=1.0, weight=1.0),
                    dict(center=4.0, half_width=1.0, weight=1.0))
    return {
        # 85 rays over span 3 puts rays exactly on x = 0 and +-1 (the waist
        # trajectories); 6000 default steps reach three Rayleigh ranges.
        "gaussian": dict(
            profile=gaussian_profile, n_rays=85, span=3.0,
            analyses=({"metric": "waist-deviation"}, {"metric": "far-field-slope"},
                      {"metric": "uncertainty"}, {"metric": "conservation"}),
        ),
        "single-slit": dict(
            profile=gaussian_profile, n_rays=85, span=3.0,
            analyses=({"metric": "intensity"}, {"metric": "fringes"},
                      {"metric": "conservation"}),
        ),
        "two-slit": dict(
            profile=slit_profile, n_rays=281, span=7.0,
            analyses=({"metric": "intensity"}, {"metric": "fringes"},
                      {"metric": "conservation"}),
        ),
        "custom": dict(profile=None, analyses=({"metric": "conservation"},)),
    }


def _require_mapping(node, path):
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(node).__name__}")
    return node


def _check_keys(node, allowed, path):
    unknown = sorted(set(node) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")


def _parse_profile(node):
    if not isinstance(node, (list, tuple)) or not node:
        raise ConfigError("profile: expected a non-empty list of components")
    components = []
    for i, comp in enumerate(node):
        comp = _require_mapping(comp, f"profile[{i}]")
        _check_keys(comp, ("center", "half_width", "weight"), f"profile[{i}]")
        try:
            components.append(GaussianComponent(
                center=float(comp.get("center", 0.0)),
                half_width=float(comp.get("half_width", 1.0)),
                weight=float(comp.get("weight", 1.0)),
            ))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"profile[{i}]: {exc}") from exc
    return LaunchProfile(tuple(components))


def _parse_medium(node):
    node = _require_mapping(node, "medium")
    _check_keys(node, ("kind", "linear_x"), "medium")
    try:
        return Medium(kind=node.get("kind", "vacuum"),
                      linear_x=float(node.get("linear_x", 0.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"medium: {exc}") from exc


def _parse_analyses(node):
    if not isinstance(node, (list, tuple)):
        raise ConfigError("analyses: expected a list")
    requests = []
    for i, req in enumerate(node):
        req = _require_mapping(req, f"analyses[{i}]")
        _check_keys(req, ("metric", "z", "n_bins"), f"analyses[{i}]")
        metric = req.get("metric")
        if metric not in _METRICS:
            raise ConfigError(
                f"analyses[{i}].metric: {metric!r} not one of {', '.join(_METRICS)}")
        z = req.get("z")
        n_bins = req.get("n_bins")
        requests.append(AnalysisRequest(
            metric=metric,
            z=None if z is None else float(z),
            n_bins=None if n_bins is None else int(n_bins),
        ))
    return tuple(requests)


def parse_config(text):
    """Parse a YAML run document into a fully resolved Scenario.

    Unknown keys are rejected.  Scenario defaults fill everything that the
    document leaves unset; the returned Scenario has every value resolved
    (dt, span, analysis stations still marked "final" stay None until the
    run finishes).
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    doc = _require_mapping(doc, "document")
    _check_keys(doc, _TOP_KEYS, "document")

    name = doc.get("scenario", "custom")
    builtins = _builtin_scenarios()
    if name not in builtins:
        raise ConfigError(
            f"scenario: {name!r} not one of {', '.join(sorted(builtins))}")
    defaults = builtins[name]

    profile_node = doc.get("profile", defaults["profile"])
    if profile_node is None:
        raise ConfigError("profile: required for the custom scenario")
    profile = _parse_profile(profile_node)

    medium = _parse_medium(doc.get("medium", {"kind": "vacuum"}))
    analyses = _parse_analyses(doc.get("analyses", defaults["analyses"]))

    kwargs = {}
    for key in _CONFIG_KEYS:
        if key in doc:
            kwargs[key] = doc[key]
        elif key in defaults:
            kwargs[key] = defaults[key]
    units = doc.get("physical_units")
    if units is not None:
        units = _require_mapping(units, "physical_units")
        _check_keys(units, ("w0", "lambda0", "mass"), "physical_units")
        if "w0" not in units or "lambda0" not in units:
            raise ConfigError("physical_units: w0 and lambda0 are required (SI)")
        kwargs["physical_units"] = PhysicalUnits(
            w0=float(units["w0"]), lambda0=float(units["lambda0"]),
            mass=None if units.get("mass") is None else float(units["mass"]))
        # A document may give only physical units; eps then follows from them.
        if "eps" not in kwargs:
            kwargs["eps"] = kwargs["physical_units"].lambda0 / kwargs["physical_units"].w0
    try:
        config = RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    return Scenario(name=name, profile=profile, medium=medium,
                    config=config, analyses=analyses)


def serialize_scenario(scenario):
    """Canonical YAML for a Scenario; parse_config inverts it exactly."""
    doc = {
        "scenario": scenario.name,
        "profile": [dict(center=c.center, half_width=c.half_width, weight=c.weight)
                    for c in scenario.profile.components],
        "medium": {"kind": scenario.medium.kind, "linear_x": scenario.medium.linear_x},
        "analyses": [{k: v for k, v in asdict(a).items() if v is not None}
                     for a in scenario.analyses],
    }
    for key in _CONFIG_KEYS:
        value = getattr(scenario.config, key)
        if value is not None:
            doc[key] = value
    if scenario.config.physical_units is not None:
        doc["physical_units"] = {k: v for k, v in
                                 asdict(scenario.config.physical_units).items()
                                 if v is not None}
    return yaml.safe_dump(doc, sort_keys=True)


def config_hash(scenario):
    return hashlib.sha256(serialize_scenario(scenario).encode()).hexdigest()


def _write_trajectories(path, record, digest):
    lines = [f"# config_hash: {digest}",
             "# columns: " + ",".join(TRAJECTORY_COLUMNS)]
    for s in range(record.n_samples):
        t = record.t[s]
        for j in range(record.launch_x.size):
            row = (t, float(j), record.x[s, j], record.z[s, j],
                   record.px[s, j], record.pz[s, j],
                   record.r[s, j], record.g[s, j])
            lines.append(",".join(
                str(int(v)) if i == 1 else _FLOAT_FMT % v
                for i, v in enumerate(row)))
    path.write_text("\n".join(lines) + "\n")


def _write_intensity(path, record, digest):
    lines = [f"# config_hash: {digest}",
             "# columns: sample,t,z_mean,ray_id,x,intensity"]
    mean_z = record.mean_z
    for s in range(record.n_samples):
        for j in range(record.launch_x.size):
            lines.append(",".join((
                str(s), _FLOAT_FMT % record.t[s], _FLOAT_FMT % mean_z[s],
                str(j), _FLOAT_FMT % record.x[s, j],
                _FLOAT_FMT % (record.r[s, j] ** 2),
            )))
    path.write_text("\n".join(lines) + "\n")


def compute_metrics(record, analyses):
    """Evaluate the requested analysis operations on a finished record."""
    eps = record.config.eps
    final_z = float(record.mean_z[-1])
    metrics = {}
    for req in analyses:
        z_eval = final_z if req.z is None else req.z
        if req.metric == "waist-deviation":
            metrics["waist_deviation"] = analysis.waist_deviation(record, eps)
        elif req.metric == "far-field-slope":
            metrics["far_field_slope"] = analysis.far_field_slope(record)
            metrics["far_field_slope_expected"] = eps / math.pi
        elif req.metric == "uncertainty":
            report = analysis.uncertainty_metrics(record, eps, z_eval)
            metrics.setdefault("uncertainty", []).append(asdict(report))
        elif req.metric == "intensity":
            x, intensity = analysis.intensity_profile(record, z_eval, req.n_bins)
            metrics.setdefault("intensity", []).append(
                {"z_eval": z_eval, "n_points": int(x.size),
                 "peak": float(intensity.max())})
        elif req.metric == "fringes":
            x, intensity = analysis.intensity_profile(record, z_eval, req.n_bins)
            report = analysis.fringe_spacing(x, intensity)
            metrics["fringes"] = asdict(report)
        elif req.metric == "conservation":
            metrics["intensity_residual"] = analysis.conservation_residual(record)
    return metrics


def execute(scenario, out_dir):
    """Run the scenario and write all artifacts into out_dir.

    Returns the process exit status.  A simulation abort still writes the
    partial record, flagged as partial, and returns the abort status.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(scenario)
    started = time.perf_counter()
    abort_info = None
    try:
        record = run(scenario.profile, scenario.medium, scenario.config)
    except SimulationAbort as exc:
        record = exc.partial_record
        abort_info = record.abort
    wall_time = time.perf_counter() - started

    _write_trajectories(out / "trajectories.csv", record, digest)
    _write_intensity(out / "intensity.csv", record, digest)

    if abort_info is None:
        metrics = compute_metrics(record, scenario.analyses)
    else:
        metrics = {"abort": asdict(abort_info)}
    metrics["config_hash"] = digest
    metrics["partial"] = abort_info is not None
    (out / "metrics.json").write_text(
        json.dumps(metrics, indent=2, sort_keys=True) + "\n")

    metadata = {
        "config_hash": digest,
        "scenario": yaml.safe_load(serialize_scenario(scenario)),
        "partial": abort_info is not None,
        "abort": None if abort_info is None else asdict(abort_info),
        "diagnostics": asdict(record.diagnostics),
        "n_samples": record.n_samples,
        "wall_time_s": wall_time,
    }
    (out / "run_metadata.json").write_text(
        json.dumps(metadata, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if abort_info is None else EXIT_SIMULATION_ABORT


def load_record(run_dir):
    """Rebuild a RunRecord from a run directory's artifacts."""
    run_dir = Path(run_dir)
    meta = json.loads((run_dir / "run_metadata.json").read_text())
    scenario = parse_config(yaml.safe_dump(meta["scenario"]))
    data = np.loadtxt(run_dir / "trajectories.csv", delimiter=",", comments="#")
    data = np.atleast_2d(data)
    n_rays = int(data[:, 1].max()) + 1
    n_samples = data.shape[0] // n_rays
    cols = data.reshape(n_samples, n_rays, len(TRAJECTORY_COLUMNS))
    diagnostics = RunDiagnostics(**meta["diagnostics"])
    return RunRecord(
        config=scenario.config,
        medium=scenario.medium,
        t=cols[:, 0, 0],
        x=cols[:, :, 2],
        z=cols[:, :, 3],
        px=cols[:, :, 4],
        pz=cols[:, :, 5],
        r=cols[:, :, 6],
        g=cols[:, :, 7],
        launch_x=cols[0, :, 2].copy(),
        diagnostics=diagnostics,
    ), scenario, meta


def _analyze_command(args):
    record, scenario, meta = load_record(args.run_dir)
    if meta["partial"]:
        raise AnalysisError("run directory holds a partial (aborted) run")
    eps = record.config.eps
    metric = args.metric
    if metric == "waist-line":
        if args.z is None:
            raise AnalysisError("waist-line needs --z")
        result = {"z": args.z, "waist_line": analysis.waist_line(args.z, eps)}
    elif metric == "waist-samples":
        mean_z = record.mean_z
        result = [{"z": float(z), "waist_line": float(analysis.waist_line(z, eps))}
                  for z in mean_z]
    elif metric in _METRICS:
        request = AnalysisRequest(metric=metric, z=args.z)
        result = compute_metrics(record, (request,))
    else:
        raise AnalysisError(f"unknown metric {metric!r}")
    print(json.dumps(result, indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="wavetrace",
        description="Trajectory-based simulation of coupled monochromatic beams.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configuration and write artifacts")
    p_run.add_argument("config", help="path to the YAML run document")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--eikonal", action="store_true",
                       help="disable the coupling field (geometric-optics limit)")
    p_run.add_argument("--eps", type=float, help="override the wavelength ratio")

    p_val = sub.add_parser("validate", help="parse a configuration only")
    p_val.add_argument("config")

    p_an = sub.add_parser("analyze", help="post-process an existing run directory")
    p_an.add_argument("run_dir")
    p_an.add_argument("--metric", required=True,
                      help=f"one of {', '.join(_METRICS + ('waist-line', 'waist-samples'))}")
    p_an.add_argument("--z", type=float, default=None)

    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "validate"):
            try:
                text = Path(args.config).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from exc
            scenario = parse_config(text)
            if args.command == "validate":
                print(f"ok: scenario {scenario.name!r}, "
                      f"config hash {config_hash(scenario)}")
                return EXIT_OK
            overrides = {}
            if args.eikonal:
                overrides["eikonal"] = True
            if args.eps is not None:
                overrides["eps"] = args.eps
            if overrides:
                try:
                    scenario = replace(scenario,
                                       config=replace(scenario.config, **overrides))
                except ValueError as exc:
                    raise ConfigError(str(exc)) from exc
            return execute(scenario, args.out)
        return _analyze_command(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except SimulationAbort as exc:
        print(f"simulation abort: {exc}", file=sys.stderr)
        return EXIT_SIMULATION_ABORT
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS_ERROR


if __name__ == "__main__":
    sys.exit(main())
