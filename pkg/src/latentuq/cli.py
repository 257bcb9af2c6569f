"""Command-line entry point.

Every command takes its parameters from defaults, then an optional JSON
``--config`` file, then explicit flags (one per config key). It writes its
artifacts plus ``manifest.json`` into ``out``. A manifest is itself a valid
``--config``: rerunning from it reproduces the artifacts byte for byte.

On failure a JSON object ``{"error", "message", "command"}`` is printed to
stderr and the exit code is 2 for configuration errors, 1 otherwise.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .affinity import DescriptorSet, read_matrix_csv, write_matrix_csv
from .alignment import ManifoldAlignment
from .datasets.images import (
    ANGLE_SETS,
    OBJECTS,
    ROTATIONS,
    ImageStack,
    augment,
    channel_descriptors,
    load_ppm,
    synthetic_stack,
    write_pgm,
)
from .datasets.population import PopulationParams, generate_population, read_population, write_population
from .estimator import LatentUncertainty
from .experiments import COMPONENTS, alpha_sweep, noise_table, population_strain
from .mesh.procrustes import procrustes_align
from .mesh.trimesh import save_mesh
from .pls import PLSModes

PRESETS = {"image": {"k_sigma": 5, "k_M": 5}, "strain": {"k_sigma": 10, "k_M": 10}}

ALIGN = {"mu": 1.0, "k_sigma": 10, "k_M": 10, "d": 2, "preset": ""}
UNCERTAINTY = {"n_draws": 100, "n_levels": 4, "ridge": 1e-3}

DEFAULTS = {
    "embed": {"descriptors": [], "names": [], "sample_ids": "", **ALIGN},
    "uncertainty": {
        "descriptors": [],
        "names": [],
        "sample_ids": "",
        "reference": "0",
        "image_shape": [],
        **ALIGN,
        **UNCERTAINTY,
    },
    "strain": {"population": "", "methods": ["long_axis", "heat", "geodesic"]},
    "noise-table": {
        "population": "",
        "method": "long_axis",
        "component": "longitudinal",
        "alpha": 1.0,
        "alphas": [0.1, 0.5, 1.0],
        "sweep_zone": 1,
        "baseline": "noise:0.01",
        **ALIGN,
        **UNCERTAINTY,
    },
    "pls": {"uncertainty": "", "population": "", "n_modes": 3, "t": 2.0},
    "gen-population": {k: v for k, v in PopulationParams().to_dict().items()},
    "coil-prepare": {
        "source": "synthetic",
        "object": "can",
        "angles": [],
        "rotations": list(ROTATIONS),
        "channels": ["R", "G"],
    },
}
for _cmd in DEFAULTS:
    DEFAULTS[_cmd].update({"out": "", "seed": 0})

PATH_KEYS = {"descriptors", "sample_ids", "population", "uncertainty"}


class ConfigError(ValueError):
    pass


# configuration --------------------------------------------------------------


def _coerce(key, value, default):
    try:
        if isinstance(default, bool):
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list):
            if not isinstance(value, (list, tuple)):
                value = [value]
            if default and isinstance(default[0], (int, float)) and not isinstance(default[0], bool):
                return [_coerce(key, v, default[0]) for v in value]
            return list(value)
        return "" if value is None else str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r}: cannot use {value!r} as {type(default).__name__}") from None


def load_config_file(path, command):
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    if "manifest_version" in data:
        if data.get("command") != command:
            raise ConfigError(f"{path} is a manifest for {data.get('command')!r}, not {command!r}")
        return dict(data["config"])
    return data


def resolve_config(command, file_config=None, overrides=None):
    defaults = DEFAULTS[command]
    cfg = dict(defaults)
    explicit = {}
    for source in (file_config or {}, overrides or {}):
        for key, value in source.items():
            if key not in defaults:
                raise ConfigError(f"unknown config key {key!r} for {command}; known: {sorted(defaults)}")
            explicit[key] = _coerce(key, value, defaults[key])
    cfg.update(explicit)
    preset = cfg.get("preset")
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        for key, value in PRESETS[preset].items():
            if key not in explicit:
                cfg[key] = value
    if not cfg["out"]:
        raise ConfigError("an output directory is required (--out)")
    for key in PATH_KEYS & set(cfg):
        if isinstance(cfg[key], list):
            cfg[key] = [str(Path(p).resolve()) for p in cfg[key]]
        elif cfg[key]:
            cfg[key] = str(Path(cfg[key]).resolve())
    cfg["out"] = str(Path(cfg["out"]).resolve())
    _validate(command, cfg)
    return cfg


def _validate(command, cfg):
    def need(cond, msg):
        if not cond:
            raise ConfigError(msg)

    if "mu" in cfg:
        need(cfg["mu"] >= 0, f"mu must be >= 0, got {cfg['mu']}")
        need(cfg["k_sigma"] >= 1, f"k_sigma must be >= 1, got {cfg['k_sigma']}")
        need(cfg["k_M"] >= 1, f"k_M must be >= 1, got {cfg['k_M']}")
        need(cfg["d"] >= 1, f"d must be >= 1, got {cfg['d']}")
    if "n_draws" in cfg:
        need(cfg["n_draws"] >= 2, f"n_draws must be >= 2, got {cfg['n_draws']}")
        need(cfg["n_levels"] >= 1, f"n_levels must be >= 1, got {cfg['n_levels']}")
        need(cfg["ridge"] > 0, f"ridge must be > 0, got {cfg['ridge']}")
    if "descriptors" in cfg:
        need(cfg["descriptors"], "at least one descriptor file is required (--descriptors)")
        for p in cfg["descriptors"]:
            need(Path(p).is_file(), f"descriptor file not found: {p}")
        if cfg["names"]:
            need(len(cfg["names"]) == len(cfg["descriptors"]), "one name per descriptor file is required")
    if cfg.get("sample_ids"):
        need(Path(cfg["sample_ids"]).is_file(), f"sample id file not found: {cfg['sample_ids']}")
    if command == "uncertainty":
        need(len(cfg["descriptors"]) >= 2, "uncertainty needs at least two descriptor files")
        if cfg["image_shape"]:
            need(len(cfg["image_shape"]) == 2, "image_shape must be [height, width]")
    if "population" in cfg:
        need(Path(cfg["population"], "population.json").is_file(), f"not a population directory: {cfg['population']!r}")
    if command == "noise-table":
        need(0 <= cfg["alpha"] <= 1, f"alpha must lie in [0, 1], got {cfg['alpha']}")
        need(all(0 <= a <= 1 for a in cfg["alphas"]), "alphas must lie in [0, 1]")
        need(cfg["component"] in COMPONENTS, f"component must be one of {COMPONENTS}")
        need(cfg["method"] in ("long_axis", "heat", "geodesic"), f"unknown method {cfg['method']!r}")
        b = cfg["baseline"]
        need(b.startswith("noise:") or b in ("long_axis", "heat", "geodesic"), f"baseline must be 'noise:<alpha>' or a method name, got {b!r}")
    if command == "strain":
        bad = [m for m in cfg["methods"] if m not in ("long_axis", "heat", "geodesic")]
        need(cfg["methods"] and not bad, f"unknown direction methods {bad}")
    if command == "pls":
        need(Path(cfg["uncertainty"]).is_file(), f"uncertainty file not found: {cfg['uncertainty']!r}")
        need(cfg["n_modes"] >= 1, "n_modes must be >= 1")
    if command == "coil-prepare":
        need(cfg["channels"] and all(c in "RGB" and len(c) == 1 for c in cfg["channels"]), "channels must be a subset of R, G, B")
        if cfg["source"] == "synthetic":
            need(cfg["object"] in OBJECTS, f"unknown synthetic object {cfg['object']!r}; expected one of {sorted(OBJECTS)}")
        else:
            need(Path(cfg["source"]).is_dir(), f"image directory not found: {cfg['source']}")
    if command == "gen-population":
        try:
            PopulationParams.from_dict({k: cfg[k] for k in PopulationParams().to_dict()}).validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def _align_params(cfg):
    return {"mu": cfg["mu"], "k_sigma": cfg["k_sigma"], "k_M": cfg["k_M"], "n_components": cfg["d"]}


# output bookkeeping -----------------------------------------------------------


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Run:
    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.inputs = []
        self.extra = {}

    def path(self, name):
        self.outputs.append(name)
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def add_input(self, path):
        self.inputs.append(str(path))

    def write_manifest(self):
        manifest = {
            "manifest_version": 1,
            "command": self.command,
            "package_version": __version__,
            "config": self.cfg,
            "inputs": {p: sha256_file(p) for p in sorted(set(self.inputs))},
            "outputs": {n: sha256_file(self.out / n) for n in sorted(set(self.outputs))},
            **self.extra,
        }
        with open(self.out / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return manifest


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_descriptors(run):
    cfg = run.cfg
    for p in cfg["descriptors"]:
        run.add_input(p)
    if cfg["sample_ids"]:
        run.add_input(cfg["sample_ids"])
    return DescriptorSet.from_csv(cfg["descriptors"], cfg["sample_ids"] or None, cfg["names"] or None)


def _write_embedding(run, ds, Z, eigenvalues):
    rows, ids = [], []
    for name, z in zip(ds.descriptor_names, Z):
        rows.append(z)
        ids.extend(f"{name}/{s}" for s in ds.sample_ids)
    header = [f"z_{j + 1}" for j in range(Z[0].shape[1])]
    write_matrix_csv(run.path("embedding.csv"), np.vstack(rows), header, sample_ids=ids)
    write_matrix_csv(run.path("eigenvalues.csv"), np.asarray(eigenvalues)[:, None], ["eigenvalue"])


# commands -------------------------------------------------------------------


def cmd_embed(run):
    ds = _load_descriptors(run)
    model = ManifoldAlignment(**_align_params(run.cfg)).fit(ds)
    _write_embedding(run, ds, model.embedding_.Z, model.eigenvalues_)
    run.extra["mode"] = "laplacian-eigenmaps mode" if ds.n_descriptors == 1 else "manifold-alignment mode"
    run.extra["alignment_energy"] = float(model.energy())


def cmd_uncertainty(run):
    cfg = run.cfg
    ds = _load_descriptors(run)
    ref = cfg["reference"]
    ref = int(ref) if ref.lstrip("-").isdigit() else ref
    est = LatentUncertainty(
        reference=ref,
        n_draws=cfg["n_draws"],
        n_levels=cfg["n_levels"],
        ridge=cfg["ridge"],
        random_state=cfg["seed"],
        **_align_params(cfg),
    ).fit(ds)
    header = [f"x_{j + 1}" for j in range(ds.n_features)]
    write_matrix_csv(run.path("uncertainty.csv"), est.uncertainty_, header, sample_ids=ds.sample_ids)
    write_matrix_csv(run.path("mean_uncertainty.csv"), est.uncertainty_.mean(axis=0), header)
    write_matrix_csv(run.path("baseline.csv"), est.baseline_, header, sample_ids=ds.sample_ids)
    write_matrix_csv(run.path("mean_baseline.csv"), est.baseline_.mean(axis=0), header)
    Z = est.alignment_.embedding_.Z
    _write_embedding(run, ds, Z, est.alignment_.eigenvalues_)
    if cfg["image_shape"]:
        h, w = (int(v) for v in cfg["image_shape"])
        if h * w != ds.n_features:
            raise ConfigError(f"image_shape {h}x{w} does not match {ds.n_features} descriptor dimensions")
        vmax = float(max(est.uncertainty_.max(), est.baseline_.max()))
        write_pgm(run.path("mean_uncertainty.pgm"), est.uncertainty_.mean(axis=0).reshape(h, w), vmax)
        write_pgm(run.path("mean_baseline.pgm"), est.baseline_.mean(axis=0).reshape(h, w), vmax)
        run.extra["pgm_scale"] = {"black": 0.0, "white": vmax}
    run.extra["reference"] = ds.descriptor_names[est.reference_index_]


def _population(run):
    pop_dir = Path(run.cfg["population"])
    pop = read_population(pop_dir)
    for s in pop.sample_ids:
        run.add_input(pop_dir / f"{s}_ed.off")
        run.add_input(pop_dir / f"{s}_es.off")
    run.add_input(pop_dir / "population.json")
    return pop


def _mean_mesh(pop):
    aligned = procrustes_align([s.ed for s in pop.subjects])
    return aligned, aligned[0].with_vertices(np.mean([m.vertices for m in aligned], axis=0))


def cmd_strain(run):
    pop = _population(run)
    methods = run.cfg["methods"]
    strains = population_strain(pop, methods)
    _, mean_mesh = _mean_mesh(pop)
    save_mesh(run.path("mean_ed.off"), mean_mesh)
    run.outputs.append("mean_ed.json")
    header = [f"v_{j + 1}" for j in range(mean_mesh.n_vertices)]
    for (m, c), X in sorted(strains.items()):
        write_matrix_csv(run.path(f"strain_{m}_{c}.csv"), X, header, sample_ids=pop.sample_ids)
        write_matrix_csv(run.path(f"mean_ed.strain_{m}_{c}.csv"), X.mean(axis=0)[:, None], ["value"])
    run.extra["methods"] = list(methods)


def cmd_noise_table(run):
    cfg = run.cfg
    pop = _population(run)
    methods = [cfg["method"]]
    b = cfg["baseline"]
    if not b.startswith("noise:") and b != cfg["method"]:
        methods.append(b)
    strains = population_strain(pop, methods)
    X = strains[cfg["method"], cfg["component"]]
    if b.startswith("noise:"):
        try:
            baseline = float(b.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"invalid baseline noise level in {b!r}") from None
    else:
        baseline = strains[b, cfg["component"]]
    params = {
        "n_draws": cfg["n_draws"],
        "n_levels": cfg["n_levels"],
        "ridge": cfg["ridge"],
        **_align_params(cfg),
    }
    zones = pop.zones
    table = noise_table(X, zones, pop.sample_ids, alpha=cfg["alpha"], seed=cfg["seed"], baseline=baseline, **params)
    labels, values = table.to_rows()
    if not b.startswith("noise:"):
        labels[-1] = f"baseline:{cfg['method']}_vs_{b}"
    header = [f"zone_{z}" for z in range(1, values.shape[1] + 1)]
    write_matrix_csv(run.path("noise_table.csv"), values, header, sample_ids=labels)
    maps, means = alpha_sweep(X, zones, pop.sample_ids, cfg["sweep_zone"], cfg["alphas"], cfg["seed"], **params)
    alpha_ids = [f"alpha_{a!r}" for a in cfg["alphas"]]
    write_matrix_csv(run.path("alpha_sweep_maps.csv"), maps, [f"v_{j + 1}" for j in range(maps.shape[1])], sample_ids=alpha_ids)
    write_matrix_csv(run.path("alpha_sweep_zones.csv"), means, header, sample_ids=alpha_ids)
    run.extra["diagonal_dominant"] = table.diagonal_dominant()


def cmd_pls(run):
    cfg = run.cfg
    pop = _population(run)
    run.add_input(cfg["uncertainty"])
    header, U, ids = read_matrix_csv(cfg["uncertainty"], with_ids=True)
    if ids is None:
        ids = pop.sample_ids
    order = {s: i for i, s in enumerate(pop.sample_ids)}
    missing = [s for s in ids if s not in order]
    if missing:
        raise ConfigError(f"uncertainty rows without a population subject: {missing[:5]}")
    aligned, mean_mesh = _mean_mesh(pop)
    S = np.stack([aligned[order[s]].vertices.ravel() for s in ids])
    model = PLSModes(n_modes=cfg["n_modes"]).fit(U, S)
    t = cfg["t"]
    for k in range(1, cfg["n_modes"] + 1):
        for sign, label in ((-1.0, "minus"), (1.0, "plus")):
            u, s = model.reconstruct_mode(k, sign * t)
            stem = f"mode_{k}_{label}"
            save_mesh(run.path(f"{stem}.off"), mean_mesh.with_vertices(s.reshape(-1, 3)))
            run.outputs.append(f"{stem}.json")
            write_matrix_csv(run.path(f"{stem}.uncertainty.csv"), u[:, None], ["value"])
    modes = np.arange(1, cfg["n_modes"] + 1)
    write_matrix_csv(
        run.path("explained_covariance.csv"),
        np.column_stack([modes, model.covariances_, model.explained_covariance_ratio_]),
        ["mode", "covariance", "explained_ratio"],
    )


def cmd_gen_population(run):
    cfg = run.cfg
    params = PopulationParams.from_dict({k: cfg[k] for k in PopulationParams().to_dict()})
    pop = generate_population(params, seed=cfg["seed"])
    files = write_population(pop, run.out)
    run.outputs.extend(files)
    run.outputs.extend(f[:-4] + ".json" for f in files)
    run.outputs.extend(["zones.csv", "population.json"])


def _read_ppm_dir(directory, obj, angles):
    """Views named ``<object>__<angle>.ppm``; all available angles when none are listed."""
    directory = Path(directory)
    found = {}
    for p in sorted(directory.glob(f"{obj}__*.ppm")):
        try:
            found[int(p.stem.split("__", 1)[1])] = p
        except ValueError:
            continue
    if not found:
        raise ConfigError(f"no {obj}__<angle>.ppm files in {directory}")
    angles = sorted(found) if not angles else [int(a) for a in angles]
    missing = [a for a in angles if a not in found]
    if missing:
        raise ConfigError(f"missing views for angles {missing} in {directory}")
    return [found[a] for a in angles], angles


def cmd_coil_prepare(run):
    cfg = run.cfg
    rotations = [int(r) for r in cfg["rotations"]]
    if cfg["source"] == "synthetic":
        angles = [int(a) for a in cfg["angles"]] or list(ANGLE_SETS.get(cfg["object"], range(0, 360, 5)))
        stack = synthetic_stack(cfg["object"], angles, rotations)
        mask = np.stack(stack.masks).reshape(len(stack), -1).astype(float)
    else:
        paths, angles = _read_ppm_dir(cfg["source"], cfg["object"], cfg["angles"])
        for p in paths:
            run.add_input(p)
        stack = augment([load_ppm(p) for p in paths], angles, rotations)
        stack = ImageStack(
            stack.images,
            stack.view_angles,
            stack.augmentation_angles,
            [f"{cfg['object']}_v{v:03d}_r{r:+d}" for v, r in zip(stack.view_angles, stack.augmentation_angles)],
        )
        mask = None
    ds = channel_descriptors(stack, cfg["channels"])
    h, w = stack.shape[:2]
    header = [f"p_{j + 1}" for j in range(h * w)]
    for name, X in zip(ds.descriptor_names, ds.descriptors):
        write_matrix_csv(run.path(f"{name}.csv"), X, header, sample_ids=ds.sample_ids)
    if mask is not None:
        write_matrix_csv(run.path("marker_mask.csv"), mask, header, sample_ids=ds.sample_ids)
    run.extra["image_shape"] = [h, w]
    run.extra["n_samples"] = len(stack)


COMMANDS = {
    "embed": cmd_embed,
    "uncertainty": cmd_uncertainty,
    "strain": cmd_strain,
    "noise-table": cmd_noise_table,
    "pls": cmd_pls,
    "gen-population": cmd_gen_population,
    "coil-prepare": cmd_coil_prepare,
}

HELP = {
    "embed": "jointly embed one or more descriptors (one descriptor: Laplacian eigenmaps)",
    "uncertainty": "per-sample uncertainty maps on a reference descriptor",
    "strain": "longitudinal and circumferential strain of a mesh population, per direction method",
    "noise-table": "mean uncertainty per zone with noise injected zone by zone",
    "pls": "joint modes of uncertainty and shape",
    "gen-population": "generate a synthetic ventricle population",
    "coil-prepare": "build channel descriptors from turntable images",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="latentuq", description="Local uncertainty from aligned latent spaces.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="JSON config or a manifest written by a previous run")
        for key, default in defaults.items():
            flag = "--" + key.replace("_", "-")
            kwargs = {"dest": key, "default": None}
            if isinstance(default, list):
                kwargs["nargs"] = "+"
            p.add_argument(flag, **kwargs)
    return parser


def run_command(command, cfg):
    run = Run(command, cfg)
    COMMANDS[command](run)
    return run.write_manifest()


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        _fail(None, exc, 2)
        return 2
    command = args.command
    try:
        file_cfg = load_config_file(args.config, command) if args.config else {}
        overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
        cfg = resolve_config(command, file_cfg, overrides)
        manifest = run_command(command, cfg)
    except ConfigError as exc:
        _fail(command, exc, 2)
        return 2
    except (ValueError, OSError, RuntimeError, KeyError, IndexError) as exc:
        _fail(command, exc, 1)
        return 1
    print(json.dumps({"command": command, "out": cfg["out"], "outputs": sorted(manifest["outputs"])}))
    return 0


def _fail(command, exc, code):
    msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(msg), "command": command, "exit_code": code}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
