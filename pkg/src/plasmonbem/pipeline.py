"""Batch pipeline: surface -> mesh -> operators -> spectrum -> reports.

Every artifact is written deterministically (no timestamps, %.17g floats,
LF endings), so identical configurations produce byte-identical CSV
bodies.  Assembly results are cached by a content hash of the geometry
and quadrature configuration.
"""

import json
import math
import os
import warnings
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .assembly import assemble_operator_pair, calderon_residual
from .calr import sweep_and_classify
from .errors import ConfigError, NumericalError
from .meshing import euler_characteristic, triangulate, write_mesh
from .plasmons import decay_report, potential_matrix
from .quadrature import triangle_rule
from .regions import build_region, write_region_csv
from .spectrum import solve_spectrum, weyl_fit
from .storage import content_key, load_matrix, save_matrix, sha256_file, write_csv
from .surfaces import build_surface, symbol_positivity, willmore_energy

_STAGE_CHAINS = {
    "mesh": ["mesh"],
    "spectrum": ["mesh", "assembly", "spectrum"],
    "plasmon": ["mesh", "assembly", "spectrum", "plasmon"],
    "decay": ["mesh", "assembly", "spectrum", "decay"],
    "calr": ["mesh", "assembly", "spectrum", "calr"],
    "report": ["mesh", "assembly", "spectrum", "decay", "plasmon", "calr"],
}

_CALR_TARGETS = {
    "sphere": lambda radius: (2.0 * radius, 0.0, 0.0),
    "oblate_spheroid": lambda _r: (math.sqrt(2.0) + 1.0, 0.0, 0.0),
    "clifford_torus": lambda _r: (math.sqrt(2.0) + 2.0, 0.0, 0.0),
}


@dataclass
class RunConfig:
    """Validated pipeline configuration (JSON keys mirror field names)."""

    surface: str = "sphere"
    radius: float = 1.0
    n_u: int = 25
    n_v: int = 40
    quad_degree: int = 5
    region: str = "auto"          # auto: X for the torus, Y otherwise
    eps: float = 0.0              # 0 = auto (typical panel side)
    grid_n: int = 64
    j_max: int = 150
    field_indices: tuple = ()     # empty = auto (outliers, else first two)
    calr_z: tuple = ()            # empty = auto per surface
    calr_a: tuple = (0.0, 0.0, 1.0)
    delta_per_decade: int = 40
    out: str = "out"
    cache: bool = True
    threads: int = 0              # 0 = leave BLAS threading alone
    deterministic: bool = False
    dump_eigenvectors: bool = False

    @classmethod
    def from_dict(cls, data):
        known = {f: None for f in cls.__dataclass_fields__}
        extra = sorted(set(data) - set(known))
        if extra:
            raise ConfigError(f"unknown config keys: {extra}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if self.surface not in ("sphere", "oblate_spheroid", "clifford_torus"):
            raise ConfigError(f"unknown surface {self.surface!r}")
        if self.radius <= 0:
            raise ConfigError("radius must be positive")
        if self.n_u < 4 or self.n_v < 4:
            raise ConfigError("mesh resolution must be >= 4 in both directions")
        if self.quad_degree not in (2, 4, 5):
            raise ConfigError("quadrature degree must be one of 2, 4, 5")
        if self.region not in ("auto", "X", "Y"):
            raise ConfigError("region must be auto, X, or Y")
        if self.eps < 0:
            raise ConfigError("eps must be positive (or 0 for auto)")
        if self.grid_n < 16:
            raise ConfigError("grid_n must be >= 16")
        if self.j_max < 1:
            raise ConfigError("j_max must be >= 1")
        if self.delta_per_decade < 4:
            raise ConfigError("delta_per_decade must be >= 4")
        if self.threads < 0:
            raise ConfigError("threads must be >= 0")
        self.field_indices = tuple(int(j) for j in self.field_indices)
        if any(j < 1 for j in self.field_indices):
            raise ConfigError("field indices are 1-based positive integers")
        self.calr_z = tuple(float(v) for v in self.calr_z)
        if self.calr_z and len(self.calr_z) != 3:
            raise ConfigError("calr_z must be a 3-vector")
        self.calr_a = tuple(float(v) for v in self.calr_a)
        if len(self.calr_a) != 3 or not np.linalg.norm(self.calr_a) > 0:
            raise ConfigError("calr_a must be a nonzero 3-vector")

    def region_kind(self):
        if self.region != "auto":
            return self.region
        return "X" if self.surface == "clifford_torus" else "Y"

    def calr_source(self):
        if self.calr_z:
            return np.array(self.calr_z)
        return np.array(_CALR_TARGETS[self.surface](self.radius))

    def surface_params(self):
        params = {"radius": self.radius} if self.surface == "sphere" else {}
        return params


def _thread_limit(config):
    limit = 1 if config.deterministic else (config.threads or None)
    if limit is None:
        return nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:  # pragma: no cover - optional dependency
        warnings.warn("threadpoolctl not installed; --threads ignored")
        return nullcontext()
    return threadpool_limits(limits=limit)


def run_pipeline(config, stage="report"):
    """Execute the pipeline up to ``stage``; returns the manifest dict.

    Artifacts land in ``config.out``.  On failure the manifest is still
    written with valid=false and the failing stage recorded, and the
    exception propagates.
    """
    if stage not in _STAGE_CHAINS:
        raise ConfigError(f"unknown stage {stage!r}; choices: {sorted(_STAGE_CHAINS)}")
    config.validate()
    os.makedirs(config.out, exist_ok=True)
    manifest = {
        "tool": "plasmonbem",
        "version": __version__,
        "valid": True,
        "config": asdict(config),
        "stages": {},
        "files": {},
        "diagnostics": {},
    }
    state = {}
    current = None
    try:
        with _thread_limit(config):
            for current in _STAGE_CHAINS[stage]:
                _STAGE_IMPL[current](config, state, manifest)
    except Exception as exc:
        manifest["valid"] = False
        manifest["failed_stage"] = current
        manifest["error"] = str(exc)
        _write_manifest(config, manifest)
        raise
    _write_manifest(config, manifest)
    return manifest


def _emit(config, manifest, name):
    path = os.path.join(config.out, name)
    manifest["files"][name] = sha256_file(path)
    return path


def _write_manifest(config, manifest):
    path = os.path.join(config.out, "manifest.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _stage_mesh(config, state, manifest):
    surface = build_surface(config.surface, **config.surface_params())
    mesh = triangulate(surface, config.n_u, config.n_v)
    state["surface"] = surface
    state["mesh"] = mesh
    state["eps"] = config.eps if config.eps > 0 else mesh.typical_side()
    write_mesh(mesh, os.path.join(config.out, "mesh.txt"))
    _emit(config, manifest, "mesh.txt")
    sym = symbol_positivity(surface, mesh)
    manifest["stages"]["mesh"] = {"hash": _geometry_key(config), "cached": False}
    manifest["diagnostics"].update(
        {
            "n_panels": mesh.n_panels,
            "total_area": mesh.total_area,
            "typical_side": mesh.typical_side(),
            "eps": state["eps"],
            "euler_characteristic": euler_characteristic(mesh),
            "willmore_energy": willmore_energy(surface, mesh),
            "min_kappa": sym.min_kappa,
            "strictly_convex": sym.strictly_convex,
        }
    )


def _geometry_key(config):
    return content_key(
        {
            "surface": config.surface,
            "params": config.surface_params(),
            "n_u": config.n_u,
            "n_v": config.n_v,
            "quad_degree": config.quad_degree,
            "format": 1,
        }
    )


def _stage_assembly(config, state, manifest):
    mesh = state["mesh"]
    key = _geometry_key(config)
    cache_dir = os.path.join(config.out, "cache")
    s_path = os.path.join(cache_dir, f"{key}_s.bin")
    k_path = os.path.join(cache_dir, f"{key}_k.bin")
    cached = config.cache and os.path.exists(s_path) and os.path.exists(k_path)
    if cached:
        s_mat = load_matrix(s_path)
        k_mat = load_matrix(k_path)
        if s_mat.shape != (mesh.n_panels, mesh.n_panels):
            cached = False
    if not cached:
        pair = assemble_operator_pair(mesh, triangle_rule(config.quad_degree))
        s_mat, k_mat = pair.s_matrix, pair.k_matrix
        if config.cache:
            os.makedirs(cache_dir, exist_ok=True)
            save_matrix(s_path, s_mat)
            save_matrix(k_path, k_mat)
    state["s_matrix"] = s_mat
    state["k_matrix"] = k_mat
    manifest["stages"]["assembly"] = {"hash": key, "cached": bool(cached)}
    manifest["diagnostics"]["calderon_residual"] = calderon_residual(s_mat, k_mat)
    manifest["diagnostics"]["calderon_residual_weighted"] = calderon_residual(
        mesh.areas[:, None] * s_mat, k_mat
    )


def _stage_spectrum(config, state, manifest):
    mesh = state["mesh"]
    spectrum = solve_spectrum(state["s_matrix"], state["k_matrix"], mesh.areas)
    state["spectrum"] = spectrum
    rank = spectrum.signed_rank()
    write_csv(
        os.path.join(config.out, "spectrum.csv"),
        ["index", "lambda", "is_negative"],
        (
            (i, float(spectrum.lambdas[i]), int(spectrum.lambdas[i] < 0))
            for i in range(spectrum.n)
        ),
    )
    _emit(config, manifest, "spectrum.csv")
    write_csv(
        os.path.join(config.out, "spectrum_signed_order.csv"),
        ["index", "lambda", "signed_rank"],
        (
            (i, float(spectrum.lambdas[i]), int(rank[i]))
            for i in range(spectrum.n)
        ),
    )
    _emit(config, manifest, "spectrum_signed_order.csv")
    if config.dump_eigenvectors:
        save_matrix(os.path.join(config.out, "eigenvectors.bin"), spectrum.vectors)
        _emit(config, manifest, "eigenvectors.bin")
    neg = np.abs(spectrum.lambdas[spectrum.negative_order()])
    residual = manifest["diagnostics"]["calderon_residual_weighted"]
    diag = {
        "lambda0": float(spectrum.lambdas[0]),
        "lambda_min_abs": float(np.min(np.abs(spectrum.lambdas))),
        "spectral_asym_ratio": spectrum.asym_ratio,
        "negative_count": int(len(neg)),
        "negative_above_residual": int(np.count_nonzero(neg > residual)),
    }
    surface, mesh = state["surface"], state["mesh"]
    try:
        fit = weyl_fit(spectrum, surface, mesh)
        diag["weyl"] = {
            "estimate": fit.c_estimate,
            "theory": fit.c_theory,
            "rel_deviation": fit.rel_deviation,
            "window": list(fit.window),
        }
    except ConfigError as exc:
        diag["weyl"] = {"skipped": str(exc)}
    manifest["diagnostics"].update(diag)
    manifest["stages"]["spectrum"] = {"hash": _geometry_key(config), "cached": False}


def _ensure_region(config, state):
    if "region" not in state:
        state["region"] = build_region(
            state["surface"], config.region_kind(), state["eps"], config.grid_n
        )
    return state["region"]


def _stage_decay(config, state, manifest):
    mesh, spectrum = state["mesh"], state["spectrum"]
    region = _ensure_region(config, state)
    write_region_csv(region, os.path.join(config.out, "region.csv"))
    _emit(config, manifest, "region.csv")
    pos_count = len(spectrum.positive_order())
    j_max = min(config.j_max, pos_count - 1)
    report = decay_report(mesh, spectrum, region, j_max)
    state["decay"] = report
    mask = np.zeros(j_max, dtype=np.int64)
    mask[report.outliers - 1] = 1
    write_csv(
        os.path.join(config.out, "norms.csv"),
        ["j", "lambda", "norm", "log_norm", "outlier", "axisymmetry"],
        (
            (
                j + 1,
                float(report.lambdas[j]),
                float(report.norms[j]),
                float(np.log(report.norms[j])),
                int(mask[j]),
                float(report.axisymmetry[j]),
            )
            for j in range(j_max)
        ),
    )
    _emit(config, manifest, "norms.csv")
    decay_json = {
        "j_max": int(j_max),
        "slope": report.slope,
        "intercept": report.intercept,
        "fit_window": list(report.fit_window),
        "outliers": [int(j) for j in report.outliers],
        "almost_sure": {
            str(s): {str(m): v for m, v in d.items()}
            for s, d in report.almost_sure.items()
        },
    }
    with open(os.path.join(config.out, "decay.json"), "w", newline="\n") as fh:
        json.dump(decay_json, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit(config, manifest, "decay.json")
    manifest["diagnostics"]["decay"] = {
        "slope": report.slope,
        "n_outliers": int(len(report.outliers)),
        "outliers": [int(j) for j in report.outliers],
    }
    manifest["stages"]["decay"] = {"hash": _geometry_key(config), "cached": False}


def _stage_plasmon(config, state, manifest):
    mesh, spectrum = state["mesh"], state["spectrum"]
    region = _ensure_region(config, state)
    indices = list(config.field_indices)
    if not indices:
        if "decay" in state and len(state["decay"].outliers):
            chosen = []
            for j in state["decay"].outliers[:4]:
                chosen.extend([int(j) - 1, int(j), int(j) + 1])
            indices = sorted({j for j in chosen if j >= 1})[:8]
        else:
            indices = [1, 2]
    pos = spectrum.positive_order()
    indices = [j for j in indices if j < len(pos)]
    pts = np.column_stack(
        [region.points[:, 0], np.zeros(len(region.points)), region.points[:, 1]]
    )
    g = potential_matrix(mesh, pts, min_distance=region.eps / 2.0)
    for j in indices:
        values = g @ spectrum.vectors[:, pos[j]]
        name = f"field_j{j:04d}.csv"
        write_csv(
            os.path.join(config.out, name),
            ["x", "z", "value"],
            (
                (float(region.points[k, 0]), float(region.points[k, 1]), float(values[k]))
                for k in range(len(values))
            ),
        )
        _emit(config, manifest, name)
    manifest["diagnostics"]["field_indices"] = [int(j) for j in indices]
    manifest["stages"]["plasmon"] = {"hash": _geometry_key(config), "cached": False}


def _stage_calr(config, state, manifest):
    mesh, spectrum = state["mesh"], state["spectrum"]
    z = config.calr_source()
    a = np.array(config.calr_a)
    a = a / np.linalg.norm(a)
    sweep = sweep_and_classify(
        spectrum, mesh, z, a, points_per_decade=config.delta_per_decade
    )
    state["calr"] = sweep
    write_csv(
        os.path.join(config.out, "calr_sweep.csv"),
        ["delta", "G", "E"],
        (
            (float(sweep.deltas[k]), float(sweep.g_values[k]), float(sweep.e_values[k]))
            for k in range(len(sweep.deltas))
        ),
    )
    _emit(config, manifest, "calr_sweep.csv")
    verdict = {
        "slope": sweep.slope,
        "clamp_floor": sweep.clamp_floor,
        "tail_fraction": sweep.tail_fraction,
        "verdict": sweep.verdict,
    }
    with open(os.path.join(config.out, "calr_verdict.json"), "w", newline="\n") as fh:
        json.dump(verdict, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _emit(config, manifest, "calr_verdict.json")
    manifest["diagnostics"]["calr"] = verdict
    manifest["stages"]["calr"] = {"hash": _geometry_key(config), "cached": False}


_STAGE_IMPL = {
    "mesh": _stage_mesh,
    "assembly": _stage_assembly,
    "spectrum": _stage_spectrum,
    "decay": _stage_decay,
    "plasmon": _stage_plasmon,
    "calr": _stage_calr,
}


def compare_report(manifest_a, manifest_b):
    """Side-by-side diff of two completed runs (paths to manifest.json)."""
    runs = []
    for path in (manifest_a, manifest_b):
        with open(path) as fh:
            runs.append(json.load(fh))
    for run, path in zip(runs, (manifest_a, manifest_b)):
        if not run.get("valid", False):
            raise ConfigError(f"{path}: run is marked invalid")
    a, b = runs
    out = {
        "runs": [
            {"surface": r["config"]["surface"], "n_panels": r["diagnostics"].get("n_panels")}
            for r in runs
        ],
        "warnings": [],
    }
    ja = a["diagnostics"].get("decay", {})
    jb = b["diagnostics"].get("decay", {})
    j_common = min(a["config"]["j_max"], b["config"]["j_max"])
    if a["config"]["j_max"] != b["config"]["j_max"]:
        out["warnings"].append(
            f"j_max differs ({a['config']['j_max']} vs {b['config']['j_max']}); "
            f"outlier counts truncated to j <= {j_common}"
        )
    comparison = {}
    if ja and jb:
        comparison["outlier_count"] = [
            sum(1 for j in ja.get("outliers", []) if j <= j_common),
            sum(1 for j in jb.get("outliers", []) if j <= j_common),
        ]
        comparison["decay_slope"] = [ja.get("slope"), jb.get("slope")]
    comparison["negative_count"] = [
        a["diagnostics"].get("negative_above_residual"),
        b["diagnostics"].get("negative_above_residual"),
    ]
    wa, wb = a["diagnostics"].get("weyl", {}), b["diagnostics"].get("weyl", {})
    comparison["weyl_deviation"] = [wa.get("rel_deviation"), wb.get("rel_deviation")]
    out["comparison"] = comparison
    out["differences"] = {
        key: vals for key, vals in comparison.items() if vals[0] != vals[1]
    }
    return out
