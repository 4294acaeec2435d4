"""Declarative experiment runner.

A config (YAML) describes one block structure: the nu x nu grid of symbols,
the per-block size laws, the eta sweep, and the analysis tasks to run.  The
runner assembles the matrices, builds the predicted distribution symbol,
computes the requested comparisons, and writes CSV value files, JSON
summaries, a JSON run manifest, and (optionally) rendered PNG panels.

Value files are byte-identical across reruns and across worker counts: all
computation is pure and the parent process writes every file in a fixed
order.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
import yaml

from . import __version__
from .assembly import (
    BlockStructureSpec,
    NotExactlyDivisible,
    SizeError,
    SizeLaw,
    assemble_full,
    assemble_replicated,
    assemble_trimmed,
    permutation_pi,
    toeplitz,
)
from .parsing import ParseError, parse_literal, parse_matrix_symbol, parse_scalar
from .spectra import (
    NotHermitian,
    SpectralSample,
    align_sorted,
    compare_sorted,
    eigenvalues_hermitian,
    hat_function,
    rearrangement,
    reference_counts,
    reference_curves,
    singular_values,
    truncated_polynomial,
    weyl_gap,
    zero_distribution_profile,
)
from .symbols import (
    MatrixSymbol,
    RationalRatioVector,
    ShapeMismatch,
    SymbolGrid,
    build_distribution_symbol,
)

__all__ = [
    "ValidationError",
    "MissingArtifact",
    "TASKS",
    "ExperimentConfig",
    "RunManifest",
    "load_config",
    "config_from_mapping",
    "builtin_config_names",
    "builtin_config_path",
    "run_experiment",
    "emit_plotdata",
]

TASKS = (
    "eig-compare",
    "sv-compare",
    "outlier-table",
    "perm-identity",
    "zero-dist",
    "weyl-gaps",
    "rearrangement",
)

class ValidationError(ValueError):
    """A config is structurally or semantically invalid."""


class MissingArtifact(KeyError):
    """A requested figure's value files are not present in the run."""


# ----------------------------------------------------------------------
# symbol nodes: the declarative composition language inside configs
# ----------------------------------------------------------------------


def _build_symbol_node(node, defs: Mapping[str, MatrixSymbol], where: str) -> MatrixSymbol:
    try:
        if isinstance(node, str):
            return parse_scalar(node)
        if not isinstance(node, Mapping) or len(node) != 1:
            raise ValidationError(
                f"{where}: a symbol is an expression string or a one-key mapping "
                f"(grid/coefficients/ref/sum/product/adjoint/reverse/shift/scale)")
        op, arg = next(iter(node.items()))
        if op == "grid":
            return parse_matrix_symbol(arg)
        if op == "coefficients":
            return parse_matrix_symbol(arg)
        if op == "ref":
            if arg not in defs:
                raise ValidationError(f"{where}: unknown symbol reference {arg!r}")
            return defs[arg]
        if op == "adjoint":
            return _build_symbol_node(arg, defs, where).adjoint()
        if op == "reverse":
            return _build_symbol_node(arg, defs, where).reverse()
        if op == "sum":
            parts = [_build_symbol_node(item, defs, where) for item in arg]
            if not parts:
                raise ValidationError(f"{where}: empty sum")
            total = parts[0]
            for part in parts[1:]:
                total = total + part
            return total
        if op == "product":
            parts = [_build_symbol_node(item, defs, where) for item in arg]
            if not parts:
                raise ValidationError(f"{where}: empty product")
            total = parts[0]
            for part in parts[1:]:
                total = total @ part
            return total
        if op == "shift":
            if not isinstance(arg, Mapping) or set(arg) != {"of", "by"}:
                raise ValidationError(f"{where}: shift takes {{of: node, by: angle}}")
            phi = parse_literal(arg["by"])
            if phi.imag != 0:
                raise ValidationError(f"{where}: shift angle must be real")
            return _build_symbol_node(arg["of"], defs, where).shift(phi.real)
        if op == "scale":
            if not isinstance(arg, Mapping) or set(arg) != {"of", "by"}:
                raise ValidationError(f"{where}: scale takes {{of: node, by: constant}}")
            return _build_symbol_node(arg["of"], defs, where).scaled(parse_literal(arg["by"]))
        raise ValidationError(f"{where}: unknown symbol operation {op!r}")
    except (ParseError, ShapeMismatch) as exc:
        raise ValidationError(f"{where}: {exc}") from exc


def _parse_size_law(data, where: str) -> SizeLaw:
    if not isinstance(data, Mapping) or "scale" not in data:
        raise ValidationError(f"{where}: a size law is {{scale, offset?, sqrt?}}")
    unknown = set(data) - {"scale", "offset", "sqrt"}
    if unknown:
        raise ValidationError(f"{where}: unknown size-law keys {sorted(unknown)}")
    try:
        scale = Fraction(str(data["scale"]))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"{where}: bad scale {data['scale']!r}") from exc
    offset = data.get("offset", 0)
    if not isinstance(offset, int):
        raise ValidationError(f"{where}: offset must be an integer, got {offset!r}")
    add_sqrt = bool(data.get("sqrt", False))
    try:
        return SizeLaw(scale, offset, add_sqrt)
    except SizeError as exc:
        raise ValidationError(f"{where}: {exc}") from exc


@dataclass(frozen=True)
class ReferenceGroup:
    """``curves`` consecutive spectral curves sampled on a common grid size."""

    curves: int
    points: SizeLaw


def _parse_reference(data, where: str) -> tuple[ReferenceGroup, ...]:
    if not isinstance(data, Mapping) or set(data) - {"groups"}:
        raise ValidationError(f"{where}: reference takes {{groups: [...]}}")
    groups = []
    for idx, item in enumerate(data.get("groups", [])):
        sub = f"{where}.groups[{idx}]"
        if not isinstance(item, Mapping) or set(item) != {"curves", "points"}:
            raise ValidationError(f"{sub}: a group is {{curves: int, points: size-law}}")
        curves = item["curves"]
        if not isinstance(curves, int) or curves < 1:
            raise ValidationError(f"{sub}: curves must be a positive integer")
        groups.append(ReferenceGroup(curves, _parse_size_law(item["points"], sub)))
    if not groups:
        raise ValidationError(f"{where}: reference needs at least one group")
    return tuple(groups)


def _parse_test_function(data, where: str) -> tuple[str, Callable]:
    if isinstance(data, Mapping) and set(data) == {"hat"}:
        a, b = data["hat"]
        fn = hat_function(float(a), float(b))
        return fn.__name__, fn
    if isinstance(data, Mapping) and set(data) == {"poly"}:
        spec = data["poly"]
        if not isinstance(spec, Mapping) or set(spec) != {"coefficients", "support"}:
            raise ValidationError(f"{where}: poly takes {{coefficients, support}}")
        a, b = spec["support"]
        fn = truncated_polynomial([float(c) for c in spec["coefficients"]],
                                  float(a), float(b))
        return fn.__name__, fn
    raise ValidationError(f"{where}: a test function is {{hat: [a, b]}} or "
                          f"{{poly: {{coefficients, support}}}}")


# ----------------------------------------------------------------------
# config
# ----------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    label: str
    description: str
    structure: BlockStructureSpec
    etas: tuple[int, ...]
    tasks: tuple[str, ...]
    h: float
    eps: float
    weyl_kind: str
    weyl_functions: tuple[tuple[str, Callable], ...]
    rearrangement_resolution: int
    rearrangement_kind: str
    reference_groups: tuple[ReferenceGroup, ...] | None
    raw: dict

    _symbol_cache: dict = field(default_factory=dict, repr=False)

    @property
    def distribution_symbol(self) -> MatrixSymbol:
        if "F" not in self._symbol_cache:
            self._symbol_cache["F"] = build_distribution_symbol(
                self.structure.symbols, self.structure.ratios)
        return self._symbol_cache["F"]

    @property
    def curve_total(self) -> int:
        s, t = self.structure.block_shape
        return min(s, t) * self.structure.ratios.lcm_denominator

    def reference_counts_for(self, eta: int, spectrum_size: int) -> tuple[int, ...]:
        """Grid sizes, one per spectral curve (ascending curve index)."""
        if self.reference_groups is None:
            return reference_counts(spectrum_size, self.curve_total)
        counts: list[int] = []
        for group in self.reference_groups:
            counts.extend([group.points.block_count(eta)] * group.curves)
        return tuple(counts)

    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.raw, sort_keys=True).encode()).hexdigest()


def config_from_mapping(data: Mapping, source: str = "<mapping>") -> ExperimentConfig:
    """Validate a raw mapping and build the typed config."""
    if not isinstance(data, Mapping):
        raise ValidationError(f"{source}: config must be a mapping")
    known = {"label", "description", "nu", "shape", "defs", "symbols", "sizes",
             "etas", "tasks", "parameters", "reference"}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"{source}: unknown top-level keys {sorted(unknown)}")
    for key in ("label", "nu", "shape", "symbols", "sizes", "etas", "tasks"):
        if key not in data:
            raise ValidationError(f"{source}: missing required key {key!r}")

    label = str(data["label"])
    nu = data["nu"]
    if not isinstance(nu, int) or nu < 2:
        raise ValidationError(
            f"{source}.nu: must be an integer >= 2 (a single block is plain "
            f"Toeplitz analysis, which this runner does not cover); got {nu!r}")
    shape = data["shape"]
    if (not isinstance(shape, Sequence) or len(shape) != 2
            or not all(isinstance(v, int) and v >= 1 for v in shape)):
        raise ValidationError(f"{source}.shape: must be [s, t] with positive integers")
    s, t = shape

    defs: dict[str, MatrixSymbol] = {}
    for name, node in (data.get("defs") or {}).items():
        defs[name] = _build_symbol_node(node, defs, f"{source}.defs.{name}")

    rows = data["symbols"]
    if not isinstance(rows, Sequence) or len(rows) != nu:
        raise ValidationError(f"{source}.symbols: need {nu} rows, got "
                              f"{len(rows) if isinstance(rows, Sequence) else type(rows).__name__}")
    grid_rows = []
    for i, row in enumerate(rows):
        if not isinstance(row, Sequence) or isinstance(row, str) or len(row) != nu:
            raise ValidationError(f"{source}.symbols[{i}]: need {nu} entries")
        built_row = []
        for j, node in enumerate(row):
            sym = _build_symbol_node(node, defs, f"{source}.symbols[{i}][{j}]")
            if sym.shape != (s, t):
                raise ValidationError(
                    f"{source}.symbols[{i}][{j}]: shape {sym.shape} does not match "
                    f"the declared block shape {(s, t)}")
            built_row.append(sym)
        grid_rows.append(built_row)
    grid = SymbolGrid.from_rows(grid_rows)

    size_data = data["sizes"]
    if not isinstance(size_data, Sequence) or len(size_data) != nu:
        raise ValidationError(f"{source}.sizes: need {nu} size laws")
    laws = tuple(_parse_size_law(item, f"{source}.sizes[{i}]")
                 for i, item in enumerate(size_data))
    structure = BlockStructureSpec(grid, laws, label=label)

    etas = data["etas"]
    if (not isinstance(etas, Sequence) or not etas
            or not all(isinstance(e, int) and e >= 2 for e in etas)):
        raise ValidationError(f"{source}.etas: need a non-empty list of integers >= 2")
    etas = tuple(etas)
    for eta in etas:
        for i, law in enumerate(laws):
            try:
                law.block_count(eta)
            except SizeError as exc:
                raise ValidationError(f"{source}.sizes[{i}] at eta={eta}: {exc}") from exc

    tasks = data["tasks"]
    if not isinstance(tasks, Sequence) or not tasks:
        raise ValidationError(f"{source}.tasks: need a non-empty list")
    for task in tasks:
        if task not in TASKS:
            raise ValidationError(f"{source}.tasks: unknown task {task!r}; "
                                  f"choose from {', '.join(TASKS)}")
    tasks = tuple(dict.fromkeys(tasks))

    params = data.get("parameters") or {}
    unknown = set(params) - {"h", "eps", "weyl", "rearrangement"}
    if unknown:
        raise ValidationError(f"{source}.parameters: unknown keys {sorted(unknown)}")
    h = float(params.get("h", 0.1))
    eps = float(params.get("eps", 0.1))
    if h <= 0 or eps <= 0:
        raise ValidationError(f"{source}.parameters: h and eps must be positive")

    weyl = params.get("weyl") or {}
    weyl_kind = weyl.get("kind", "sv")
    if weyl_kind not in ("eig", "sv"):
        raise ValidationError(f"{source}.parameters.weyl.kind: must be 'eig' or 'sv'")
    weyl_functions = tuple(
        _parse_test_function(item, f"{source}.parameters.weyl.functions[{i}]")
        for i, item in enumerate(weyl.get("functions", [])))
    if "weyl-gaps" in tasks and not weyl_functions:
        raise ValidationError(f"{source}: task weyl-gaps needs parameters.weyl.functions")

    rearr = params.get("rearrangement") or {}
    rearr_resolution = int(rearr.get("resolution", 512))
    rearr_kind = rearr.get("kind", "sv")
    if rearr_resolution < 1 or rearr_kind not in ("eig", "sv"):
        raise ValidationError(f"{source}.parameters.rearrangement: bad resolution/kind")

    reference_groups = None
    if "reference" in data and data["reference"] is not None:
        reference_groups = _parse_reference(data["reference"], f"{source}.reference")

    config = ExperimentConfig(
        label=label,
        description=str(data.get("description", "")),
        structure=structure,
        etas=etas,
        tasks=tasks,
        h=h,
        eps=eps,
        weyl_kind=weyl_kind,
        weyl_functions=weyl_functions,
        rearrangement_resolution=rearr_resolution,
        rearrangement_kind=rearr_kind,
        reference_groups=reference_groups,
        raw={k: v for k, v in data.items()},
    )

    # semantic checks that need the built symbols
    r = config.curve_total
    if reference_groups is not None:
        total_curves = sum(g.curves for g in reference_groups)
        if total_curves != r:
            raise ValidationError(
                f"{source}.reference: groups cover {total_curves} curves, but the "
                f"distribution symbol has {r} spectral curves")
        for eta in etas:
            for idx, group in enumerate(reference_groups):
                try:
                    points = group.points.block_count(eta)
                except SizeError as exc:
                    raise ValidationError(
                        f"{source}.reference.groups[{idx}] at eta={eta}: {exc}") from exc
                if points < 2:
                    raise ValidationError(
                        f"{source}.reference.groups[{idx}] at eta={eta}: grids need "
                        f"at least 2 points, got {points}")
    needs_hermitian = [task for task in tasks if task == "eig-compare"]
    if weyl_kind == "eig" and "weyl-gaps" in tasks:
        needs_hermitian.append("weyl-gaps")
    if needs_hermitian and not config.distribution_symbol.is_hermitian_valued():
        raise ValidationError(
            f"{source}: task(s) {needs_hermitian} need a Hermitian-valued "
            f"distribution symbol; this structure's is not")
    return config


def load_config(path) -> ExperimentConfig:
    """Load and validate a YAML experiment config."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"{path}: invalid YAML: {exc}") from exc
    return config_from_mapping(data, source=str(path))


def builtin_config_names() -> list[str]:
    base = Path(__file__).parent / "configs"
    return sorted(p.stem for p in base.glob("*.yaml"))


def builtin_config_path(name: str) -> Path:
    path = Path(__file__).parent / "configs" / f"{name}.yaml"
    if not path.exists():
        raise ValidationError(
            f"no builtin config {name!r}; available: {', '.join(builtin_config_names())}")
    return path


# ----------------------------------------------------------------------
# task computations (pure; run in workers)
# ----------------------------------------------------------------------


def _task_compare(config: ExperimentConfig, eta: int, kind: str) -> dict:
    A = assemble_full(config.structure, eta)
    if kind == "eig":
        empirical = eigenvalues_hermitian(A)
    else:
        empirical = singular_values(A)
    counts = config.reference_counts_for(eta, len(empirical))
    F = config.distribution_symbol
    curves = reference_curves(F, counts, kind)
    pooled = np.sort(np.concatenate([vals for _, vals in curves]), kind="stable")
    origin = "symbol-eigenvalue-samples" if kind == "eig" else "symbol-singular-value-samples"
    reference = SpectralSample(pooled, origin, {"counts": counts})
    emp_aligned, ref_aligned = align_sorted(empirical, reference)
    report = compare_sorted(emp_aligned, ref_aligned, kind)
    report.policy = {
        "reference_counts": [int(c) for c in counts],
        "spectrum_size": len(empirical),
        "trimmed_empirical": len(empirical) - len(emp_aligned),
        "trimmed_reference": len(reference) - len(ref_aligned),
        "alignment": "trim-largest",
    }
    report.meta["eta"] = eta
    report.meta["matrix_shape"] = list(A.shape)
    return {
        "empirical": emp_aligned.values,
        "reference": ref_aligned.values,
        "counts": counts,
        "curves": [(thetas, np.sort(vals, kind="stable")) for thetas, vals in curves],
        "report": report.to_dict(),
    }


def _task_outlier(config: ExperimentConfig, eta: int) -> dict:
    A = assemble_full(config.structure, eta)
    empirical = singular_values(A)
    counts = config.reference_counts_for(eta, len(empirical))
    F = config.distribution_symbol
    curves = reference_curves(F, counts, "sv")
    pooled = np.sort(np.concatenate([vals for _, vals in curves]), kind="stable")
    reference = SpectralSample(pooled, "symbol-singular-value-samples", {"counts": counts})
    emp_aligned, ref_aligned = align_sorted(empirical, reference)
    out = np.abs(emp_aligned.values - ref_aligned.values)
    d_n = len(empirical)
    ratio = float(np.count_nonzero(out >= config.h)) / d_n
    return {"eta": eta, "spectrum_size": d_n, "reference_size": len(reference),
            "ratio": ratio}


def _task_perm_identity(config: ExperimentConfig, eta: int) -> dict:
    grid = config.structure.symbols
    s, t = grid.block_shape
    nu = grid.nu
    equal = BlockStructureSpec(grid, tuple(SizeLaw(1) for _ in range(nu)))
    A = assemble_full(equal, eta)
    uniform = RationalRatioVector.from_ratios([Fraction(1, nu)] * nu)
    F = build_distribution_symbol(grid, uniform)
    left = permutation_pi(nu * eta, nu, s)
    right = permutation_pi(nu * eta, nu, t)
    deviation = float(np.max(np.abs(left @ A.data @ right.T - toeplitz(F, eta))))
    return {"eta": eta, "max_abs_deviation": deviation}


def _task_zero_dist(config: ExperimentConfig, eta: int) -> dict:
    full = assemble_full(config.structure, eta)
    trimmed = assemble_trimmed(config.structure, eta)
    rows = []
    frac = zero_distribution_profile([full.data - trimmed.data], config.eps)[0]
    rows.append({"variant": "trimmed", "eta": eta, "size": full.shape[0],
                 "fraction": frac})
    try:
        replicated = assemble_replicated(config.structure, eta)
    except NotExactlyDivisible:
        rows.append({"variant": "replicated", "eta": eta, "size": full.shape[0],
                     "fraction": None})
    else:
        frac = zero_distribution_profile([full.data - replicated.data], config.eps)[0]
        rows.append({"variant": "replicated", "eta": eta, "size": full.shape[0],
                     "fraction": frac})
    return {"rows": rows}


def _task_weyl(config: ExperimentConfig, eta: int) -> dict:
    A = assemble_full(config.structure, eta)
    F = config.distribution_symbol
    names = [name for name, _ in config.weyl_functions]
    fns = [fn for _, fn in config.weyl_functions]
    gaps = weyl_gap(A, F, fns, kind=config.weyl_kind)
    return {"eta": eta, "kind": config.weyl_kind,
            "gaps": list(zip(names, [float(g) for g in gaps]))}


def _compute_eta_payload_raw(raw_config: dict, eta: int, tasks: Sequence[str]) -> dict:
    # process-pool entry point: configs themselves hold closures, so workers
    # rebuild them from the plain mapping
    return _compute_eta_payload(config_from_mapping(raw_config), eta, tasks)


def _compute_eta_payload(config: ExperimentConfig, eta: int, tasks: Sequence[str]) -> dict:
    """Everything the runner needs for one eta."""
    payload: dict[str, dict] = {}
    runners = {
        "eig-compare": lambda: _task_compare(config, eta, "eig"),
        "sv-compare": lambda: _task_compare(config, eta, "sv"),
        "outlier-table": lambda: _task_outlier(config, eta),
        "perm-identity": lambda: _task_perm_identity(config, eta),
        "zero-dist": lambda: _task_zero_dist(config, eta),
        "weyl-gaps": lambda: _task_weyl(config, eta),
    }
    for task in tasks:
        if task == "rearrangement":
            continue
        started = time.perf_counter()
        try:
            result = runners[task]()
        except (NotHermitian, SizeError, ValueError, ArithmeticError) as exc:
            payload[task] = {"status": "failed",
                             "error": f"{type(exc).__name__}: {exc}",
                             "elapsed_s": time.perf_counter() - started}
        else:
            payload[task] = {"status": "ok", "result": result,
                             "elapsed_s": time.perf_counter() - started}
    return payload


# ----------------------------------------------------------------------
# manifest
# ----------------------------------------------------------------------


@dataclass
class RunManifest:
    label: str
    config_hash: str
    version: str
    out_dir: str
    policies: dict
    entries: list
    figure_ids: list
    partial: bool

    def to_dict(self) -> dict:
        return {
            "tool": "blocktoep",
            "version": self.version,
            "label": self.label,
            "config_hash": self.config_hash,
            "out_dir": self.out_dir,
            "policies": self.policies,
            "entries": self.entries,
            "figure_ids": self.figure_ids,
            "partial": self.partial,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        data = json.loads(Path(path).read_text())
        return cls(label=data["label"], config_hash=data["config_hash"],
                   version=data["version"], out_dir=data["out_dir"],
                   policies=data["policies"], entries=data["entries"],
                   figure_ids=data["figure_ids"], partial=data["partial"])


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


# ----------------------------------------------------------------------
# the runner
# ----------------------------------------------------------------------


def run_experiment(config: ExperimentConfig, out_dir, workers: int = 1,
                   tasks: Sequence[str] | None = None,
                   figures: bool = True) -> RunManifest:
    """Run all requested tasks over the eta sweep and write the artifacts.

    Task failures are recorded in the manifest (``partial`` goes true)
    without aborting the remaining work.  Returns the saved manifest.
    """
    if tasks is None:
        selected = config.tasks
    else:
        for task in tasks:
            if task not in TASKS:
                raise ValidationError(f"unknown task {task!r}")
        selected = tuple(t for t in config.tasks if t in set(tasks))
        if not selected:
            raise ValidationError(
                f"task filter {sorted(tasks)} leaves nothing to run "
                f"(config has {list(config.tasks)})")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label = config.label

    eta_tasks = tuple(t for t in selected if t != "rearrangement")
    payloads: dict[int, dict] = {}
    if eta_tasks:
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {eta: pool.submit(_compute_eta_payload_raw, config.raw,
                                            eta, eta_tasks)
                           for eta in config.etas}
                payloads = {eta: fut.result() for eta, fut in futures.items()}
        else:
            payloads = {eta: _compute_eta_payload(config, eta, eta_tasks)
                        for eta in config.etas}

    from . import plotting  # deferred: forces the non-interactive backend lazily

    entries: list[dict] = []
    figure_ids: list[str] = []
    partial = False

    def record(eta, task, status, files, elapsed, error=None):
        nonlocal partial
        if status != "ok":
            partial = True
        entries.append({"eta": eta, "task": task, "status": status,
                        "error": error, "files": [f.name for f in files],
                        "elapsed_s": round(elapsed, 6)})

    # per-eta value files
    for task in selected:
        if task in ("eig-compare", "sv-compare"):
            kind = "eig" if task == "eig-compare" else "sv"
            for eta in config.etas:
                slot = payloads[eta][task]
                if slot["status"] != "ok":
                    record(eta, task, "failed", [], slot["elapsed_s"], slot["error"])
                    continue
                result = slot["result"]
                stem = f"{label}__{task}__eta{eta}"
                files = []
                compare_path = out_dir / f"{stem}.csv"
                _write_csv(compare_path, ["index", "matrix", "symbol", "absdiff"],
                           ((str(i), _fmt(m), _fmt(r), _fmt(abs(m - r)))
                            for i, (m, r) in enumerate(zip(result["empirical"],
                                                           result["reference"]))))
                files.append(compare_path)
                curves_path = out_dir / f"{stem}__curves.csv"
                _write_csv(curves_path, ["curve", "point", "theta", "value"],
                           ((str(l), str(i), _fmt(th), _fmt(v))
                            for l, (thetas, vals) in enumerate(result["curves"])
                            for i, (th, v) in enumerate(zip(thetas, vals))))
                files.append(curves_path)
                summary_path = out_dir / f"{stem}__summary.json"
                summary_path.write_text(
                    json.dumps(result["report"], indent=2, sort_keys=True) + "\n")
                files.append(summary_path)
                if figures:
                    png = out_dir / f"{stem}.png"
                    plotting.render_compare_panel(
                        result["curves"], result["empirical"], result["counts"],
                        title=f"{label} {task} eta={eta}", path=png, kind=kind)
                    files.append(png)
                figure_ids.append(f"{task}--eta{eta}")
                record(eta, task, "ok", files, slot["elapsed_s"])
        elif task == "weyl-gaps":
            rows, files, ok = [], [], True
            elapsed = 0.0
            for eta in config.etas:
                slot = payloads[eta][task]
                elapsed += slot["elapsed_s"]
                if slot["status"] != "ok":
                    record(eta, task, "failed", [], slot["elapsed_s"], slot["error"])
                    ok = False
                    continue
                for name, gap in slot["result"]["gaps"]:
                    rows.append((str(eta), name, _fmt(gap)))
            if rows or ok:
                path = out_dir / f"{label}__weyl-gaps.csv"
                _write_csv(path, ["eta", "function", "gap"], rows)
                files.append(path)
                if figures and rows:
                    png = out_dir / f"{label}__weyl-gaps.png"
                    plotting.render_weyl_gaps(rows, title=f"{label} weyl gaps", path=png)
                    files.append(png)
                figure_ids.append("weyl-gaps")
                record(None, task, "ok", files, elapsed)
        elif task == "outlier-table":
            rows, files = [], []
            elapsed, ok = 0.0, True
            for eta in config.etas:
                slot = payloads[eta][task]
                elapsed += slot["elapsed_s"]
                if slot["status"] != "ok":
                    record(eta, task, "failed", [], slot["elapsed_s"], slot["error"])
                    ok = False
                    continue
                r = slot["result"]
                rows.append((str(r["eta"]), str(r["spectrum_size"]),
                             str(r["reference_size"]), _fmt(r["ratio"])))
            if rows or ok:
                path = out_dir / f"{label}__outlier-table.csv"
                _write_csv(path, ["eta", "spectrum_size", "reference_size", "ratio"], rows)
                files.append(path)
                if figures and rows:
                    png = out_dir / f"{label}__outlier-table.png"
                    plotting.render_outlier_table(rows, title=f"{label} outlier ratio",
                                                  path=png)
                    files.append(png)
                figure_ids.append("outlier-table")
                record(None, task, "ok", files, elapsed)
        elif task == "perm-identity":
            rows, files = [], []
            elapsed, ok = 0.0, True
            for eta in config.etas:
                slot = payloads[eta][task]
                elapsed += slot["elapsed_s"]
                if slot["status"] != "ok":
                    record(eta, task, "failed", [], slot["elapsed_s"], slot["error"])
                    ok = False
                    continue
                r = slot["result"]
                rows.append((str(r["eta"]), _fmt(r["max_abs_deviation"])))
            if rows or ok:
                path = out_dir / f"{label}__perm-identity.csv"
                _write_csv(path, ["eta", "max_abs_deviation"], rows)
                files.append(path)
                record(None, task, "ok", files, elapsed)
        elif task == "zero-dist":
            rows, files = [], []
            elapsed, ok = 0.0, True
            for eta in config.etas:
                slot = payloads[eta][task]
                elapsed += slot["elapsed_s"]
                if slot["status"] != "ok":
                    record(eta, task, "failed", [], slot["elapsed_s"], slot["error"])
                    ok = False
                    continue
                for row in slot["result"]["rows"]:
                    frac = "" if row["fraction"] is None else _fmt(row["fraction"])
                    rows.append((row["variant"], str(row["eta"]), str(row["size"]), frac))
            if rows or ok:
                path = out_dir / f"{label}__zero-dist.csv"
                _write_csv(path, ["variant", "eta", "size", "fraction"], rows)
                files.append(path)
                if figures and rows:
                    png = out_dir / f"{label}__zero-dist.png"
                    plotting.render_zero_dist(rows, title=f"{label} zero-distribution",
                                              path=png)
                    files.append(png)
                figure_ids.append("zero-dist")
                record(None, task, "ok", files, elapsed)
        elif task == "rearrangement":
            started = time.perf_counter()
            files = []
            try:
                rearranged = rearrangement(config.distribution_symbol,
                                           config.rearrangement_resolution,
                                           config.rearrangement_kind)
            except (NotHermitian, ValueError) as exc:
                record(None, task, "failed", [], time.perf_counter() - started,
                       f"{type(exc).__name__}: {exc}")
                continue
            path = out_dir / f"{label}__rearrangement.csv"
            _write_csv(path, ["position", "value"],
                       ((_fmt(x), _fmt(v))
                        for x, v in zip(rearranged.positions, rearranged.values)))
            files.append(path)
            if figures:
                png = out_dir / f"{label}__rearrangement.png"
                plotting.render_rearrangement(rearranged, title=f"{label} rearrangement",
                                              path=png)
                files.append(png)
            figure_ids.append("rearrangement")
            record(None, task, "ok", files, time.perf_counter() - started)

    manifest = RunManifest(
        label=label,
        config_hash=config.config_hash(),
        version=__version__,
        out_dir=str(out_dir),
        policies={
            "h": config.h,
            "eps": config.eps,
            "alignment": "trim-largest",
            "reference": ("explicit-groups" if config.reference_groups is not None
                          else "equal-split-to-spectrum-size"),
            "weyl_kind": config.weyl_kind,
        },
        entries=entries,
        figure_ids=sorted(set(figure_ids)),
        partial=partial,
    )
    manifest.save(out_dir / f"{label}__manifest.json")
    return manifest


# ----------------------------------------------------------------------
# plot data extraction (gnuplot-friendly two-column series)
# ----------------------------------------------------------------------


def _read_csv_rows(path: Path) -> list[dict]:
    import csv as _csv
    with open(path, newline="") as fh:
        return list(_csv.DictReader(fh))


def emit_plotdata(manifest: RunManifest, figure_id: str) -> list[Path]:
    """Write two-column (index-fraction, value) series for one figure panel.

    For compare panels each spectral curve becomes a pair of files (symbol
    samples and the matching chunk of the sorted matrix spectrum); aggregated
    panels become one file per series.  A gnuplot script stub accompanies the
    series.  Raises MissingArtifact when the run lacks the needed value files.
    """
    out_dir = Path(manifest.out_dir)
    if figure_id not in manifest.figure_ids:
        raise MissingArtifact(
            f"figure {figure_id!r} not in this run; available: {manifest.figure_ids}")
    dest = out_dir / "plotdata"
    dest.mkdir(exist_ok=True)
    label = manifest.label
    written: list[Path] = []

    def write_series(name: str, pairs) -> Path:
        path = dest / f"{figure_id}__{name}.dat"
        with open(path, "w") as fh:
            fh.write("# index-fraction value\n")
            for x, y in pairs:
                fh.write(f"{_fmt(x)} {_fmt(y)}\n")
        written.append(path)
        return path

    if "--eta" in figure_id:
        task, eta_part = figure_id.split("--eta")
        stem = f"{label}__{task}__eta{eta_part}"
        compare_path = out_dir / f"{stem}.csv"
        curves_path = out_dir / f"{stem}__curves.csv"
        if not compare_path.exists() or not curves_path.exists():
            raise MissingArtifact(f"value files for {figure_id!r} are missing")
        compare_rows = _read_csv_rows(compare_path)
        matrix_sorted = [float(r["matrix"]) for r in compare_rows]
        curve_rows = _read_csv_rows(curves_path)
        by_curve: dict[int, list[float]] = {}
        for row in curve_rows:
            by_curve.setdefault(int(row["curve"]), []).append(float(row["value"]))
        offset = 0
        for l in sorted(by_curve):
            vals = by_curve[l]
            g = len(vals)
            write_series(f"curve{l}__symbol",
                         (((i + 0.5) / g, v) for i, v in enumerate(vals)))
            chunk = matrix_sorted[offset:offset + g]
            write_series(f"curve{l}__matrix",
                         (((i + 0.5) / max(len(chunk), 1), v)
                          for i, v in enumerate(chunk)))
            offset += g
    else:
        task = figure_id
        path = out_dir / f"{label}__{task}.csv"
        if not path.exists():
            raise MissingArtifact(f"value file for {figure_id!r} is missing")
        rows = _read_csv_rows(path)
        if task == "outlier-table":
            write_series("ratio", ((float(r["eta"]), float(r["ratio"])) for r in rows))
        elif task == "zero-dist":
            variants: dict[str, list[tuple[float, float]]] = {}
            for r in rows:
                if r["fraction"]:
                    variants.setdefault(r["variant"], []).append(
                        (float(r["eta"]), float(r["fraction"])))
            for variant, pairs in sorted(variants.items()):
                write_series(variant, pairs)
        elif task == "weyl-gaps":
            fns: dict[str, list[tuple[float, float]]] = {}
            for r in rows:
                fns.setdefault(r["function"], []).append(
                    (float(r["eta"]), float(r["gap"])))
            for i, (name, pairs) in enumerate(sorted(fns.items())):
                write_series(f"fn{i}", pairs)
        elif task == "rearrangement":
            write_series("values", ((float(r["position"]), float(r["value"]))
                                    for r in rows))
        else:
            raise MissingArtifact(f"no plot-data recipe for {figure_id!r}")

    stub = dest / f"{figure_id}.gp"
    lines = ["set key outside", f"set title '{label} {figure_id}'"]
    plot_parts = [f"'{p.name}' using 1:2 with points title '{p.stem.split('__', 1)[-1]}'"
                  for p in written]
    lines.append("plot " + ", \\\n     ".join(plot_parts))
    stub.write_text("\n".join(lines) + "\n")
    written.append(stub)
    return written
