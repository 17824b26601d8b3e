"""File formats: datasets, fit results, manifests, configs, benchmark tables.

Everything is plain text. Floats are serialized with 17 significant
digits so write-read-write round trips are byte-identical. Component
indices are 1-based in every file and converted at this boundary.
"""

import csv
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import bench, scoring
from .errors import InsufficientData, ZeroVariance
from .model import Dataset, MlrParams, NoiseKind

FORMAT_VERSION = "1"


def fmt(value) -> str:
    """Canonical float serialization, lossless for doubles."""
    return format(float(value), ".17g")


def _parse_kv_line(line: str, path: str, line_no: int) -> Tuple[str, str]:
    if " = " not in line:
        raise ValueError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
    key, value = line.split(" = ", 1)
    return key.strip(), value.strip()


# ---------------------------------------------------------------------------
# dataset files


def dataset_text(data: Dataset, noise: NoiseKind, sigma: float, seed: int) -> str:
    """Render a dataset in the header-plus-CSV layout."""
    if data.labels is None:
        raise ValueError("dataset files carry generating labels")
    k = data.true_params.k_components if data.true_params is not None else (
        int(data.labels.max()) + 1
    )
    lines = [
        "# mlrfit dataset",
        f"# format = {FORMAT_VERSION}",
        f"# k = {k}",
        f"# d = {data.dim}",
        f"# n = {data.n_samples}",
        f"# noise = {NoiseKind(noise).value}",
        f"# sigma = {fmt(sigma)}",
        f"# seed = {int(seed)}",
    ]
    if data.true_params is not None:
        for j in range(k):
            coeffs = " ".join(fmt(v) for v in data.true_params.beta[:, j])
            lines.append(f"# beta_true[{j + 1}] = {coeffs}")
    columns = ",".join(["label", "y"] + [f"x{j + 1}" for j in range(data.dim)])
    lines.append(f"# columns = {columns}")
    for i in range(data.n_samples):
        row = [str(int(data.labels[i]) + 1), fmt(data.y[i])]
        row.extend(fmt(v) for v in data.x[i])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def write_dataset(path, data: Dataset, noise: NoiseKind, sigma: float, seed: int):
    with open(path, "w", newline="\n") as handle:
        handle.write(dataset_text(data, noise, sigma, seed))


def read_dataset(path) -> Tuple[Dataset, Dict]:
    """Parse a dataset file back into a Dataset plus its header metadata."""
    header: Dict[str, str] = {}
    beta_rows: Dict[int, List[float]] = {}
    rows = []
    with open(path, "r") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                if line == "# mlrfit dataset":
                    continue
                key, value = _parse_kv_line(line[2:], str(path), line_no)
                if key.startswith("beta_true["):
                    component = int(key[len("beta_true[") : -1])
                    beta_rows[component] = [float(v) for v in value.split()]
                else:
                    header[key] = value
                continue
            rows.append(line.split(","))
    for required in ("k", "d", "n", "noise", "sigma", "seed"):
        if required not in header:
            raise ValueError(f"{path}: missing dataset header key {required!r}")
    k, d, n = int(header["k"]), int(header["d"]), int(header["n"])
    if len(rows) != n:
        raise ValueError(f"{path}: header says n = {n} but found {len(rows)} rows")
    labels = np.empty(n, dtype=np.int64)
    y = np.empty(n)
    x = np.empty((n, d))
    for i, row in enumerate(rows):
        if len(row) != 2 + d:
            raise ValueError(f"{path}: row {i + 1} has {len(row)} fields, wanted {2 + d}")
        labels[i] = int(row[0]) - 1
        y[i] = float(row[1])
        x[i] = [float(v) for v in row[2:]]
    true_params: Optional[MlrParams] = None
    if beta_rows:
        if sorted(beta_rows) != list(range(1, k + 1)):
            raise ValueError(f"{path}: beta_true lines must cover components 1..{k}")
        true_params = MlrParams(np.column_stack([beta_rows[j] for j in range(1, k + 1)]))
    meta = {
        "k": k,
        "d": d,
        "n": n,
        "noise": NoiseKind(header["noise"]),
        "sigma": float(header["sigma"]),
        "seed": int(header["seed"]),
    }
    return Dataset(x=x, y=y, labels=labels, true_params=true_params), meta


# ---------------------------------------------------------------------------
# fit result files and manifests


def fit_result_text(
    settings: Sequence[Tuple[str, str]],
    params: MlrParams,
    recovery: Optional[scoring.RecoveryReport],
    wall_seconds: float,
    log_liks: np.ndarray,
    residuals: Optional[np.ndarray] = None,
) -> str:
    """Render a fit result; ``settings`` is the ordered config echo."""
    lines = ["# mlrfit fit result", f"format = {FORMAT_VERSION}"]
    lines.extend(f"{key} = {value}" for key, value in settings)
    lines.append(
        "error_metric = sum over components of euclidean coefficient distance,"
        " unnormalized"
    )
    for j in range(params.k_components):
        coeffs = " ".join(fmt(v) for v in params.beta[:, j])
        lines.append(f"beta[{j + 1}] = {coeffs}")
    if recovery is not None:
        lines.append(f"recovery_error = {fmt(recovery.error)}")
        matched = ",".join(str(j + 1) for j in recovery.assignment)
        lines.append(f"recovery_assignment = {matched}")
    lines.append(f"wall_seconds = {fmt(wall_seconds)}")
    for t, value in enumerate(log_liks, start=1):
        lines.append(f"ll[{t}] = {fmt(value)}")
    if residuals is not None:
        for t, value in enumerate(residuals, start=1):
            lines.append(f"residual[{t}] = {fmt(value)}")
    return "\n".join(lines) + "\n"


def manifest_text(
    version: str,
    command: str,
    started_at: str,
    finished_at: str,
    config: Dict[str, object],
    inputs: Dict[str, str],
    outputs: Dict[str, str],
) -> str:
    """Key-value manifest; every produced file points back at one of these."""
    lines = [
        "# mlrfit manifest",
        f"tool = mlrfit {version}",
        f"command = {command}",
        f"started_at = {started_at}",
        f"finished_at = {finished_at}",
    ]
    for key in sorted(config):
        value = config[key]
        rendered = fmt(value) if isinstance(value, float) else str(value)
        lines.append(f"config.{key} = {rendered}")
    for key in sorted(inputs):
        lines.append(f"input.{key} = {inputs[key]}")
    for key in sorted(outputs):
        lines.append(f"output.{key} = {outputs[key]}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# benchmark config files


_GRID_KEYS = {
    "k_values",
    "d_values",
    "n_samples",
    "repetitions",
    "n_iterations",
    "sigma",
    "noise_kinds",
    "rho",
    "base_seed",
    "lad_path",
    "lad_lp_cap",
}


def parse_grid_config(text: str, source: str = "<config>") -> bench.ExperimentGrid:
    """Parse the key-value benchmark config; unknown keys are errors."""
    values: Dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, value = _parse_kv_line(line, source, line_no)
        if key not in _GRID_KEYS:
            raise ValueError(f"{source}:{line_no}: unknown config key {key!r}")
        if key in values:
            raise ValueError(f"{source}:{line_no}: duplicate config key {key!r}")
        values[key] = value
    for required in ("k_values", "d_values", "n_samples", "repetitions", "n_iterations"):
        if required not in values:
            raise ValueError(f"{source}: missing required config key {required!r}")
    kwargs = {
        "k_values": tuple(int(v) for v in values["k_values"].split(",")),
        "d_values": tuple(int(v) for v in values["d_values"].split(",")),
        "n_samples": int(values["n_samples"]),
        "repetitions": int(values["repetitions"]),
        "n_iterations": int(values["n_iterations"]),
    }
    if "sigma" in values:
        kwargs["sigma"] = float(values["sigma"])
    if "noise_kinds" in values:
        kwargs["noise_kinds"] = tuple(
            NoiseKind(v.strip()) for v in values["noise_kinds"].split(",")
        )
    if "rho" in values:
        kwargs["rho"] = float(values["rho"])
    if "base_seed" in values:
        kwargs["base_seed"] = int(values["base_seed"])
    if "lad_path" in values:
        kwargs["lad_path"] = values["lad_path"]
    if "lad_lp_cap" in values:
        kwargs["lad_lp_cap"] = int(values["lad_lp_cap"])
    return bench.ExperimentGrid(**kwargs)


# ---------------------------------------------------------------------------
# benchmark outputs


CELL_COLUMNS = [
    "noise",
    "k",
    "d",
    "rep",
    "seed",
    "status",
    "lad_path",
    "em_error",
    "admm_error",
    "em_seconds",
    "admm_seconds",
    "em_final_ll",
    "admm_final_ll",
]


def write_cells_csv(path, results: List[bench.CellResult]):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CELL_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.noise.value,
                    r.k,
                    r.d,
                    r.rep,
                    r.seed,
                    r.status,
                    r.lad_path,
                    fmt(r.em_error),
                    fmt(r.admm_error),
                    fmt(r.em_seconds),
                    fmt(r.admm_seconds),
                    fmt(r.em_final_ll),
                    fmt(r.admm_final_ll),
                ]
            )


def read_cells_csv(path) -> List[bench.CellResult]:
    results = []
    with open(path, "r", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != CELL_COLUMNS:
            raise ValueError(f"{path}: unexpected cells.csv header {header!r}")
        for row in reader:
            record = dict(zip(CELL_COLUMNS, row))
            results.append(
                bench.CellResult(
                    noise=NoiseKind(record["noise"]),
                    k=int(record["k"]),
                    d=int(record["d"]),
                    rep=int(record["rep"]),
                    seed=int(record["seed"]),
                    status=record["status"],
                    lad_path=record["lad_path"],
                    em_error=float(record["em_error"]),
                    admm_error=float(record["admm_error"]),
                    em_seconds=float(record["em_seconds"]),
                    admm_seconds=float(record["admm_seconds"]),
                    em_final_ll=float(record["em_final_ll"]),
                    admm_final_ll=float(record["admm_final_ll"]),
                )
            )
    return results


def write_summary_csv(path, summary: bench.GridSummary):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["noise", "k", "d", "solver", "mean_error", "std_error", "count"])
        for s in summary.stats:
            writer.writerow(
                [s.noise.value, s.k, s.d, s.solver, fmt(s.mean_error), fmt(s.std_error), s.count]
            )


def summary_table_text(summary: bench.GridSummary, kind: NoiseKind) -> str:
    """Mean (std) recovery-error table; per (K, d) the admm line sits above em."""
    stats = {(s.k, s.d, s.solver): s for s in summary.stats if s.noise is kind}
    ks = sorted({k for k, _, _ in stats})
    ds = sorted({d for _, d, _ in stats})

    def cell(k, d, solver):
        s = stats.get((k, d, solver))
        return f"{s.mean_error:.4f} ({s.std_error:.4f})" if s else "-"

    width = max(
        [len(cell(k, d, solver)) for k in ks for d in ds for solver in ("admm", "em")]
        + [len(f"d={d}") for d in ds]
    ) + 3
    lines = [
        "# mlrfit benchmark summary",
        f"# noise = {kind.value}",
        "# recovery error, mean (std) over repetitions",
        "# per (K, d) cell: first line admm, second line em",
        "",
        "         " + "".join(f"d={d}".ljust(width) for d in ds),
    ]
    for k in ks:
        lines.append(
            f"K={k}".ljust(5) + "admm".ljust(6)
            + "".join(cell(k, d, "admm").ljust(width) for d in ds)
        )
        lines.append(
            " " * 5 + "em".ljust(6) + "".join(cell(k, d, "em").ljust(width) for d in ds)
        )
    return "\n".join(lines) + "\n"


def timing_histogram(diffs: np.ndarray, bins: int = 20):
    counts, edges = np.histogram(np.asarray(diffs, dtype=float), bins=bins)
    return edges, counts


def write_timing_hist_csv(path, edges: np.ndarray, counts: np.ndarray):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "count"])
        for i, count in enumerate(counts):
            writer.writerow([fmt(edges[i]), fmt(edges[i + 1]), int(count)])


def read_hist_csv(path):
    lefts, rights, counts = [], [], []
    with open(path, "r", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["bin_left", "bin_right", "count"]:
            raise ValueError(f"{path}: unexpected histogram header {header!r}")
        for row in reader:
            lefts.append(float(row[0]))
            rights.append(float(row[1]))
            counts.append(int(row[2]))
    return np.array(lefts + rights[-1:]), np.array(counts, dtype=np.int64)


def _ttest_lines(prefix: str, diffs: np.ndarray) -> List[str]:
    try:
        result = scoring.paired_t_test(diffs)
    except (InsufficientData, ZeroVariance) as exc:
        return [f"{prefix}.error = {type(exc).__name__}"]
    return [
        f"{prefix}.t_statistic = {fmt(result.t_statistic)}",
        f"{prefix}.critical_value = {fmt(result.critical_value)}",
        f"{prefix}.significant = {str(result.significant).lower()}",
    ]


def ttest_error_text(error_diffs: np.ndarray) -> str:
    """Both one-sided recovery-error hypotheses on em - admm differences."""
    diffs = np.asarray(error_diffs, dtype=float)
    lines = [
        "# paired t-test on recovery error, alpha = 0.05",
        f"n = {diffs.size}",
        f"mean_em_minus_admm = {fmt(diffs.mean()) if diffs.size else 'nan'}",
    ]
    lines += _ttest_lines("admm_better", diffs)  # H1: em - admm > 0
    lines += _ttest_lines("em_better", -diffs)  # H1: admm - em > 0
    return "\n".join(lines) + "\n"


def ttest_time_text(time_diffs: np.ndarray) -> str:
    diffs = np.asarray(time_diffs, dtype=float)
    lines = [
        "# paired t-test on solver seconds, alpha = 0.05",
        f"n = {diffs.size}",
        f"mean_em_minus_admm_seconds = {fmt(diffs.mean()) if diffs.size else 'nan'}",
    ]
    lines += _ttest_lines("em_slower", diffs)  # H1: em - admm > 0
    return "\n".join(lines) + "\n"


def write_derived_outputs(out_dir, results: List[bench.CellResult]) -> Dict[str, str]:
    """Summary tables, timing histograms and t-test reports for a cell list.

    Returns the mapping of logical names to file names, for manifests.
    Everything here is recomputable from the per-cell CSV alone.
    """
    summary = bench.aggregate(results)
    written: Dict[str, str] = {}

    def emit(name, file_name, text):
        with open(os.path.join(out_dir, file_name), "w", newline="\n") as handle:
            handle.write(text)
        written[name] = file_name

    path = os.path.join(out_dir, "summary.csv")
    write_summary_csv(path, summary)
    written["summary_csv"] = "summary.csv"
    kinds = sorted({s.noise for s in summary.stats}, key=lambda k: k.value)
    for kind in kinds:
        emit(f"summary_{kind.value}", f"summary_{kind.value}.txt",
             summary_table_text(summary, kind))
        edges, counts = timing_histogram(summary.time_diffs[kind])
        hist_name = f"timing_hist_{kind.value}.csv"
        write_timing_hist_csv(os.path.join(out_dir, hist_name), edges, counts)
        written[f"timing_hist_{kind.value}"] = hist_name
        emit(f"ttest_error_{kind.value}", f"ttest_error_{kind.value}.txt",
             ttest_error_text(summary.error_diffs[kind]))
        emit(f"ttest_time_{kind.value}", f"ttest_time_{kind.value}.txt",
             ttest_time_text(summary.time_diffs[kind]))
    return written


# ---------------------------------------------------------------------------
# SVG histogram rendering (optional plumbing, fully deterministic output)


def histogram_svg(edges: np.ndarray, counts: np.ndarray, title: str) -> str:
    """Minimal standalone SVG bar chart of pre-binned histogram data."""
    width, height = 640, 400
    left, right, top, bottom = 60, 20, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    max_count = max(int(counts.max()), 1) if counts.size else 1
    span = float(edges[-1] - edges[0]) or 1.0

    def sx(v):
        return left + (float(v) - float(edges[0])) / span * plot_w

    def sy(c):
        return top + plot_h * (1.0 - c / max_count)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
    ]
    for i, count in enumerate(counts):
        x0, x1 = sx(edges[i]), sx(edges[i + 1])
        y = sy(int(count))
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{x1 - x0:.2f}" '
            f'height="{top + plot_h - y:.2f}" fill="steelblue" stroke="white"/>'
        )
    axis_y = top + plot_h
    parts.append(
        f'<line x1="{left}" y1="{axis_y}" x2="{width - right}" y2="{axis_y}" '
        'stroke="black"/>'
    )
    parts.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{axis_y}" stroke="black"/>')
    for value in (edges[0], edges[-1]):
        parts.append(
            f'<text x="{sx(value):.1f}" y="{axis_y + 18}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{float(value):.4g}</text>'
        )
    parts.append(
        f'<text x="{left - 8}" y="{sy(max_count) + 4:.1f}" text-anchor="end" '
        f'font-family="monospace" font-size="11">{max_count}</text>'
    )
    parts.append(
        f'<text x="{left - 8}" y="{axis_y + 4}" text-anchor="end" '
        'font-family="monospace" font-size="11">0</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
