"""Experiment driver.

Subcommands::

    simulate       generate per-run count (or exact-probability) datasets
    qdsc           self-characterize each run; emit (Q, t) + diagnostics
    qdt            detector-tomography baseline on the same runs
    compare        both methods on identical data: fidelities, aligned
                   per-element fidelities, membership-value tables
    subsample      reconstruction quality vs number of probe states
    validate-loop  state tomography with the calibrated measurement
    report         render figures for everything found in a results folder

Configuration lives in a single JSON document; every flag has a config
counterpart and flags win. Batch commands never abort on a single failed
run; failures are recorded per run with the stage that failed. All commands
are deterministic given the config seed (per-run seeds are master XOR run
index). Exit code 0 on success; on failure a machine-readable error JSON is
printed to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import report as report_mod
from .calibrate import MUB_FRAME, SIC_FRAME, FrameConvention, align_frame, povm_element_fidelity, tomography_study
from .errors import InvalidInputError, PovmScopeError
from .linalg import OptimizerConfig
from .metrics import fidelity_q, fidelity_t, l_value, violation_stats
from .qubit import (
    Povm,
    build_standard,
    load_json,
    povm_from_json,
    povm_to_json,
    qt_from_json,
    qt_from_povm,
    qt_to_json,
    save_json,
)
from .selfchar import qdsc_run
from .simulate import (
    CountsMatrix,
    ErrorModel,
    ProbeSet,
    ProbMatrix,
    born_matrix,
    circle_states,
    icosahedron_states,
    inject_preparation_error,
    probe_grid,
    random_states,
    read_probes_json,
    read_statistics_csv,
    sample_counts,
    write_counts_csv,
    write_probabilities_csv,
    write_probes_json,
)
from .tomography import TomographyProblem, qdt_fit

OUTPUT_DIR_ENV = "POVMSCOPE_OUTPUT_DIR"

_DEVICES = ("mub6", "sic4", "real_mub4", "custom")
_PROBE_SOURCES = ("grid50", "icosahedron12", "random", "circle", "file")


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Everything a reproducible experiment bundle needs."""

    device: str = "sic4"
    device_file: str | None = None
    probe_source: str = "grid50"
    probe_count: int = 9
    probe_file: str | None = None
    shots: int = 100_000
    runs: int = 40
    seed: int = 0
    exact: bool = False
    error_model: ErrorModel = ErrorModel()
    optimizer: OptimizerConfig = OptimizerConfig()
    rank_threshold: float | str = 0.05
    output_dir: str = "."

    def __post_init__(self):
        if self.runs < 1:
            raise InvalidInputError("runs must be >= 1")
        if self.shots < 1:
            raise InvalidInputError("shots must be >= 1")
        if self.device not in _DEVICES:
            raise InvalidInputError(f"unknown device {self.device!r}")
        if self.probe_source not in _PROBE_SOURCES:
            raise InvalidInputError(f"unknown probe source {self.probe_source!r}")

    def to_json(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["error_model"] = dataclasses.asdict(self.error_model)
        doc["optimizer"] = dataclasses.asdict(self.optimizer)
        return doc

    @staticmethod
    def from_json(doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        if "error_model" in doc and isinstance(doc["error_model"], dict):
            doc["error_model"] = ErrorModel(**doc["error_model"])
        if "optimizer" in doc and isinstance(doc["optimizer"], dict):
            doc["optimizer"] = OptimizerConfig(**doc["optimizer"])
        known = {f.name for f in dataclasses.fields(ExperimentConfig)}
        unknown = set(doc) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return ExperimentConfig(**doc)


def _load_config(args) -> ExperimentConfig:
    doc = {}
    if getattr(args, "config", None):
        doc = json.loads(Path(args.config).read_text())
    cfg = ExperimentConfig.from_json(doc)
    overrides = {}
    for name in ("device", "device_file", "probe_source", "probe_count", "probe_file", "shots", "runs", "seed"):
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "exact", False):
        overrides["exact"] = True
    if getattr(args, "out", None):
        overrides["output_dir"] = args.out
    elif os.environ.get(OUTPUT_DIR_ENV) and "output_dir" not in doc:
        overrides["output_dir"] = os.environ[OUTPUT_DIR_ENV]
    if getattr(args, "restarts", None) is not None:
        overrides["optimizer"] = dataclasses.replace(cfg.optimizer, restarts=args.restarts)
    if getattr(args, "optimizer_seed", None) is not None:
        overrides["optimizer"] = dataclasses.replace(
            overrides.get("optimizer", cfg.optimizer), seed=args.optimizer_seed
        )
    if getattr(args, "rank_threshold", None) is not None:
        overrides["rank_threshold"] = _parse_threshold(args.rank_threshold)
    if getattr(args, "misalignment_deg", None) is not None:
        overrides["error_model"] = dataclasses.replace(cfg.error_model, misalignment_deg=args.misalignment_deg)
    return dataclasses.replace(cfg, **overrides)


def _device_povm(cfg: ExperimentConfig) -> Povm:
    if cfg.device == "custom":
        if not cfg.device_file:
            raise InvalidInputError("device 'custom' needs device_file")
        return povm_from_json(load_json(cfg.device_file))
    return build_standard(cfg.device)


def _probes(cfg: ExperimentConfig) -> ProbeSet:
    if cfg.probe_source == "grid50":
        return probe_grid()
    if cfg.probe_source == "icosahedron12":
        return icosahedron_states()
    if cfg.probe_source == "random":
        return random_states(cfg.probe_count, seed=cfg.seed)
    if cfg.probe_source == "circle":
        return circle_states(cfg.probe_count)
    if not cfg.probe_file:
        raise InvalidInputError("probe source 'file' needs probe_file")
    return read_probes_json(cfg.probe_file)


def _run_seed(master: int, run: int) -> int:
    return int(np.uint64(master) ^ np.uint64(run))


def _parse_threshold(value) -> float | str:
    if value is None or value == "auto":
        return value
    return float(value)


def _frame_for(device: str) -> FrameConvention:
    if device == "mub6":
        return MUB_FRAME
    if device == "sic4":
        return SIC_FRAME
    return FrameConvention(0, 1, 1, 1)


def _run_paths(dataset: Path) -> list[Path]:
    return sorted(dataset.glob("run_*.csv"))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    device = _device_povm(cfg)
    probes_ideal = _probes(cfg)
    probes_true = inject_preparation_error(probes_ideal, cfg.error_model)
    pm = born_matrix(device, probes_true)

    save_json(cfg.to_json(), out / "config.json")
    save_json(povm_to_json(device), out / "povm_true.json")
    write_probes_json(probes_ideal, out / "probes_ideal.json")
    write_probes_json(probes_true, out / "probes_true.json")

    for run in range(cfg.runs):
        path = out / f"run_{run:03d}.csv"
        if cfg.exact:
            write_probabilities_csv(pm, path, seed=_run_seed(cfg.seed, run))
        else:
            cm = sample_counts(pm, cfg.shots, seed=_run_seed(cfg.seed, run))
            write_counts_csv(cm, path, seed=_run_seed(cfg.seed, run))
    print(f"wrote {cfg.runs} run(s) to {out}")
    return 0


def _qdsc_over_runs(dataset: Path, cfg: ExperimentConfig):
    """Self-characterize every run; returns (results, failures).

    results: list of (run_index, QTRep, FitDiagnostics)."""
    results, failures = [], []
    for run, path in enumerate(_run_paths(dataset)):
        data = read_statistics_csv(path)
        opt = dataclasses.replace(cfg.optimizer, seed=_run_seed(cfg.optimizer.seed, run))
        try:
            qt, diag = qdsc_run(data, opt, rel_threshold=cfg.rank_threshold)
            results.append((run, qt, diag))
        except PovmScopeError as exc:
            failures.append({"run": run, "stage": exc.stage, "error": type(exc).__name__, "message": str(exc)})
    return results, failures


def _qdt_over_runs(dataset: Path, cfg: ExperimentConfig, probes: ProbeSet):
    results, failures = [], []
    for run, path in enumerate(_run_paths(dataset)):
        data = read_statistics_csv(path)
        if isinstance(data, CountsMatrix):
            data = data.to_probabilities()
        opt = dataclasses.replace(
            cfg.optimizer, restarts=min(cfg.optimizer.restarts, 4), seed=_run_seed(cfg.optimizer.seed, run)
        )
        try:
            povm = qdt_fit(TomographyProblem(data, probes), opt)
            results.append((run, povm))
        except PovmScopeError as exc:
            failures.append({"run": run, "stage": exc.stage, "error": type(exc).__name__, "message": str(exc)})
    return results, failures


def _truth_qt(dataset: Path):
    path = dataset / "povm_true.json"
    if path.exists():
        return qt_from_povm(povm_from_json(load_json(path)))
    return None


def _aggregate_qt(qts) -> dict:
    qs = np.stack([qt.q for qt in qts])
    ts = np.stack([qt.t for qt in qts])
    return {
        "q_mean": qs.mean(axis=0).tolist(),
        "q_std": qs.std(axis=0).tolist(),
        "t_mean": ts.mean(axis=0).tolist(),
        "t_std": ts.std(axis=0).tolist(),
        "rank": int(np.median([qt.rank for qt in qts])),
    }


def cmd_qdsc(args) -> int:
    dataset = Path(args.dataset)
    cfg = ExperimentConfig.from_json(load_json(dataset / "config.json"))
    cfg = dataclasses.replace(cfg, output_dir=str(dataset))
    if args.restarts is not None:
        cfg = dataclasses.replace(cfg, optimizer=dataclasses.replace(cfg.optimizer, restarts=args.restarts))
    if args.rank_threshold is not None:
        cfg = dataclasses.replace(cfg, rank_threshold=_parse_threshold(args.rank_threshold))

    out = dataset / "qdsc"
    out.mkdir(exist_ok=True)
    results, failures = _qdsc_over_runs(dataset, cfg)
    for run, qt, diag in results:
        save_json(qt_to_json(qt), out / f"qtrep_run_{run:03d}.json")
        save_json(
            {
                "restarts_run": diag.restarts_run,
                "best_restart_index": diag.best_restart_index,
                "final_cost": diag.final_cost,
                "boundary_size": diag.boundary_size,
                "converged": diag.converged,
                "constraint_violation": diag.constraint_violation,
                "detected_rank": qt.rank,
            },
            out / f"diagnostics_run_{run:03d}.json",
        )
    summary = {"n_runs": len(_run_paths(dataset)), "n_ok": len(results), "failures": failures}
    if results:
        summary["qdsc"] = _aggregate_qt([qt for _, qt, _ in results])
    truth = _truth_qt(dataset)
    if truth is not None and results:
        inf_q = [1.0 - fidelity_q(truth, qt) for _, qt, _ in results]
        inf_t = [1.0 - fidelity_t(truth, qt) for _, qt, _ in results]
        summary["vs_truth"] = {
            "infidelity_q": inf_q,
            "infidelity_t": inf_t,
            "median_infidelity_q": float(np.median(inf_q)),
            "median_infidelity_t": float(np.median(inf_t)),
        }
    save_json(summary, out / "summary.json")
    print(f"qdsc: {len(results)}/{summary['n_runs']} runs ok -> {out}")
    return 0


def cmd_qdt(args) -> int:
    dataset = Path(args.dataset)
    cfg = ExperimentConfig.from_json(load_json(dataset / "config.json"))
    probes = read_probes_json(args.probes) if args.probes else read_probes_json(dataset / "probes_ideal.json")

    out = dataset / "qdt"
    out.mkdir(exist_ok=True)
    results, failures = _qdt_over_runs(dataset, cfg, probes)
    for run, povm in results:
        save_json(povm_to_json(povm), out / f"povm_run_{run:03d}.json")
    summary = {"n_runs": len(_run_paths(dataset)), "n_ok": len(results), "failures": failures}
    if results:
        summary["qdt"] = _aggregate_qt([qt_from_povm(p) for _, p in results])
    save_json(summary, out / "summary.json")
    print(f"qdt: {len(results)}/{summary['n_runs']} runs ok -> {out}")
    return 0


def cmd_compare(args) -> int:
    dataset = Path(args.dataset)
    cfg = ExperimentConfig.from_json(load_json(dataset / "config.json"))
    if args.restarts is not None:
        cfg = dataclasses.replace(cfg, optimizer=dataclasses.replace(cfg.optimizer, restarts=args.restarts))
    probes = read_probes_json(args.probes) if args.probes else read_probes_json(dataset / "probes_ideal.json")

    out = dataset / "compare"
    out.mkdir(exist_ok=True)
    sc_results, sc_failures = _qdsc_over_runs(dataset, cfg)
    qdt_results, qdt_failures = _qdt_over_runs(dataset, cfg, probes)
    sc_by_run = {run: qt for run, qt, _ in sc_results}
    qdt_by_run = {run: povm for run, povm in qdt_results}
    shared = sorted(set(sc_by_run) & set(qdt_by_run))
    if not shared:
        raise PovmScopeError("no run succeeded under both methods")

    frame = _frame_for(cfg.device)
    truth = _truth_qt(dataset)

    f_q_runs, f_t_runs = [], []
    inf_sc, inf_qdt = [], []
    element_fids = []
    l_sc_all, l_qdt_all = [], []
    for run in shared:
        qt_sc = sc_by_run[run]
        povm_tomo = qdt_by_run[run]
        qt_tomo = qt_from_povm(povm_tomo)
        f_q_runs.append(fidelity_q(qt_tomo, qt_sc))
        f_t_runs.append(fidelity_t(qt_tomo, qt_sc))
        if truth is not None:
            inf_sc.append(1.0 - fidelity_q(truth, qt_sc))
            inf_qdt.append(1.0 - fidelity_q(truth, qt_tomo))
        try:
            aligned_sc = align_frame(qt_sc, frame)
            aligned_tomo = align_frame(qt_tomo, frame)
            element_fids.append(
                [povm_element_fidelity(a, b) for a, b in zip(aligned_tomo.elements, aligned_sc.elements)]
            )
        except PovmScopeError:
            pass  # rank-2 devices have no full frame; skip element table
        data = read_statistics_csv(dataset / f"run_{run:03d}.csv")
        if isinstance(data, CountsMatrix):
            data = data.to_probabilities()
        l_sc_all.append([l_value(data.probs[:, j], qt_sc) for j in range(data.n_states)])
        l_qdt_all.append([l_value(data.probs[:, j], qt_tomo) for j in range(data.n_states)])

    l_sc = np.array(l_sc_all).T  # (states, runs)
    l_qdt = np.array(l_qdt_all).T
    v_sc = violation_stats(l_sc, seed=cfg.seed)
    v_qdt = violation_stats(l_qdt, seed=cfg.seed)

    comparison = {
        "runs_compared": shared,
        "failures": {"qdsc": sc_failures, "qdt": qdt_failures},
        "f_q": f_q_runs,
        "f_t": f_t_runs,
        "median_f_q": float(np.median(f_q_runs)),
        "median_f_t": float(np.median(f_t_runs)),
        "qdsc": _aggregate_qt([sc_by_run[r] for r in shared]),
        "qdt": _aggregate_qt([qt_from_povm(qdt_by_run[r]) for r in shared]),
        "violations": {
            "qdsc": {"frac_above_one": v_sc.frac_above_one, "mean_excess": v_sc.mean_excess},
            "qdt": {"frac_above_one": v_qdt.frac_above_one, "mean_excess": v_qdt.mean_excess},
        },
    }
    if truth is not None:
        comparison["vs_truth"] = {
            "qdsc_infidelity_q": inf_sc,
            "qdt_infidelity_q": inf_qdt,
            "qdsc_median_infidelity_q": float(np.median(inf_sc)),
            "qdt_median_infidelity_q": float(np.median(inf_qdt)),
        }
    save_json(comparison, out / "comparison.json")

    if element_fids:
        fids = np.array(element_fids)  # (runs, outcomes)
        with (out / "element_fidelities.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["outcome", "fidelity_mean", "fidelity_std"])
            for k in range(fids.shape[1]):
                writer.writerow([k, repr(float(fids[:, k].mean())), repr(float(fids[:, k].std()))])

    with (out / "l_table.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "l_qdsc_mean", "l_qdsc_std", "l_qdt_mean", "l_qdt_std"])
        for j in range(l_sc.shape[0]):
            writer.writerow(
                [j, repr(float(v_sc.l_mean[j])), repr(float(v_sc.l_std[j])), repr(float(v_qdt.l_mean[j])), repr(float(v_qdt.l_std[j]))]
            )
    print(f"compare: {len(shared)} run(s), median F_Q={comparison['median_f_q']:.6f} -> {out}")
    return 0


def cmd_subsample(args) -> int:
    dataset = Path(args.dataset)
    cfg = ExperimentConfig.from_json(load_json(dataset / "config.json"))
    if args.restarts is not None:
        cfg = dataclasses.replace(cfg, optimizer=dataclasses.replace(cfg.optimizer, restarts=args.restarts))
    m_list = [int(x) for x in args.m_list.split(",")]
    if min(m_list) < 9:
        raise InvalidInputError("subsample sizes below 9 states cannot determine the ellipsoid")
    truth = _truth_qt(dataset)
    if truth is None:
        raise InvalidInputError("subsample study needs povm_true.json in the dataset")

    run_paths = _run_paths(dataset)
    data = read_statistics_csv(run_paths[0])
    if isinstance(data, CountsMatrix):
        data = data.to_probabilities()

    out = dataset / "subsample"
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for m in m_list:
        infs, failures = [], 0
        for rep in range(args.repeats):
            cols = rng.choice(data.n_states, size=m, replace=False)
            opt = dataclasses.replace(cfg.optimizer, seed=_run_seed(cfg.optimizer.seed, rep))
            try:
                qt, _ = qdsc_run(data.column_subset(cols), opt, rel_threshold=cfg.rank_threshold)
                infs.append(1.0 - fidelity_q(truth, qt))
            except PovmScopeError:
                failures += 1
        rows.append(
            {
                "m": m,
                "median_infidelity_q": float(np.median(infs)) if infs else float("nan"),
                "mean_infidelity_q": float(np.mean(infs)) if infs else float("nan"),
                "std_infidelity_q": float(np.std(infs)) if infs else float("nan"),
                "repeats": args.repeats,
                "failures": failures,
            }
        )
    with (out / "subsample.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"subsample: m={m_list} -> {out / 'subsample.csv'}")
    return 0


def cmd_validate_loop(args) -> int:
    dataset = Path(args.dataset)
    cfg = ExperimentConfig.from_json(load_json(dataset / "config.json"))
    probes = read_probes_json(dataset / "probes_ideal.json")

    first = read_statistics_csv(_run_paths(dataset)[0])
    qt_sc, _ = qdsc_run(first, cfg.optimizer, rel_threshold=cfg.rank_threshold)
    frame = _frame_for(cfg.device)
    calibrated = align_frame(qt_sc, frame)
    if isinstance(first, CountsMatrix):
        first = first.to_probabilities()
    reference = qdt_fit(TomographyProblem(first, probes), dataclasses.replace(cfg.optimizer, restarts=2))
    ideal = build_standard(cfg.device) if cfg.device != "custom" else _device_povm(cfg)

    states = icosahedron_states()
    runs = args.runs if args.runs is not None else cfg.runs
    shots = args.shots if args.shots is not None else cfg.shots
    fid_cal, fid_ideal, ov_cal, ov_ref, ov_ideal = [], [], [], [], []
    for run in range(runs):
        study = tomography_study(calibrated, reference, ideal, states, shots, seed=_run_seed(cfg.seed, run))
        fid_cal.append(study.fidelity_calibrated_vs_reference)
        fid_ideal.append(study.fidelity_ideal_vs_reference)
        ov_cal.append(study.overlap_calibrated)
        ov_ref.append(study.overlap_reference)
        ov_ideal.append(study.overlap_ideal)
    fid_cal = np.array(fid_cal)
    fid_ideal = np.array(fid_ideal)

    out = dataset / "loop"
    out.mkdir(exist_ok=True)
    with (out / "loop_fidelity.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["state", "label", "fid_calibrated_mean", "fid_calibrated_std", "fid_ideal_mean", "fid_ideal_std"])
        for j in range(states.n_states):
            writer.writerow(
                [
                    j,
                    states.labels[j],
                    repr(float(fid_cal[:, j].mean())),
                    repr(float(fid_cal[:, j].std())),
                    repr(float(fid_ideal[:, j].mean())),
                    repr(float(fid_ideal[:, j].std())),
                ]
            )
    ov = {"calibrated": np.array(ov_cal), "reference": np.array(ov_ref), "ideal": np.array(ov_ideal)}
    with (out / "loop_overlap.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["state", "label"]
            + [f"overlap_{k}_{s}" for k in ("calibrated", "reference", "ideal") for s in ("mean", "std")]
        )
        for j in range(states.n_states):
            row = [j, states.labels[j]]
            for key in ("calibrated", "reference", "ideal"):
                row += [repr(float(ov[key][:, j].mean())), repr(float(ov[key][:, j].std()))]
            writer.writerow(row)
    print(f"validate-loop: {runs} run(s) x {states.n_states} states -> {out}")
    return 0


def cmd_report(args) -> int:
    target = Path(args.dataset)
    written = report_mod.render_all(target)
    if not written:
        print(f"report: nothing to render under {target}")
    for path in written:
        print(f"report: wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------
def _add_dataset_arg(sub):
    sub.add_argument("dataset", help="dataset directory produced by 'simulate'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="povmscope", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate datasets")
    sim.add_argument("--config", help="experiment config JSON")
    sim.add_argument("--device", choices=_DEVICES)
    sim.add_argument("--device-file", dest="device_file")
    sim.add_argument("--probe-source", dest="probe_source", choices=_PROBE_SOURCES)
    sim.add_argument("--probe-count", dest="probe_count", type=int)
    sim.add_argument("--probe-file", dest="probe_file")
    sim.add_argument("--shots", type=int)
    sim.add_argument("--runs", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--exact", action="store_true", help="write exact probabilities instead of counts")
    sim.add_argument("--misalignment-deg", dest="misalignment_deg", type=float)
    sim.add_argument("--out", help=f"output directory (default: ${OUTPUT_DIR_ENV} or config)")
    sim.set_defaults(func=cmd_simulate)

    for name, func in (("qdsc", cmd_qdsc), ("compare", cmd_compare)):
        cmd = sub.add_parser(name)
        _add_dataset_arg(cmd)
        cmd.add_argument("--restarts", type=int)
        cmd.add_argument("--rank-threshold", dest="rank_threshold")
        if name == "compare":
            cmd.add_argument("--probes", help="probe-state JSON for the tomography side")
        cmd.set_defaults(func=func)

    qdt = sub.add_parser("qdt")
    _add_dataset_arg(qdt)
    qdt.add_argument("--probes", help="probe-state JSON (default: the dataset's ideal labels)")
    qdt.set_defaults(func=cmd_qdt)

    ss = sub.add_parser("subsample")
    _add_dataset_arg(ss)
    ss.add_argument("--m-list", dest="m_list", default="9,15,25,35,45")
    ss.add_argument("--repeats", type=int, default=100)
    ss.add_argument("--restarts", type=int)
    ss.set_defaults(func=cmd_subsample)

    loop = sub.add_parser("validate-loop")
    _add_dataset_arg(loop)
    loop.add_argument("--runs", type=int)
    loop.add_argument("--shots", type=int)
    loop.set_defaults(func=cmd_validate_loop)

    rep = sub.add_parser("report")
    _add_dataset_arg(rep)
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PovmScopeError as exc:
        error = {"error": {"type": type(exc).__name__, "message": str(exc), "stage": exc.stage}}
        print(json.dumps(error), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": {"type": "IOError", "message": str(exc), "stage": None}}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
