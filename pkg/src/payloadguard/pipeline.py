"""Stage orchestration and the on-disk artifact tree.

Stages hand off only through files under the output root:

    generate  -> dataset/{benign,malicious}/<id>.json, generation_log.json, validation_log.jsonl
    validate  -> validation_report.json
    extract   -> features.csv
    train     -> models/{split,scaler,isolation_forest,autoencoder,random_forest}.json
    evaluate  -> reports/{metrics.json, per-attack.json, cm_<model>.json, roc_<model>.csv, importances.csv}
    ablate    -> reports/ablation.json
    report    -> reports/*.svg, reports/summary.txt

Models only ever see ``features.csv``. Every file is written with fixed
formatting so an unchanged stage reproduces its outputs byte for byte.
"""

from __future__ import annotations

import json
import logging
import shutil
import time
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import plots
from .config import PipelineConfig, dump_config
from .detectors import (
    AutoencoderModel,
    IsolationForestModel,
    RandomForestModel,
    ScalerParams,
    fit_scaler,
    train_autoencoder,
    train_isolation_forest,
    train_random_forest,
    transform,
)
from .evaluation import (
    SplitAssignment,
    ablation,
    binary_metrics,
    family_counts,
    per_attack_breakdown,
    roc_auc,
    roc_curve,
    stratified_split,
)
from .features import FEATURE_GROUPS, FEATURE_NAMES, extract_corpus, features_from_csv, features_to_csv
from .generator import GenerationError, generate_dataset
from .model import PayloadError, canonical_serialize, parse_payload
from .rng import derive_rng
from .validator import validate

log = logging.getLogger(__name__)

MODELS = ("isolation_forest", "autoencoder", "random_forest")


class StageError(RuntimeError):
    """A stage could not complete; artifacts written so far are kept."""


@dataclass(frozen=True)
class RunPaths:
    root: Path

    @property
    def dataset(self) -> Path:
        return self.root / "dataset"

    @property
    def features(self) -> Path:
        return self.root / "features.csv"

    @property
    def models(self) -> Path:
        return self.root / "models"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    def model(self, name: str) -> Path:
        return self.models / f"{name}.json"

    def report(self, name: str) -> Path:
        return self.reports / name


def _write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data.encode("utf-8") if isinstance(data, str) else data)


def _json_text(obj: Any, indent: int | None = 2) -> str:
    return json.dumps(obj, sort_keys=True, indent=indent, ensure_ascii=False, allow_nan=False) + "\n"


def _read_json(path: Path) -> Any:
    if not path.exists():
        raise StageError(f"missing input {path}; run the upstream stage first")
    return json.loads(path.read_text(encoding="utf-8"))


def archive_config(cfg: PipelineConfig, paths: RunPaths) -> None:
    target = paths.root / "run_config.yaml"
    text = dump_config(cfg)
    if not target.exists() or target.read_text(encoding="utf-8") != text:
        _write(target, text)


# -- data stages ------------------------------------------------------------


def stage_generate(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    try:
        corpus = generate_dataset(cfg.generator, cfg.n_benign, cfg.n_malicious, cfg.attack_mix)
    except GenerationError as exc:
        if exc.report:
            _write(paths.root / "generation_log.json", _json_text(exc.report))
        raise StageError(str(exc)) from exc
    if paths.dataset.exists():
        shutil.rmtree(paths.dataset)
    for sub, payloads in (("benign", corpus.benign), ("malicious", corpus.malicious)):
        folder = paths.dataset / sub
        folder.mkdir(parents=True, exist_ok=True)
        for p in payloads:
            (folder / f"{p.payload_id}.json").write_bytes(canonical_serialize(p))
    _write(paths.root / "generation_log.json", _json_text(corpus.log))
    _write(paths.root / "validation_log.jsonl", "".join(_json_text(r, indent=None) for r in corpus.rejections))
    return corpus.log


def _dataset_files(paths: RunPaths) -> list[tuple[str, Path]]:
    if not paths.dataset.is_dir():
        raise StageError(f"missing input {paths.dataset}; run the generate stage first")
    files = []
    for sub in ("benign", "malicious"):
        folder = paths.dataset / sub
        if folder.is_dir():
            files.extend((sub, f) for f in sorted(folder.glob("*.json")))
    return files


def stage_validate(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    failures = []
    checked = 0
    for label, path in _dataset_files(paths):
        checked += 1
        try:
            payload = parse_payload(path.read_bytes())
        except PayloadError as exc:
            failures.append({"file": f"{label}/{path.name}", "error": str(exc)})
            continue
        report = validate(payload, label, cfg.generator)
        if payload.label != label:
            failures.append({"file": f"{label}/{path.name}", "error": f"metadata label {payload.label!r}"})
        elif not report.passed:
            failures.append({"file": f"{label}/{path.name}", "report": report.to_dict()})
    summary = {"checked": checked, "passed": checked - len(failures), "failures": failures}
    _write(paths.root / "validation_report.json", _json_text(summary))
    if failures:
        raise StageError(f"{len(failures)} of {checked} dataset payloads failed validation")
    return summary


def stage_extract(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    report = _read_json(paths.root / "validation_report.json")
    if report.get("failures"):
        raise StageError("dataset has validation failures; refusing to extract features")
    payloads = [parse_payload(path.read_bytes()) for _, path in _dataset_files(paths)]
    rows = extract_corpus(payloads)
    _write(paths.features, features_to_csv(rows))
    return {"rows": len(rows)}


def load_features(paths: RunPaths):
    if not paths.features.exists():
        raise StageError(f"missing input {paths.features}; run the extract stage first")
    rows = features_from_csv(paths.features.read_text(encoding="utf-8"))
    ids = [r.payload_id for r in rows]
    X = np.array([r.values for r in rows], dtype=float).reshape(len(rows), len(FEATURE_NAMES))
    y = np.array([r.label for r in rows], dtype=int)
    kinds = [r.attack_type for r in rows]
    return ids, X, y, kinds


# -- model stages -----------------------------------------------------------


def _rf_trainer(cfg: PipelineConfig) -> Callable[[np.ndarray, np.ndarray], RandomForestModel]:
    p = cfg.models.random_forest

    def train(X: np.ndarray, y: np.ndarray, names=None) -> RandomForestModel:
        return train_random_forest(
            X,
            y,
            derive_rng(cfg.seed, "models/random_forest"),
            n_trees=p.n_trees,
            max_features=p.max_features,
            min_samples_leaf=p.min_samples_leaf,
            max_depth=p.max_depth,
            threshold=p.threshold,
            feature_names=names,
        )

    return train


def stage_train(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    ids, X, y, _ = load_features(paths)
    try:
        split = stratified_split(ids, y, cfg.seed, cfg.test_fraction)
    except ValueError as exc:
        raise StageError(f"cannot split: {exc}") from exc
    test = split.test_mask(ids)
    scaler = fit_scaler(X[~test])
    Z = transform(scaler, X[~test])
    ytr = y[~test]

    ifp = cfg.models.isolation_forest
    t0 = time.perf_counter()
    iforest = train_isolation_forest(
        Z, derive_rng(cfg.seed, "models/isolation_forest"), ifp.n_trees, ifp.max_samples, ifp.threshold
    )
    aep = cfg.models.autoencoder
    ae = train_autoencoder(
        Z[ytr == 0],
        derive_rng(cfg.seed, "models/autoencoder"),
        hidden=aep.hidden,
        epochs=aep.epochs,
        batch_size=aep.batch_size,
        learning_rate=aep.learning_rate,
        beta1=aep.beta1,
        beta2=aep.beta2,
        epsilon=aep.epsilon,
        threshold_percentile=aep.threshold_percentile,
    )
    rf = _rf_trainer(cfg)(Z, ytr, list(FEATURE_NAMES))
    elapsed = time.perf_counter() - t0
    log.info("trained models in %.1fs", elapsed)

    paths.models.mkdir(parents=True, exist_ok=True)
    _write(paths.model("split"), _json_text(split.to_dict()))
    _write(paths.model("scaler"), _json_text({**scaler.to_dict(), "feature_names": list(FEATURE_NAMES)}))
    _write(paths.model("isolation_forest"), _json_text(iforest.to_dict(), indent=None))
    _write(paths.model("autoencoder"), _json_text(ae.to_dict(), indent=None))
    _write(paths.model("random_forest"), _json_text(rf.to_dict(), indent=None))
    return {"train_rows": int((~test).sum()), "test_rows": int(test.sum())}


def load_models(paths: RunPaths):
    split = SplitAssignment.from_dict(_read_json(paths.model("split")))
    scaler = ScalerParams.from_dict(_read_json(paths.model("scaler")))
    models = {
        "isolation_forest": IsolationForestModel.from_dict(_read_json(paths.model("isolation_forest"))),
        "autoencoder": AutoencoderModel.from_dict(_read_json(paths.model("autoencoder"))),
        "random_forest": RandomForestModel.from_dict(_read_json(paths.model("random_forest"))),
    }
    return split, scaler, models


def model_scores(name: str, model: Any, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(continuous score, binary decision) for one model on scaled rows."""
    if name == "random_forest":
        s = model.predict_proba(Z)
    else:
        s = model.score(Z)
    return s, (s >= model.threshold).astype(int)


def stage_evaluate(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    ids, X, y, kinds = load_features(paths)
    split, scaler, models = load_models(paths)
    test = split.test_mask(ids)
    Zte = transform(scaler, X[test])
    yte = y[test]
    kte = [k for k, t in zip(kinds, test) if t]
    metrics: dict[str, Any] = {
        "seed": cfg.seed,
        "train_rows": int((~test).sum()),
        "test_rows": int(test.sum()),
        "test_benign": int((yte == 0).sum()),
        "test_malicious": int((yte == 1).sum()),
        "models": {},
    }
    per_attack: dict[str, Any] = {"counts": family_counts(kte, yte), "recall": {}}
    for name in MODELS:
        scores, pred = model_scores(name, models[name], Zte)
        m = binary_metrics(yte, pred)
        m["roc_auc"] = roc_auc(yte, scores)
        m["threshold"] = float(models[name].threshold)
        metrics["models"][name] = m
        per_attack["recall"][name] = per_attack_breakdown(kte, yte, pred)
        _write(paths.report(f"cm_{name}.json"), _json_text(m["confusion"]))
        thr, fpr, tpr = roc_curve(yte, scores)
        lines = ["threshold,fpr,tpr"] + [f"{t!r},{a!r},{b!r}" for t, a, b in zip(thr.tolist(), fpr.tolist(), tpr.tolist())]
        _write(paths.report(f"roc_{name}.csv"), "\n".join(lines) + "\n")
    rf = models["random_forest"]
    imp = rf.importances
    group_of = {f: g for g, cols in FEATURE_GROUPS.items() for f in cols}
    order = sorted(range(len(FEATURE_NAMES)), key=lambda i: (-imp[i], i))
    lines = ["rank,feature,group,importance"]
    for rank, i in enumerate(order, start=1):
        lines.append(f"{rank},{FEATURE_NAMES[i]},{group_of[FEATURE_NAMES[i]]},{float(imp[i])!r}")
    _write(paths.report("importances.csv"), "\n".join(lines) + "\n")
    metrics["importances"] = {FEATURE_NAMES[i]: float(imp[i]) for i in range(len(FEATURE_NAMES))}
    metrics["importance_by_group"] = {
        g: float(sum(imp[FEATURE_NAMES.index(c)] for c in cols)) for g, cols in FEATURE_GROUPS.items()
    }
    _write(paths.report("metrics.json"), _json_text(metrics))
    _write(paths.report("per-attack.json"), _json_text(per_attack))
    return metrics


def stage_ablate(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    ids, X, y, _ = load_features(paths)
    split = SplitAssignment.from_dict(_read_json(paths.model("split")))
    scaler = ScalerParams.from_dict(_read_json(paths.model("scaler")))
    test = split.test_mask(ids)
    train = _rf_trainer(cfg)
    rows = ablation(transform(scaler, X[~test]), y[~test], transform(scaler, X[test]), y[test], train)
    out = {"seed": cfg.seed, "rows": rows}
    _write(paths.report("ablation.json"), _json_text(out))
    return out


def stage_report(cfg: PipelineConfig, paths: RunPaths) -> dict[str, Any]:
    metrics = _read_json(paths.report("metrics.json"))
    per_attack = _read_json(paths.report("per-attack.json"))
    abl_path = paths.report("ablation.json")
    abl = _read_json(abl_path) if abl_path.exists() else None
    lines = [f"test rows: {metrics['test_rows']} ({metrics['test_benign']} benign / {metrics['test_malicious']} malicious)"]
    lines.append(f"{'model':18s} {'acc':>6s} {'prec':>6s} {'rec':>6s} {'f1':>6s} {'auc':>6s}")
    for name in MODELS:
        m = metrics["models"][name]
        lines.append(
            f"{name:18s} {m['accuracy']:6.3f} {m['precision']:6.3f} {m['recall']:6.3f} {m['f1']:6.3f} {m['roc_auc']:6.3f}"
        )
    lines.append("random_forest recall by family:")
    for fam, r in per_attack["recall"]["random_forest"].items():
        lines.append(f"  {fam:20s} {'n/a' if r is None else f'{r:.3f}'}")
    if abl:
        lines.append("ablation (random_forest):")
        for row in abl["rows"]:
            flag = " (degenerate)" if row["degenerate"] else ""
            lines.append(f"  {row['subset']:12s} f1 {row['f1']:.3f} auc {row['auc']:.3f}{flag}")
    summary = "\n".join(lines) + "\n"
    _write(paths.report("summary.txt"), summary)
    if cfg.plots:
        curves = {}
        for name in MODELS:
            text = paths.report(f"roc_{name}.csv").read_text(encoding="utf-8").splitlines()[1:]
            pts = [tuple(float(v) for v in line.split(",")) for line in text]
            curves[name] = ([p[1] for p in pts], [p[2] for p in pts], metrics["models"][name]["roc_auc"])
        _write(paths.report("roc.svg"), plots.roc_svg(curves))
        _write(
            paths.report("confusion.svg"),
            plots.confusion_svg({n: metrics["models"][n]["confusion"] for n in MODELS}),
        )
        names = list(metrics["importances"])
        _write(paths.report("importances.svg"), plots.importance_svg(names, [metrics["importances"][n] for n in names]))
    return {"summary": summary}


STAGES: dict[str, Callable[[PipelineConfig, RunPaths], dict[str, Any]]] = {
    "generate": stage_generate,
    "validate": stage_validate,
    "extract": stage_extract,
    "train": stage_train,
    "evaluate": stage_evaluate,
    "ablate": stage_ablate,
    "report": stage_report,
}


def run_stages(cfg: PipelineConfig, names: list[str], root: str | Path | None = None) -> dict[str, Any]:
    """Run the named stages in order; on failure write ``error.log`` and raise StageError."""
    paths = RunPaths(Path(root or cfg.output_dir))
    paths.root.mkdir(parents=True, exist_ok=True)
    archive_config(cfg, paths)
    results: dict[str, Any] = {}
    for name in names:
        t0 = time.perf_counter()
        try:
            results[name] = STAGES[name](cfg, paths)
        except Exception as exc:
            _write(paths.root / "error.log", f"stage {name} failed: {exc}\n\n{traceback.format_exc()}")
            if isinstance(exc, StageError):
                raise
            raise StageError(f"stage {name} failed: {exc}") from exc
        log.info("stage %s done in %.2fs", name, time.perf_counter() - t0)
    return results


def run_pipeline(cfg: PipelineConfig, root: str | Path | None = None) -> dict[str, Any]:
    return run_stages(cfg, list(STAGES), root)
