"""Command-line driver: preprocess, fuse-eval, stats, topology-dump, validate."""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .container import TensorBlob, write_tensor
from .core import LabelMap, histogram_from_labels, validate_sequence
from .fusion import evaluate, read_labels, read_scores
from .heatmap import RenderConfig, render_volume
from .ingest import JointIndexMap, load_sequence, read_frame_documents, read_manifest
from .temporal import AlignmentPolicy, align
from .topology import TopologyError, dump_topology, resolve_topology

EXIT_OK, EXIT_FAILURES, EXIT_CONFIG = 0, 1, 2

_MODALITY_SETS = {"joint": ("joint",), "limb": ("limb",), "both": ("joint", "limb")}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    manifest: Optional[str] = None
    topology: str = "face41"
    mapping: Optional[str] = None
    strategy: str = "proposed"
    target_length: int = 48
    seed: int = 0
    height: int = 56
    width: int = 56
    sigma: float = 0.6
    padding_ratio: float = 1.25
    confidence_floor: float = 0.0
    modalities: tuple[str, ...] = ("joint", "limb")
    out_dir: Optional[str] = None
    workers: int = 1

    def policy(self) -> AlignmentPolicy:
        return AlignmentPolicy(self.target_length, self.strategy, self.seed)

    def render_config(self) -> RenderConfig:
        return RenderConfig(
            self.height, self.width, self.sigma, self.padding_ratio, self.confidence_floor
        )

    def check(self) -> list[str]:
        problems = []
        if not self.modalities:
            problems.append("modality set is empty")
        if self.workers < 1:
            problems.append(f"workers must be >= 1, got {self.workers}")
        if self.manifest is None:
            problems.append("--manifest is required")
        elif not Path(self.manifest).is_file():
            problems.append(f"manifest {self.manifest} not found")
        if self.out_dir is None:
            problems.append("--out-dir is required")
        for build in (self.policy, self.render_config):
            try:
                build()
            except ValueError as exc:
                problems.append(str(exc))
        return problems


def read_config_file(path: str | Path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment. Keys use underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}, line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(key: str, value: str):
    if key == "modality":
        if value not in _MODALITY_SETS:
            raise ConfigError(f"modality must be joint, limb or both, got {value!r}")
        return "modalities", _MODALITY_SETS[value]
    types = {f.name: f.type for f in fields(PipelineConfig)}
    if key not in types:
        raise ConfigError(f"unknown config key {key!r}")
    kind = types[key]
    try:
        if kind == "int":
            return key, int(value)
        if kind == "float":
            return key, float(value)
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: {exc}") from exc
    return key, value


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags."""
    values: dict[str, object] = {}
    if args.config:
        for key, value in read_config_file(args.config).items():
            k, v = _coerce(key, value)
            values[k] = v
    flag_keys = [
        "manifest", "topology", "mapping", "strategy", "target_length", "seed",
        "height", "width", "sigma", "out_dir", "workers",
    ]
    for key in flag_keys:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.modality is not None:
        values["modalities"] = _MODALITY_SETS[args.modality]
    return replace(PipelineConfig(), **values)


def read_mapping_file(path: str | Path) -> JointIndexMap:
    """One ``<source> <index>`` row per topology joint, in joint order."""
    entries = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            src, idx = line.split()
            entries.append((src, int(idx)))
    return JointIndexMap(tuple(entries))


def _load_row(row, base: Path, topo, mapping):
    docs = read_frame_documents(base / row.path)
    if row.num_frames != len(docs):
        raise ValueError(
            f"manifest declares {row.num_frames} frames, found {len(docs)} documents"
        )
    return load_sequence(docs, topo, mapping, label=row.label, sample_id=row.sample_id)


def _setup(cfg: PipelineConfig):
    topo = resolve_topology(cfg.topology)
    mapping = read_mapping_file(cfg.mapping) if cfg.mapping else JointIndexMap.for_topology(topo)
    if len(mapping) != topo.num_joints:
        raise ConfigError(
            f"mapping covers {len(mapping)} joints, topology {topo.name!r} has {topo.num_joints}"
        )
    return topo, mapping


def _preprocess_one(task):
    cfg, row, base = task
    try:
        if not row.sample_id or any(c in row.sample_id for c in "/\\") or row.sample_id in (".", ".."):
            raise ValueError(f"sample id {row.sample_id!r} is not usable as a file name")
        topo, mapping = _setup(cfg)
        seq = align(_load_row(row, base, topo, mapping), cfg.policy())
        rcfg = cfg.render_config()
        out = []
        for modality in cfg.modalities:
            vol = render_volume(seq, topo, modality, rcfg)
            rel = f"tensors/{row.sample_id}.{modality}.skt"
            write_tensor(TensorBlob.from_array(vol.data), Path(cfg.out_dir) / rel)
            out.append((modality, rel, vol.dims, vol.config_digest, topo.name))
        return row, out, None
    except Exception as exc:  # per-sample failures are collected, not raised
        return row, [], f"{type(exc).__name__}: {exc}"


def run_preprocess(cfg: PipelineConfig, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    problems = cfg.check()
    if not problems:
        try:
            _setup(cfg)
        except (TopologyError, ValueError, OSError) as exc:
            problems.append(str(exc))
    if problems:
        for p in problems:
            print(f"config error: {p}", file=err)
        return EXIT_CONFIG
    try:
        rows = read_manifest(cfg.manifest)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=err)
        return EXIT_CONFIG
    base = Path(cfg.manifest).resolve().parent
    out_dir = Path(cfg.out_dir)
    (out_dir / "tensors").mkdir(parents=True, exist_ok=True)
    tasks = [(cfg, row, base) for row in rows]
    if cfg.workers == 1:
        results = [_preprocess_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_preprocess_one, tasks))

    failures = []
    with open(out_dir / "manifest.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "modality", "path", "label", "topology", "config_digest", "dims"])
        for row, entries, error in results:
            if error is not None:
                failures.append((row.sample_id, error))
                continue
            for modality, rel, dims, digest, tname in entries:
                label = -1 if row.label is None else row.label
                w.writerow([row.sample_id, modality, rel, label, tname, digest, "x".join(map(str, dims))])
    written = sum(len(e) for _, e, _ in results)
    print(f"processed {len(rows) - len(failures)}/{len(rows)} samples, wrote {written} tensors", file=out)
    for sid, error in failures:
        print(f"error: sample {sid}: {error}", file=err)
    return EXIT_OK if not failures else EXIT_FAILURES


def run_fuse_eval(
    score_paths: Sequence[str],
    weights: Optional[Sequence[float]],
    labels_path: str,
    report_path: Optional[str] = None,
    apply_softmax: bool = False,
    out=None,
    err=None,
) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        streams = [read_scores(p) for p in score_paths]
        if weights is None:
            weights = [1.0] * len(streams)
        if len(weights) != len(streams):
            raise ValueError(f"{len(weights)} weights for {len(streams)} score files")
        labels = read_labels(labels_path)
        report = evaluate(list(zip(streams, weights)), labels, apply_softmax=apply_softmax)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_FAILURES
    print(f"top1_accuracy: {report.top1:.6f}", file=out)
    if report_path:
        Path(report_path).write_text(report.to_text(), encoding="utf-8")
        Path(report_path).with_suffix(".json").write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK


def run_stats(manifest: str, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        rows = read_manifest(manifest)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_FAILURES
    labels = LabelMap()
    bad = [r.sample_id for r in rows if r.label is not None and r.label not in labels]
    if bad:
        print(f"error: sample {bad[0]!r} has an unknown class id", file=err)
        return EXIT_FAILURES
    if not rows:
        print("0 samples", file=out)
        return EXIT_OK
    hist = histogram_from_labels([r.label for r in rows if r.label is not None], len(labels))
    lengths = np.array([r.num_frames for r in rows])
    print(f"{len(rows)} samples ({hist.total} labeled)", file=out)
    print("class counts:", file=out)
    for cid, count in enumerate(hist.counts):
        print(f"  {cid:2d} {labels.name(cid)}: {int(count)}", file=out)
    print(f"empty classes: {len(hist.empty_classes)}", file=out)
    print(
        f"sequence length: min {lengths.min()} median {np.median(lengths):g} max {lengths.max()}",
        file=out,
    )
    print(f"imbalance ratio: {hist.imbalance_ratio:.6f}", file=out)
    return EXIT_OK


def run_topology_dump(name: str, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        text = dump_topology(resolve_topology(name))
    except TopologyError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_FAILURES
    out.write(text)
    return EXIT_OK


def run_validate(manifest: str, topology: str, mapping: Optional[str] = None, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    try:
        cfg = PipelineConfig(manifest=manifest, topology=topology, mapping=mapping)
        topo, jmap = _setup(cfg)
        rows = read_manifest(manifest)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_CONFIG
    base = Path(manifest).resolve().parent
    failed = 0
    for row in rows:
        try:
            report = validate_sequence(_load_row(row, base, topo, jmap), topo)
        except Exception as exc:
            print(f"{row.sample_id}: load error: {exc}", file=out)
            failed += 1
            continue
        print(report, file=out)
        failed += not report.valid
    print(f"{len(rows) - failed}/{len(rows)} samples valid", file=out)
    return EXIT_OK if failed == 0 else EXIT_FAILURES


def _weights(text: str) -> list[float]:
    try:
        return [float(w) for w in text.replace(":", ",").split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"weights must look like 1:1 or 1,2, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgskel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="align and render every manifest sample to tensors")
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--manifest")
    p.add_argument("--topology", help="base22, face41 or a topology file")
    p.add_argument("--mapping", help="joint index mapping file")
    p.add_argument("--strategy", choices=["proposed", "baseline"])
    p.add_argument("--target-length", dest="target_length", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--modality", choices=sorted(_MODALITY_SETS))
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("fuse-eval", help="fuse score files and report Top-1 accuracy")
    p.add_argument("scores", nargs="+", help="score CSV files, one per stream")
    p.add_argument("--weights", type=_weights, help="ratio such as 1:1 or 1,2; default all 1")
    p.add_argument("--labels", required=True)
    p.add_argument("--report", help="write the text report here (plus a .json twin)")
    p.add_argument("--softmax", action="store_true", help="softmax each stream before fusing")

    p = sub.add_parser("stats", help="class histogram and length distribution of a manifest")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("topology-dump", help="print edges, hop distances and partition masks")
    p.add_argument("--topology", required=True)

    p = sub.add_parser("validate", help="check every manifest sample against a topology")
    p.add_argument("--manifest", required=True)
    p.add_argument("--topology", default="face41")
    p.add_argument("--mapping")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "preprocess":
        try:
            cfg = build_config(args)
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        return run_preprocess(cfg)
    if args.command == "fuse-eval":
        return run_fuse_eval(args.scores, args.weights, args.labels, args.report, args.softmax)
    if args.command == "stats":
        return run_stats(args.manifest)
    if args.command == "topology-dump":
        return run_topology_dump(args.topology)
    return run_validate(args.manifest, args.topology, args.mapping)


if __name__ == "__main__":
    sys.exit(main())
