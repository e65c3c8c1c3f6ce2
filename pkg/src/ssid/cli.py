"""Command-line entry point: ``ssid {synth,replay,baseline,eval}``.

Every command writes into one output directory and copies the effective
configuration there. Exit status is 0 on success, 2 for configuration
problems and 3 for unreadable or malformed data.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import evalkit, synth
from .core import ConfigError, SsidConfig, replay
from .ingest import StreamFormatError, load_stream

EXIT_OK, EXIT_CONFIG, EXIT_DATA = 0, 2, 3

log = logging.getLogger("ssid")


class DataError(Exception):
    pass


def _read_json(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def _ssid_config(args, doc: dict) -> SsidConfig:
    doc = dict(doc)
    if args.seed is not None:
        doc["seed"] = args.seed
    return SsidConfig.from_dict(doc)


def _write_config(out: Path, doc: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def _load_stream(path):
    try:
        records = load_stream(path)
    except OSError as exc:
        raise DataError(f"cannot read stream: {exc}") from exc
    except StreamFormatError as exc:
        raise DataError(str(exc)) from exc
    if not records:
        raise DataError(f"{path}: stream is empty")
    return records


def _load_labels(path, n):
    try:
        labels = evalkit.load_labels(path)
    except OSError as exc:
        raise DataError(f"cannot read labels: {exc}") from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if len(labels) != n:
        raise DataError(f"{len(labels)} labels for {n} packets")
    return labels


def cmd_synth(args) -> None:
    doc = _read_json(args.config)
    try:
        spec = synth.SynthSpec.from_dict(doc) if doc else synth.desk_scenario()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth config: {exc}") from exc
    if args.seed is not None:
        spec.seed = args.seed
    try:
        rows = synth.generate(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = Path(args.out)
    _write_config(out, _spec_dict(spec))
    synth.write_csv(rows, out / "stream.csv")
    log.info("wrote %d packets to %s", len(rows), out / "stream.csv")


def _spec_dict(spec: synth.SynthSpec) -> dict:
    d = asdict(spec)
    d["hosts"] = list(d["hosts"])
    return d


def cmd_replay(args) -> None:
    cfg = _ssid_config(args, _read_json(args.config))
    records = _load_stream(args.stream)
    result = replay(records, cfg)
    result.write(args.out)
    log.info(
        "replayed %d samples, %d updates, initial learning done at %s",
        len(result.steps),
        sum(e["event"] == "update" for e in result.events),
        result.completion_index,
    )


def cmd_baseline(args) -> None:
    cfg = _ssid_config(args, _read_json(args.config))
    records = _load_stream(args.stream)
    labels = _load_labels(args.stream, len(records))
    try:
        if args.mode == "offline":
            report = evalkit.baseline_offline(records, labels, cfg, args.train_packets)
        else:
            report = evalkit.baseline_incremental(records, labels, cfg, args.period)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    out = Path(args.out)
    _write_config(out, cfg.to_dict())
    report.write(out)
    log.info("%s baseline: %s", args.mode, json.dumps(evalkit.json_safe(report.confusion.to_dict())))


def cmd_eval(args) -> None:
    run = Path(args.run)
    cfg_doc = _read_json(args.config or run / "config.json")
    cfg = _ssid_config(args, cfg_doc)
    records = _load_stream(args.stream)
    labels = _load_labels(args.stream, len(records))
    try:
        steps = evalkit.load_scores(run / "scores.csv")
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read scores: {exc}") from exc
    if cfg.task == "traffic" and len(steps) != len(records):
        raise DataError(f"{len(steps)} scores for {len(records)} packets")
    report = evalkit.evaluate_steps(steps, records, labels, cfg, meta={"run": str(run)})
    out = Path(args.out)
    _write_config(out, cfg.to_dict())
    report.write(out)
    log.info("%s", json.dumps(evalkit.json_safe(report.confusion.to_dict())))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--seed", type=int, help="overrides the seed in the config")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="ssid", description="Self-supervised online intrusion detection.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate a labelled synthetic packet stream")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("replay", parents=[common], help="run online detection over a packet CSV")
    r.add_argument("stream")
    r.set_defaults(func=cmd_replay)

    b = sub.add_parser("baseline", parents=[common], help="label-assisted reference detectors")
    b.add_argument("stream")
    b.add_argument("--mode", choices=("offline", "incremental"), default="offline")
    b.add_argument("--train-packets", type=int, default=evalkit.OFFLINE_TRAIN_PACKETS)
    b.add_argument("--period", type=int, default=evalkit.INCREMENTAL_PERIOD)
    b.set_defaults(func=cmd_baseline)

    e = sub.add_parser("eval", parents=[common], help="score a replay directory against labels")
    e.add_argument("stream", help="labelled packet CSV the replay was run on")
    e.add_argument("--run", required=True, help="replay output directory")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"ssid: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"ssid: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
