"""Command-line drivers: train, eval, latency, prbg, verify and replay.

Every command builds its output files in memory, writes them once at the end
and adds a ``manifest.json`` from which ``replay`` can regenerate them.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import prbg, verify
from .config import CODE_VERSION, RunConfig, RunManifest, parse_delay_table, parse_int_list, resolve, sha256_file
from .dataset import load_dataset, majority_baseline
from .drsim.datapath import COMPONENTS, datapath_latency
from .drsim.netlist import build_clause_netlist, build_comparator_netlist, build_popcount_netlist
from .drsim.sim import latency_distribution, uniform_sampler
from .tm import ConfigError, TmConfig, TsetlinMachine, accuracy, train_epoch

OUTPUT_VERSION = 1


def _json(obj):
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().encode()


def _histogram_csv(stats):
    return _csv(["bin_low", "bin_high", "count"], stats.csv_rows())


def _dataset(cfg: RunConfig):
    return load_dataset(cfg.dataset or None, cfg.label_column, cfg.target_class,
                        cfg.split_seed, cfg.train_fraction)


# --- commands --------------------------------------------------------------
# each returns ({relative path: bytes}, {input path: sha256}, exit code)

def cmd_train(cfg: RunConfig, args):
    ds = _dataset(cfg)
    if any(e > cfg.epochs for e in cfg.snapshot_epochs):
        raise ConfigError(f"snapshot epochs {cfg.snapshot_epochs} exceed epochs={cfg.epochs}")
    tm = TsetlinMachine(TmConfig(ds.feature_count, **cfg.tm_kwargs()))
    files = {}
    rows = []

    def record(stats=None):
        e = tm.epochs_trained
        upd = stats.updates if stats else None
        rows.append([e, f"{accuracy(tm, ds.train):.6f}", f"{accuracy(tm, ds.test):.6f}",
                     upd.penalties if upd else 0, upd.rewards if upd else 0, upd.inactions if upd else 0])
        if e in cfg.snapshot_epochs:
            files[f"snapshots/epoch_{e:03d}.json"] = (tm.to_json() + "\n").encode()

    record()
    for _ in range(cfg.epochs):
        record(train_epoch(tm, ds.train))
    files["model.json"] = (tm.to_json() + "\n").encode()
    files["accuracy.csv"] = _csv(
        ["epoch", "train_accuracy", "test_accuracy", "penalties", "rewards", "inactions"], rows)
    files["train_summary.json"] = _json({
        "version": OUTPUT_VERSION,
        "samples": len(ds),
        "train_samples": len(ds.train_idx),
        "test_samples": len(ds.test_idx),
        "majority_baseline_test": majority_baseline(ds.test),
        "final_test_accuracy": accuracy(tm, ds.test),
        "final_train_accuracy": accuracy(tm, ds.train),
        "clause_polarity": "alternating",
    })
    return files, {ds.source: sha256_file(ds.source)}, 0


def _load_model(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"model snapshot {path} does not exist")
    return TsetlinMachine.from_dict(json.loads(path.read_text(encoding="utf-8")))


def cmd_eval(cfg: RunConfig, args):
    ds = _dataset(cfg)
    tm = _load_model(args.model)
    files = {"eval.json": _json({
        "version": OUTPUT_VERSION,
        "model_epochs": tm.epochs_trained,
        "train_accuracy": accuracy(tm, ds.train),
        "test_accuracy": accuracy(tm, ds.test),
        "full_accuracy": accuracy(tm, ds.samples),
        "majority_baseline_test": majority_baseline(ds.test),
    })}
    return files, {ds.source: sha256_file(ds.source), str(Path(args.model).resolve()): sha256_file(args.model)}, 0


def _uniform_components(cfg, features):
    specs = {
        "clause": build_clause_netlist(features, cfg.combiner),
        "popcount": build_popcount_netlist(9, cfg.adder_cells),
        "comparator": build_comparator_netlist(8),
    }
    out = {}
    for name, nl in specs.items():
        out[name] = latency_distribution(nl, uniform_sampler(len(nl.primary_inputs)), cfg.trials,
                                         delays=cfg.delay_table, seed=cfg.seed)
    return out


def cmd_latency(cfg: RunConfig, args):
    files, inputs, summary = {}, {}, {"version": OUTPUT_VERSION, "delay_table": cfg.delay_table}
    if args.uniform:
        stats = _uniform_components(cfg, args.features)
        for name, st in stats.items():
            files[f"latency_uniform_{name}.csv"] = _histogram_csv(st)
        summary["uniform"] = {k: v.to_dict() for k, v in stats.items()}
    if not args.snapshots and not args.uniform:
        raise ConfigError("latency needs --snapshots and/or --uniform")
    if args.snapshots:
        ds = _dataset(cfg)
        X = ds.features()
        summary["snapshots"] = {}
        for path in args.snapshots:
            tm = _load_model(path)
            inputs[str(Path(path).resolve())] = sha256_file(path)
            tag = f"epoch_{tm.epochs_trained:03d}"
            res = datapath_latency(tm.exclude_mask(), tm.negative, X, cfg.delay_table,
                                   cfg.combiner, cfg.adder_cells)
            wanted = COMPONENTS if args.components else ("end_to_end",)
            for comp in wanted:
                files[f"latency_{tag}_{comp}.csv"] = _histogram_csv(res.stats[comp])
            entry = {k: res.stats[k].to_dict() for k in wanted}
            entry["predictions_match_model"] = bool(np.array_equal(
                res.predictions, np.array([tm.vote(f).predicted for f in X])))
            summary["snapshots"][tag] = entry
        inputs[ds.source] = sha256_file(ds.source)
        summary["samples"] = len(ds)
    files["latency_summary.json"] = _json(summary)
    return files, inputs, 0


def cmd_prbg(cfg: RunConfig, args):
    rng = np.random.default_rng(cfg.seed)
    if args.mode == "lfsr":
        _, bits = prbg.lfsr_bits(prbg.LfsrModel(args.lfsr_seed), args.count)
        duty = 0.5
    else:
        ro = prbg.RoModel(1.0, (0.25, 0.5, 0.75) if args.duty is None else (args.duty,))
        tap = prbg.tap_for_probability(ro, 0.5 if args.duty is None else args.duty)
        duty = ro.taps[tap]
        if args.mode == "uncorrelated":
            bits = prbg.uncorrelated_sequence(ro, tap, args.count, rng)
        elif args.mode == "gated":
            bits = prbg.gated_sequence(ro, tap, args.count, deterministic_phase=not args.random_phase,
                                       offset=args.offset, rng=rng)
        else:
            bits = prbg.periodic_sequence(ro, tap, args.count, args.interval, args.offset)
    stats = prbg.bias_report(bits)
    files = {
        "prbg.json": _json({"version": OUTPUT_VERSION, "mode": args.mode, "duty": duty,
                            **stats.to_dict()}),
        "bits.bin": np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes(),
    }
    return files, {}, 0


def cmd_verify(cfg: RunConfig, args):
    targets = args.targets.split(",") if args.targets else list(verify.TARGETS)
    results = verify.run_targets(targets)
    ok = all(r["passed"] for r in results.values())
    if "stg" in results:
        print(f"stg reachable states: {results['stg']['state_count']}")
    for name, r in results.items():
        print(f"{name}: {'pass' if r['passed'] else 'FAIL'}")
    report = {"version": OUTPUT_VERSION, "passed": ok, "targets": results}
    return {"verify.json": _json(report)}, {}, 0 if ok else 1


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "latency": cmd_latency,
    "prbg": cmd_prbg,
    "verify": cmd_verify,
}

# command-specific arguments recorded in the manifest
COMMAND_ARGS = {
    "train": (),
    "eval": ("model",),
    "latency": ("snapshots", "uniform", "components", "features"),
    "prbg": ("mode", "duty", "count", "offset", "interval", "random_phase", "lfsr_seed"),
    "verify": ("targets",),
}


def execute(command, cfg: RunConfig, args, out_dir):
    """Run ``command`` and write its files plus a manifest into ``out_dir``."""
    files, inputs, code = COMMANDS[command](cfg, args)
    out = Path(out_dir)
    digests = {}
    for rel, data in sorted(files.items()):
        path = out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        digests[rel] = sha256_file(path)
    manifest = RunManifest(
        command=command,
        config=cfg.to_dict(),
        seed=cfg.seed,
        arguments={k: getattr(args, k) for k in COMMAND_ARGS[command]},
        inputs=inputs,
        outputs=digests,
        code_version=CODE_VERSION,
    )
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    return code, manifest


def replay(manifest_path, out_dir):
    """Re-run a manifest into ``out_dir``; returns (exit code, mismatched files)."""
    m = RunManifest.load(manifest_path)
    cfg = RunConfig(**m.config)
    args = argparse.Namespace(**m.arguments)
    code, new = execute(m.command, cfg, args, out_dir)
    mismatched = sorted(k for k in set(m.outputs) | set(new.outputs)
                        if m.outputs.get(k) != new.outputs.get(k))
    return code, mismatched


# --- argument parsing ------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="key = value config file ([tm], [run], [latency] sections)")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--snapshot-epochs", type=parse_int_list, help="e.g. 0,4,50")
    p.add_argument("--d-period", type=int, help="randomise every d-th automaton update")
    p.add_argument("--fb2-polarity", choices=("paper", "swapped"))
    p.add_argument("--delay-table", type=parse_delay_table, help="e.g. AND2=1,OR2=1,COMP1=2")
    p.add_argument("--target-class", type=int)
    p.add_argument("--dataset", help="0/1 table with a label column (default: bundled Iris)")
    p.add_argument("--trials", type=int)
    p.add_argument("--out-dir", default="out")


def build_parser():
    parser = argparse.ArgumentParser(prog="selftimed-tm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train and snapshot a machine")
    _common(p)

    p = sub.add_parser("eval", help="accuracy of a saved model")
    _common(p)
    p.add_argument("--model", required=True)

    p = sub.add_parser("latency", help="inference latency histograms")
    _common(p)
    p.add_argument("--snapshots", nargs="*", default=[], help="model snapshot JSON files")
    p.add_argument("--components", action="store_true", help="also write clause/popcount/comparator")
    p.add_argument("--uniform", action="store_true", help="standalone components on uniform inputs")
    p.add_argument("--features", type=int, default=8, help="clause width for --uniform")

    p = sub.add_parser("prbg", help="bit statistics of the oscillator sampler or the LFSR")
    _common(p)
    p.add_argument("--mode", choices=("uncorrelated", "gated", "periodic", "lfsr"), default="uncorrelated")
    p.add_argument("--duty", type=float)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--offset", type=float, default=0.3)
    p.add_argument("--interval", type=float, default=2.0)
    p.add_argument("--random-phase", action="store_true")
    p.add_argument("--lfsr-seed", type=int, default=1)

    p = sub.add_parser("verify", help="exhaustive feedback, automaton and STG checks")
    _common(p)
    p.add_argument("--targets", help=f"comma list of {','.join(verify.TARGETS)}")

    p = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    return parser


OVERRIDES = ("seed", "epochs", "snapshot_epochs", "d_period", "fb2_polarity", "delay_table",
             "target_class", "dataset", "trials")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            code, mismatched = replay(args.manifest, args.out_dir)
            for name in mismatched:
                print(f"digest mismatch: {name}", file=sys.stderr)
            print("replay identical" if not mismatched else "replay differs")
            return code or (1 if mismatched else 0)
        cfg = resolve(args.config, {k: getattr(args, k) for k in OVERRIDES})
        code, manifest = execute(args.command, cfg, args, args.out_dir)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
