"""Command-line surface over the whole pipeline.

Exit codes: 0 success, 1 flag/config validation failure, 2 runtime error.
Errors print one machine-readable JSON line on stderr.  Every command is
deterministic for a fixed config and seed, so reruns produce byte-identical
artifacts.  A flat key=value config file can preset any flag; explicit
flags win.
"""

from __future__ import annotations

import dataclasses
import json
import multiprocessing
import sys
from functools import partial
from pathlib import Path

import click
import numpy as np

from . import dataprep
from .dataprep import CleanConfig, MalformedLine
from .encoder.forward import encode, load_features, save_features
from .encoder.params import init_params, load_checkpoint, save_checkpoint
from .fusion import (
    AlignConfig,
    align_projector,
    export_tokens,
    init_projector,
    load_projector,
    matched_vs_mismatched,
    project,
    reduce_sample,
    save_projector,
)
from .hierseg import RULE_SETS, segment
from .metrics.corpus import evaluate_corpus
from .molgraph.smiles import parse_smiles
from .pretrain.losses import LossWeights
from .pretrain.train import TrainConfig, train
from .selfcheck import run_all


def _fail_line(err: BaseException) -> str:
    return json.dumps(
        {"error": str(err), "type": type(err).__name__}, sort_keys=True
    )


def _echo_json(payload: dict) -> None:
    click.echo(json.dumps(payload, sort_keys=True))


def _load_config_file(path: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip().replace("-", "_")] = value.strip()
    return mapping


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Flat key=value file preseeding any flag below.")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes for per-line work (cleaning).")
@click.pass_context
def cli(ctx, config_path, workers):
    """Hierarchical molecule tokenization pipeline."""
    ctx.ensure_object(dict)
    ctx.obj["workers"] = workers
    if config_path:
        mapping = _load_config_file(config_path)
        known: set[str] = set()
        for command in cli.commands.values():
            known.update(p.name for p in command.params)
        unknown = sorted(k for k in mapping if k not in known)
        if unknown:
            raise click.UsageError(f"unknown config keys: {', '.join(unknown)}")
        ctx.default_map = {
            name: {k: v for k, v in mapping.items()
                   if k in {p.name for p in command.params}}
            for name, command in cli.commands.items()
        }


def _clean_one(config: CleanConfig, line: str):
    return dataprep.clean(line, config)


@cli.command("clean")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rejects", "rejects_path", type=click.Path(dir_okay=False), default=None,
              help="Optional JSONL of rejected lines with reasons.")
@click.option("--min-heavy", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--keep-largest/--whole-record", default=True, show_default=True)
@click.pass_context
def clean_cmd(ctx, input_path, output_path, rejects_path, min_heavy, keep_largest):
    """Normalize a raw SMILES file; accepted canonical forms go to --output."""
    config = CleanConfig(min_heavy_atoms=min_heavy, keep_largest_fragment=keep_largest)
    with open(input_path, encoding="utf-8") as fh:
        lines = [(i, ln.rstrip("\n")) for i, ln in enumerate(fh, 1) if ln.strip()]
    workers = ctx.obj["workers"]
    texts = [ln for _, ln in lines]
    if workers > 1:
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            results = list(pool.imap(partial(_clean_one, config), texts, chunksize=64))
    else:
        results = [_clean_one(config, t) for t in texts]
    with open(output_path, "w", encoding="utf-8") as out:
        for r in results:
            if r.accepted:
                out.write(r.canonical + "\n")
    if rejects_path:
        with open(rejects_path, "w", encoding="utf-8") as rej:
            for (lineno, text), r in zip(lines, results):
                if not r.accepted:
                    rej.write(json.dumps(
                        {"line": lineno, "smiles": text, "reason": r.reason},
                        sort_keys=True) + "\n")
    _echo_json(dataprep.clean_report(results))


@cli.command("segment")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rules", "rules_name", type=click.Choice(sorted(RULE_SETS)),
              default="simple-brics", show_default=True)
@click.option("--on-error", type=click.Choice(["skip", "abort"]), default="abort",
              show_default=True)
def segment_cmd(input_path, output_path, rules_name, on_error):
    """Motif-segment each molecule; one JSON record per line."""
    rules = RULE_SETS[rules_name]
    count = 0
    with open(output_path, "w", encoding="utf-8") as out:
        for smiles in dataprep.load_smiles_file(input_path, on_error=on_error):
            mol = parse_smiles(smiles)
            hg = segment(mol, rules)
            cut_pairs = sorted(
                (min(mol.bonds[i].a, mol.bonds[i].b), max(mol.bonds[i].a, mol.bonds[i].b))
                for i in hg.partition.cut_bonds
            )
            out.write(json.dumps({
                "smiles": smiles,
                "a": hg.a,
                "b": hg.b,
                "motif_sizes": hg.partition.motif_sizes(),
                "cut_bonds": [list(p) for p in cut_pairs],
            }, sort_keys=True) + "\n")
            count += 1
    _echo_json({"records": count, "rules": rules_name})


@cli.command("pretrain")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="SMILES file (no contrastive term).")
@click.option("--pairs", "pairs_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="smiles<TAB>text file (adds contrastive term).")
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--steps", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--batch-size", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--mask-ratio", type=click.FloatRange(0.0, 1.0), default=0.15,
              show_default=True)
@click.option("--d-gnn", type=click.IntRange(min=1), default=300, show_default=True)
@click.option("--layers", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--d-text", type=click.IntRange(min=8), default=64, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--on-error", type=click.Choice(["skip", "abort"]), default="abort",
              show_default=True)
def pretrain_cmd(input_path, pairs_path, checkpoint_path, steps, batch_size, lr,
                 mask_ratio, d_gnn, layers, d_text, seed, on_error):
    """Pre-train the encoder; writes params and heads to one checkpoint."""
    if (input_path is None) == (pairs_path is None):
        raise click.UsageError("exactly one of --input / --pairs is required")
    if pairs_path:
        records = list(dataprep.load_pairs_file(pairs_path, on_error=on_error))
        if not records:
            raise click.UsageError("no usable records in --pairs")
        molecules = [parse_smiles(r.molecule) for r in records]
        texts = np.stack([dataprep.text_embed_stub(r.text, d_text, seed) for r in records])
    else:
        molecules = [parse_smiles(s)
                     for s in dataprep.load_smiles_file(input_path, on_error=on_error)]
        if not molecules:
            raise click.UsageError("no usable records in --input")
        texts = None
    config = TrainConfig(seed=seed, d_gnn=d_gnn, n_layers=layers, d_text=d_text,
                         lr=lr, batch_size=batch_size, mask_ratio=mask_ratio,
                         steps=steps, weights=LossWeights())
    result = train(molecules, config, texts)
    save_checkpoint(checkpoint_path, result.params, extra=result.heads.blocks)
    _echo_json({
        "molecules": len(molecules),
        "steps": steps,
        "first_loss": result.log[0].total,
        "final_loss": result.log[-1].total,
        "final": dataclasses.asdict(result.log[-1]),
    })


@cli.command("embed")
@click.option("--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--checkpoint", "checkpoint_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--rules", "rules_name", type=click.Choice(sorted(RULE_SETS)),
              default="simple-brics", show_default=True)
@click.option("--on-error", type=click.Choice(["skip", "abort"]), default="abort",
              show_default=True)
def embed_cmd(input_path, checkpoint_path, output_path, rules_name, on_error):
    """Segment + encode each molecule; writes a multi-level feature file."""
    params, _ = load_checkpoint(checkpoint_path)
    rules = RULE_SETS[rules_name]
    features = [
        encode(segment(parse_smiles(s), rules), params)
        for s in dataprep.load_smiles_file(input_path, on_error=on_error)
    ]
    if not features:
        raise click.UsageError("no usable records in --input")
    save_features(output_path, features)
    _echo_json({"records": len(features), "d_gnn": params.d})


_MODE_CHOICES = ("none", "hier", "all", "node", "motif", "graph")


def _projector_for(features, projector_path, d_llm, seed):
    if projector_path:
        return load_projector(projector_path)
    return init_projector(seed, features[0].d, d_llm)


@cli.command("reduce")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(_MODE_CHOICES), required=True)
@click.option("--projector", "projector_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Saved projector; omit to init from --seed.")
@click.option("--d-llm", type=click.IntRange(min=1), default=2048, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
def reduce_cmd(features_path, mode, projector_path, d_llm, seed, output_path):
    """Project + reduce each record; JSONL with tokens and level ids."""
    features = load_features(features_path)
    projector = _projector_for(features, projector_path, d_llm, seed)
    with open(output_path, "w", encoding="utf-8") as out:
        for f in features:
            bundle = reduce_sample(project(f, projector), mode)
            out.write(json.dumps({
                "k": bundle.k,
                "level_ids": bundle.level_ids.tolist(),
                "reduction": bundle.reduction,
                "tokens": [[float(x) for x in row] for row in bundle.tokens],
            }, sort_keys=True) + "\n")
    _echo_json({"records": len(features), "mode": mode, "d_llm": projector.d_llm})


@cli.command("export-tokens")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(_MODE_CHOICES), required=True)
@click.option("--projector", "projector_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--d-llm", type=click.IntRange(min=1), default=2048, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output-dir", "output_dir", required=True,
              type=click.Path(file_okay=False))
def export_tokens_cmd(features_path, mode, projector_path, d_llm, seed, output_dir):
    """Write one binary token file per record into --output-dir."""
    features = load_features(features_path)
    projector = _projector_for(features, projector_path, d_llm, seed)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(features):
        bundle = reduce_sample(project(f, projector), mode)
        export_tokens(bundle, out / f"tokens_{i:06d}.tok")
    _echo_json({"records": len(features), "dir": str(out), "mode": mode})


@cli.command("align-projector")
@click.option("--features", "features_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--pairs", "pairs_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="smiles<TAB>text; texts go through the stub embedder.")
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Precomputed sidecar vectors (count, d_text).")
@click.option("--d-text", type=click.IntRange(min=8), default=64, show_default=True,
              help="Stub dimension when --pairs is used.")
@click.option("--steps", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
def align_projector_cmd(features_path, pairs_path, embeddings_path, d_text, steps,
                        lr, seed, output_path):
    """Fit the projector to paired text vectors over frozen features."""
    if (pairs_path is None) == (embeddings_path is None):
        raise click.UsageError("exactly one of --pairs / --embeddings is required")
    features = load_features(features_path)
    if embeddings_path:
        texts = dataprep.load_embeddings(embeddings_path)
    else:
        records = list(dataprep.load_pairs_file(pairs_path))
        texts = np.stack([dataprep.text_embed_stub(r.text, d_text, seed) for r in records])
    if len(features) != texts.shape[0]:
        raise click.UsageError(
            f"{len(features)} feature records vs {texts.shape[0]} text vectors")
    projector = align_projector(features, texts, AlignConfig(seed=seed, lr=lr, steps=steps))
    save_projector(output_path, projector)
    score = matched_vs_mismatched(projector, features, texts, seed=seed)
    _echo_json({"pairs": int(texts.shape[0]), "steps": steps,
                "matched_beats_mismatched": score, "d_llm": projector.d_llm})


def _eval_common(pred_path, gt_path, mode, fmt, records_path, summary_path):
    report = evaluate_corpus(pred_path, gt_path, mode, fmt)
    if records_path:
        with open(records_path, "w", encoding="utf-8") as out:
            for row in report.rows:
                out.write(json.dumps(row, sort_keys=True) + "\n")
    csv_text = report.summary_csv()
    if summary_path:
        Path(summary_path).write_text(csv_text, encoding="utf-8")
    click.echo(csv_text, nl=False)


@cli.command("eval-mol")
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", "gt_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["smiles", "selfies"]),
              default="smiles", show_default=True)
@click.option("--records", "records_path", type=click.Path(dir_okay=False), default=None)
@click.option("--summary", "summary_path", type=click.Path(dir_okay=False), default=None)
def eval_mol_cmd(pred_path, gt_path, fmt, records_path, summary_path):
    """Molecule-task metrics; summary CSV on stdout."""
    _eval_common(pred_path, gt_path, "mol", fmt, records_path, summary_path)


@cli.command("eval-text")
@click.option("--pred", "pred_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--gt", "gt_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--records", "records_path", type=click.Path(dir_okay=False), default=None)
@click.option("--summary", "summary_path", type=click.Path(dir_okay=False), default=None)
def eval_text_cmd(pred_path, gt_path, records_path, summary_path):
    """Caption-task metrics; summary CSV on stdout."""
    _eval_common(pred_path, gt_path, "text", "smiles", records_path, summary_path)


@cli.command("selfcheck")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def selfcheck_cmd(ctx, seed):
    """Gradient, pooling-algebra, and canonicalization suites; nonzero on failure."""
    results = run_all(seed=seed)
    failed = False
    for r in results:
        status = "pass" if r.passed else "FAIL"
        detail = json.dumps(r.detail, sort_keys=True)
        click.echo(f"[{status}] {r.name} {detail}")
        failed = failed or not r.passed
    if failed:
        ctx.exit(1)


def main(argv=None) -> int:
    try:
        cli(args=argv, prog_name="moltok", standalone_mode=False)
        return 0
    except click.exceptions.Exit as err:
        return err.exit_code
    except click.UsageError as err:
        print(_fail_line(err), file=sys.stderr)
        return 1
    except click.ClickException as err:
        print(_fail_line(err), file=sys.stderr)
        return 1
    except Exception as err:  # noqa: BLE001 - boundary: report, don't crash
        print(_fail_line(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
