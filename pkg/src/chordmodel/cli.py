"""Batch command line: feature dumps, model fits, importance, sampling.

Four subcommands:

- features: per-event raw and standardized feature table (CSV).
- fit: maximum-likelihood weights and cross entropy for one corpus (JSON).
- importance: weight / explained entropy / unique explained entropy per
  feature, with optional piece-resampling bootstrap intervals and an
  optional per-composition table (CSV + JSON).
- sample: generate a synthetic corpus from given weights.

Every artifact embeds the run configuration and its hash, so a result can
be reproduced from the artifact plus the input corpus alone. All
randomness flows from --seed; outputs are byte-identical across reruns and
independent of --threads.

Exit codes: 0 success, 1 internal error, 2 input error.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import click
import numpy as np

from .corpus import (
    CorpusFile,
    CorpusFormatError,
    CorpusMeta,
    Piece,
    collapse,
    load_label_map,
    parse_corpus,
    preprocess_corpus,
    write_corpus,
)
from .features import FEATURE_NAMES, FeatureSpace, get_feature_space
from .importance import (
    MEASURES,
    bootstrap,
    feature_importance,
    per_composition_importance,
)
from .model import EnergyModel, fit, full_mask, mask_from_names, sample_sequence
from .pcset import format_pcset
from .spectrum import SpectrumParams

FEATURE_CSV_COLUMNS = (
    "piece_id",
    "prev",
    "cur",
    *(f"{name}_raw" for name in FEATURE_NAMES),
    *(f"{name}_std" for name in FEATURE_NAMES),
)
IMPORTANCE_CSV_COLUMNS = (
    "feature",
    "measure",
    "estimate",
    "lower",
    "upper",
    "oriented_estimate",
    "oriented_lower",
    "oriented_upper",
)
PIECE_CSV_COLUMNS = ("piece_id", "feature", "measure", "value", "oriented_value")


@dataclass(frozen=True)
class RunConfig:
    """Result-determining knobs of one run, echoed into every artifact."""

    rho: float = 0.75
    sigma: float = 0.0683
    harmonics: int = 12
    bins: int = 1200
    q_literal: bool = False
    features: tuple[str, ...] = FEATURE_NAMES
    ridge: float = 0.0
    bootstrap: int = 0
    seed: int = 0
    level: float = 0.99
    corpus_format: str = "plain"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["features"] = list(self.features)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("ascii")).hexdigest()[:16]


def _spectrum_options(f):
    f = click.option("--rho", type=float, default=0.75, show_default=True,
                     help="Harmonic level roll-off exponent.")(f)
    f = click.option("--sigma", type=float, default=0.0683, show_default=True,
                     help="Gaussian smoothing SD in semitones.")(f)
    f = click.option("--harmonics", type=int, default=12, show_default=True,
                     help="Number of harmonics per tone.")(f)
    f = click.option("--bins", type=int, default=1200, show_default=True,
                     help="Pitch-class grid resolution (multiple of 12).")(f)
    f = click.option("--q-literal", is_flag=True,
                     help="Use spectral distance rather than similarity as "
                          "the virtual-pitch match profile.")(f)
    f = click.option("--cache-dir", type=click.Path(file_okay=False),
                     default=None, help="Persist feature tables here.")(f)
    return f


def _corpus_options(f):
    f = click.option("--format", "corpus_format",
                     type=click.Choice(["auto", "jsonl", "plain"]),
                     default="auto", show_default=True,
                     help="Corpus file format; auto picks jsonl for "
                          ".jsonl/.ndjson, plain otherwise.")(f)
    f = click.option("--label-map", type=click.Path(exists=False), default=None,
                     help="JSON chord-label -> pitch-class-list map for "
                          "plain-format corpora.")(f)
    return f


def _resolve_format(path: str, corpus_format: str) -> str:
    if corpus_format != "auto":
        return corpus_format
    return "jsonl" if Path(path).suffix in (".jsonl", ".ndjson") else "plain"


def _build_space(rho, sigma, harmonics, bins, q_literal, cache_dir) -> FeatureSpace:
    try:
        params = SpectrumParams(
            rho=rho, sigma=sigma, n_harmonics=harmonics, n_bins=bins
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))
    return get_feature_space(params, literal_q=q_literal, cache_dir=cache_dir)


def _read_corpus(path: str, fmt: str, label_map_path: str | None) -> CorpusFile:
    label_map = None
    try:
        if label_map_path is not None:
            if fmt != "plain":
                raise click.UsageError("--label-map needs the plain format")
            label_map = load_label_map(label_map_path)
        raw = parse_corpus(path, fmt, label_map)
    except (CorpusFormatError, OSError) as exc:
        raise click.UsageError(str(exc))
    return preprocess_corpus(raw)


def _parse_feature_mask(spec: str | None) -> tuple[np.ndarray, tuple[str, ...]]:
    if spec is None:
        return full_mask(), FEATURE_NAMES
    if spec.strip() == "none":
        return np.zeros(len(FEATURE_NAMES), dtype=bool), ()
    names = tuple(token.strip() for token in spec.split(",") if token.strip())
    try:
        mask = mask_from_names(names)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    return mask, tuple(n for n in FEATURE_NAMES if n in names)


def _write_json(path: Path | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        click.echo(text, nl=False)
    else:
        path.write_text(text, encoding="utf-8")


def _csv_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, columns, rows, config: RunConfig) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_hash: {config.hash()}\n")
        fh.write(f"# config: {json.dumps(config.to_dict(), sort_keys=True)}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_csv_value(row.get(c)) for c in columns])


@click.group()
@click.version_option(package_name="chordmodel")
def main() -> None:
    """Consonance features and energy-based models of chord sequences."""


@main.command("features")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="CSV destination (default: stdout).")
@_corpus_options
@_spectrum_options
def cmd_features(corpus_path, output, corpus_format, label_map,
                 rho, sigma, harmonics, bins, q_literal, cache_dir) -> None:
    """Dump raw and standardized features for every event of a corpus."""
    fmt = _resolve_format(corpus_path, corpus_format)
    config = RunConfig(rho=rho, sigma=sigma, harmonics=harmonics, bins=bins,
                       q_literal=q_literal, corpus_format=fmt)
    corpus = _read_corpus(corpus_path, fmt, label_map)
    space = _build_space(rho, sigma, harmonics, bins, q_literal, cache_dir)
    al = space.alphabet

    rows = []
    for piece in corpus.pieces:
        prev_id: int | None = None
        prev_str = ""
        for chord in piece.chords:
            cur_id = al.id_of(chord)
            raw = space.raw_transition_values(prev_id, cur_id)
            std = space.stats.standardize(raw)
            row = {"piece_id": piece.id, "prev": prev_str,
                   "cur": format_pcset(chord)}
            for j, name in enumerate(FEATURE_NAMES):
                row[f"{name}_raw"] = float(raw[j])
                row[f"{name}_std"] = float(std[j])
            rows.append(row)
            prev_id, prev_str = cur_id, format_pcset(chord)

    if output is None:
        buf = io.StringIO()
        buf.write(f"# config_hash: {config.hash()}\n")
        buf.write(f"# config: {json.dumps(config.to_dict(), sort_keys=True)}\n")
        writer = csv.writer(buf)
        writer.writerow(FEATURE_CSV_COLUMNS)
        for row in rows:
            writer.writerow([_csv_value(row.get(c)) for c in FEATURE_CSV_COLUMNS])
        click.echo(buf.getvalue(), nl=False)
    else:
        _write_csv(Path(output), FEATURE_CSV_COLUMNS, rows, config)
        click.echo(f"wrote {len(rows)} event rows to {output}")


@main.command("fit")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None,
              help="JSON destination (default: stdout).")
@click.option("--features", "features_spec", default=None,
              help="Comma-separated active features, or 'none' for the "
                   "uniform null model (default: all four).")
@click.option("--ridge", type=float, default=0.0, show_default=True,
              help="L2 penalty strength on the weights.")
@_corpus_options
@_spectrum_options
def cmd_fit(corpus_path, output, features_spec, ridge, corpus_format, label_map,
            rho, sigma, harmonics, bins, q_literal, cache_dir) -> None:
    """Fit maximum-likelihood feature weights on a corpus."""
    fmt = _resolve_format(corpus_path, corpus_format)
    mask, active_names = _parse_feature_mask(features_spec)
    config = RunConfig(rho=rho, sigma=sigma, harmonics=harmonics, bins=bins,
                       q_literal=q_literal, features=active_names,
                       ridge=ridge, corpus_format=fmt)
    corpus = _read_corpus(corpus_path, fmt, label_map)
    space = _build_space(rho, sigma, harmonics, bins, q_literal, cache_dir)
    result = fit(collapse(corpus, space.alphabet), space,
                 feature_mask=mask, ridge=ridge)

    payload = {
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "corpus": Path(corpus_path).name,
        "result": result.to_dict(),
    }
    _write_json(None if output is None else Path(output), payload)
    if output is not None:
        click.echo(
            f"cross entropy: {result.cross_entropy:.9f} nats/chord"
            f" (converged={result.converged}, iterations={result.iterations})"
        )


@main.command("importance")
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output_prefix", default=None,
              help="Output prefix; writes PREFIX.json and PREFIX.csv, plus "
                   "PREFIX.pieces.csv with --per-piece (default: JSON to "
                   "stdout).")
@click.option("--bootstrap", "bootstrap_b", type=int, default=0,
              show_default=True,
              help="Bootstrap replicate count; 0 disables intervals.")
@click.option("--level", type=float, default=0.99, show_default=True,
              help="Bootstrap confidence level.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Root seed for bootstrap resampling.")
@click.option("--ridge", type=float, default=0.0, show_default=True,
              help="L2 penalty for corpus-level fits.")
@click.option("--per-piece", is_flag=True,
              help="Also fit every composition separately.")
@click.option("--piece-ridge", type=float, default=1e-3, show_default=True,
              help="L2 penalty for per-composition fits.")
@click.option("--threads", type=int, default=1, show_default=True,
              help="Worker threads for bootstrap replicates.")
@_corpus_options
@_spectrum_options
def cmd_importance(corpus_path, output_prefix, bootstrap_b, level, seed, ridge,
                   per_piece, piece_ridge, threads, corpus_format, label_map,
                   rho, sigma, harmonics, bins, q_literal, cache_dir) -> None:
    """Per-feature weight, explained entropy, and unique explained entropy."""
    fmt = _resolve_format(corpus_path, corpus_format)
    if bootstrap_b < 0:
        raise click.UsageError("--bootstrap must be >= 0")
    if not 0.0 < level < 1.0:
        raise click.UsageError("--level must be strictly between 0 and 1")
    config = RunConfig(rho=rho, sigma=sigma, harmonics=harmonics, bins=bins,
                       q_literal=q_literal, ridge=ridge, bootstrap=bootstrap_b,
                       seed=seed, level=level, corpus_format=fmt)
    corpus = _read_corpus(corpus_path, fmt, label_map)
    space = _build_space(rho, sigma, harmonics, bins, q_literal, cache_dir)
    collapsed = collapse(corpus, space.alphabet)

    if bootstrap_b > 0:
        if len(collapsed.pieces) < 2:
            raise click.UsageError(
                "bootstrap needs at least 2 pieces to resample"
            )
        bs = bootstrap(collapsed, space, n_replicates=bootstrap_b, seed=seed,
                       level=level, ridge=ridge, threads=threads)
        rows = bs.rows()
        corpus_level = bs.to_dict()
    else:
        report = feature_importance(collapsed, space, ridge=ridge)
        rows = []
        for row in report.rows():
            rows.append({
                "feature": row["feature"],
                "measure": row["measure"],
                "estimate": row["value"],
                "lower": None,
                "upper": None,
                "oriented_estimate": row["oriented_value"],
                "oriented_lower": None,
                "oriented_upper": None,
            })
        corpus_level = {"rows": rows, "point": report.to_dict()}

    payload = {
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "corpus": Path(corpus_path).name,
        "corpus_level": corpus_level,
    }
    pc = None
    if per_piece:
        pc = per_composition_importance(collapsed, space, ridge=piece_ridge)
        payload["per_piece"] = {**pc.to_dict(), "ridge": piece_ridge}

    if output_prefix is None:
        _write_json(None, payload)
        return
    json_path = Path(f"{output_prefix}.json")
    csv_path = Path(f"{output_prefix}.csv")
    _write_json(json_path, payload)
    _write_csv(csv_path, IMPORTANCE_CSV_COLUMNS, rows, config)
    written = [str(json_path), str(csv_path)]
    if pc is not None:
        pieces_csv = Path(f"{output_prefix}.pieces.csv")
        _write_csv(pieces_csv, PIECE_CSV_COLUMNS, pc.rows(), config)
        written.append(str(pieces_csv))
        if pc.skipped:
            click.echo(
                f"skipped {len(pc.skipped)} piece(s) with fewer than 2 "
                f"events: {', '.join(pc.skipped)}"
            )
    for row in rows:
        if row["measure"] != "weight":
            continue
        interval = ""
        if row["lower"] is not None:
            interval = f"  [{row['lower']:+.4f}, {row['upper']:+.4f}]"
        click.echo(f"{row['feature']:24s} weight {row['estimate']:+.4f}{interval}")
    click.echo("wrote " + ", ".join(written))


def _weights_from_file(path: str) -> np.ndarray:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read weights from {path}: {exc}")
    if isinstance(obj, dict) and isinstance(obj.get("result"), dict):
        obj = obj["result"]
    if isinstance(obj, dict) and "weights" in obj:
        obj = obj["weights"]
    if isinstance(obj, dict):
        unknown = sorted(set(obj) - set(FEATURE_NAMES))
        if unknown:
            raise click.UsageError(f"unknown feature names in weights: {unknown}")
        values = [obj.get(name, 0.0) for name in FEATURE_NAMES]
    elif isinstance(obj, list):
        values = obj
    else:
        raise click.UsageError(
            "weights file must hold a JSON list or a name -> value object"
        )
    if len(values) != len(FEATURE_NAMES):
        raise click.UsageError(f"expected {len(FEATURE_NAMES)} weights")
    try:
        weights = np.array([float(v) for v in values])
    except (TypeError, ValueError):
        raise click.UsageError("weights must be numbers")
    if not np.all(np.isfinite(weights)):
        raise click.UsageError("weights must be finite")
    return weights


@main.command("sample")
@click.argument("weights_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True,
              help="Corpus destination.")
@click.option("-n", "--pieces", "n_pieces", type=int, default=1,
              show_default=True, help="Number of pieces to sample.")
@click.option("--length", type=int, default=10, show_default=True,
              help="Chords per piece.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Sampling seed.")
@click.option("--format", "corpus_format",
              type=click.Choice(["plain", "jsonl"]), default="plain",
              show_default=True, help="Output corpus format.")
@_spectrum_options
def cmd_sample(weights_path, output, n_pieces, length, seed, corpus_format,
               rho, sigma, harmonics, bins, q_literal, cache_dir) -> None:
    """Sample a synthetic corpus from a weights JSON file."""
    if n_pieces < 1 or length < 1:
        raise click.UsageError("--pieces and --length must be >= 1")
    weights = _weights_from_file(weights_path)
    config = RunConfig(rho=rho, sigma=sigma, harmonics=harmonics, bins=bins,
                       q_literal=q_literal, seed=seed,
                       corpus_format=corpus_format)
    space = _build_space(rho, sigma, harmonics, bins, q_literal, cache_dir)
    model = EnergyModel(space, weights=weights)
    rng = np.random.default_rng(seed)
    pieces = tuple(
        Piece(
            id=f"sample-{i:04d}",
            events=tuple((chord, None) for chord in
                         sample_sequence(model, length, rng)),
        )
        for i in range(n_pieces)
    )
    meta = CorpusMeta(name=Path(output).stem, source="sampled",
                      config_hash=config.hash())
    write_corpus(CorpusFile(pieces=pieces, meta=meta), output, corpus_format)
    click.echo(f"wrote {n_pieces} piece(s) of {length} chords to {output}")


if __name__ == "__main__":
    main()
