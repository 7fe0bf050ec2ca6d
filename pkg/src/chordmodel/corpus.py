"""Chord-sequence corpus ingestion, preprocessing, and collapse.

Two interchangeable file formats, both UTF-8 with blank lines ignored:

- jsonl: one JSON object per line,
  {"id": str, "chords": [[pc, ...], ...], "bass": [pc | null, ...]?}
- plain: one piece per line, chords as comma-joined pitch classes separated
  by spaces ("0,4,7 5,9,0"); lines starting with "#" are comments.

Corpora labelled in some chord vocabulary (roman numerals, jazz symbols,
...) can be ingested through a label map: a JSON object from label to
pitch-class list, e.g. {"C": [0, 4, 7], "G7": [7, 11, 2, 5]}. With a label
map, plain-format tokens are looked up instead of parsed as numbers. No
vocabulary ships here; the mapping is the user's claim about their data.

Preprocessing merges consecutive events with identical (pitch-class set,
bass) pairs; a change of bass over the same set survives as a repeated set,
which is how chord inversions are represented. Bass plays no further role:
the model reads pitch-class sets only.

Collapse groups events by the transposition normal form of their (context,
continuation) pair; events with no context group by the continuation's
normal form alone. Transposition-invariant features make each group share
one probability, so downstream cost and gradient work scales with the number
of distinct groups rather than the number of events.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .pcset import N_PITCH_CLASSES, ChordAlphabet, PcSet, enumerate_alphabet

Event = tuple[PcSet, int | None]


class CorpusFormatError(ValueError):
    """Raised for malformed corpus files; message names the line at fault."""


@dataclass(frozen=True)
class Piece:
    """One chord sequence; events pair a pitch-class set with an optional bass."""

    id: str
    events: tuple[Event, ...]

    @property
    def chords(self) -> tuple[PcSet, ...]:
        return tuple(pcs for pcs, _ in self.events)


@dataclass(frozen=True)
class CorpusMeta:
    name: str
    source: str
    config_hash: str


@dataclass(frozen=True)
class CorpusFile:
    pieces: tuple[Piece, ...]
    meta: CorpusMeta


def _config_hash(fmt: str) -> str:
    return hashlib.sha256(f"format={fmt}".encode("ascii")).hexdigest()[:16]


def _validated_chord(values, where: str) -> PcSet:
    members = []
    for v in values:
        if not isinstance(v, int) or isinstance(v, bool) or not 0 <= v < N_PITCH_CLASSES:
            raise CorpusFormatError(f"{where}: pitch class {v!r} outside 0..11")
        members.append(v)
    if not members:
        raise CorpusFormatError(f"{where}: empty chord")
    return tuple(sorted(set(members)))


def load_label_map(path: str | Path) -> dict[str, PcSet]:
    """Read a JSON label -> pitch-class-list map for plain-format corpora."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{path.name}: invalid JSON ({exc.msg})")
    if not isinstance(obj, dict) or not obj:
        raise CorpusFormatError(
            f"{path.name}: expected a non-empty object mapping labels to"
            " pitch-class lists"
        )
    mapping: dict[str, PcSet] = {}
    for label, values in obj.items():
        if not isinstance(values, list):
            raise CorpusFormatError(
                f"{path.name}: label {label!r} must map to a list"
            )
        mapping[label] = _validated_chord(values, f"{path.name}: label {label!r}")
    return mapping


def _parse_plain_line(
    line: str, where: str, label_map: dict[str, PcSet] | None = None
) -> tuple[Event, ...]:
    events = []
    for token in line.split():
        if label_map is not None:
            if token not in label_map:
                raise CorpusFormatError(f"{where}: unknown chord label {token!r}")
            chord = label_map[token]
        else:
            try:
                values = [int(part) for part in token.split(",")]
            except ValueError:
                raise CorpusFormatError(f"{where}: malformed chord token {token!r}")
            chord = _validated_chord(values, f"{where}: token {token!r}")
        events.append((chord, None))
    if not events:
        raise CorpusFormatError(f"{where}: piece has no chords")
    return tuple(events)


def _parse_jsonl_line(line: str, where: str) -> Piece:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusFormatError(f"{where}: invalid JSON ({exc.msg})")
    if not isinstance(obj, dict) or "id" not in obj or "chords" not in obj:
        raise CorpusFormatError(f'{where}: expected an object with "id" and "chords"')
    piece_id = obj["id"]
    if not isinstance(piece_id, str) or not piece_id:
        raise CorpusFormatError(f"{where}: piece id must be a non-empty string")
    chords_raw = obj["chords"]
    if not isinstance(chords_raw, list) or not chords_raw:
        raise CorpusFormatError(f"{where}: chords must be a non-empty list")
    chords = []
    for k, c in enumerate(chords_raw):
        if not isinstance(c, list):
            raise CorpusFormatError(f"{where}: chord {k} is not a list")
        chords.append(_validated_chord(c, f"{where}: chord {k}"))
    bass_raw = obj.get("bass")
    if bass_raw is None:
        bass = [None] * len(chords)
    else:
        if not isinstance(bass_raw, list) or len(bass_raw) != len(chords):
            raise CorpusFormatError(f"{where}: bass list length differs from chords")
        bass = []
        for k, b in enumerate(bass_raw):
            if b is None:
                bass.append(None)
            elif isinstance(b, int) and not isinstance(b, bool) and 0 <= b < 12:
                if b not in chords[k]:
                    raise CorpusFormatError(
                        f"{where}: bass {b} of chord {k} is not a chord member"
                    )
                bass.append(b)
            else:
                raise CorpusFormatError(f"{where}: bass {b!r} outside 0..11")
    return Piece(id=piece_id, events=tuple(zip(chords, bass)))


def parse_corpus(
    path: str | Path,
    fmt: str = "jsonl",
    label_map: dict[str, PcSet] | None = None,
) -> CorpusFile:
    """Read a corpus file; raises CorpusFormatError naming the faulty line."""
    path = Path(path)
    if fmt not in ("jsonl", "plain"):
        raise ValueError(f"unknown corpus format {fmt!r}")
    if label_map is not None and fmt != "plain":
        raise ValueError("label maps apply to the plain format only")
    pieces: list[Piece] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path.name}:{lineno}"
            if fmt == "plain":
                if line.startswith("#"):
                    continue
                piece = Piece(
                    id=f"piece-{len(pieces) + 1:04d}",
                    events=_parse_plain_line(line, where, label_map),
                )
            else:
                piece = _parse_jsonl_line(line, where)
            if piece.id in seen_ids:
                raise CorpusFormatError(f"{where}: duplicate piece id {piece.id!r}")
            seen_ids.add(piece.id)
            pieces.append(piece)
    if not pieces:
        raise CorpusFormatError(f"{path.name}: corpus contains no pieces")
    meta = CorpusMeta(name=path.stem, source=path.name, config_hash=_config_hash(fmt))
    return CorpusFile(pieces=tuple(pieces), meta=meta)


def write_corpus(corpus: CorpusFile, path: str | Path, fmt: str = "jsonl") -> None:
    """Serialize a corpus so that re-parsing reproduces it."""
    path = Path(path)
    lines = []
    for piece in corpus.pieces:
        if fmt == "plain":
            lines.append(" ".join(",".join(map(str, pcs)) for pcs, _ in piece.events))
        elif fmt == "jsonl":
            obj: dict = {
                "id": piece.id,
                "chords": [list(pcs) for pcs, _ in piece.events],
            }
            if any(b is not None for _, b in piece.events):
                obj["bass"] = [b for _, b in piece.events]
            lines.append(json.dumps(obj, separators=(",", ":")))
        else:
            raise ValueError(f"unknown corpus format {fmt!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def preprocess(piece: Piece) -> Piece:
    """Merge consecutive events with identical (pitch-class set, bass),
    then drop the bass.

    A bass change over an unchanged set survives as a repeated set
    (inversion change); downstream consumers see pitch-class sets only.
    Single-pass ingestion step: reapplying it to its own output would merge
    the deliberately kept inversion repeats, so it is not idempotent.
    """
    events: list[Event] = []
    for event in piece.events:
        if not events or events[-1] != event:
            events.append(event)
    return Piece(
        id=piece.id, events=tuple((chord, None) for chord, _ in events)
    )


def preprocess_corpus(corpus: CorpusFile) -> CorpusFile:
    return CorpusFile(
        pieces=tuple(preprocess(p) for p in corpus.pieces), meta=corpus.meta
    )


@dataclass(frozen=True)
class CollapsedPiece:
    """Event counts of one piece, keyed by transposition class.

    start: continuation class representative id -> count (context-free
    events; one per non-empty piece). trans: (context class row, relative
    continuation id) -> count, where the relative id is the continuation
    transposed by the shift that maps the context onto its representative.
    """

    piece_id: str
    n_events: int
    start: dict[int, int] = field(default_factory=dict)
    trans: dict[tuple[int, int], int] = field(default_factory=dict)


@dataclass(frozen=True)
class CollapsedCorpus:
    """Per-piece collapsed counts plus their corpus-level aggregate."""

    pieces: tuple[CollapsedPiece, ...]
    start: dict[int, int]
    trans: dict[tuple[int, int], int]

    @property
    def n_events(self) -> int:
        return sum(p.n_events for p in self.pieces)

    @property
    def n_classes(self) -> int:
        """Distinct collapsed groups; the collapse ratio is n_events over this."""
        return len(self.start) + len(self.trans)


def collapse_piece(piece: Piece, alphabet: ChordAlphabet) -> CollapsedPiece:
    start: dict[int, int] = {}
    trans: dict[tuple[int, int], int] = {}
    chords = piece.chords
    ids = [alphabet.id_of(c) for c in chords]
    for k, j in enumerate(ids):
        if k == 0:
            rep_id = int(alphabet.rep_ids[alphabet.rep_row[j]])
            start[rep_id] = start.get(rep_id, 0) + 1
        else:
            i = ids[k - 1]
            row = int(alphabet.rep_row[i])
            shift = int(alphabet.shift_of[i])
            rel = int(alphabet.perm[(-shift) % N_PITCH_CLASSES, j])
            key = (row, rel)
            trans[key] = trans.get(key, 0) + 1
    return CollapsedPiece(
        piece_id=piece.id, n_events=len(chords), start=start, trans=trans
    )


def aggregate_counts(
    pieces: tuple[CollapsedPiece, ...], multiplicities=None
) -> tuple[dict[int, int], dict[tuple[int, int], int]]:
    """Sum per-piece counts, each piece weighted by its multiplicity."""
    start: dict[int, int] = {}
    trans: dict[tuple[int, int], int] = {}
    for k, piece in enumerate(pieces):
        m = 1 if multiplicities is None else int(multiplicities[k])
        if m == 0:
            continue
        for key, count in piece.start.items():
            start[key] = start.get(key, 0) + m * count
        for key2, count in piece.trans.items():
            trans[key2] = trans.get(key2, 0) + m * count
    return start, trans


def collapse(
    corpus: CorpusFile, alphabet: ChordAlphabet | None = None
) -> CollapsedCorpus:
    """Collapse a preprocessed corpus into transposition-class counts."""
    alphabet = alphabet or enumerate_alphabet()
    pieces = tuple(collapse_piece(p, alphabet) for p in corpus.pieces)
    start, trans = aggregate_counts(pieces)
    return CollapsedCorpus(pieces=pieces, start=start, trans=trans)
