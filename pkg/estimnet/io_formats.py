"""
File Formats
Arc list, attribute and config file parsers, and the CSV / text emitters
for estimation, simulation and study results
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import io
import logging
import re

import numpy as np
import pandas as pd

from estimnet.config import OutputFile, settings
from estimnet.exceptions import InputFormatError
from estimnet.models.attributes import MISSING, AttributeKind, AttributeSet
from estimnet.models.digraph import Digraph
from estimnet.models.estimation import PooledEstimate, RunEstimate, StudyResult, ThetaTrace

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"
NA_TOKEN = "NA"
COMMENT_PREFIXES = ("#", "%")


def _read_text(path: PathLike) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise InputFormatError(f"cannot read file: {e.strerror}", path=str(path)) from e


# ---------------------------------------------------------------------------
# Arc lists (Pajek style, 1-based node ids in files)

def parse_arclist(text: str, path: Optional[str] = None) -> Tuple[int, List[Tuple[int, int]]]:
    """
    Parse a `*vertices N` / `*arcs` file into N and 0-based arcs.

    Vertex label lines between the header and `*arcs` are skipped.
    Self-loops, duplicate arcs and out-of-range ids are rejected.
    """
    n: Optional[int] = None
    in_arcs = False
    arcs: List[Tuple[int, int]] = []
    seen = set()
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIXES):
            continue
        tokens = line.split()
        if n is None:
            if tokens[0].lower() != "*vertices" or len(tokens) < 2:
                raise InputFormatError("expected '*vertices N' header", path, line_number)
            try:
                n = int(tokens[1])
            except ValueError:
                raise InputFormatError(f"bad vertex count '{tokens[1]}'", path, line_number) from None
            if n < 1:
                raise InputFormatError(f"vertex count must be positive, got {n}", path, line_number)
            continue
        if tokens[0].startswith("*"):
            section = tokens[0].lower()
            if section != "*arcs":
                raise InputFormatError(f"unsupported section '{tokens[0]}'", path, line_number)
            in_arcs = True
            continue
        if not in_arcs:
            continue
        if len(tokens) != 2:
            raise InputFormatError(f"expected 'tail head', got '{line}'", path, line_number)
        try:
            i, j = int(tokens[0]) - 1, int(tokens[1]) - 1
        except ValueError:
            raise InputFormatError(f"non-integer node id in '{line}'", path, line_number) from None
        if not (0 <= i < n and 0 <= j < n):
            raise InputFormatError(f"node id out of range 1..{n} in '{line}'", path, line_number)
        if i == j:
            raise InputFormatError(f"self-loop {i + 1} -> {j + 1}", path, line_number)
        if (i, j) in seen:
            raise InputFormatError(f"duplicate arc {i + 1} -> {j + 1}", path, line_number)
        seen.add((i, j))
        arcs.append((i, j))
    if n is None:
        raise InputFormatError("missing '*vertices N' header", path)
    if not in_arcs:
        raise InputFormatError("missing '*arcs' section", path)
    return n, arcs


def format_arclist(g: Digraph) -> str:
    lines = [f"*vertices {g.n}", "*arcs"]
    lines.extend(f"{i + 1} {j + 1}" for i, j in sorted(g.arcs))
    return "\n".join(lines) + "\n"


def read_arclist(path: PathLike, **digraph_kwargs) -> Digraph:
    n, arcs = parse_arclist(_read_text(path), str(path))
    g = Digraph.from_arcs(n, arcs, **digraph_kwargs)
    logger.info(f"Read {path}: N={g.n}, L={g.L}")
    return g


def write_arclist(g: Digraph, path: PathLike) -> Path:
    path = Path(path)
    path.write_text(format_arclist(g))
    return path


# ---------------------------------------------------------------------------
# Attribute files: header row of column names, one row per node, NA missing

def _attribute_rows(text: str, path: Optional[str]) -> Tuple[List[str], List[Tuple[int, List[str]]]]:
    """Header names and (line number, tokens) of each data row; `#` starts a comment."""
    header: Optional[List[str]] = None
    rows: List[Tuple[int, List[str]]] = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        if header is None:
            header = tokens
            if len(set(header)) != len(header):
                raise InputFormatError(f"duplicate column names in header {header}", path, line_number)
            continue
        if len(tokens) != len(header):
            raise InputFormatError(
                f"{len(tokens)} fields for {len(header)} columns {header}", path, line_number
            )
        rows.append((line_number, tokens))
    if header is None:
        raise InputFormatError("missing header row", path, 1)
    return header, rows


def parse_attributes(
    text: str,
    kind: AttributeKind,
    n: Optional[int] = None,
    path: Optional[str] = None,
) -> Dict[str, np.ndarray]:
    """
    Typed columns; categorical values are coded 0.. in order of first appearance.

    Every data row must have exactly one field per header column.
    """
    header, rows = _attribute_rows(text, path)
    if n is not None and len(rows) != n:
        if len(rows) > n:
            line_number = rows[n][0]
        else:
            line_number = rows[-1][0] if rows else 1
        raise InputFormatError(f"{len(rows)} data rows for {n} nodes", path, line_number)
    frame = pd.DataFrame([tokens for _, tokens in rows], columns=header, dtype=str)
    line_numbers = [line_number for line_number, _ in rows]

    columns: Dict[str, np.ndarray] = {}
    for name in frame.columns:
        tokens = frame[name].tolist()
        if kind == AttributeKind.CONTINUOUS:
            values = np.empty(len(tokens), dtype=np.float64)
        else:
            values = np.empty(len(tokens), dtype=np.int64)
        codes: Dict[str, int] = {}
        for row, token in enumerate(tokens):
            line_number = line_numbers[row]
            if token == NA_TOKEN:
                values[row] = np.nan if kind == AttributeKind.CONTINUOUS else MISSING
            elif kind == AttributeKind.BINARY:
                if token not in ("0", "1"):
                    raise InputFormatError(f"binary column '{name}' has value '{token}'", path, line_number)
                values[row] = int(token)
            elif kind == AttributeKind.CATEGORICAL:
                try:
                    int(token)
                except ValueError:
                    raise InputFormatError(f"categorical column '{name}' has value '{token}'", path, line_number) from None
                values[row] = codes.setdefault(token, len(codes))
            else:
                try:
                    values[row] = float(token)
                except ValueError:
                    raise InputFormatError(f"continuous column '{name}' has value '{token}'", path, line_number) from None
        columns[name] = values
    return columns


def read_attributes(path: PathLike, kind: AttributeKind, attrs: AttributeSet) -> AttributeSet:
    """Add every column of an attribute file to attrs."""
    for name, values in parse_attributes(_read_text(path), kind, attrs.n, str(path)).items():
        attrs.add_column(kind, name, values)
    logger.info(f"Read {kind.value} attributes from {path}")
    return attrs


def format_attributes(attrs: AttributeSet, kind: AttributeKind) -> str:
    def token(v) -> str:
        if v is None:
            return NA_TOKEN
        return FLOAT_FORMAT % v if kind == AttributeKind.CONTINUOUS else str(v)

    frame = pd.DataFrame({
        name: [token(v) for v in attrs.column_as_list(kind, name)] for name in attrs.names(kind)
    })
    return frame.to_csv(sep=" ", index=False)


# ---------------------------------------------------------------------------
# Config files: `key = value` lines, `#` comments, braces for lists

@dataclass(frozen=True)
class ConfigEntry:
    key: str
    value: str
    line_number: int


@dataclass(frozen=True)
class EffectItem:
    """One `Name`, `Name(arg)` or `Name(arg) = value` list item."""
    name: str
    argument: Optional[str] = None
    value: Optional[float] = None


_ITEM_PATTERN = re.compile(r"^(\w+)\s*(?:\(\s*([^()]*?)\s*\))?\s*(?:=\s*(\S+))?$")


def parse_config(text: str, path: Optional[str] = None) -> Dict[str, ConfigEntry]:
    """Entries keyed by lower-cased key. A `{` list may span several lines."""
    entries: Dict[str, ConfigEntry] = {}
    pending: Optional[ConfigEntry] = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if pending is not None:
            pending = ConfigEntry(pending.key, f"{pending.value} {line}".strip(), pending.line_number)
            if "}" in line:
                entries[pending.key.lower()] = pending
                pending = None
            continue
        if not line:
            continue
        if "=" not in line:
            raise InputFormatError(f"expected 'key = value', got '{line}'", path, line_number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise InputFormatError("empty key", path, line_number)
        if key.lower() in entries:
            raise InputFormatError(f"duplicate key '{key}'", path, line_number)
        entry = ConfigEntry(key, value, line_number)
        if value.startswith("{") and "}" not in value:
            pending = entry
        else:
            entries[key.lower()] = entry
    if pending is not None:
        raise InputFormatError(f"unterminated list for '{pending.key}'", path, pending.line_number)
    return entries


def read_config(path: PathLike) -> Dict[str, ConfigEntry]:
    return parse_config(_read_text(path), str(path))


def _split_top_level(body: str) -> List[str]:
    items, depth, current = [], 0, []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            items.append("".join(current))
            current = []
        else:
            current.append(ch)
    items.append("".join(current))
    return [item.strip() for item in items if item.strip()]


def parse_effect_list(entry: ConfigEntry, path: Optional[str] = None) -> List[EffectItem]:
    """Parse `{Arc, AinSpread(3.0), Sender(gender) = 1.5}`."""
    value = entry.value.strip()
    if not (value.startswith("{") and value.endswith("}")):
        raise InputFormatError(f"'{entry.key}' must be a {{...}} list", path, entry.line_number)
    items = []
    for text in _split_top_level(value[1:-1]):
        match = _ITEM_PATTERN.match(text)
        if match is None:
            raise InputFormatError(f"bad effect '{text}' in '{entry.key}'", path, entry.line_number)
        name, argument, number = match.groups()
        parsed_value = None
        if number is not None:
            try:
                parsed_value = float(number)
            except ValueError:
                raise InputFormatError(f"bad value '{number}' for '{text}'", path, entry.line_number) from None
        items.append(EffectItem(name=name, argument=argument or None, value=parsed_value))
    return items


# ---------------------------------------------------------------------------
# Estimation results

def pooled_frame(pooled: PooledEstimate) -> pd.DataFrame:
    return pd.DataFrame({
        "effect": pooled.labels,
        "estimate": pooled.theta,
        "std_error": pooled.se,
        "t_ratio": pooled.t_ratio,
        "significant": pooled.significant.astype(bool),
    })


def write_pooled_estimates(pooled: PooledEstimate, path: PathLike) -> Path:
    path = Path(path)
    pooled_frame(pooled).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_pooled_estimates(path: PathLike) -> PooledEstimate:
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = {"effect", "estimate", "std_error", "t_ratio", "significant"} - set(frame.columns)
    if missing:
        raise InputFormatError(f"missing columns {sorted(missing)}", str(path), 1)
    return PooledEstimate(
        labels=frame["effect"].astype(str).tolist(),
        theta=frame["estimate"].to_numpy(dtype=np.float64),
        se=frame["std_error"].to_numpy(dtype=np.float64),
        t_ratio=frame["t_ratio"].to_numpy(dtype=np.float64),
        n_runs_used=0,
        significant=frame["significant"].to_numpy(dtype=bool),
    )


def trace_frames(trace: ThetaTrace) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """theta trace (with acceptance rate and V) and dzA trace, one row per outer iteration."""
    theta = pd.DataFrame(trace.theta_matrix(), columns=trace.theta_labels)
    theta.insert(0, "t", trace.t)
    theta["AcceptanceRate"] = trace.acceptance_rate
    theta["V"] = trace.V
    dz = pd.DataFrame(trace.dz_matrix(), columns=trace.stat_labels)
    dz.insert(0, "t", trace.t)
    return theta, dz


def write_traces(trace: ThetaTrace, out_dir: PathLike) -> Tuple[Path, Path]:
    out_dir = Path(out_dir)
    theta, dz = trace_frames(trace)
    theta_path = out_dir / OutputFile.THETA_TRACE.format(run=trace.run_index)
    dz_path = out_dir / OutputFile.DZA_TRACE.format(run=trace.run_index)
    theta.to_csv(theta_path, index=False, float_format=FLOAT_FORMAT)
    dz.to_csv(dz_path, index=False, float_format=FLOAT_FORMAT)
    return theta_path, dz_path


def read_trace(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def format_summary(
    pooled: Optional[PooledEstimate],
    runs: Sequence[RunEstimate],
    observed: Optional[Dict[str, float]] = None,
) -> str:
    """Human readable estimation summary; '*' marks significance at p < 0.05."""
    observed = observed or {}
    n_converged = sum(1 for r in runs if r.converged)
    lines = [f"{settings.APP_NAME} estimation summary", f"Runs converged: {n_converged} of {len(runs)}", ""]
    if pooled is None:
        lines.append("No converged run; no pooled estimate.")
    else:
        lines.append(f"{'Effect':<28}{'Estimate':>14}{'Std. error':>14}{'t-ratio':>10}{'Observed':>14}")
        for k, label in enumerate(pooled.labels):
            star = " *" if pooled.significant[k] else ""
            obs = observed.get(label)
            obs_text = f"{obs:>14.6g}" if obs is not None else f"{'':>14}"
            lines.append(
                f"{label:<28}{pooled.theta[k]:>14.6f}{pooled.se[k]:>14.6f}{pooled.t_ratio[k]:>10.3f}{obs_text}{star}"
            )
        lines.append("")
        lines.append(f"* significant at p < 0.05 (|estimate| > {settings.Z_CRITICAL} x std. error)")
    lines.append("")
    for run in runs:
        if run.converged:
            status = "converged"
        else:
            reason = run.diverged_reason.value if run.diverged_reason else "too few samples"
            status = f"not converged ({reason})"
        lines.append(f"run {run.run_index}: {status}")
    return "\n".join(lines) + "\n"


def emit_results(
    pooled: Optional[PooledEstimate],
    runs: Sequence[RunEstimate],
    out_dir: PathLike,
    traces: Iterable[ThetaTrace] = (),
    observed: Optional[Dict[str, float]] = None,
) -> List[Path]:
    """
    Write pooled estimates, per-run traces, chain snapshots when recorded,
    and the text summary into out_dir.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    if pooled is not None:
        written.append(write_pooled_estimates(pooled, out_dir / OutputFile.POOLED_ESTIMATES))
    for trace in traces:
        written.extend(write_traces(trace, out_dir))
        if trace.snapshots:
            chain_path = out_dir / OutputFile.CHAIN_STATS.format(run=trace.run_index)
            written.append(write_records(trace.snapshots, chain_path))
    summary = out_dir / OutputFile.SUMMARY
    summary.write_text(format_summary(pooled, runs, observed))
    written.append(summary)
    logger.info(f"Wrote {len(written)} result files to {out_dir}")
    return written


# ---------------------------------------------------------------------------
# Simulation, diagnostics and study outputs

def write_records(records: Sequence[Dict], path: PathLike) -> Path:
    path = Path(path)
    pd.DataFrame(list(records)).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_degree_distribution(in_histogram: np.ndarray, out_histogram: np.ndarray, path: PathLike) -> Path:
    size = max(len(in_histogram), len(out_histogram))
    frame = pd.DataFrame({
        "degree": np.arange(size),
        "in_count": np.pad(in_histogram, (0, size - len(in_histogram))),
        "out_count": np.pad(out_histogram, (0, size - len(out_histogram))),
    })
    path = Path(path)
    frame.to_csv(path, index=False)
    return path


def study_frame(result: StudyResult) -> pd.DataFrame:
    return pd.DataFrame([row.to_dict() for row in result.rows])


def write_study_report(result: StudyResult, path: PathLike) -> Path:
    path = Path(path)
    study_frame(result).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path
