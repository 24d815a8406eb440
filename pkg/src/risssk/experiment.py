"""Experiment specs, presets and output files for the figure studies.

A scheme is one curve: a phase source (``optimized``, ``random``, ``no_ris``
or ``continuous``) applied to one :class:`SystemConfig`. Its label encodes
everything that distinguishes it, e.g. ``optimized_L64_Q3_Nt4_Nr4``.

Random streams per realization ``r`` under the run seed::

    channels  (seed, CHANNEL, r)
    random    (seed, PHASE, r)
    restarts  (seed, RESTART, r)
    noise     (seed, NOISE, r, block)
"""
from __future__ import annotations

import csv
import io
import json
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel_model import CONTINUOUS, CONTINUOUS_Q, ConfigError, SystemConfig, realize_channels
from .monte_carlo import (BLOCK_SYMBOLS, ROW_FIELDS, SweepRow, SweepTable, n_blocks,
                          sweep_realization)
from .phase_optimizer import OptimizeOptions, optimize, random_phase_baseline
from .rng import CHANNEL, NOISE, PHASE, RESTART, RngStream

SCHEME_KINDS = ("optimized", "random", "no_ris", "continuous")
LABEL_RE = re.compile(
    r"^(?P<kind>optimized|random|no_ris|continuous)"
    r"(?:_L(?P<L>\d+))?(?:_Q(?P<Q>\d+))?_Nt(?P<Nt>\d+)_Nr(?P<Nr>\d+)$")


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    config: SystemConfig

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ConfigError("schemes", f"unknown scheme {self.kind!r}")

    @property
    def q_bits(self) -> int:
        return CONTINUOUS_Q if self.kind == "continuous" else self.config.effective_q

    @property
    def label(self) -> str:
        c = self.config
        tail = f"Nt{c.n_tx}_Nr{c.n_rx}"
        if self.kind == "no_ris":
            return f"no_ris_{tail}"
        if self.kind == "continuous":
            return f"continuous_L{c.n_ris}_{tail}"
        return f"{self.kind}_L{c.n_ris}_Q{self.q_bits}_{tail}"


def parse_label(label: str) -> dict:
    """Inverse of :attr:`SchemeSpec.label`; Q is CONTINUOUS_Q for continuous."""
    m = LABEL_RE.match(label)
    if not m:
        raise ValueError(f"unrecognized scheme label {label!r}")
    kind = m["kind"]
    q = CONTINUOUS_Q if kind == "continuous" else (int(m["Q"]) if m["Q"] else None)
    return {"kind": kind, "L": int(m["L"]) if m["L"] else 0, "Q": q,
            "Nt": int(m["Nt"]), "Nr": int(m["Nr"])}


@dataclass
class ExperimentSpec:
    name: str
    schemes: list[SchemeSpec]
    snr_grid: list[float]
    n_symbols: int = 100_000
    realizations: int = 100
    seed: int = 0
    options: OptimizeOptions = field(default_factory=OptimizeOptions)

    def __post_init__(self):
        if not self.schemes:
            raise ConfigError("schemes", "at least one scheme is required")
        labels = [s.label for s in self.schemes]
        if len(set(labels)) != len(labels):
            raise ConfigError("schemes", "duplicate scheme")
        if not self.snr_grid:
            raise ConfigError("snr", "empty SNR grid")
        if any(b <= a for a, b in zip(self.snr_grid, self.snr_grid[1:])):
            raise ConfigError("snr", "grid must be strictly ascending")
        if self.n_symbols < 1:
            raise ConfigError("symbols", "must be >= 1")
        if self.realizations < 1:
            raise ConfigError("realizations", "must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be a 64-bit unsigned integer")


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

PRESETS = ("fig2", "fig3", "fig4", "fig5")
DEFAULT_GRID = (-35.0, 2.5, 15.0)


def snr_grid(start: float, step: float, stop: float) -> list[float]:
    """Inclusive grid ``start, start+step, ..., <= stop``."""
    if not step > 0:
        raise ConfigError("snr", "step must be positive")
    if stop < start:
        raise ConfigError("snr", "stop must be >= start")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(count)]


def parse_snr(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError("snr", f"expected start:step:stop, got {text!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError:
        raise ConfigError("snr", f"non-numeric value in {text!r}") from None
    return snr_grid(start, step, stop)


def preset_schemes(name: str, base: SystemConfig | None = None, full: bool = False) -> list[SchemeSpec]:
    """Scheme list of a figure preset.

    Desk-scale surfaces: fig2 L in {32, 64}, fig3 and fig4 L=64, fig5 L=64.
    ``full`` restores the published sizes: fig2 adds L=128, fig3 and fig4 use
    L=128, fig5 uses L=256.
    """
    base = base or SystemConfig()
    q3 = base.replace(n_tx=4, n_rx=4, q_bits=3)
    if name == "fig2":
        sizes = (32, 64, 128) if full else (32, 64)
        out = [SchemeSpec("optimized", q3.replace(n_ris=L)) for L in sizes]
        return out + [SchemeSpec("random", q3.replace(n_ris=sizes[-1])),
                      SchemeSpec("no_ris", q3.replace(n_ris=sizes[-1]))]
    if name == "fig3":
        cfg = q3.replace(n_ris=128 if full else 64)
        return [SchemeSpec("optimized", cfg.replace(q_bits=q)) for q in (1, 2, 3)] + \
               [SchemeSpec("continuous", cfg.replace(q_bits=CONTINUOUS))]
    if name == "fig4":
        cfg = q3.replace(n_ris=128 if full else 64)
        return [SchemeSpec("optimized", cfg.replace(n_rx=nr)) for nr in (4, 8)]
    if name == "fig5":
        cfg = q3.replace(n_ris=256 if full else 64)
        return [SchemeSpec("optimized", cfg.replace(n_tx=nt)) for nt in (4, 8)]
    raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def config_schemes(config: SystemConfig, kinds) -> list[SchemeSpec]:
    return [SchemeSpec(k, config) for k in kinds]


def filter_kinds(schemes: list[SchemeSpec], kinds) -> list[SchemeSpec]:
    kinds = list(kinds)
    for k in kinds:
        if k not in SCHEME_KINDS:
            raise ConfigError("schemes", f"unknown scheme {k!r}")
    return [s for s in schemes if s.kind in kinds]


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------

# Phase designs are pure functions of their inputs; presets that share a
# curve (fig2 L=64 and fig3 Q=3, for example) reuse the design.
_DESIGN_CACHE: dict = {}


def design_phases(scheme: SchemeSpec, channels, realization: int, seed: int,
                  options: OptimizeOptions):
    """Reflection vector and optimizer record for one realization."""
    root = RngStream(seed)
    if scheme.kind == "no_ris":
        return None, None
    if scheme.kind == "random":
        u = random_phase_baseline(channels, scheme.q_bits, root.child(PHASE, realization))
        return u.entries, {"phase_indices": u.indices.tolist()}
    key = (scheme.kind, scheme.config, scheme.q_bits, realization, seed, repr(options))
    if key not in _DESIGN_CACHE:
        res = optimize(channels, scheme.q_bits, options, rng=root.child(RESTART, realization))
        _DESIGN_CACHE[key] = (res.u_final.entries, res.to_dict())
    return _DESIGN_CACHE[key]


def _run_one(args):
    scheme, realization, spec = args
    root = RngStream(spec.seed)
    channels = realize_channels(scheme.config, root.child(CHANNEL, realization))
    if scheme.kind == "no_ris":
        channels = channels.without_ris()
    v, record = design_phases(scheme, channels, realization, spec.seed, spec.options)
    rows = sweep_realization(channels, v, spec.snr_grid, spec.n_symbols,
                             root.child(NOISE, realization), scheme.label, realization)
    return rows, record


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    table: SweepTable
    records: dict[str, list]

    def sidecar(self) -> dict:
        spec = self.spec
        return {
            "name": spec.name,
            "version": __version__,
            "seed": spec.seed,
            "snr_definition": "snr_db = 10*log10(1/N0); unit symbol energy; "
                              "channels normalized by the direct-link path loss",
            "snr_grid_db": spec.snr_grid,
            "n_symbols": spec.n_symbols,
            "realizations": spec.realizations,
            "block_symbols": BLOCK_SYMBOLS,
            "blocks_per_realization": n_blocks(spec.n_symbols),
            "streams": {
                "channel": ["seed", CHANNEL, "realization"],
                "random_phases": ["seed", PHASE, "realization"],
                "restarts": ["seed", RESTART, "realization"],
                "noise": ["seed", NOISE, "realization", "block"],
            },
            "optimizer_options": asdict(spec.options),
            "schemes": [{"label": s.label, "kind": s.kind, "q_bits": s.q_bits,
                         "config": s.config.to_dict()} for s in spec.schemes],
            "designs": self.records,
        }


def run_experiment(spec: ExperimentSpec, workers: int = 1, progress=None) -> ExperimentResult:
    """Run every (scheme, realization); row order is scheme, realization, SNR."""
    jobs = [(s, r, spec) for s in spec.schemes for r in range(spec.realizations)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_one, jobs, chunksize=1))
    else:
        outputs = []
        for job in jobs:
            outputs.append(_run_one(job))
            if progress:
                progress(len(outputs), len(jobs))
    table = SweepTable()
    records: dict[str, list] = {s.label: [] for s in spec.schemes}
    for (scheme, realization, _), (rows, record) in zip(jobs, outputs):
        table.rows.extend(rows)
        if record is not None:
            records[scheme.label].append({"realization": realization, **record})
    return ExperimentResult(spec, table, records)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".10g")


def table_to_csv(table: SweepTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROW_FIELDS)
    for r in table.rows:
        writer.writerow([r.scheme, _fmt(r.snr_db), r.realization, _fmt(r.ber),
                         _fmt(r.ci_halfwidth), _fmt(r.abep_bound), _fmt(r.min_delta)])
    return buf.getvalue()


def write_outputs(result: ExperimentResult, out_dir) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{result.spec.name}.csv"
    json_path = out_dir / f"{result.spec.name}.json"
    csv_path.write_text(table_to_csv(result.table), encoding="utf-8")
    json_path.write_text(json.dumps(result.sidecar(), indent=1, sort_keys=True) + "\n",
                         encoding="utf-8")
    return csv_path, json_path


class CsvFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path, self.line = str(path), line


def read_csv(path) -> list[SweepRow]:
    """Parse a result CSV; bit counts are recovered from ber and ci_halfwidth."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    rows: list[SweepRow] = []
    for lineno, rec in enumerate(reader, start=1):
        if lineno == 1:
            if tuple(rec) != ROW_FIELDS:
                raise CsvFormatError(path, 1, f"header must be {','.join(ROW_FIELDS)}")
            continue
        if not rec:
            continue
        if len(rec) != len(ROW_FIELDS):
            raise CsvFormatError(path, lineno, f"expected {len(ROW_FIELDS)} fields, got {len(rec)}")
        try:
            parse_label(rec[0])
            snr, ber, ci, bound, md = (float(rec[i]) for i in (1, 3, 4, 5, 6))
            realization = int(rec[2])
        except ValueError as exc:
            raise CsvFormatError(path, lineno, str(exc)) from None
        if not 0 <= ber <= 1 or ci < 0:
            raise CsvFormatError(path, lineno, "ber or ci_halfwidth out of range")
        rows.append(SweepRow(rec[0], snr, realization, ber, ci, bound, md))
    if not rows:
        raise CsvFormatError(path, 1, "no data rows")
    return _attach_counts(rows)


def _attach_counts(rows: list[SweepRow]) -> list[SweepRow]:
    # ci = 1.96 sqrt(p (1 - p) / n) pins n whenever 0 < p < 1; every row of a
    # scheme shares the same n.
    bits: dict[str, int] = {}
    for r in rows:
        if r.scheme not in bits and 0 < r.ber < 1 and r.ci_halfwidth > 0:
            bits[r.scheme] = int(round(1.96 ** 2 * r.ber * (1 - r.ber) / r.ci_halfwidth ** 2))
    out = []
    for r in rows:
        n = bits.get(r.scheme, 0)
        out.append(SweepRow(r.scheme, r.snr_db, r.realization, r.ber, r.ci_halfwidth,
                            r.abep_bound, r.min_delta, int(round(r.ber * n)), n))
    return out
