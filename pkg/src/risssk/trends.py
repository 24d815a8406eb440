"""Trend checks over pooled sweep results.

Rows are pooled per (scheme, SNR) by summing bit errors and bits over
realizations. Comparisons "at the highest common SNR" use the largest grid
point at which every compared scheme has at least ``MIN_ERRORS`` pooled bit
errors, so the comparison is never between two empty counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import groupby

from .experiment import parse_label
from .monte_carlo import SweepRow, SweepTable

MIN_ERRORS = 10
TARGET_BER = 1e-3
MAX_QUANT_GAP_DB = 1.0


@dataclass(frozen=True)
class TrendCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class TrendReport:
    orderings: dict[float, list[str]] = field(default_factory=dict)
    # (snr, scheme) -> True when the scheme ties the one ranked before it
    ties: dict[tuple[float, str], bool] = field(default_factory=dict)
    gaps: dict[str, float | None] = field(default_factory=dict)
    checks: list[TrendCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = ["orderings (lowest BER first):"]
        for snr, names in self.orderings.items():
            lines.append(f"  {snr:g} dB: {names[0]}" + "".join(
                f" {'=' if self.ties.get((snr, b)) else '<'} {b}" for b in names[1:]))
        lines.append(f"snr at BER {TARGET_BER:g} (log-linear):")
        for name, snr in self.gaps.items():
            lines.append(f"  {name}: {'n/a' if snr is None else f'{snr:.3f} dB'}")
        lines.append("trend checks:")
        for c in self.checks:
            lines.append(f"  {'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        return "\n".join(lines)


def pool(rows: list[SweepRow]) -> dict[str, dict[float, dict]]:
    """scheme -> snr -> pooled record."""
    out: dict[str, dict[float, dict]] = {}
    for rec in SweepTable(list(rows)).averaged():
        out.setdefault(rec["scheme"], {})[rec["snr_db"]] = rec
    for scheme in out:
        out[scheme] = dict(sorted(out[scheme].items()))
    return out


def highest_common_snr(pooled, schemes, min_errors: int = MIN_ERRORS) -> float | None:
    grids = [set(pooled[s]) for s in schemes]
    common = sorted(set.intersection(*grids)) if grids else []
    ok = [snr for snr in common if all(pooled[s][snr]["bit_errors"] >= min_errors for s in schemes)]
    return ok[-1] if ok else None


def snr_at_ber(curve: dict[float, dict], target: float = TARGET_BER) -> float | None:
    """First downward crossing of ``target``, interpolating log10(BER) linearly in SNR."""
    pts = [(snr, rec["ber"]) for snr, rec in curve.items()]
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target > b1:
            if b1 <= 0 or b0 <= 0:
                return None
            t = (math.log10(b0) - math.log10(target)) / (math.log10(b0) - math.log10(b1))
            return s0 + t * (s1 - s0)
    return None


def orderings(pooled) -> dict[float, list[str]]:
    if len(pooled) < 2:
        return {}
    snrs = sorted(set.intersection(*(set(c) for c in pooled.values())))
    return {snr: sorted(pooled, key=lambda s: (pooled[s][snr]["ber"], s)) for snr in snrs}


def _families(pooled, vary: str):
    """Groups of optimized/continuous schemes that differ only in ``vary``."""
    keys = ("L", "Q", "Nt", "Nr")
    parsed = {s: parse_label(s) for s in pooled}
    fixed = [k for k in keys if k != vary]
    cands = [s for s, p in parsed.items() if p["kind"] in ("optimized", "continuous")]
    if vary != "Q":
        cands = [s for s in cands if parsed[s]["kind"] == "optimized"]
    cands.sort(key=lambda s: tuple(parsed[s][k] for k in fixed))
    for _, grp in groupby(cands, key=lambda s: tuple(parsed[s][k] for k in fixed)):
        grp = sorted(grp, key=lambda s: parsed[s][vary])
        if len(grp) >= 2:
            yield grp, parsed


def check_fig2_order(pooled) -> list[TrendCheck]:
    checks = []
    parsed = {s: parse_label(s) for s in pooled}
    for nr_nt in sorted({(p["Nt"], p["Nr"]) for p in parsed.values()}):
        same = {s: p for s, p in parsed.items() if (p["Nt"], p["Nr"]) == nr_nt}
        opt = sorted((s for s, p in same.items() if p["kind"] == "optimized"),
                     key=lambda s: -same[s]["L"])
        opt = [s for s in opt if same[s]["Q"] == 3] or opt
        rnd = sorted((s for s, p in same.items() if p["kind"] == "random"),
                     key=lambda s: -same[s]["L"])
        base = [s for s, p in same.items() if p["kind"] == "no_ris"]
        if len(opt) < 2 or not rnd or not base:
            continue
        chain = opt + rnd[:1] + base[:1]
        snr = highest_common_snr(pooled, chain)
        if snr is None:
            checks.append(TrendCheck("ris ordering", False, f"no SNR with >= {MIN_ERRORS} errors in all of {chain}"))
            continue
        bers = [pooled[s][snr]["ber"] for s in chain]
        ok = all(a < b for a, b in zip(bers, bers[1:]))
        detail = f"at {snr:g} dB: " + " < ".join(f"{s}={b:.3g}" for s, b in zip(chain, bers))
        checks.append(TrendCheck("ris ordering", ok, detail))
    return checks


def check_quantization(pooled) -> list[TrendCheck]:
    checks = []
    for grp, parsed in _families(pooled, "Q"):
        bad = []
        for lo, hi in zip(grp, grp[1:]):
            for snr in pooled[lo]:
                if snr not in pooled[hi]:
                    continue
                a, b = pooled[lo][snr], pooled[hi][snr]
                if b["ber"] > a["ber"] + a["ci_halfwidth"] + b["ci_halfwidth"]:
                    bad.append(f"{hi}>{lo}@{snr:g}")
        checks.append(TrendCheck("ber non-increasing in Q", not bad,
                                 f"{' >= '.join(grp)}; violations: {', '.join(bad) or 'none'}"))
        q3 = [s for s in grp if parsed[s]["Q"] == 3]
        cont = [s for s in grp if parsed[s]["kind"] == "continuous"]
        if q3 and cont:
            s3, sc = snr_at_ber(pooled[q3[0]]), snr_at_ber(pooled[cont[0]])
            if s3 is None or sc is None:
                checks.append(TrendCheck("Q=3 gap to continuous", False,
                                         f"BER {TARGET_BER:g} not crossed on the grid"))
            else:
                gap = s3 - sc
                checks.append(TrendCheck("Q=3 gap to continuous", abs(gap) <= MAX_QUANT_GAP_DB,
                                         f"{gap:.3f} dB at BER {TARGET_BER:g} (limit {MAX_QUANT_GAP_DB:g} dB)"))
    return checks


def _check_monotone(pooled, vary: str, name: str, increasing: bool) -> list[TrendCheck]:
    checks = []
    for grp, parsed in _families(pooled, vary):
        snr = highest_common_snr(pooled, grp)
        if snr is None:
            checks.append(TrendCheck(name, False, f"no SNR with >= {MIN_ERRORS} errors in all of {grp}"))
            continue
        bers = [pooled[s][snr]["ber"] for s in grp]
        pairs = list(zip(bers, bers[1:]))
        ok = all((b > a) if increasing else (b < a) for a, b in pairs)
        rel = " < " if increasing else " > "
        checks.append(TrendCheck(name, ok, f"at {snr:g} dB: " +
                                 rel.join(f"{s}={b:.3g}" for s, b in zip(grp, bers))))
    return checks


def check_bound(rows: list[SweepRow]) -> TrendCheck:
    bad = [r for r in rows if r.abep_bound < r.ber - 3 * r.ci_halfwidth]
    detail = f"{len(rows) - len(bad)}/{len(rows)} rows satisfy abep_bound >= ber - 3 ci"
    if bad:
        r = bad[0]
        detail += f"; first violation {r.scheme} r={r.realization} snr={r.snr_db:g}"
    return TrendCheck("union bound dominance", not bad, detail)


def trend_report(rows: list[SweepRow]) -> TrendReport:
    pooled = pool(rows)
    report = TrendReport(orderings=orderings(pooled),
                         gaps={s: snr_at_ber(c) for s, c in pooled.items()})
    for snr, names in report.orderings.items():
        for a, b in zip(names, names[1:]):
            report.ties[(snr, b)] = pooled[a][snr]["ber"] == pooled[b][snr]["ber"]
    report.checks += check_fig2_order(pooled)
    report.checks += check_quantization(pooled)
    report.checks += _check_monotone(pooled, "Nr", "more receive antennas lower BER", increasing=False)
    report.checks += _check_monotone(pooled, "Nt", "more transmit antennas raise BER", increasing=True)
    report.checks.append(check_bound(rows))
    return report
