"""Experiment runner: seeded, reproducible experiments over the library's
constructions at desk scale, with JSON reports and CSV sidecars.

Subcommands:
    toruswalk run CONFIG [-o OUTDIR] [--seed SEED]
    toruswalk verify REPORT --suite NAME
    toruswalk schema

Configs are JSON (nested objects as tables); a file holding a list of
configs is a batch, executed by a worker pool sized by $TORUSWALK_WORKERS.
Reports embed the canonical config, its sha256, the seed and PRNG identity;
rerunning an identical (config, seed) reproduces the report byte-for-byte
except for the timestamp field.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import chains, fractal, groupcond, spectral, stats
from .exactcore import (
    IntMatrix,
    IrrationalBasis,
    Scalar,
    TorusPoint,
    parse_scalar,
)

__all__ = ["ConfigError", "normalize_config", "run", "verify_report", "main"]

PRNG_NAME = "numpy-PCG64/SeedSequence"
REPORT_SCHEMA = "toruswalk-report-v1"

KINDS = (
    "walk-sim",
    "normality",
    "condition-check",
    "rational-case",
    "fourier",
    "stationary-support",
    "rotation-case",
)


class ConfigError(ValueError):
    """Invalid experiment configuration (message names the offending field)."""


# ---------------------------------------------------------------------------
# config handling


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def _require(config: dict, field: str, kind: str):
    if field not in config:
        raise ConfigError(f"kind {kind!r}: missing field {field!r}")
    return config[field]


def _as_matrix(value, field: str) -> list[list[int]]:
    if isinstance(value, int):
        return [[value]]
    if isinstance(value, list) and value and all(isinstance(r, list) for r in value):
        return [[int(x) for x in row] for row in value]
    raise ConfigError(f"field {field!r}: expected an integer or row-major matrix")

def _as_scalar_list(value, field: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ConfigError(f"field {field!r}: expected a list of scalar strings")
    return list(value)


def normalize_config(raw: dict) -> dict:
    """Validate and canonicalize a config; parse(serialize(c)) == c holds."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"field 'kind': expected one of {KINDS}, got {kind!r}")
    cfg: dict = {"kind": kind}
    cfg["seed"] = int(raw.get("seed", 0))
    cfg["irrationals"] = sorted(str(s) for s in raw.get("irrationals", []))
    precision = raw.get("precision", "auto")
    if precision != "auto":
        precision = int(precision)
        if precision < 64:
            raise ConfigError("field 'precision': explicit bits must be >= 64")
    cfg["precision"] = precision
    basis = IrrationalBasis(tuple(cfg["irrationals"]))

    def check_scalars(strings, field):
        for s in strings:
            try:
                parse_scalar(s, basis)
            except Exception as exc:
                raise ConfigError(f"field {field!r}: bad scalar {s!r}: {exc}") from exc
        return strings

    if kind in ("walk-sim", "rotation-case"):
        cfg["N"] = int(raw.get("N", 100000))
        cfg["K"] = int(raw.get("K", 8))
        if cfg["N"] < 1 or cfg["K"] < 1:
            raise ConfigError("fields 'N' and 'K' must be >= 1")
        alphas = _require(raw, "alpha", kind)
        if kind == "walk-sim":
            d_raw = _require(raw, "D", kind)
            if not isinstance(d_raw, list):
                raise ConfigError("field 'D': expected a list of matrices/integers")
            cfg["D"] = [_as_matrix(m, "D") for m in d_raw]
            if len({len(m) for m in cfg["D"]}) != 1:
                raise ConfigError("field 'D': matrices must share one dimension")
            if len(cfg["D"]) != len(alphas):
                raise ConfigError("fields 'D' and 'alpha': need one alpha per matrix")
        else:
            cfg["D"] = None
            if "control_q" in raw:
                cfg["control_q"] = int(raw["control_q"])
        dim = len(cfg["D"][0]) if kind == "walk-sim" else 1
        alpha_vecs = []
        for a in alphas:
            vec = [a] if isinstance(a, str) else list(a)
            if len(vec) != dim:
                raise ConfigError("field 'alpha': entry dimension mismatch")
            alpha_vecs.append(check_scalars([str(x) for x in vec], "alpha"))
        cfg["alpha"] = alpha_vecs
        x0 = raw.get("x0", ["0"] * dim)
        x0 = [x0] if isinstance(x0, str) else list(x0)
        cfg["x0"] = check_scalars([str(x) for x in x0], "x0")
        cfg["P"] = check_scalars(
            [str(p) for p in raw.get("P", [f"1/{len(alpha_vecs)}"] * len(alpha_vecs))],
            "P",
        )
    elif kind == "normality":
        cfg["D"] = _as_matrix(_require(raw, "D", kind), "D")
        cfg["r"] = [int(x) for x in _require(raw, "r", kind)]
        cfg["t"] = check_scalars(_as_scalar_list(_require(raw, "t", kind), "t"), "t")
        cfg["P"] = check_scalars(
            [str(p) for p in raw.get("P", [f"1/{len(cfg['t'])}"] * len(cfg["t"]))], "P"
        )
        cfg["N"] = int(raw.get("N", 10000))
        cfg["L"] = int(raw.get("L", 2))
        if cfg["N"] < 1 or not 1 <= cfg["L"] <= cfg["N"]:
            raise ConfigError("need N >= 1 and 1 <= L <= N")
    elif kind == "condition-check":
        which = raw.get("condition", "ifs")
        if which not in ("walk", "ifs"):
            raise ConfigError("field 'condition': expected 'walk' or 'ifs'")
        cfg["condition"] = which
        if which == "walk":
            d_raw = _require(raw, "D", kind)
            cfg["D"] = [_as_matrix(m, "D") for m in d_raw]
            dim = len(cfg["D"][0])
            cfg["alpha"] = [
                check_scalars(
                    [str(x) for x in ([a] if isinstance(a, str) else a)], "alpha"
                )
                for a in _require(raw, "alpha", kind)
            ]
        else:
            cfg["D"] = _as_matrix(_require(raw, "D", kind), "D")
            cfg["r"] = [int(x) for x in _require(raw, "r", kind)]
            dim = len(cfg["D"])
            cfg["t"] = [
                check_scalars(
                    [str(x) for x in ([t] if isinstance(t, str) else t)], "t"
                )
                for t in _require(raw, "t", kind)
            ]
    elif kind == "rational-case":
        d_mat = _as_matrix(_require(raw, "D", kind), "D")
        if len(d_mat) != 1:
            raise ConfigError("field 'D': rational-case is one-dimensional")
        cfg["D"] = d_mat
        cfg["t"] = check_scalars(_as_scalar_list(_require(raw, "t", kind), "t"), "t")
        cfg["P"] = check_scalars(
            [str(p) for p in raw.get("P", [f"1/{len(cfg['t'])}"] * len(cfg["t"]))], "P"
        )
        cfg["N"] = int(raw.get("N", 100000))
        cfg["K"] = int(raw.get("K", 8))
    elif kind == "stationary-support":
        d_raw = _require(raw, "D", kind)
        if not isinstance(d_raw, list) or not all(isinstance(x, int) for x in d_raw):
            raise ConfigError("field 'D': expected a list of integers (d = 1)")
        cfg["D"] = list(d_raw)
        cfg["alpha"] = check_scalars(
            _as_scalar_list(_require(raw, "alpha", kind), "alpha"), "alpha"
        )
        cfg["P"] = check_scalars(
            [str(p) for p in raw.get("P", [f"1/{len(cfg['alpha'])}"] * len(cfg["alpha"]))],
            "P",
        )
    elif kind == "fourier":
        measures = _require(raw, "measures", kind)
        if not isinstance(measures, dict) or not measures:
            raise ConfigError("field 'measures': expected a non-empty table")
        cfg["measures"] = {}
        for name, m in sorted(measures.items()):
            cfg["measures"][name] = {
                "base": int(_require(m, "base", kind)),
                "atoms": check_scalars(_as_scalar_list(m["atoms"], "atoms"), "atoms"),
                "weights": check_scalars(
                    [str(w) for w in m.get("weights", [f"1/{len(m['atoms'])}"] * len(m["atoms"]))],
                    "weights",
                ),
            }
        cfg["dump_range"] = int(raw.get("dump_range", 32))
        cfg["tol"] = float(raw.get("tol", 1e-9))
        zc = []
        for check in raw.get("zero_checks", []):
            if check.get("measure") not in cfg["measures"]:
                raise ConfigError("zero_checks: unknown measure name")
            if check.get("pattern") not in ("odd", "twice_odd"):
                raise ConfigError("zero_checks: pattern must be 'odd' or 'twice_odd'")
            zc.append(
                {
                    "measure": check["measure"],
                    "pattern": check["pattern"],
                    "k_max": int(check.get("k_max", 5)),
                    "m_max": int(check.get("m_max", 20)),
                }
            )
        cfg["zero_checks"] = zc
        conv = raw.get("haar_convolution")
        if conv is not None:
            conv = list(conv)
            if len(conv) != 2 or any(c not in cfg["measures"] for c in conv):
                raise ConfigError("haar_convolution: expected two measure names")
        cfg["haar_convolution"] = conv
        cfg["haar_range"] = int(raw.get("haar_range", 1000))
    return cfg


def _basis_of(cfg: dict) -> IrrationalBasis:
    return IrrationalBasis(tuple(cfg["irrationals"]))


def _scalars(strings, basis) -> list[Scalar]:
    return [parse_scalar(s, basis) for s in strings]


def _fractions(strings) -> list[Fraction]:
    return [Fraction(s) for s in strings]


# ---------------------------------------------------------------------------
# sidecar helpers


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _weyl_rows(ws: dict) -> list[list[str]]:
    items = sorted(ws.items())
    return [[",".join(str(i) for i in k), _fmt(v)] for k, v in items]


def _running_discrepancy(points: np.ndarray, checkpoints: int = 20):
    n = len(points)
    rows = []
    for i in range(1, checkpoints + 1):
        m = max(1, (n * i) // checkpoints)
        sub = stats.OrbitSample(points[:m, :1], 0.0, 64)
        rows.append([m, _fmt(stats.star_discrepancy_1d(sub))])
    return rows


# ---------------------------------------------------------------------------
# experiment kinds


def _run_walk_like(cfg: dict, rng: np.random.Generator, outdir: Path) -> tuple[dict, list[str], int | None]:
    basis = _basis_of(cfg)
    rotation = cfg["kind"] == "rotation-case"
    alphas = [_scalars(vec, basis) for vec in cfg["alpha"]]
    dim = len(alphas[0])
    if rotation:
        mats = [IntMatrix.identity(dim) for _ in alphas]
    else:
        mats = [IntMatrix.from_rows(m) for m in cfg["D"]]
    endos = [fractal.AffineEndo(m, tuple(a)) for m, a in zip(mats, alphas)]
    x0 = TorusPoint(_scalars(cfg["x0"], basis))
    probs = _fractions(cfg["P"])
    if len(probs) != len(endos):
        raise ConfigError("field 'P': needs one probability per map")
    n_steps = cfg["N"]
    letters = fractal.walk_letter_stream(probs, rng, n_steps)
    precision = None if cfg["precision"] == "auto" else cfg["precision"]
    orbit = fractal.walk_orbit_fixed(endos, x0, letters, precision_bits=precision)
    sample = stats.OrbitSample(orbit.points, orbit.error_bound, orbit.precision_bits)
    ws = stats.weyl_sums(sample, cfg["K"])
    results: dict = {
        "N": n_steps,
        "K": cfg["K"],
        "weyl": {",".join(map(str, k)): _fmt(v) for k, v in sorted(ws.items())},
        "max_weyl": max(ws.values()),
        "error_bound": orbit.error_bound,
    }
    sidecars = ["weyl.csv", "trajectory.csv"]
    _write_csv(outdir / "weyl.csv", ["k", "abs_S_N"], _weyl_rows(ws))
    _write_csv(
        outdir / "trajectory.csv",
        ["n"] + [f"x{i}" for i in range(dim)],
        ([i + 1] + [_fmt(v) for v in row] for i, row in enumerate(orbit.points)),
    )
    if dim == 1:
        results["star_discrepancy"] = stats.star_discrepancy_1d(sample)
        _write_csv(
            outdir / "discrepancy.csv",
            ["n", "star_discrepancy"],
            _running_discrepancy(orbit.points),
        )
        sidecars.append("discrepancy.csv")
    if rotation and cfg.get("control_q"):
        q = cfg["control_q"]
        z = np.exp(2j * np.pi * q * orbit.points[:, 0])
        results["control_q"] = q
        results["control_char"] = float(abs(np.mean(z)))
    return results, sidecars, orbit.precision_bits


def _run_normality(cfg: dict, rng: np.random.Generator, outdir: Path) -> tuple[dict, list[str], int | None]:
    basis = _basis_of(cfg)
    ifs = fractal.AffineIFS.create(
        cfg["D"], cfg["r"], [[s] for s in _scalars(cfg["t"], basis)],
        _fractions(cfg["P"]),
    )
    if ifs.dimension != 1:
        raise ConfigError("normality runs are one-dimensional")
    base = ifs.d_matrix.rows[0][0]
    if base < 2:
        raise ConfigError("normality digits need D >= 2")
    count = cfg["N"]
    digit_bits = math.ceil(count * math.log2(base)) + 96
    if cfg["precision"] != "auto":
        digit_bits = max(digit_bits, cfg["precision"])
    # word long enough that the coding tail stays far below one ulp
    rho = ifs.adapted.rho_certified
    rmin = min(ifs.exponents)
    diameter = fractal.coding_tail_bound(ifs, 0)
    bound_bits = math.log2(diameter) if diameter > 0 else 0.0
    per_step = rmin * math.log2(rho)
    word_len = int((digit_bits + 16 + max(0.0, bound_bits)) / per_step) + 2
    word = fractal.sample_word(ifs, rng, word_len)
    fixed, err, bits = fractal.code_prefix_fixed(ifs, word, digit_bits)
    # word-truncation error in ulps, computed in log space (2^bits overflows)
    log2_tail = bound_bits - word_len * per_step
    tail_ulps = 1 if log2_tail + bits < 0 else 2 << max(0, math.ceil(log2_tail + bits))
    digits, points = stats.digits_from_fixed(fixed, err + tail_ulps, bits, base, count)
    max_len = cfg["L"]
    freqs = stats.block_frequencies(digits, max_len)
    deviations = stats.block_deviations(freqs, base, max_len)
    sample = stats.OrbitSample(points, 2.0 ** -50, bits)
    disc = stats.star_discrepancy_1d(sample)
    rows = []
    for length in range(1, max_len + 1):
        expected = base ** -length
        for block in stats.all_blocks(base, length):
            f = freqs.get(block, 0.0)
            rows.append(
                ["".join(map(str, block)), _fmt(f), _fmt(expected), _fmt(abs(f - expected))]
            )
    _write_csv(outdir / "blocks.csv", ["block", "freq", "expected", "deviation"], rows)
    _write_csv(
        outdir / "discrepancy.csv",
        ["n", "star_discrepancy"],
        _running_discrepancy(points[:, None]),
    )
    results = {
        "N": count,
        "base": base,
        "word_length": word_len,
        "block_deviation": {str(k): v for k, v in deviations.items()},
        "max_block_deviation": max(deviations.values()),
        "star_discrepancy": disc,
    }
    return results, ["blocks.csv", "discrepancy.csv"], bits


def _run_condition_check(cfg: dict, rng, outdir: Path) -> tuple[dict, list[str], None]:
    basis = _basis_of(cfg)
    if cfg["condition"] == "walk":
        mats = [IntMatrix.from_rows(m) for m in cfg["D"]]
        alphas = [TorusPoint(_scalars(vec, basis)) for vec in cfg["alpha"]]
        verdict = groupcond.condition_walk(mats, alphas)
    else:
        mat = IntMatrix.from_rows(cfg["D"])
        points = [TorusPoint(_scalars(vec, basis)) for vec in cfg["t"]]
        verdict = groupcond.condition_ifs(mat, cfg["r"], points)
    results = {
        "dense": verdict.dense,
        "witness": list(verdict.witness) if verdict.witness else None,
        "witness_valid": verdict.witness_pairs_integral(),
        "difference_set": sorted(
            {
                "(" + ", ".join(str(c) for c in p.reduced().coords) + ")"
                for p in verdict.tested
            }
        ),
    }
    return results, [], None


def _run_stationary_support(cfg: dict, rng, outdir: Path) -> tuple[dict, list[str], None]:
    basis = _basis_of(cfg)
    alphas = _scalars(cfg["alpha"], basis)
    fs = chains.build_finite_stationary(cfg["D"], alphas, _fractions(cfg["P"]))
    # exact invariance of the support, re-verified through Scalar arithmetic
    support = fs.support_points()
    invariance = True
    for i, d in enumerate(fs.d_values):
        h_i = fractal.AffineEndo(IntMatrix.scalar(d), (alphas[i],))
        for pt in support:
            if h_i(pt) not in support:
                invariance = False
    stationary_exact = all(
        sum(fs.stationary[j] * fs.transition[j][i] for j in range(fs.q)) == fs.stationary[i]
        for i in range(fs.q)
    )
    results = {
        "x0": str(fs.x0),
        "q": fs.q,
        "states": [str(a) for a in fs.a_values],
        "betas": [str(b) for b in fs.betas],
        "transition": [[str(x) for x in row] for row in fs.transition],
        "stationary": [str(x) for x in fs.stationary],
        "invariance_exact": invariance,
        "stationary_exact": stationary_exact,
        "pushforward_stationary": fs.pushforward_is_stationary(),
    }
    _write_csv(
        outdir / "stationary.csv",
        ["state", "weight"],
        [[str(a), str(w)] for a, w in zip(fs.a_values, fs.stationary)],
    )
    return results, ["stationary.csv"], None


def _run_rational_case(cfg: dict, rng: np.random.Generator, outdir: Path) -> tuple[dict, list[str], int | None]:
    basis = _basis_of(cfg)
    t_scalars = _scalars(cfg["t"], basis)
    probs = _fractions(cfg["P"])
    d_value = cfg["D"][0][0]
    eta = chains.build_eta_chain(d_value, t_scalars, probs)
    ifs = fractal.AffineIFS.create(
        d_value, [1] * len(t_scalars), [[s] for s in t_scalars], probs
    )
    n_steps = cfg["N"]
    k_max = cfg["K"]

    tail_len = max(8, math.ceil(60 / math.log2(abs(d_value)))) + 4
    letters = fractal.walk_letter_stream(probs, rng, n_steps + tail_len)

    # eta_m along the same letter stream, plus empirical state frequencies
    index = {a: i for i, a in enumerate(eta.states)}
    table = [
        [index[eta.next_state(a, j + 1)] for j in range(len(probs))] for a in eta.states
    ]
    state_floats = np.array([float(a) for a in eta.states])
    eta_idx = np.empty(n_steps, dtype=np.int64)
    state = index[eta.deltas_tilde[letters[0] - 1]]
    eta_idx[0] = state
    for m in range(1, n_steps):
        state = table[state][letters[m] - 1]
        eta_idx[m] = state
    freq = np.bincount(eta_idx, minlength=len(eta.states)) / n_steps
    exact_p = np.array([float(x) for x in eta.stationary])
    state_dev = float(np.max(np.abs(freq - exact_p)))

    # coded tails pi(T^m i) via a truncated moving sum (double precision)
    t_floats = np.array([float(s) for s in t_scalars])
    tarr = t_floats[letters - 1]
    weights = (1.0 / d_value) ** np.arange(tail_len)
    tails = np.zeros(n_steps)
    for j in range(tail_len):
        tails += tarr[1 + j : 1 + j + n_steps] * weights[j]

    # alpha_m: exact cycle when t_1 is rational, fixed-point orbit otherwise
    t1 = t_scalars[0]
    precision_used = None
    if t1.is_rational():
        c = Fraction(d_value, d_value - 1) * t1.rational_part
        alphas = np.empty(n_steps)
        o = c * d_value
        o -= o.numerator // o.denominator
        for m in range(n_steps):
            a = o - c
            alphas[m] = float(a - (a.numerator // a.denominator))
            o *= d_value
            o -= o.numerator // o.denominator
    else:
        c_scalar = t1 * Fraction(d_value, d_value - 1)
        endo = fractal.AffineEndo(IntMatrix.scalar(d_value), (Scalar.rational(0, basis),))
        orb = fractal.walk_orbit_fixed([endo], TorusPoint([c_scalar]), [1] * n_steps)
        precision_used = orb.precision_bits
        alphas = (orb.points[:, 0] - float(c_scalar)) % 1.0

    points = (alphas + state_floats[eta_idx] + tails) % 1.0
    sample = stats.OrbitSample(points, 2.0 ** -40, 64)
    ws = stats.weyl_sums(sample, k_max)

    results = {
        "N": n_steps,
        "K": k_max,
        "q": eta.q,
        "states": [str(a) for a in eta.states],
        "stationary": [str(x) for x in eta.stationary],
        "transition": [[str(x) for x in row] for row in eta.transition],
        "state_freq_dev": state_dev,
        "weyl": {",".join(map(str, k)): _fmt(v) for k, v in sorted(ws.items())},
    }
    sidecars = ["states.csv"]
    _write_csv(
        outdir / "states.csv",
        ["state", "stationary", "empirical"],
        [
            [str(a), str(p), _fmt(f)]
            for a, p, f in zip(eta.states, eta.stationary, freq)
        ],
    )
    if t1.is_rational() and all(s.is_rational() for s in t_scalars):
        law = chains.limit_law_fourier(eta, ifs)
        results["char_dev"] = stats.compare_to_fourier(sample, law, k_max)
        means = stats.character_means(sample, k_max)
        rows = []
        for n in range(-k_max, k_max + 1):
            if n == 0:
                continue
            v = law(n)
            emp = means[(n,)]
            rows.append(
                [n, _fmt(v.value.real), _fmt(v.value.imag), _fmt(emp.real), _fmt(emp.imag), _fmt(abs(emp - v.value))]
            )
        _write_csv(
            outdir / "chars.csv",
            ["n", "predicted_re", "predicted_im", "empirical_re", "empirical_im", "abs_diff"],
            rows,
        )
        sidecars.append("chars.csv")
    else:
        results["char_dev"] = None
        results["note"] = "t_1 irrational: limit law not finitely computable"
    return results, sidecars, precision_used


def _run_fourier(cfg: dict, rng, outdir: Path) -> tuple[dict, list[str], None]:
    tol = cfg["tol"]
    specs = {}
    coeff_fns = {}
    for name, m in cfg["measures"].items():
        specs[name] = spectral.SelfSimilarSpec.create(
            m["base"], _fractions(m["atoms"]), _fractions(m["weights"])
        )
        coeff_fns[name] = specs[name].coefficients(tol)
    sidecars = []
    for name, fn in coeff_fns.items():
        rows = []
        for n in range(-cfg["dump_range"], cfg["dump_range"] + 1):
            v = fn(n)
            rows.append(
                [n, _fmt(v.value.real), _fmt(v.value.imag), _fmt(v.error), int(v.exact_zero)]
            )
        fname = f"coefficients_{name}.csv"
        _write_csv(outdir / fname, ["n", "re", "im", "certified_error", "exact_zero"], rows)
        sidecars.append(fname)

    results: dict = {"zero_checks": []}
    for check in cfg["zero_checks"]:
        fn = coeff_fns[check["measure"]]
        ok = True
        for k in range(check["k_max"] + 1):
            for m in range(-check["m_max"], check["m_max"] + 1):
                n = 4 ** k * ((2 * m + 1) if check["pattern"] == "odd" else (4 * m + 2))
                if not fn(n).exact_zero:
                    ok = False
        results["zero_checks"].append(
            {"measure": check["measure"], "pattern": check["pattern"], "all_exact_zero": ok}
        )
    if cfg["haar_convolution"]:
        a, b = cfg["haar_convolution"]
        conv = spectral.convolve(coeff_fns[a], coeff_fns[b])
        results["haar_up_to"] = spectral.is_haar_up_to(conv, cfg["haar_range"])
        # which measure kills which index family, decided by probing n=1 and 2
        odd_killer = a if coeff_fns[a](1).exact_zero else b
        even_killer = a if coeff_fns[a](2).exact_zero else b
        routing = coeff_fns[odd_killer](1).exact_zero and coeff_fns[even_killer](2).exact_zero
        for n in range(1, cfg["haar_range"] + 1):
            _, pattern, _ = spectral.classify_index(n)
            routed = coeff_fns[odd_killer if pattern == "odd" else even_killer](n)
            if not routed.exact_zero:
                routing = False
        results["routing_consistent"] = routing
        results["haar_range"] = cfg["haar_range"]
    return results, sidecars, None


_RUNNERS = {
    "walk-sim": _run_walk_like,
    "rotation-case": _run_walk_like,
    "normality": _run_normality,
    "condition-check": _run_condition_check,
    "stationary-support": _run_stationary_support,
    "rational-case": _run_rational_case,
    "fourier": _run_fourier,
}


def run(raw_config: dict, outdir: Path | str, seed_override: int | None = None) -> dict:
    """Execute one experiment; returns the report (also written to outdir)."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg = normalize_config(raw_config)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    rng = np.random.default_rng(np.random.SeedSequence(cfg["seed"]))
    results, sidecars, precision = _RUNNERS[cfg["kind"]](cfg, rng, outdir)
    report = {
        "schema": REPORT_SCHEMA,
        "kind": cfg["kind"],
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "seed": cfg["seed"],
        "prng": PRNG_NAME,
        "precision_bits": precision,
        "results": results,
        "sidecars": sidecars,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with (outdir / "report.json").open("w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return report


def report_body(report: dict) -> str:
    """Canonical serialization of everything except the timestamp."""
    body = {k: v for k, v in report.items() if k != "timestamp"}
    return canonical_json(body)


# ---------------------------------------------------------------------------
# verification suites


def _check(name: str, ok: bool, detail: str) -> dict:
    return {"check": name, "pass": bool(ok), "detail": detail}


def verify_report(report: dict, suite: str) -> list[dict]:
    """Threshold checks per suite; raises ConfigError on schema problems."""
    for field in ("schema", "kind", "config", "config_sha256", "results"):
        if field not in report:
            raise ConfigError(f"report missing field {field!r}")
    if report["schema"] != REPORT_SCHEMA:
        raise ConfigError(f"unknown report schema {report['schema']!r}")
    if config_hash(report["config"]) != report["config_sha256"]:
        raise ConfigError("config hash mismatch: report was tampered with")
    if suite != report["kind"]:
        raise ConfigError(
            f"suite {suite!r} does not match report kind {report['kind']!r}"
        )
    res = report["results"]
    checks: list[dict] = []
    if suite in ("walk-sim", "rotation-case"):
        offending = sorted(
            k for k, v in res.get("weyl", {}).items() if float(v) > 0.05
        )
        detail = f"max |S_N(k)| = {res['max_weyl']:.4f} (<= 0.05)"
        if offending:
            detail += f"; offending k: {', '.join(offending)}"
        checks.append(_check("weyl", res["max_weyl"] <= 0.05 and not offending, detail))
        if "star_discrepancy" in res:
            checks.append(
                _check(
                    "discrepancy",
                    res["star_discrepancy"] <= 0.02,
                    f"D* = {res['star_discrepancy']:.4f} (<= 0.02)",
                )
            )
        if suite == "rotation-case" and "control_char" in res:
            checks.append(
                _check(
                    "control",
                    res["control_char"] >= 0.9,
                    f"|S_N({res['control_q']})| = {res['control_char']:.4f} (>= 0.9)",
                )
            )
    elif suite == "normality":
        checks.append(
            _check(
                "blocks",
                res["max_block_deviation"] <= 0.02,
                f"max block deviation = {res['max_block_deviation']:.4f} (<= 0.02)",
            )
        )
        checks.append(
            _check(
                "discrepancy",
                res["star_discrepancy"] <= 0.03,
                f"D* = {res['star_discrepancy']:.4f} (<= 0.03)",
            )
        )
    elif suite == "rational-case":
        checks.append(
            _check(
                "state-frequencies",
                res["state_freq_dev"] <= 0.01,
                f"max |freq - p| = {res['state_freq_dev']:.4f} (<= 0.01)",
            )
        )
        if res.get("char_dev") is not None:
            checks.append(
                _check(
                    "characters",
                    res["char_dev"] <= 0.03,
                    f"max |emp - predicted| = {res['char_dev']:.4f} (<= 0.03)",
                )
            )
    elif suite == "fourier":
        for zc in res["zero_checks"]:
            checks.append(
                _check(
                    f"zeros-{zc['measure']}-{zc['pattern']}",
                    zc["all_exact_zero"],
                    "all family members exactly zero",
                )
            )
        if "haar_up_to" in res:
            checks.append(
                _check("haar", res["haar_up_to"], f"Haar up to {res['haar_range']}")
            )
            checks.append(
                _check("routing", res["routing_consistent"], "classify_index routing")
            )
    elif suite == "stationary-support":
        checks.append(_check("invariance", res["invariance_exact"], "h_i(A+x0) in A+x0"))
        checks.append(
            _check("stationary", res["stationary_exact"], "v P = v exactly")
        )
        checks.append(
            _check(
                "pushforward",
                res["pushforward_stationary"],
                "sum_i P_i (h_i)_* nu = nu exactly",
            )
        )
    elif suite == "condition-check":
        if res["dense"]:
            checks.append(_check("dense", res["witness"] is None, "dense, no witness"))
        else:
            checks.append(
                _check("witness", res["witness_valid"], f"witness {res['witness']}")
            )
    else:
        raise ConfigError(f"unknown suite {suite!r}")
    return checks


# ---------------------------------------------------------------------------
# schema description


SCHEMA_DOC = {
    "config": {
        "kind": f"one of {list(KINDS)}",
        "seed": "integer, default 0 (PRNG: " + PRNG_NAME + ")",
        "irrationals": "declared symbol names, e.g. ['sqrt2']; sqrtN, pi, e supported",
        "precision": "'auto' or explicit bits (>= 64)",
        "scalar-syntax": "terms 'a/b' or 'a/b*NAME' joined by '+'/'-', e.g. '1/3 + 2/3*sqrt2'",
        "matrix-syntax": "row-major integer lists, [[2,0],[0,3]]; plain int means 1x1",
    },
    "walk-sim": {
        "D": "list of matrices (one per map)",
        "alpha": "list of scalar vectors",
        "x0": "scalar vector",
        "P": "selection probabilities (rationals, default uniform)",
        "N": "steps",
        "K": "character range",
    },
    "rotation-case": {
        "alpha": "list of scalars (translations)",
        "x0": "scalar",
        "control_q": "optional: also report |S_N(q)|",
        "N": "steps",
        "K": "character range",
    },
    "normality": {
        "D": "expanding integer (base)",
        "r": "positive integer exponents",
        "t": "scalar translations",
        "P": "probabilities",
        "N": "digits",
        "L": "max block length",
    },
    "condition-check": {
        "condition": "'walk' or 'ifs'",
        "walk fields": "D (matrices), alpha (scalar vectors)",
        "ifs fields": "D (matrix), r (exponents), t (scalar vectors)",
    },
    "rational-case": {
        "D": "integer >= 2",
        "t": "scalars with rational differences",
        "P": "probabilities",
        "N": "steps",
        "K": "character range",
    },
    "stationary-support": {
        "D": "list of integers (|D_i| >= 2)",
        "alpha": "scalars",
        "P": "probabilities",
    },
    "fourier": {
        "measures": "{name: {base, atoms, weights}}",
        "dump_range": "CSV coefficient range",
        "zero_checks": "[{measure, pattern: odd|twice_odd, k_max, m_max}]",
        "haar_convolution": "[nameA, nameB] or null",
        "haar_range": "N for is-Haar check",
        "tol": "product truncation tolerance",
    },
    "report": {
        "schema": REPORT_SCHEMA,
        "determinism": "identical (config, seed) gives identical report except 'timestamp'",
        "sidecars": "CSV files listed in the report, written next to report.json",
    },
}


# ---------------------------------------------------------------------------
# entry point


def _run_one(args: tuple[dict, str, int | None]) -> str:
    raw, outdir, seed = args
    report = run(raw, outdir, seed)
    return str(Path(outdir) / "report.json")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="toruswalk", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config (or batch list)")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("-o", "--outdir", type=Path, default=Path("toruswalk-out"))
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")

    p_verify = sub.add_parser("verify", help="check a report against a suite")
    p_verify.add_argument("report", type=Path)
    p_verify.add_argument("--suite", required=True)

    sub.add_parser("schema", help="print the config/report schema description")

    args = parser.parse_args(argv)

    if args.command == "schema":
        json.dump(SCHEMA_DOC, sys.stdout, indent=2)
        print()
        return 0

    if args.command == "run":
        try:
            loaded = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            print(f"config parse error: line {exc.lineno}, col {exc.colno}: {exc.msg}", file=sys.stderr)
            return 2
        try:
            if isinstance(loaded, list):
                jobs = [
                    (cfg, str(args.outdir / f"experiment_{i}"), args.seed)
                    for i, cfg in enumerate(loaded)
                ]
                workers = int(os.environ.get("TORUSWALK_WORKERS", "1"))
                if workers > 1:
                    from concurrent.futures import ProcessPoolExecutor

                    with ProcessPoolExecutor(max_workers=workers) as pool:
                        for path in pool.map(_run_one, jobs):
                            print(path)
                else:
                    for job in jobs:
                        print(_run_one(job))
            else:
                report = run(loaded, args.outdir, args.seed)
                print(args.outdir / "report.json")
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        except (chains.RationalityError, fractal.PrecisionExceededError) as exc:
            print(f"condition violated: {exc}", file=sys.stderr)
            return 3
        except (ValueError, ArithmeticError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        return 0

    if args.command == "verify":
        try:
            report = json.loads(args.report.read_text())
        except json.JSONDecodeError as exc:
            print(f"report parse error: {exc}", file=sys.stderr)
            return 2
        try:
            checks = verify_report(report, args.suite)
        except ConfigError as exc:
            print(f"schema error: {exc}", file=sys.stderr)
            return 2
        except (KeyError, TypeError) as exc:
            print(f"schema error: malformed results field ({exc})", file=sys.stderr)
            return 2
        failed = [c for c in checks if not c["pass"]]
        for c in checks:
            status = "PASS" if c["pass"] else "FAIL"
            print(f"{status} {c['check']}: {c['detail']}")
        return 0 if not failed else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())
