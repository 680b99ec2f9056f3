"""Command-line front end: channel specs in JSON, results as CSV.

Commands
--------
- ``sweep``: rate sweep of the exact i.i.d./constant-composition exponents
  and the classic lower bound.
- ``finite-n``: finite-blocklength exponents against the asymptote.
- ``simulate``: Monte-Carlo codebook study with least-squares exponent fit,
  optionally with binned codebooks (reports the exact leakage identity).
- ``normalize-spec``: canonical re-serialization of a channel spec.

Exit codes: 0 success, 2 degenerate or invalid input, 3 enumeration budget
exceeded, 4 numerical failure.  All rates are read and written in the unit
selected by ``--units`` (nats by default).  Every CSV embeds the spec hash
and the full parameter set; ``--no-timestamp`` makes reruns byte-identical.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .cc import cc_exponent, cc_exponent_lower_bound
from .ensembles import ensemble_for_blocklength
from .finite_length import cc_exponent_finite, iid_exponent_finite
from .iid import iid_exponent
from .method_of_types import EnumerationBudgetError, quantize_to_ntype
from .prob import Channel, Distribution, compose_prefix, mutual_information
from .simulate import (
    BudgetExceededError,
    DEFAULT_LAW_BUDGET,
    Codebook,
    divergence_between_laws,
    output_law,
    reference_law,
    sample_codebook,
    trial_seed,
    wiretap_leakage,
)

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_BUDGET = 3
EXIT_NUMERICAL = 4

LN2 = math.log(2.0)


class DegenerateInputError(ValueError):
    pass


@dataclass
class ChannelSpec:
    input_size: int
    output_size: int
    W: Channel
    P_X: Distribution
    prefix: Channel | None
    prefix_input: Distribution | None
    sha256: str

    def effective(self) -> tuple[Distribution, Channel, str]:
        """Input distribution and channel all commands actually operate on."""
        if self.prefix is None:
            return self.P_X, self.W, "none"
        eff = compose_prefix(self.prefix, self.W)
        note = f"applied ({self.prefix.input_size} auxiliary inputs)"
        return self.prefix_input, eff, note


def load_channel_spec(path: str) -> ChannelSpec:
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    doc = json.loads(raw.decode("utf-8"))
    try:
        nx = int(doc["input_size"])
        nz = int(doc["output_size"])
        W = Channel(doc["W"])
        P = Distribution(doc["P_X"])
    except KeyError as e:
        raise DegenerateInputError(f"spec is missing field {e}") from e
    if W.rows.shape != (nx, nz):
        raise DegenerateInputError(
            f"W is {W.rows.shape}, spec declares ({nx}, {nz})"
        )
    if P.size != nx:
        raise DegenerateInputError("P_X length does not match input_size")
    prefix = prefix_input = None
    if "prefix" in doc and doc["prefix"] is not None:
        pdoc = doc["prefix"]
        prefix = Channel(pdoc["matrix"])
        prefix_input = Distribution(pdoc["P_U"])
        if prefix.output_size != nx:
            raise DegenerateInputError("prefix matrix does not map onto X")
        if prefix_input.size != prefix.input_size:
            raise DegenerateInputError("P_U length does not match the prefix")
    return ChannelSpec(nx, nz, W, P, prefix, prefix_input, digest)


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _json_value(v, indent: int) -> str:
    pad = " " * indent
    if isinstance(v, dict):
        inner = ",\n".join(
            f'{pad}  "{k}": {_json_value(val, indent + 2)}' for k, val in v.items()
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(v, (list, tuple)):
        if v and isinstance(v[0], (list, tuple)):
            inner = ",\n".join(f"{pad}  {_json_value(x, indent + 2)}" for x in v)
            return "[\n" + inner + "\n" + pad + "]"
        return "[" + ", ".join(_json_value(x, indent) for x in v) + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt(v)
    return json.dumps(v)


def normalize_spec_text(spec: ChannelSpec) -> str:
    doc: dict = {
        "input_size": spec.input_size,
        "output_size": spec.output_size,
        "W": [[float(x) for x in row] for row in spec.W.rows],
        "P_X": [float(x) for x in spec.P_X.masses],
    }
    if spec.prefix is not None:
        doc["prefix"] = {
            "input_size": spec.prefix.input_size,
            "matrix": [[float(x) for x in row] for row in spec.prefix.rows],
            "P_U": [float(x) for x in spec.prefix_input.masses],
        }
    return _json_value(doc, 0) + "\n"


def _provenance(args, spec: ChannelSpec, command: str, params: dict) -> list[str]:
    lines = [
        f"# tool: secrexp {__version__}",
        f"# spec_sha256: {spec.sha256}",
        f"# command: {command}",
        "# params: " + " ".join(f"{k}={v}" for k, v in params.items()),
    ]
    _, _, note = spec.effective()
    lines.append(f"# prefix: {note}")
    if not args.no_timestamp:
        lines.append(
            "# generated: "
            + datetime.datetime.now(datetime.timezone.utc).isoformat()
        )
    return lines


def _write_csv(path: str, comment_lines: list[str], header: str, rows: list[str]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comment_lines:
            fh.write(line + "\n")
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _unit_scale(units: str) -> float:
    return 1.0 if units == "nats" else LN2


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_sweep(args) -> int:
    spec = load_channel_spec(args.spec)
    P, W, _ = spec.effective()
    scale = _unit_scale(args.units)
    if mutual_information(P, W) <= 1e-14:
        print(
            "error: channel develops no mutual information; exponents are infinite",
            file=sys.stderr,
        )
        return EXIT_DEGENERATE
    if args.rate_min < 0 or args.rate_max < args.rate_min or args.steps < 1:
        raise DegenerateInputError("need 0 <= rate-min <= rate-max and steps >= 1")
    rates = np.linspace(args.rate_min, args.rate_max, args.steps)
    rows = []
    for r_units in rates:
        R = float(r_units) * scale
        res_i = iid_exponent(P, W, R)
        res_c = cc_exponent(P, W, R, steps=args.cc_grid)
        lb = cc_exponent_lower_bound(P, W, R)
        rows.append(
            ",".join(
                [
                    _fmt(R / scale),
                    _fmt(res_i.exponent / scale),
                    _fmt(res_c.exponent / scale),
                    _fmt(lb / scale),
                    res_i.regime,
                    res_c.regime,
                ]
            )
        )
    params = dict(
        rate_min=_fmt(args.rate_min),
        rate_max=_fmt(args.rate_max),
        steps=args.steps,
        units=args.units,
        cc_grid=args.cc_grid,
    )
    _write_csv(
        args.out,
        _provenance(args, spec, "sweep", params),
        "R,E_iid,E_cc,E_cc_lower,regime_iid,regime_cc",
        rows,
    )
    return EXIT_OK


def _parse_n_list(text: str) -> list[int]:
    ns = [int(tok) for tok in text.split(",") if tok.strip()]
    if not ns or any(n < 1 for n in ns) or sorted(ns) != ns:
        raise DegenerateInputError("n-list must be ascending positive integers")
    return ns


def _cmd_finite_n(args) -> int:
    spec = load_channel_spec(args.spec)
    P, W, _ = spec.effective()
    scale = _unit_scale(args.units)
    if mutual_information(P, W) <= 1e-14:
        print("error: channel develops no mutual information", file=sys.stderr)
        return EXIT_DEGENERATE
    R = args.rate * scale
    ns = _parse_n_list(args.n_list)
    comments_extra = []
    if args.ensemble == "iid":
        e_inf = iid_exponent(P, W, R).exponent
        finite = [iid_exponent_finite(P, W, R, n).value for n in ns]
    else:
        e_inf = cc_exponent(P, W, R, steps=args.cc_grid).exponent
        finite = []
        for n in ns:
            Pn = quantize_to_ntype(P, n)
            comments_extra.append(
                f"# composition n={n}: " + ",".join(map(str, Pn.counts))
            )
            finite.append(cc_exponent_finite(Pn, W, R, n).value)
    rows = [
        ",".join([str(n), _fmt(e / scale), _fmt(e_inf / scale), _fmt((e - e_inf) / scale)])
        for n, e in zip(ns, finite)
    ]
    gaps = [e - e_inf for e in finite]
    trend = all(b <= a + 1e-12 for a, b in zip(gaps, gaps[1:]))
    params = dict(
        ensemble=args.ensemble,
        rate=_fmt(args.rate),
        n_list=args.n_list,
        units=args.units,
    )
    comments = _provenance(args, spec, "finite-n", params) + comments_extra
    comments.append(f"# gap_nonincreasing: {str(trend).lower()}")
    _write_csv(args.out, comments, "n,E_n,E_asymptotic,gap", rows)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = load_channel_spec(args.spec)
    P, W, _ = spec.effective()
    scale = _unit_scale(args.units)
    if mutual_information(P, W) <= 1e-14:
        print(
            "error: zero-capacity channel; divergence is identically 0,"
            " no exponent to fit",
            file=sys.stderr,
        )
        return EXIT_DEGENERATE
    R = args.rate * scale
    ns = _parse_n_list(args.n_list)
    if len(ns) < 3:
        raise DegenerateInputError("need at least 3 blocklengths for a fit")
    means, errs, leaks = [], [], []
    ident_max = 0.0
    for n in ns:
        ens = ensemble_for_blocklength(args.ensemble, P, n)
        ref = reference_law(ens, n, W, args.budget)
        M = max(1, math.floor(math.exp(n * R)))
        vals = np.empty(args.trials)
        leak_vals = np.empty(args.trials)
        for t in range(args.trials):
            s = trial_seed(args.seed, t)
            if args.bins:
                cb = sample_codebook(ens, n, M * args.bins, s, bins=args.bins)
                rep = wiretap_leakage(cb, W, ens, args.budget)
                resid = abs(rep.leak - (rep.cond_div - rep.uncond_div))
                ident_max = max(ident_max, resid)
                leak_vals[t] = rep.leak
                d = rep.uncond_div
            else:
                cb = sample_codebook(ens, n, M, s)
                d = divergence_between_laws(output_law(cb, W, args.budget), ref)
            if not math.isfinite(d):
                raise ArithmeticError(f"divergence diverged at n={n}, trial {t}")
            vals[t] = d
        means.append(float(vals.mean()))
        errs.append(
            float(vals.std(ddof=1) / math.sqrt(args.trials)) if args.trials > 1 else 0.0
        )
        if args.bins:
            leaks.append(float(leak_vals.mean()))
    x = np.asarray(ns, dtype=np.float64)
    y = -np.log(np.asarray(means))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt((resid**2).mean()))
    confidence = "low" if rms > 0.05 * abs(slope) * float(x.mean()) else "high"
    header = "n,mean_D,stderr_D,minus_log_mean_D"
    if args.bins:
        header += ",mean_leak"
    rows = []
    for i, n in enumerate(ns):
        cells = [
            str(n),
            _fmt(means[i] / scale),
            _fmt(errs[i] / scale),
            _fmt(-math.log(means[i]) / scale),
        ]
        if args.bins:
            cells.append(_fmt(leaks[i] / scale))
        rows.append(",".join(cells))
    params = dict(
        ensemble=args.ensemble,
        rate=_fmt(args.rate),
        n_list=args.n_list,
        trials=args.trials,
        seed=args.seed,
        bins=args.bins or 0,
        budget=args.budget,
        units=args.units,
        rng="numpy-PCG64",
        trial_seed="master XOR (index * 0x9E3779B97F4A7C15) mod 2^63",
    )
    comments = _provenance(args, spec, "simulate", params)
    comments.append(
        f"# fit: slope={_fmt(slope / scale)} intercept={_fmt(intercept / scale)}"
        f" residual_rms={_fmt(rms / scale)} confidence={confidence}"
    )
    if args.bins:
        comments.append(f"# identity_residual_max: {_fmt(ident_max)}")
    _write_csv(args.out, comments, header, rows)
    return EXIT_OK


def _cmd_normalize_spec(args) -> int:
    spec = load_channel_spec(args.spec)
    text = normalize_spec_text(spec)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="secrexp",
        description="Secrecy/resolvability exponents of discrete memoryless"
        " wiretap channels",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, with_units=True):
        p.add_argument("--spec", required=True, help="channel spec JSON")
        p.add_argument("--out", required=True, help="output file")
        p.add_argument("--no-timestamp", action="store_true")
        if with_units:
            p.add_argument("--units", choices=["nats", "bits"], default="nats")

    p = sub.add_parser("sweep", help="rate sweep of the exact exponents")
    common(p)
    p.add_argument("--rate-min", type=float, required=True)
    p.add_argument("--rate-max", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--cc-grid", type=int, default=64, help="cells per row simplex")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("finite-n", help="finite-blocklength exponents")
    common(p)
    p.add_argument("--ensemble", choices=["iid", "cc"], required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--n-list", required=True, help="comma-separated blocklengths")
    p.add_argument("--cc-grid", type=int, default=64)
    p.set_defaults(func=_cmd_finite_n)

    p = sub.add_parser("simulate", help="Monte-Carlo codebook study")
    common(p)
    p.add_argument("--ensemble", choices=["iid", "cc"], required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--n-list", required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=0, help="secret-message bins")
    p.add_argument("--budget", type=int, default=DEFAULT_LAW_BUDGET)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("normalize-spec", help="canonical spec serialization")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_normalize_spec)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceededError, EnumerationBudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (DegenerateInputError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ArithmeticError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
