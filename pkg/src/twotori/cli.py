"""Command-line front end: exact computations and verification suites.

Exit codes form the CI contract: 0 all checks pass, 1 a verification check
failed, 2 usage error.  Output is deterministic: identical flags produce
byte-identical bytes, rationals always render as p/q (never floats).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from fractions import Fraction

from .genus2 import (
    ModulePair,
    verify_detHi,
    verify_heisenberg_degeneration,
    verify_theta_degeneration,
    z2_heisenberg,
    z2_module_pair,
)
from .reports import Report
from .series import (
    NotQuasiModular,
    QSeries,
    SeriesError,
    eisenstein,
    eta_normalized,
    qd,
    rat_str,
    to_quasimodular,
)
from .sewing import degenerate_tau, period_matrix
from .virasoro import (
    VirState,
    beta_coefficients,
    lambda_vector,
    lambda_vector_direct,
    partitions_of_weight,
)
from .zhu import one_point, structure_check, to_theta_basis

USAGE_ERROR, VERIFY_ERROR = 2, 1

THETA_SUITE_PAIRS = (("0", 1), ("1", 1), ("1/4", 2), ("2", 1))


@dataclass(frozen=True)
class RunConfig:
    """Resolved global options; fully deterministic (no seeds, no env)."""
    eps_order: int = 8
    q_order: int = 8
    max_weight: int = 8
    matrix_size: int = 8
    fmt: str = "table"


class UsageError(Exception):
    pass


def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as err:
        raise UsageError(f"not an exact rational: {text!r} ({err})")


def _parse_partition(text: str) -> tuple:
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise UsageError(f"malformed partition {text!r}; expected like '2,2'")
    if not parts or any(p < 2 for p in parts):
        raise UsageError("partition parts must be integers >= 2")
    if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
        raise UsageError("partition parts must be weakly decreasing")
    return parts


def _read_config(path: str) -> dict:
    allowed = {"eps-order": int, "q-order": int, "max-weight": int,
               "matrix-size": int, "format": str}
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in allowed:
                    raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
                try:
                    out[key.replace("-", "_")] = allowed[key](value)
                except ValueError:
                    raise UsageError(f"{path}:{lineno}: bad value for {key}")
    except OSError as err:
        raise UsageError(f"cannot read config file: {err}")
    return out


def _add_global_options(p, in_subparser: bool) -> None:
    # Registered on the main parser and again on every subcommand so the
    # flags are accepted in either position; SUPPRESS keeps a subcommand
    # from clobbering a value given before the command name.
    d = argparse.SUPPRESS if in_subparser else None
    p.add_argument("--eps-order", type=int, default=d,
                   help="truncation order in the sewing parameter (default 8)")
    p.add_argument("--q-order", type=int, default=d,
                   help="q-series truncation order (default 8)")
    p.add_argument("--max-weight", type=int, default=d,
                   help="maximum descendant weight (default 8)")
    p.add_argument("--matrix-size", type=int, default=d,
                   help="moment-matrix truncation size (default: eps order)")
    p.add_argument("--format", choices=("table", "json"), default=d,
                   help="output format (default table)")
    p.add_argument("--config", default=d,
                   help="flat key=value file with the same option names")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twotori",
        description="Exact genus-two sewing data for torus partition functions, "
                    "with mechanical verification of the degeneration identities.")
    _add_global_options(parser, in_subparser=False)

    sub = parser.add_subparsers(dest="command", required=True)

    p_beta = sub.add_parser("beta", help="conformal-map coefficient table")
    p_beta.add_argument("--max", type=int, default=14, dest="max_k",
                        help="largest (even) index to print")
    _add_global_options(p_beta, in_subparser=True)

    p_lambda = sub.add_parser("lambda", help="vacuum descendant vectors per weight")
    _add_global_options(p_lambda, in_subparser=True)

    p_compute = sub.add_parser("compute", help="print one exact object")
    p_compute.add_argument("object", choices=(
        "eisenstein", "eta", "tau-degen", "period", "z2-heisenberg",
        "z2-module", "onepoint"))
    p_compute.add_argument("--k", type=int, default=None, help="Eisenstein weight")
    p_compute.add_argument("--partition", default=None,
                           help="descendant modes, e.g. 2,2")
    p_compute.add_argument("--basis", choices=("z", "theta"), default="z")
    p_compute.add_argument("--alpha-sq", default="0")
    p_compute.add_argument("--beta-sq", default="0")
    p_compute.add_argument("--alpha-dot-beta", default="0")
    p_compute.add_argument("--rank", type=int, default=1)
    _add_global_options(p_compute, in_subparser=True)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("suite", choices=(
        "all", "detHi", "heisenberg-degen", "theta-degen",
        "modular-identities", "structure"))
    p_verify.add_argument("--alpha-sq", default="0")
    p_verify.add_argument("--beta-sq", default="0")
    p_verify.add_argument("--alpha-dot-beta", default="0")
    p_verify.add_argument("--rank", type=int, default=1)
    _add_global_options(p_verify, in_subparser=True)
    return parser


def resolve_config(args) -> RunConfig:
    base = {"eps_order": 8, "q_order": 8, "max_weight": 8,
            "matrix_size": None, "format": "table"}
    if getattr(args, "config", None):
        base.update(_read_config(args.config))
    for key in ("eps_order", "q_order", "max_weight", "matrix_size", "format"):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    if base["matrix_size"] is None:
        base["matrix_size"] = base["eps_order"]
    cfg = RunConfig(eps_order=base["eps_order"], q_order=base["q_order"],
                    max_weight=base["max_weight"], matrix_size=base["matrix_size"],
                    fmt=base["format"])
    if cfg.eps_order < 0 or cfg.q_order < 0 or cfg.max_weight < 0:
        raise UsageError("orders must be non-negative")
    if cfg.matrix_size < cfg.eps_order:
        raise UsageError("matrix size must be at least the eps order")
    return cfg


def _emit(obj, cfg: RunConfig, table_text: str) -> None:
    if cfg.fmt == "json":
        print(json.dumps(obj, indent=2))
    else:
        print(table_text)


def _module_pair(args) -> ModulePair:
    try:
        return ModulePair(args.rank, _parse_fraction(args.alpha_sq),
                          _parse_fraction(args.beta_sq),
                          _parse_fraction(args.alpha_dot_beta))
    except ValueError as err:
        raise UsageError(str(err))


def cmd_beta(args, cfg: RunConfig) -> int:
    if args.max_k < 2 or args.max_k % 2:
        raise UsageError("--max must be an even integer >= 2")
    betas = beta_coefficients(args.max_k)
    rows = [f"{k:>4}  {rat_str(b)}" for k, b in betas]
    _emit({"betas": {str(k): rat_str(b) for k, b in betas}}, cfg,
          "   k  beta_k\n" + "\n".join(rows))
    return 0


def cmd_lambda(args, cfg: RunConfig) -> int:
    w = cfg.max_weight
    if w < 0 or w % 2:
        raise UsageError("--max-weight must be an even integer >= 0")
    lam = lambda_vector(w)
    lam_direct = lambda_vector_direct(w)
    agree = all(a == b for a, b in zip(lam, lam_direct))
    if cfg.fmt == "json":
        _emit({"weights": {str(n): lam[n].to_json() for n in range(0, w + 1, 2)},
               "dual_oracle_agrees": agree}, cfg, "")
    else:
        lines = [f"weight {n}:  {lam[n]}" for n in range(0, w + 1, 2)]
        lines.append(f"dual construction (factored map vs exponential sum) agrees: {agree}")
        print("\n".join(lines))
    return 0 if agree else VERIFY_ERROR


def cmd_compute(args, cfg: RunConfig) -> int:
    obj = args.object
    if obj == "eisenstein":
        if args.k is None:
            raise UsageError("compute eisenstein needs --k")
        if args.k < 2:
            raise UsageError("Eisenstein weight must be >= 2")
        s = eisenstein(args.k, cfg.q_order)
        _emit(s.to_json(), cfg, str(s))
        return 0
    if obj == "eta":
        s = eta_normalized(cfg.q_order)
        _emit(s.to_json(), cfg, str(s))
        return 0
    if obj == "tau-degen":
        d = degenerate_tau(cfg.q_order, cfg.eps_order, cfg.matrix_size)
        _emit(d.to_json(), cfg, _render_eps_quasimodular(d, lambda n: n - 2))
        return 0
    if obj == "period":
        pd = period_matrix(cfg.q_order, cfg.q_order, cfg.eps_order, cfg.matrix_size)
        table = "\n".join(f"{name} = {series}" for name, series in
                          (("d11", pd.d11), ("d22", pd.d22), ("d12", pd.d12)))
        _emit(pd.to_json(), cfg, table)
        return 0
    if obj == "z2-heisenberg":
        z = z2_heisenberg(cfg.q_order, cfg.q_order, cfg.eps_order, cfg.matrix_size)
        _emit(z.to_json(), cfg, str(z))
        return 0
    if obj == "z2-module":
        z = z2_module_pair(_module_pair(args), cfg.q_order, cfg.q_order,
                           cfg.eps_order, cfg.matrix_size)
        _emit(z.to_json(), cfg, str(z))
        return 0
    if obj == "onepoint":
        if not args.partition:
            raise UsageError("compute onepoint needs --partition")
        parts = _parse_partition(args.partition)
        op = one_point(VirState.monomial(parts), cfg.q_order)
        if args.basis == "theta":
            op = to_theta_basis(op)
        _emit(op.to_json(), cfg, op.render_symbolic(sum(parts)))
        return 0
    raise UsageError(f"unknown object {obj!r}")


def _render_eps_quasimodular(series, weight_of) -> str:
    """eps-series display with quasi-modular symbols where recognition works."""
    parts = []
    for j in sorted(series.coeffs):
        if j % 2:
            raise SeriesError("odd half-integer power at output boundary")
        n = j // 2
        c = series.coeffs[j]
        if isinstance(c, (int, Fraction)):
            text = rat_str(c)
        else:
            try:
                text = str(to_quasimodular(c, weight_of(n)))
            except (NotQuasiModular, SeriesError):
                text = str(c)
        if " + " in text or " - " in text or text.startswith("-"):
            text = f"({text})"
        parts.append(text if n == 0 else
                     (f"{text}*eps" if n == 1 else f"{text}*eps^{n}"))
    if not parts:
        parts = ["0"]
    return " + ".join(parts + [f"O(eps^{series.eps_trunc + 1})"])


def _modular_identities_report(q_order: int) -> Report:
    report = Report(title="modular identities")
    e2 = eisenstein(2, q_order)
    lhs = qd(e2)
    rhs = eisenstein(4, q_order) * 5 - e2 * e2
    report.add(f"qd E2 == 5 E4 - E2^2 to q-order {q_order}", lhs == rhs,
               order=f"q<={q_order}",
               expected=str(rhs), computed=str(lhs))
    eta = eta_normalized(q_order)
    lhs2 = qd(eta)
    rhs2 = e2 * eta * Fraction(-1, 2)
    report.add(f"qd eta == -1/2 E2 eta to q-order {q_order}", lhs2 == rhs2,
               order=f"q<={q_order}",
               expected=str(rhs2), computed=str(lhs2))
    odd_zero = all(eisenstein(k, q_order).is_zero() for k in (3, 5, 7, 9, 11))
    report.add("E_k == 0 for odd k", odd_zero, order="k in {3,5,7,9,11}")
    return report


def _structure_report(max_weight: int, q_order: int) -> Report:
    report = Report(title=f"1-point operator structure for weights <= {max_weight}")
    for n in range(2, max_weight + 1):
        for parts in partitions_of_weight(n):
            sub = structure_check(parts, q_order)
            ok = sub.passed
            report.add(f"structure of {','.join(map(str, parts))}", ok,
                       order=f"q<={q_order}")
            if not ok:
                report.extend(sub)
    return report


def cmd_verify(args, cfg: RunConfig) -> int:
    suite = args.suite
    reports = []
    if suite in ("modular-identities", "all"):
        reports.append(_modular_identities_report(max(cfg.q_order, 20)
                                                  if suite == "all" else cfg.q_order))
    if suite in ("detHi", "all"):
        reports.append(verify_detHi(cfg.eps_order, cfg.q_order,
                                    l_max=cfg.eps_order // 2, N=cfg.matrix_size))
    if suite in ("heisenberg-degen", "all"):
        reports.append(verify_heisenberg_degeneration(cfg.eps_order, cfg.q_order,
                                                      N=cfg.matrix_size))
    if suite == "theta-degen":
        reports.append(verify_theta_degeneration(
            _module_pair(args), cfg.eps_order, cfg.q_order,
            max_weight=max(cfg.max_weight, cfg.eps_order), N=cfg.matrix_size))
    if suite == "all":
        for alpha_sq, rank in THETA_SUITE_PAIRS:
            reports.append(verify_theta_degeneration(
                ModulePair(rank, Fraction(alpha_sq)), cfg.eps_order, cfg.q_order,
                max_weight=max(cfg.max_weight, cfg.eps_order), N=cfg.matrix_size))
    if suite in ("structure", "all"):
        reports.append(_structure_report(cfg.max_weight, cfg.q_order))
    if not reports:
        raise UsageError(f"unknown suite {suite!r}")

    all_pass = all(r.passed for r in reports)
    if cfg.fmt == "json":
        print(json.dumps({"pass": all_pass,
                          "reports": [r.to_json() for r in reports]}, indent=2))
    else:
        print("\n\n".join(r.render_table() for r in reports))
    return 0 if all_pass else VERIFY_ERROR


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        cfg = resolve_config(args)
        if args.command == "beta":
            return cmd_beta(args, cfg)
        if args.command == "lambda":
            return cmd_lambda(args, cfg)
        if args.command == "compute":
            return cmd_compute(args, cfg)
        if args.command == "verify":
            return cmd_verify(args, cfg)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR
    except (SeriesError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
