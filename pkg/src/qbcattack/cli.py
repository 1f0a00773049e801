"""Command-line front end: ``qbc analyze|attack|sweep|verify``.

Exit codes: 0 success, 2 input error, 3 internal invariant violation,
4 verification failure. Errors go to standard error as JSON.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import warnings

import numpy as np

from . import __version__, attack, linalg, protocol, protofile
from .errors import QBCError
from .qstate import StateVector, SystemLayout, apply_alice_unitary, fidelity, partial_trace_alice, trace_distance

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL, EXIT_VERIFY = 0, 2, 3, 4
DEFAULT_TOL = 1e-9
UHLMANN_TOL = 1e-8
VERIFICATION_MODEL = "Bob projects Alice's unveiled state onto the honest purification |psi1>"


class InputError(Exception):
    pass


def dumps(obj) -> str:
    return protofile.canonical_json(obj)


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise InputError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _load_input(args) -> tuple[protocol.ProtocolSpec, str]:
    """Return the spec and the input digest."""
    if args.input and args.family:
        raise InputError("give either an input file or --family, not both")
    if args.input:
        try:
            with open(args.input, "rb") as fh:
                data = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", protofile.RenormalizationWarning)
            return protofile.parse(data), _digest(data)
    if args.family:
        params = _parse_params(args.param)
        spec = protocol.family_instantiate(args.family, params)
        key = json.dumps({"family": args.family, "params": params}, sort_keys=True)
        return spec, _digest(key.encode())
    raise InputError("an input file or --family is required")


def _envelope(command: str, digest: str, results, seed=None) -> dict:
    env = {"command": command, "input_digest": digest, "results": results,
           "tool_version": __version__}
    if seed is not None:
        env["seed"] = seed
    return env


def _matrix_json(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _plan_json(plan: attack.CheatPlan, label=None) -> dict:
    out = {"achieved_overlap": plan.achieved_overlap,
           "success_probability": plan.success_probability,
           "optimal": plan.optimal,
           "unitary": _matrix_json(plan.unitary)}
    if label is not None:
        out["omega"] = label
    return out


def _table(headers, rows) -> str:
    cells = [list(headers)] + [[r if isinstance(r, str) else repr(r) for r in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


# -- commands ---------------------------------------------------------------

def cmd_analyze(args, out) -> int:
    spec, digest = _load_input(args)
    rep = protocol.concealing_report(spec)
    if args.format == "table":
        rows = [[b.omega_label, b.fidelity, b.trace_distance] for b in rep.per_branch]
        rows.append(["(entangled)", rep.entangled_fidelity, rep.entangled_trace_distance])
        out.write(_table(["omega", "fidelity", "trace_distance"], rows))
        out.write(f"epsilon = {rep.epsilon!r}\n")
        return EXIT_OK
    _require_format(args, "json", "table")
    results = rep.to_dict()
    results["name"] = spec.name
    results["perfectly_concealing"] = rep.epsilon <= args.tol
    out.write(dumps(_envelope("analyze", digest, results)))
    return EXIT_OK


def cmd_attack(args, out) -> int:
    spec, digest = _load_input(args)
    rep = protocol.binding_report(spec)
    results = {
        "name": spec.name,
        "per_branch": [_plan_json(p, br.omega_label) for p, br in zip(rep.per_branch_plans, spec.branches)],
        "common": _plan_json(rep.common),
        "diagnostics": [{"omega": d.omega_label, "delta": d.delta, "epsilon_solo": d.epsilon_solo}
                        for d in rep.diagnostics],
        "epsilon_tilde": rep.epsilon_tilde,
        "bound_residual": rep.bound_residual,
        "verification_model": VERIFICATION_MODEL,
    }
    seed = None
    if args.oracle_check:
        seed = args.seed
        Psi0, Psi1 = protocol.entangle_choices(spec)
        oracle = attack.brute_force_unitary_oracle(Psi0, Psi1, args.oracle_samples,
                                                   args.oracle_steps, seed)
        results["oracle"] = {
            "samples": args.oracle_samples,
            "refine_steps": args.oracle_steps,
            "closed_form_overlap": rep.common.achieved_overlap,
            "oracle_overlap": oracle.achieved_overlap,
            "difference": rep.common.achieved_overlap - oracle.achieved_overlap,
        }
    if args.format == "table":
        rows = [[p["omega"], p["achieved_overlap"], p["success_probability"]] for p in results["per_branch"]]
        rows.append(["(common)", rep.common.achieved_overlap, rep.common.success_probability])
        out.write(_table(["omega", "overlap", "success_probability"], rows))
        out.write(f"epsilon_tilde = {rep.epsilon_tilde!r}\nbound_residual = {rep.bound_residual!r}\n")
        if "oracle" in results:
            o = results["oracle"]
            out.write(f"oracle_overlap = {o['oracle_overlap']!r}\ndifference = {o['difference']!r}\n")
    else:
        _require_format(args, "json", "table")
        out.write(dumps(_envelope("attack", digest, results, seed)))
    if rep.bound_residual < -args.tol:
        _error({"error": "invariant-violation",
                "message": f"bound residual {rep.bound_residual!r} is negative"})
        return EXIT_INTERNAL
    return EXIT_OK


def _parse_n_values(text) -> list[int]:
    if not text:
        raise InputError("--n-values is required")
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"--n-values must be comma-separated integers, got {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise InputError("--n-values must be positive integers")
    return values


def cmd_sweep(args, out) -> int:
    if not args.family:
        raise InputError("sweep requires --family")
    params = _parse_params(args.param)
    n_values = _parse_n_values(args.n_values)
    points = protocol.sweep(args.family, params, n_values)
    rows = [[p.n, p.epsilon, p.cheat_probability, p.delta_max] for p in points]
    headers = ["n", "epsilon", "cheat_probability", "delta_max"]
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(headers)
        w.writerows([[repr(v) for v in row] for row in rows])
        out.write(buf.getvalue())
    elif args.format == "table":
        out.write(_table(headers, rows))
    else:
        key = json.dumps({"family": args.family, "params": params, "n_values": n_values},
                         sort_keys=True)
        results = {"family": args.family, "points": [dict(zip(headers, r)) for r in rows]}
        out.write(dumps(_envelope("sweep", _digest(key.encode()), results)))
    return EXIT_OK


def check_invariants(spec: protocol.ProtocolSpec, tol: float = DEFAULT_TOL) -> list[dict]:
    """Evaluate the library's internal consistency checks on one protocol."""
    checks = []

    def record(name, subject, residual, ok):
        checks.append({"invariant": name, "subject": subject, "residual": float(residual),
                       "passed": bool(ok)})

    Psi0, Psi1 = protocol.entangle_choices(spec)
    pairs = [(br.omega_label, br.psi0, br.psi1) for br in spec.branches]
    pairs.append(("entangled", Psi0, Psi1))
    for label, a, b in pairs:
        tn = linalg.trace_norm(attack.cross_gram(a, b))
        f = fidelity(partial_trace_alice(a), partial_trace_alice(b))
        record("uhlmann_trace_norm", label, abs(tn - f), abs(tn - f) <= max(tol, UHLMANN_TOL))
        plan = attack.optimal_cheat_unitary(a, b)
        moved = apply_alice_unitary(a, plan.unitary)
        d = trace_distance(partial_trace_alice(a), partial_trace_alice(moved))
        record("no_signalling", label, d, d <= max(tol, 1e-9))
    for label, psi in (("Psi0", Psi0), ("Psi1", Psi1)):
        dev = abs(float(np.linalg.norm(psi.amplitudes)) - 1.0)
        record("normalization", label, dev, dev <= tol)
    rep = protocol.binding_report(spec)
    record("delta_bound", "entangled", rep.bound_residual, rep.bound_residual >= -tol)
    return checks


def random_spec(rng: np.random.Generator, index: int = 0) -> protocol.ProtocolSpec:
    """Random protocol with 1-4 branches and Alice/Bob dimensions up to 4."""
    da, db = (int(x) for x in rng.integers(1, 5, size=2))
    n = int(rng.integers(1, 5))
    layout = SystemLayout(da, db)
    weights = rng.dirichlet(np.ones(n))
    weights = np.clip(weights, 1e-3, None)
    weights = weights / weights.sum()

    def state():
        z = rng.standard_normal(layout.total) + 1j * rng.standard_normal(layout.total)
        return StateVector(layout, z, normalize=True)

    branches = [protocol.ProtocolBranch(f"omega{i + 1}", state(), state()) for i in range(n)]
    return protocol.ProtocolSpec(f"random-{index}", layout, branches, list(weights))


def cmd_verify(args, out) -> int:
    subjects = []
    if args.input or args.family:
        spec, digest = _load_input(args)
        subjects.append((spec.name, spec))
    else:
        digest = _digest(json.dumps({"fuzz": args.fuzz, "seed": args.seed}).encode())
    if args.fuzz:
        rng = np.random.default_rng(args.seed)
        subjects.extend((f"fuzz-{i}", random_spec(rng, i)) for i in range(args.fuzz))
    if not subjects:
        raise InputError("verify needs an input file, --family, or --fuzz")
    results, failed = [], 0
    for name, spec in subjects:
        for c in check_invariants(spec, args.tol):
            c["spec"] = name
            results.append(c)
            failed += not c["passed"]
    if args.format == "json":
        seed = args.seed if args.fuzz else None
        payload = {"checks": results, "failed": failed, "total": len(results)}
        out.write(dumps(_envelope("verify", digest, payload, seed)))
    else:
        for c in results:
            status = "PASS" if c["passed"] else "FAIL"
            out.write(f"{status} {c['invariant']} spec={c['spec']} subject={c['subject']} "
                      f"residual={c['residual']!r}\n")
        out.write(f"{len(results) - failed}/{len(results)} checks passed\n")
    return EXIT_VERIFY if failed else EXIT_OK


def _require_format(args, *allowed):
    if args.format not in allowed:
        raise InputError(f"--format {args.format} is not supported by {args.command}")


def _error(obj) -> None:
    sys.stderr.write(json.dumps(obj, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", nargs="?", help="protocol document (.qbc.json)")
    common.add_argument("--family", choices=sorted(protocol.FAMILIES))
    common.add_argument("--param", action="append", metavar="KEY=VALUE",
                        help="family parameter; VALUE is parsed as JSON when possible")
    common.add_argument("--format", choices=["json", "table", "csv"], default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)

    parser = argparse.ArgumentParser(prog="qbc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="concealing metrics")
    p = sub.add_parser("attack", parents=[common], help="Alice's cheating unitaries")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--oracle-samples", type=int, default=10_000)
    p.add_argument("--oracle-steps", type=int, default=200)
    p = sub.add_parser("sweep", parents=[common], help="metrics over the security parameter")
    p.add_argument("--n-values", required=True)
    p = sub.add_parser("verify", parents=[common], help="run invariant checks")
    p.add_argument("--fuzz", type=int, default=0, metavar="COUNT")
    return parser


COMMANDS = {"analyze": cmd_analyze, "attack": cmd_attack, "sweep": cmd_sweep, "verify": cmd_verify}
DEFAULT_FORMATS = {"analyze": "json", "attack": "json", "sweep": "json", "verify": "table"}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    if args.format is None:
        args.format = DEFAULT_FORMATS[args.command]
    try:
        if args.seed < 0 or args.seed >= 2 ** 64:
            raise InputError("--seed must be an unsigned 64-bit integer")
        return COMMANDS[args.command](args, out)
    except InputError as exc:
        _error({"error": "input-error", "message": str(exc)})
        return EXIT_INPUT
    except QBCError as exc:
        _error(exc.to_dict())
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
