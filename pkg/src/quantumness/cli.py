"""Command-line entry point.

    quantumness criterion check --pair pair.json --state state.json
    quantumness criterion optimize --pair pair.json
    quantumness criterion sweep --commuting --trials N --dim D --seed S
    quantumness hv build [--triple] --pair pair.json --state state.json -o model.json
    quantumness hv sample --model model.json -n N --seed S [--format csv]
    quantumness hv audit --model model.json -n N --seed S
    quantumness optics simulate --observable obs.json --amplitudes '[re,im],[re,im]'
    quantumness optics compare --observable obs.json --amplitudes '[re,im],[re,im]'
    quantumness phasespace feasibility --pair pair.json --state state.json
    quantumness paper --seed 42

Exit status: 0 on success, 2 on invalid input (an error object is written to
stderr as JSON), 1 on internal failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, criterion, hvmodels, optics, phasespace
from .codec import (
    encode_vector,
    observable_from_dict,
    pair_from_dict,
    parse_amplitudes,
    read_json,
    state_from_dict,
)
from .errors import BadFlag, QuantumnessError, UnknownCommand, ValidationError
from .opalg import RenormalizationWarning, spectral_decompose
from .pipeline import paper_pipeline
from .schema import SCHEMA_ID

MAX_SEED = 2**64 - 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        if "invalid choice" in message:
            raise UnknownCommand(message)
        raise BadFlag(message)


def _seed(text: str) -> int:
    try:
        s = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= s <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return s


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _envelope(command: str, config: dict, seeds: dict, result: dict, tolerances: dict | None = None) -> dict:
    doc = {
        "schema": SCHEMA_ID,
        "tool": "quantumness",
        "version": __version__,
        "command": command,
        "config": config,
        "seeds": seeds,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "result": result,
    }
    if tolerances:
        doc["tolerances"] = tolerances
    return doc


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _criterion_tolerances() -> dict:
    return {"violation": criterion.VIOLATION_TOL, "psd_relative": 1e-9}


def cmd_criterion_check(args):
    a, b = pair_from_dict(read_json(args.pair))
    if args.state is None:
        rho, _ = criterion.optimal_violation_state(a, b)
    else:
        rho = state_from_dict(read_json(args.state))
    validity = criterion.check_triple(a, b)
    rep = criterion.evaluate_criterion(a, b, rho)
    result = {"validity": validity.to_dict(), "report": rep.to_dict()}
    return _envelope("criterion check", _config(args), {}, result, _criterion_tolerances())


def cmd_criterion_optimize(args):
    a, b = pair_from_dict(read_json(args.pair))
    rho, margin = criterion.optimal_violation_state(a, b)
    rep = criterion.evaluate_criterion(a, b, rho)
    vec = spectral_decompose(rho).vector(-1)
    result = {
        "margin": margin,
        "amplitudes": encode_vector(vec),
        "validity": criterion.check_triple(a, b).to_dict(),
        "report": rep.to_dict(),
    }
    return _envelope("criterion optimize", _config(args), {}, result, _criterion_tolerances())


def cmd_criterion_sweep(args):
    if not args.commuting:
        raise BadFlag("only --commuting sweeps are supported")
    rep = criterion.commuting_sweep(args.trials, args.dim, args.seed, args.workers)
    return _envelope(
        "criterion sweep", _config(args), {"seed": args.seed}, rep.to_dict(), _criterion_tolerances()
    )


def cmd_hv_build(args):
    a, b = pair_from_dict(read_json(args.pair))
    rho = state_from_dict(read_json(args.state))
    if args.kind == "triple":
        model = hvmodels.build_triple_model(a, b, rho)
    else:
        model = hvmodels.build_pair_model(a, b, rho)
    return _envelope("hv build", _config(args), {}, model.to_dict())


def _load_model(path) -> hvmodels.HiddenVariableModel:
    d = read_json(path)
    # accept either a bare model or a full `hv build` report
    if isinstance(d, dict) and "result" in d and "schema" in d:
        d = d["result"]
    return hvmodels.HiddenVariableModel.from_dict(d)


def cmd_hv_sample(args):
    model = _load_model(args.model)
    rep = hvmodels.sample(model, args.n, args.seed, args.workers)
    rows = rep.rows(model)
    if args.format == "csv":
        return rows_to_csv(rows)
    result = rep.to_dict()
    result["rows"] = rows
    return _envelope("hv sample", _config(args), {"seed": args.seed}, result)


def cmd_hv_audit(args):
    model = _load_model(args.model)
    audit = hvmodels.audit_valuations(model, args.n, args.seed, args.workers)
    result = audit.to_dict()
    result["exact_frac_negative_diff"] = hvmodels.negative_difference_probability(model)
    return _envelope("hv audit", _config(args), {"seed": args.seed}, result, {"sum_rule": hvmodels.SUM_RULE_TOL})


def cmd_optics_simulate(args):
    x = observable_from_dict(read_json(args.observable))
    amps = parse_amplitudes(args.amplitudes)
    tuning = optics.tuning_from_observable(x)
    signal = optics.generate_signal(args.signal, args.n, args.seed)
    res = optics.simulate(tuning, amps, signal)
    ref = optics.quantum_reference(x, amps)
    result = res.to_dict()
    result.update(
        {
            "quantum_reference": ref,
            "deviation": abs(res.weighted_average - ref),
            "tuning": tuning.to_dict(),
            "signal": signal.description,
        }
    )
    return _envelope("optics simulate", _config(args), {"seed": args.seed}, result)


def cmd_optics_compare(args):
    x = observable_from_dict(read_json(args.observable))
    amps = parse_amplitudes(args.amplitudes)
    ref = optics.quantum_reference(x, amps)
    dev = optics.compare_with_quantum(x, amps)
    res = optics.simulate(optics.tuning_from_observable(x), amps, optics.generate_signal("constant", 1))
    result = {"classical": res.weighted_average, "quantum_reference": ref, "deviation": dev}
    return _envelope("optics compare", _config(args), {}, result)


def cmd_phasespace_feasibility(args):
    a, b = pair_from_dict(read_json(args.pair))
    rho = state_from_dict(read_json(args.state))
    rep = criterion.evaluate_criterion(a, b, rho)
    if rep.violated and not args.delta < rep.violation_margin / 2:
        print(
            f"warning: delta {args.delta} is not below half the violation margin "
            f"{rep.violation_margin:.3g}; infeasibility is not guaranteed",
            file=sys.stderr,
        )
    grid = phasespace.build_grid(args.radius, args.resolution)
    res = phasespace.classical_p_feasibility(a, b, rho, grid, args.delta)
    result = {
        "feasibility": res.to_dict(),
        "pointwise_order": phasespace.pointwise_order_summary(a, b, grid),
        "criterion": rep.to_dict(),
    }
    return _envelope("phasespace feasibility", _config(args), {}, result, {"delta": args.delta})


def cmd_paper(args):
    rep = paper_pipeline(args.seed, args.workers)
    if args.format == "csv":
        return rows_to_csv(rep.hv_pair_moments)
    tol = {"violation": criterion.VIOLATION_TOL, "lp_delta": phasespace.DEFAULT_DELTA}
    return _envelope("paper", _config(args), {"seed": args.seed}, rep.to_dict(), tol)


def _config(args) -> dict:
    skip = {"func", "output"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        cfg[k] = str(v) if isinstance(v, Path) else v
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quantumness", description="Checks of the single-system quantumness criterion.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel workers (results do not depend on it)")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def common(sp, fmt=False):
        sp.add_argument("-o", "--output", type=Path, help="write report here instead of stdout")
        if fmt:
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    g = groups.add_parser("criterion").add_subparsers(dest="command", required=True, parser_class=_Parser)
    sp = g.add_parser("check")
    sp.add_argument("--pair", type=Path, required=True)
    sp.add_argument("--state", type=Path, help="defaults to the maximally violating state")
    common(sp)
    sp.set_defaults(func=cmd_criterion_check)
    sp = g.add_parser("optimize")
    sp.add_argument("--pair", type=Path, required=True)
    common(sp)
    sp.set_defaults(func=cmd_criterion_optimize)
    sp = g.add_parser("sweep")
    sp.add_argument("--commuting", action="store_true")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--seed", type=_seed, default=0)
    common(sp)
    sp.set_defaults(func=cmd_criterion_sweep)

    g = groups.add_parser("hv").add_subparsers(dest="command", required=True, parser_class=_Parser)
    sp = g.add_parser("build")
    kind = sp.add_mutually_exclusive_group()
    kind.add_argument("--pair-model", dest="kind", action="store_const", const="pair")
    kind.add_argument("--triple", dest="kind", action="store_const", const="triple")
    sp.set_defaults(kind="pair")
    sp.add_argument("--pair", type=Path, required=True)
    sp.add_argument("--state", type=Path, required=True)
    common(sp)
    sp.set_defaults(func=cmd_hv_build)
    for name, func in (("sample", cmd_hv_sample), ("audit", cmd_hv_audit)):
        sp = g.add_parser(name)
        sp.add_argument("--model", type=Path, required=True)
        sp.add_argument("-n", type=_positive_int, default=100_000)
        sp.add_argument("--seed", type=_seed, default=0)
        common(sp, fmt=name == "sample")
        sp.set_defaults(func=func)

    g = groups.add_parser("optics").add_subparsers(dest="command", required=True, parser_class=_Parser)
    sp = g.add_parser("simulate")
    sp.add_argument("--observable", type=Path, required=True)
    sp.add_argument("--amplitudes", required=True)
    sp.add_argument("--signal", choices=optics.SIGNAL_KINDS, default="constant")
    sp.add_argument("--n", type=_positive_int, default=4096)
    sp.add_argument("--seed", type=_seed, default=0)
    common(sp)
    sp.set_defaults(func=cmd_optics_simulate)
    sp = g.add_parser("compare")
    sp.add_argument("--observable", type=Path, required=True)
    sp.add_argument("--amplitudes", required=True)
    common(sp)
    sp.set_defaults(func=cmd_optics_compare)

    g = groups.add_parser("phasespace").add_subparsers(dest="command", required=True, parser_class=_Parser)
    sp = g.add_parser("feasibility")
    sp.add_argument("--pair", type=Path, required=True)
    sp.add_argument("--state", type=Path, required=True)
    sp.add_argument("--radius", type=_positive_float, default=phasespace.DEFAULT_RADIUS)
    sp.add_argument("--resolution", type=int, default=phasespace.DEFAULT_RESOLUTION)
    sp.add_argument("--delta", type=_positive_float, default=phasespace.DEFAULT_DELTA)
    common(sp)
    sp.set_defaults(func=cmd_phasespace_feasibility)

    sp = groups.add_parser("paper")
    sp.add_argument("--seed", type=_seed, default=42)
    common(sp, fmt=True)
    sp.set_defaults(func=cmd_paper)
    return p


def _fail(exc_code: str, message: str, status: int, extra: dict | None = None) -> int:
    payload = {"error": exc_code, "message": message, "exit_code": status}
    if extra:
        payload.update(extra)
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return status


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RenormalizationWarning)
            out = args.func(args)
        text = out if isinstance(out, str) else dumps(out)
        if args.output is not None:
            args.output.write_text(text)
        else:
            sys.stdout.write(text)
        return 0
    except FileNotFoundError as exc:
        return _fail("FileNotFound", f"no such file: {exc}", 2)
    except ValidationError as exc:
        d = exc.to_dict()
        return _fail(d.pop("error"), d.pop("message"), 2, d)
    except QuantumnessError as exc:
        return _fail(exc.code, str(exc), 1)
    except Exception as exc:  # noqa: BLE001
        return _fail(type(exc).__name__, str(exc), 1)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
