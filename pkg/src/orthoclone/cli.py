"""Command-line front end.

Exit codes: 0 success, 2 bad input (unknown names, malformed files, bad
ranges), 3 state set not mutually orthogonal, 4 attack incompatible with
the protocol.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
from itertools import combinations

import numpy as np

from . import __version__
from .adversary import ATTACK_NAMES, make_attack
from .cloneability import classify_set, is_product, product_orthogonality_locator, reduced_family
from .errors import (
    EngineError,
    InvalidArgument,
    NonCommutingFamily,
    NotOrthogonalInput,
    OrthocloneError,
    PreconditionFailed,
    StateFileError,
    Unsupported,
)
from .protocols import CLI_NAMES, make_protocol
from .qlinalg import eig_hermitian, overlap
from .simulator import alpha_grid, report, sample_run, sweep
from .statefile import bundled_examples, dump_state_set, load_state_set, resolve

EXIT_INPUT = 2
EXIT_NOT_ORTHOGONAL = 3
EXIT_INCOMPATIBLE = 4

CSV_COLUMNS = [
    "protocol", "protocol_params", "attack", "attack_params", "label",
    "fidelity", "qber", "reject_rate", "eve_guess", "disturbance",
]


SNAP_STEP = np.pi / 24
SNAP_TOL = 5e-5  # half a unit in the fourth decimal
_PI_EXPR = re.compile(r"^\s*([+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_angle(text: str, snap: bool = True) -> float:
    """Angle in radians from ``0.5236``, ``pi/6`` or ``3*pi/8``.

    Decimal inputs within 5e-5 of a multiple of pi/24 snap to that multiple,
    so ``0.7854`` means pi/4 exactly; pass ``snap=False`` to keep the literal.
    """
    m = _PI_EXPR.match(text)
    if m:
        coef = float(m.group(1)) if m.group(1) not in ("", "+", "-", None) else (-1.0 if m.group(1) == "-" else 1.0)
        return coef * np.pi / (float(m.group(2)) if m.group(2) else 1.0)
    try:
        x = float(text)
    except ValueError:
        raise InvalidArgument(f"cannot parse angle {text!r}") from None
    if snap:
        k = round(x / SNAP_STEP)
        if abs(x - k * SNAP_STEP) <= SNAP_TOL:
            return k * SNAP_STEP
    return x


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x + 0.0, ".12g")
    return str(x)


def _params(d: dict) -> str:
    return ";".join(f"{k}={fmt(v)}" for k, v in d.items())


def _clean(obj):
    """Round floats to 12 significant digits for stable JSON output."""
    if isinstance(obj, float):
        return float(format(obj + 0.0, ".12g"))
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit_json(obj, out) -> None:
    out.write(json.dumps(_clean(obj), indent=2, ensure_ascii=False) + "\n")


def _emit_csv(rows, out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([fmt(r.get(c)) for c in CSV_COLUMNS])


def report_rows(rep) -> list[dict]:
    base = {
        "protocol": rep.protocol, "protocol_params": _params(rep.protocol_params),
        "attack": rep.attack, "attack_params": _params(rep.attack_params),
        "eve_guess": rep.eve_guess, "disturbance": rep.disturbance,
    }
    rows = [
        dict(base, label=lab, fidelity=s.fidelity, qber=s.error_rate, reject_rate=s.reject)
        for lab, s in rep.labels.items()
    ]
    rows.append(dict(base, label="*", fidelity=rep.min_fidelity, qber=rep.qber, reject_rate=rep.reject_rate))
    return rows


def _matrix_json(m) -> dict:
    return {"re": np.real(m).tolist(), "im": np.imag(m).tolist()}


def cmd_classify(args, out) -> int:
    states = load_state_set(resolve(args.input))
    verdict = classify_set(states)
    doc = {"input": str(args.input), "dims": list(states.dims), "release_order": list(states.release_order),
           "labels": list(states.labels)}
    doc.update(verdict.to_dict())
    if verdict.notes:
        doc["notes"] = verdict.notes
    reduced = {}
    for sub in states.release_order:
        fam = reduced_family(states, sub)
        reduced[str(sub)] = [
            {"label": lab, "matrix": _matrix_json(r.matrix), "eigenvalues": eig_hermitian(r.matrix)[0].tolist()}
            for lab, r in zip(states.labels, fam)
        ]
        doc[f"pairwise_overlap_subsystem_{sub}"] = {
            f"{states.labels[i]}|{states.labels[j]}": overlap(fam[i], fam[j])
            for i, j in combinations(range(len(fam)), 2)
        }
    doc["reduced_states"] = reduced
    pure = states.pure or ()
    if len(pure) == 2 and all(p is not None and is_product(p) for p in pure):
        doc["locator"] = product_orthogonality_locator(*pure)
    _emit_json(doc, out)
    return 0


def _protocol(args):
    return make_protocol(args.protocol, args.alpha)


def cmd_simulate(args, out) -> int:
    protocol = _protocol(args)
    attack = make_attack(args.attack, protocol, args.basis_angle, args.round)
    if args.shots is None:
        rep = report(protocol, attack, args.check_fraction)
        if args.output == "json":
            _emit_json(rep.to_dict(), out)
        else:
            _emit_csv(report_rows(rep), out)
        return 0

    seeds = np.random.SeedSequence(args.seed).spawn(len(protocol.labels))
    runs = [
        sample_run(protocol, attack, lab, args.shots, int(s.generate_state(1)[0]))
        for lab, s in zip(protocol.labels, seeds)
    ]
    if args.output == "json":
        _emit_json({"seed": args.seed, "shots": args.shots, "runs": [r.to_dict() for r in runs]}, out)
        return 0
    exact = report(protocol, attack, args.check_fraction)
    rows = [
        {
            "protocol": exact.protocol, "protocol_params": _params(exact.protocol_params),
            "attack": exact.attack, "attack_params": _params(exact.attack_params),
            "label": r.label, "fidelity": exact.labels[r.label].fidelity,
            "qber": r.error_rate, "reject_rate": r.reject_rate,
            "eve_guess": r.eve_guess, "disturbance": exact.disturbance,
        }
        for r in runs
    ]
    _emit_csv(rows, out)
    return 0


def _workers() -> int:
    raw = os.environ.get("ORTHOCLONE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InvalidArgument(f"ORTHOCLONE_THREADS must be an integer, got {raw!r}") from None


def cmd_sweep(args, out) -> int:
    if args.protocol != "ki":
        raise InvalidArgument("sweep only supports --protocol ki")
    grid = alpha_grid(args.alpha_min, args.alpha_max, args.steps)
    # build per angle: broadcast and dummy-swap depend on the states
    reps = sweep(grid, lambda p: make_attack(args.attack, p, args.basis_angle, args.round), _workers())
    if args.output == "json":
        _emit_json([r.to_dict() for r in reps], out)
    else:
        _emit_csv([report_rows(r)[-1] for r in reps], out)
    return 0


def cmd_export(args, out) -> int:
    _emit_json(dump_state_set(_protocol(args).state_set()), out)
    return 0


def cmd_list(args, out) -> int:
    _emit_json({
        "protocols": list(CLI_NAMES),
        "attacks": list(ATTACK_NAMES),
        "examples": {k: str(v) for k, v in bundled_examples().items()},
    }, out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="orthoclone", description="No-cloning of orthogonal composite states: classify and simulate.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="classify a JSON state set")
    c.add_argument("input", help="path to a state-set file or the name of a bundled example")
    c.set_defaults(func=cmd_classify)

    def protocol_args(p, default=None):
        p.add_argument("--protocol", choices=list(CLI_NAMES), required=default is None, default=default)
        p.add_argument("--alpha", help="angle for the ki protocol (radians, or an expression like pi/6)")
        p.add_argument("--no-snap", action="store_true", help="use decimal angles literally")

    def attack_args(p):
        p.add_argument("--attack", choices=list(ATTACK_NAMES), default="identity")
        p.add_argument("--basis-angle", default="0", help="qubit basis angle for intercept/measure-second")
        p.add_argument("--round", type=int, choices=[1, 2], default=1)
        p.add_argument("--output", choices=["json", "csv"], default="json")
        p.add_argument("--check-fraction", type=float, default=0.25)

    s = sub.add_parser("simulate", help="run one protocol against one attack")
    protocol_args(s)
    attack_args(s)
    s.add_argument("--shots", type=int, help="sample this many runs per label instead of exact output")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("sweep", help="sweep the ki angle, one CSV row per angle")
    protocol_args(w, default="ki")
    w.add_argument("--alpha-min", default="0")
    w.add_argument("--alpha-max", default="pi/2")
    w.add_argument("--steps", type=int, default=9)
    attack_args(w)
    w.set_defaults(func=cmd_sweep, output="csv")

    e = sub.add_parser("export", help="write a catalog protocol as a state-set file")
    protocol_args(e)
    e.set_defaults(func=cmd_export)

    ls = sub.add_parser("list", help="list protocols, attacks and bundled examples")
    ls.set_defaults(func=cmd_list)
    return ap


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    err = sys.stderr
    args = build_parser().parse_args(argv)
    if getattr(args, "shots", None) is not None and args.shots < 1:
        err.write("error: --shots must be at least 1\n")
        return EXIT_INPUT
    buf = io.StringIO()
    try:
        snap = not getattr(args, "no_snap", False)
        for name in ("alpha", "basis_angle", "alpha_min", "alpha_max"):
            if getattr(args, name, None) is not None:
                setattr(args, name, parse_angle(getattr(args, name), snap))
        code = args.func(args, buf)
    except NotOrthogonalInput as exc:
        err.write(f"error: {exc} (pair {exc.pair[0]}, {exc.pair[1]})\n")
        return EXIT_NOT_ORTHOGONAL
    except (PreconditionFailed, NonCommutingFamily) as exc:
        err.write(f"error: attack {args.attack!r} is incompatible with this protocol: {exc}\n")
        return EXIT_INCOMPATIBLE
    except EngineError as exc:
        err.write(f"internal error: {exc}\n")
        return 1
    except (StateFileError, InvalidArgument, Unsupported, OrthocloneError, FileNotFoundError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
