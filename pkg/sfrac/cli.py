#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-many-locals

"""
Command line front end. The module include:

    * :class:`ProblemConfig`: JSON problem definition with validation
    * :class:`ConfigError`: Configuration failure with the field path
    * :func:`main`: Argument parsing and command dispatch

Commands: ``check``, ``compat-check``, ``solve``, ``scan-resolvent``,
``frac-power`` and ``oracle-matrix``. Every command writes its artifacts and
a ``manifest.json`` (command, arguments, config SHA-256, seed, versions,
timings) in the output directory.

Exit codes: 0 ok, 2 configuration error, 3 failing verdict with
``--strict``, 4 solver failure.
"""

from __future__ import division
import argparse
import copy
import json
import logging
import os
import sys

from ._utils import Stopwatch, _Report, config_hash, thread_count, versions
from .assembly import AssembledOperator, assemble_T
from .conditions import check_compatibility, compute_constants
from .fracpower import QuadratureSpec, convergence_report, \
    frac_power_apply, matrix_oracle
from .grid import BOUNDARY_KINDS, CoefficientSet, Grid, load_field, \
    parse_coefficient, save_field
from .quaternion import UNITS, SpectralParam, random_axis
from .resolvent import SolveOptions, SolverError, resolvent_scan, solve_Q


log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_VERDICT, EXIT_SOLVER = 0, 2, 3, 4

SAMPLE_CONFIG = {
    "grid": {"nx": 8, "ny": 8, "nz": 8, "h": 0.125,
             "origin": [0.0625, 0.0625, 0.0625]},
    "boundary": {"kind": "dirichlet", "a_robin": "constant:0",
                 "b_phys": None, "mu": None},
    "coefficients": {"a1": "constant:1", "a2": "constant:1",
                     "a3": "constant:1"},
    "operator": "T",
    "solver": {"method": "auto", "rel_tol": 1e-10, "max_iter": 1000,
               "restart": 50, "mean_zero_enforce": False},
    "quadrature": {"alpha": 0.5, "axis": "e1", "n_nodes": 400,
                   "trunc": 30.0, "side": "right"},
    "scan": {"t_min": 0.01, "t_max": 100.0, "n_points": 20},
    "trace_constant": None,
    "seed": 0}


class ConfigError(ValueError):
    """Invalid problem configuration, the message starts with the path"""

    def __init__(self, path, message):
        ValueError.__init__(self, "%s: %s" % (path, message))
        self.path = path


def parse_axis(text, path="axis"):
    """Imaginary unit from ``e1``, ``e2``, ``e3`` or ``random:<seed>``"""
    if text in ("e1", "e2", "e3"):
        return UNITS[int(text[1])-1]
    if isinstance(text, str) and text.startswith("random:"):
        try:
            return random_axis(int(text.split(":", 1)[1]))
        except ValueError:
            pass
    raise ConfigError(path, "axis must be e1, e2, e3 or random:<seed>, got "
                      "%r" % (text, ))


def _merge(defaults, given, path):
    if given is None:
        return copy.deepcopy(defaults)
    if not isinstance(given, dict):
        raise ConfigError(path, "expected an object")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError("%s.%s" % (path, unknown[0]), "unknown key")
    merged = copy.deepcopy(defaults)
    merged.update(given)
    return merged


class ProblemConfig(_Report):
    """
    Problem definition read from JSON

    Parameters
    ----------
    document : dict
        Blocks ``grid``, ``boundary``, ``coefficients``, ``operator``
        (``T`` or ``zero``), ``solver``, ``quadrature``, ``scan``,
        ``trace_constant`` and ``seed``; missing blocks and keys take the
        values of :data:`SAMPLE_CONFIG`
    base_dir : str
        Directory for relative ``file:`` paths

    Attributes
    ----------
    grid : Grid
    coeffs : CoefficientSet
    solve_options : SolveOptions
    quadrature : dict
    scan : dict
    trace_constant : float or None
    seed : int
    sha256 : str
        Hash of the merged document

    Raises
    ------
    ConfigError
        With the dotted path of the offending field
    """

    kwargs = {"document": None,
              "base_dir": "."}
    required = ("document", )

    @classmethod
    def from_file(cls, path):
        try:
            with open(path) as stream:
                document = json.load(stream)
        except (OSError, IOError) as error:
            raise ConfigError("config", "cannot read %s: %s" % (path, error))
        except ValueError as error:
            raise ConfigError("config", "invalid JSON: %s" % error)
        return cls(document=document,
                   base_dir=os.path.dirname(os.path.abspath(path)))

    def calculo(self):
        doc = self.kwargs["document"]
        if not isinstance(doc, dict):
            raise ConfigError("config", "expected a JSON object")
        unknown = sorted(set(doc) - set(SAMPLE_CONFIG))
        if unknown:
            raise ConfigError(unknown[0], "unknown key")
        merged = {}
        for key, default in SAMPLE_CONFIG.items():
            if isinstance(default, dict):
                merged[key] = _merge(default, doc.get(key), key)
            else:
                merged[key] = doc.get(key, default)
        self.document = merged
        self.sha256 = config_hash(merged)

        self.grid = self._grid(merged["grid"], merged["boundary"])
        self.coeffs = self._coefficients(merged)
        if merged["operator"] not in ("T", "zero"):
            raise ConfigError("operator", "must be T or zero")
        self.operator = merged["operator"]
        try:
            self.solve_options = SolveOptions(**merged["solver"])
        except (TypeError, ValueError) as error:
            raise ConfigError("solver", str(error))

        self.quadrature = dict(merged["quadrature"])
        self.quadrature["axis"] = parse_axis(self.quadrature["axis"],
                                             "quadrature.axis")
        self.scan = merged["scan"]
        tc = merged["trace_constant"]
        if tc is not None and not (isinstance(tc, (int, float)) and tc > 0):
            raise ConfigError("trace_constant", "must be a positive number")
        self.trace_constant = tc
        if not isinstance(merged["seed"], int):
            raise ConfigError("seed", "must be an integer")
        self.seed = merged["seed"]

    @staticmethod
    def _grid(block, boundary):
        for key in ("nx", "ny", "nz"):
            if not isinstance(block[key], int) or block[key] < 3:
                raise ConfigError("grid.%s" % key, "must be an integer >= 3")
        if not isinstance(block["h"], (int, float)) or block["h"] <= 0:
            raise ConfigError("grid.h", "must be positive")
        if not isinstance(block["origin"], list) or \
                len(block["origin"]) != 3:
            raise ConfigError("grid.origin", "needs 3 coordinates")
        if boundary["kind"] not in BOUNDARY_KINDS:
            raise ConfigError("boundary.kind", "must be one of %s" %
                              ", ".join(BOUNDARY_KINDS))
        try:
            return Grid(block["nx"], block["ny"], block["nz"], block["h"],
                        block["origin"], boundary["kind"])
        except (TypeError, ValueError) as error:
            raise ConfigError("grid", str(error))

    def _spec(self, spec, path):
        if isinstance(spec, str) and spec.startswith("file:"):
            name = spec[5:]
            if not os.path.isabs(name):
                name = os.path.join(self.kwargs["base_dir"], name)
            if not os.path.exists(name):
                raise ConfigError(path, "file %s does not exist" % name)
            spec = "file:" + name
        try:
            return parse_coefficient(spec, self.grid)
        except (TypeError, ValueError) as error:
            raise ConfigError(path, str(error))

    def _coefficients(self, merged):
        values, grads = [], []
        for key in ("a1", "a2", "a3"):
            value, grad = self._spec(merged["coefficients"][key],
                                     "coefficients.%s" % key)
            values.append(value)
            grads.append(grad)
        boundary = merged["boundary"]
        a_robin = self._spec(boundary["a_robin"], "boundary.a_robin")[0]
        b_phys = None
        if boundary["b_phys"] is not None:
            b_phys = self._spec(boundary["b_phys"], "boundary.b_phys")[0]
        mu = boundary["mu"]
        if mu is not None and not isinstance(mu, (int, float)):
            raise ConfigError("boundary.mu", "must be a number")
        # grads[j][i] = ∂_i a_j
        grad = [[grads[j][i] for j in range(3)] for i in range(3)]
        try:
            return CoefficientSet(self.grid, values, grad, a_robin, b_phys,
                                  mu)
        except ValueError as error:
            raise ConfigError("coefficients", str(error))

    def operator_T(self):
        """Closed T of the problem, or the zero operator in test mode"""
        if self.operator == "zero":
            return AssembledOperator.zero(self.grid)
        try:
            return assemble_T(self.coeffs, self.grid)
        except ValueError as error:
            raise ConfigError("coefficients", str(error))


def _write_json(path, document):
    with open(path, "w") as stream:
        json.dump(document, stream, indent=2, sort_keys=True)
        stream.write("\n")


def _quadrature_spec(config, args):
    q = dict(config.quadrature)
    for key, value in (("alpha", args.alpha), ("n_nodes", args.nodes),
                       ("trunc", args.trunc), ("side", args.side)):
        if value is not None:
            q[key] = value
    if args.axis is not None:
        q["axis"] = parse_axis(args.axis, "--axis")
    try:
        return QuadratureSpec(**q)
    except ValueError as error:
        raise ConfigError("quadrature", str(error))


def cmd_check(config, args, clock):
    clock.begin("constants")
    report = compute_constants(config.coeffs, config.grid,
                               config.trace_constant)
    clock.end("constants")
    doc = report.as_dict()
    _write_json(os.path.join(args.output_dir, "conditions.json"), doc)
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.strict and not report.verdict().passed:
        return EXIT_VERDICT
    return EXIT_OK


def cmd_compat(config, args, clock):
    clock.begin("compatibility")
    try:
        verdict = check_compatibility(config.coeffs, config.grid)
    except ValueError as error:
        raise ConfigError("boundary", str(error))
    clock.end("compatibility")
    doc = verdict.as_dict()
    _write_json(os.path.join(args.output_dir, "compat.json"), doc)
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.strict and not verdict.passed:
        return EXIT_VERDICT
    return EXIT_OK


def cmd_solve(config, args, clock):
    try:
        F = load_field(args.rhs, config.grid.boundary_kind)
    except (OSError, IOError, ValueError) as error:
        raise ConfigError("--rhs", str(error))
    if not F.grid.same_as(config.grid):
        raise ConfigError("--rhs", "field grid differs from grid block")
    axis = parse_axis(args.axis, "--axis")
    s = SpectralParam.imaginary(args.s1, axis)
    report = compute_constants(config.coeffs, config.grid,
                               config.trace_constant)
    clock.begin("solve")
    u = solve_Q(s, F, config.operator_T(), config.solve_options, report)
    clock.end("solve")
    save_field(args.out, u)
    _write_json(os.path.join(args.output_dir, "solve.json"),
                {"s1": args.s1, "axis": list(axis), "rhs": args.rhs,
                 "out": args.out, "norm_u": u.norm()})
    return EXIT_OK


def cmd_scan(config, args, clock):
    scan = dict(config.scan)
    for key, value in (("t_min", args.t_min), ("t_max", args.t_max),
                       ("n_points", args.points)):
        if value is not None:
            scan[key] = value
    axis = parse_axis(args.axis or "e1", "--axis")
    report = compute_constants(config.coeffs, config.grid,
                               config.trace_constant)
    clock.begin("scan")
    try:
        result = resolvent_scan(config.operator_T(), scan["t_min"],
                                scan["t_max"], scan["n_points"], axis,
                                config.solve_options, report.C_coercivity,
                                args.threads)
    except ValueError as error:
        raise ConfigError("scan", str(error))
    clock.end("scan")
    result.to_csv(os.path.join(args.output_dir, "scan.csv"))
    result.to_json(os.path.join(args.output_dir, "scan.json"))
    return EXIT_OK


def cmd_frac_power(config, args, clock):
    spec = _quadrature_spec(config, args)
    try:
        v = load_field(args.input, config.grid.boundary_kind)
    except (OSError, IOError, ValueError) as error:
        raise ConfigError("--input", str(error))
    if not v.grid.same_as(config.grid):
        raise ConfigError("--input", "field grid differs from grid block")
    report = compute_constants(config.coeffs, config.grid,
                               config.trace_constant)
    T = config.operator_T()
    clock.begin("quadrature")
    result = frac_power_apply(spec, v, T, config.solve_options, report,
                              args.threads)
    clock.end("quadrature")
    save_field(args.output, result.result)
    doc = result.as_dict()
    if args.convergence:
        clock.begin("convergence")
        doc["convergence"] = convergence_report(spec, v, T,
                                                config.solve_options,
                                                args.threads)
        clock.end("convergence")
    _write_json(os.path.join(args.output_dir, "fracpower.json"), doc)
    return EXIT_OK


def cmd_oracle(config, args, clock):
    spec = _quadrature_spec(config, args)
    seed = config.seed if args.seed is None else args.seed
    clock.begin("oracle")
    report = matrix_oracle(args.size, seed, spec.alpha, spec.n_nodes,
                           spec.trunc, spec.side, spec.axis,
                           threads=args.threads)
    clock.end("oracle")
    doc = report.as_dict()
    _write_json(os.path.join(args.output_dir, "oracle.json"), doc)
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def _quadrature_options(parser, nodes=None):
    parser.add_argument("--alpha", type=float, help="exponent in (0, 1)")
    parser.add_argument("--nodes", type=int, default=nodes,
                        help="Gauss-Legendre nodes")
    parser.add_argument("--trunc", type=float, help="truncation U")
    parser.add_argument("--side", choices=("left", "right"))
    parser.add_argument("--axis", help="e1, e2, e3 or random:<seed>")


def build_parser():
    """The argparse parser of the sfrac command"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="problem JSON, sample if missing")
    common.add_argument("--output-dir", default=".",
                        help="directory for artifacts and manifest")
    common.add_argument("--threads", type=int,
                        help="worker threads, overrides SFRAC_THREADS")
    common.add_argument("--strict", action="store_true",
                        help="exit 3 when the verdict fails")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(
        prog="sfrac", description="S-resolvent and fractional powers of "
        "quaternionic differential operators")
    sub = parser.add_subparsers(dest="command")
    sub.required = True

    p = sub.add_parser("check", parents=[common],
                       help="constants and verdicts of the conditions")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compat-check", parents=[common],
                       help="Robin-type versus physical Robin rows")
    p.set_defaults(func=cmd_compat)

    p = sub.add_parser("solve", parents=[common], help="solve Q_s(T)u = F")
    p.add_argument("--s1", type=float, required=True)
    p.add_argument("--axis", default="e1")
    p.add_argument("--rhs", required=True, help="QFIELD file of F")
    p.add_argument("--out", required=True, help="QFIELD file of u")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scan-resolvent", parents=[common],
                       help="resolvent norms along the imaginary axis")
    p.add_argument("--t-min", type=float)
    p.add_argument("--t-max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--axis")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("frac-power", parents=[common],
                       help="P_alpha(T)v by quadrature")
    _quadrature_options(p)
    p.add_argument("--input", required=True, help="QFIELD file of v")
    p.add_argument("--output", required=True, help="QFIELD file of result")
    p.add_argument("--convergence", action="store_true",
                   help="add the convergence table")
    p.set_defaults(func=cmd_frac_power)

    p = sub.add_parser("oracle-matrix", parents=[common],
                       help="quadrature versus complex adjoint power")
    _quadrature_options(p, nodes=800)
    p.add_argument("--size", type=int, default=4)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_oracle)
    return parser


def _configure_logging(args):
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv=None):
    """Run the command line, returns the exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args)
    clock = Stopwatch()

    try:
        args.threads = thread_count(args.threads)
        if args.config:
            config = ProblemConfig.from_file(args.config)
        else:
            config = ProblemConfig(document=SAMPLE_CONFIG)
        os.makedirs(args.output_dir, exist_ok=True)
        status = args.func(config, args, clock)
    except ConfigError as error:
        log.error("Configuration error: %s", error)
        return EXIT_CONFIG
    except SolverError as error:
        log.error("Solver failure: %s", error)
        return EXIT_SOLVER
    except ValueError as error:
        log.error("Invalid input: %s", error)
        return EXIT_CONFIG

    arguments = {k: v for k, v in sorted(vars(args).items())
                 if k != "func"}
    _write_json(os.path.join(args.output_dir, "manifest.json"),
                {"command": args.command,
                 "arguments": arguments,
                 "config_sha256": config.sha256,
                 "seed": config.seed,
                 "versions": versions(),
                 "timings": clock.timings,
                 "status": status})
    return status


if __name__ == "__main__":
    sys.exit(main())
