"""Command-line front end.

    molscatter intensity RUN.toml
    molscatter scan [RUN.toml] [--cascade 1-3 --N 9]
    molscatter minimum --alpha 1/3 [--probe standing]
    molscatter pattern RUN.toml
    molscatter export-cascade 1-3 --N 9

Results are CSV (RFC 4180) on standard output or ``--output``. Photon rates
and amplitudes are in units of |C|^2 and C unless ``--absolute`` multiplies
through by the ``[coupling]`` section of the run document.

Exit codes: 0 success, 2 document/argument error, 3 unreachable geometry,
4 validation error.

Geometry convention for ``minimum``: tube A sits on a standing-wave antinode,
so the spacings solve cos(2 pi x) = -alpha with alpha = <N_A>/<N_B>.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from fractions import Fraction

from . import __version__
from .documents import DocumentError, RunDocument, cascade_to_toml, load_document
from .montecarlo import McConfig, estimate
from .optics import GeometryError, ModeKind, cavity_prefactor, minimum_spacings, phase_factors
from .scenarios import Cascade, CascadeError, build_cascade, scan
from .statistics import intensity, minimum_weights, population_ratio

EXIT_OK, EXIT_PARSE, EXIT_GEOMETRY, EXIT_VALIDATION = 0, 2, 3, 4
SEED_ENV = "MOLSCATTER_SEED"
DEFAULT_PRECISION = 12


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt(x, precision: int) -> str:
    if isinstance(x, complex):
        if x.imag == 0:
            x = x.real
        else:
            re = format(x.real, f".{precision}g")
            im = format(x.imag, f"+.{precision}g")
            return f"{re}{im}j"
    x = float(x)
    if x == 0:
        x = 0.0  # drop the sign of -0.0
    return format(x, f".{precision}g")


def _unit_scale(args, doc: RunDocument | None):
    """(rate scale, amplitude scale, unit label)."""
    if not getattr(args, "absolute", False):
        return 1.0, 1.0, "|C|^2"
    if doc is None or doc.coupling is None:
        raise CliError(EXIT_PARSE, "--absolute needs a [coupling] section in the run document")
    try:
        c = cavity_prefactor(doc.coupling)
    except ValueError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from None
    return abs(c) ** 2, c, "photons"


def _write_csv(rows, header, args, doc: RunDocument | None):
    path = args.output or (doc.output_path if doc else None) or "-"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    if path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(buf.getvalue())


def _precision(args, doc):
    if args.precision is not None:
        return args.precision
    if doc is not None and doc.precision is not None:
        return doc.precision
    return DEFAULT_PRECISION


def _seed(args, doc):
    if args.seed is not None:
        return args.seed
    if doc is not None and doc.seed is not None:
        return doc.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise CliError(EXIT_PARSE, f"{SEED_ENV}={env!r} is not an integer") from None
    return 0


def _load(path) -> RunDocument:
    try:
        return load_document(path)
    except CascadeError as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from None
    except DocumentError as exc:
        raise CliError(EXIT_PARSE, str(exc)) from None


def _note(msg: str):
    print(msg, file=sys.stderr)


def _minimum_for(ensemble, probe_kind):
    """Minimum weights, checked against what the probe mode can realize."""
    try:
        weights = minimum_weights(ensemble)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_GEOMETRY, f"no diffraction minimum: {exc}") from None
    try:
        minimum_spacings(population_ratio(ensemble), probe_kind)
    except GeometryError as exc:
        raise CliError(EXIT_GEOMETRY, str(exc)) from None
    return weights


def cmd_intensity(args) -> int:
    doc = _load(args.document)
    if doc.ensemble is None:
        raise CliError(EXIT_PARSE, "ensemble: section required for 'intensity'")
    ensemble = doc.ensemble
    sets = doc.weight_sets or ["geometry"]
    weight_sets = []
    for entry in sets:
        if entry == "geometry":
            if doc.geometry is None:
                raise CliError(EXIT_PARSE, "geometry: section required for geometry weights")
            if doc.geometry.tube_count != ensemble.tube_count:
                raise CliError(EXIT_VALIDATION, "geometry and ensemble disagree on tube count")
            weight_sets.append(("geometry", phase_factors(doc.geometry, 0.0)))
        elif entry == "minimum":
            probe = doc.geometry.probe_kind if doc.geometry else ModeKind.STANDING
            weight_sets.append(("minimum", _minimum_for(ensemble, probe)))
        else:
            if len(entry) != ensemble.tube_count:
                raise CliError(EXIT_VALIDATION,
                               f"weight set has {len(entry)} entries for {ensemble.tube_count} tubes")
            weight_sets.append(("explicit", entry))

    prec = _precision(args, doc)
    rate_scale, _, unit = _unit_scale(args, doc)
    rows = []
    for source, w in weight_sets:
        rep = intensity(ensemble, w)
        rows.append([
            source,
            ";".join(_fmt(complex(g) if isinstance(g, complex) else g, prec) for g in w),
            _fmt(rep.coherent_part * rate_scale, prec),
            _fmt(rep.fluctuation_part * rate_scale, prec),
            _fmt(rep.photon_rate * rate_scale, prec),
        ])
    header = ["source", "weights", f"coherent_part[{unit}]", f"fluctuation_part[{unit}]",
              f"photon_rate[{unit}]"]
    _write_csv(rows, header, args, doc)
    return EXIT_OK


def _cascade_from(args, doc: RunDocument | None) -> Cascade:
    if args.cascade is not None:
        try:
            N = Fraction(args.N) if args.N is not None else Fraction(1)
        except (ValueError, ZeroDivisionError):
            raise CliError(EXIT_PARSE, f"--N: cannot parse {args.N!r}") from None
        try:
            return build_cascade(args.cascade, N)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, str(exc)) from None
    if doc is None or doc.cascade is None:
        raise CliError(EXIT_PARSE, "cascade: give a run document with [cascade] or --cascade")
    return doc.cascade


def cmd_scan(args) -> int:
    doc = _load(args.document) if args.document else None
    cascade = _cascade_from(args, doc)
    reverse = args.reverse or (doc.reverse if doc else False)
    if reverse:
        cascade = cascade.reversed()
    pps = args.points_per_stage or (doc.points_per_stage if doc else None) or 2
    try:
        weights = minimum_weights(cascade.stages[0][1])
        points = scan(cascade, pps)
    except (ValueError, ZeroDivisionError) as exc:
        raise CliError(EXIT_VALIDATION, str(exc)) from None

    samples = args.samples if args.samples is not None else (doc.samples if doc else None)
    prec = _precision(args, doc)
    rate_scale, _, unit = _unit_scale(args, doc)
    header = ["parameter", "stage_label", "bound_fraction", f"photon_rate[{unit}]"]
    mc = None
    if samples:
        mc = McConfig(samples=samples, seed=_seed(args, doc),
                      workers=args.workers or (doc.workers if doc else 1))
        header += [f"mc_mean[{unit}]", f"mc_stderr[{unit}]"]
    rows = []
    for idx, pt in enumerate(points):
        row = [_fmt(pt.parameter, prec), pt.stage_label, _fmt(pt.bound_fraction, prec),
               _fmt(pt.photon_rate * rate_scale, prec)]
        if mc is not None:
            est = estimate(pt.ensemble, weights, mc, stage=idx)
            row += [_fmt(est.photon_rate_mean * rate_scale, prec),
                    _fmt(est.photon_rate_stderr * rate_scale, prec)]
        rows.append(row)
    _write_csv(rows, header, args, doc)
    _note(f"# cascade {cascade.name}: weights {[_fmt(g, 6) for g in weights]} held fixed from "
          f"stage 0; interior points are linear bound-fraction mixtures (schematic axis)")
    return EXIT_OK


def _parse_alpha(text: str) -> Fraction:
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise CliError(EXIT_PARSE, f"--alpha: cannot parse {text!r}") from None
    if value <= 0:
        raise CliError(EXIT_PARSE, "--alpha must be positive")
    return value


def cmd_minimum(args) -> int:
    alpha = _parse_alpha(args.alpha)
    try:
        probe = ModeKind.parse(args.probe)
        xs = minimum_spacings(alpha, probe)
    except GeometryError as exc:
        raise CliError(EXIT_GEOMETRY, str(exc)) from None
    rows = []
    for x in xs:
        if probe is ModeKind.STANDING:
            check = math.cos(2 * math.pi * x)
        else:
            check = -1.0  # exp(2 pi i x) at x = 1/2
        rows.append([f"{x:.6f}", f"{check:.6f}", f"{-float(alpha):.6f}"])
    header = ["delta_over_lambda", "cos(2*pi*x)" if probe is ModeKind.STANDING else "Re exp(2*pi*i*x)",
              "-alpha"]
    args.precision = None
    _write_csv(rows, header, args, None)
    return EXIT_OK


def cmd_pattern(args) -> int:
    doc = _load(args.document)
    if doc.geometry is None or doc.ensemble is None:
        raise CliError(EXIT_PARSE, "pattern needs [geometry] and [ensemble] sections")
    if doc.angles is None:
        raise CliError(EXIT_PARSE, "pattern: section with an angle grid required")
    if doc.geometry.tube_count != doc.ensemble.tube_count:
        raise CliError(EXIT_VALIDATION, "geometry and ensemble disagree on tube count")
    bad = [a for a in doc.angles if not -math.pi / 2 < a < math.pi / 2]
    if bad:
        raise CliError(EXIT_VALIDATION,
                       f"pattern.angles: {bad[0]!r} outside the open interval (-pi/2, pi/2)")
    prec = _precision(args, doc)
    rate_scale, _, unit = _unit_scale(args, doc)
    rows = []
    for theta in doc.angles:
        rep = intensity(doc.ensemble, phase_factors(doc.geometry, theta))
        rows.append([_fmt(theta, prec), _fmt(rep.photon_rate * rate_scale, prec),
                     _fmt(rep.coherent_part * rate_scale, prec)])
    _write_csv(rows, ["angle[rad]", f"photon_rate[{unit}]", f"coherent_part[{unit}]"], args, doc)
    return EXIT_OK


def cmd_export_cascade(args) -> int:
    cascade = _cascade_from(args, None)
    text = cascade_to_toml(cascade, args.points_per_stage or 11)
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="CSV destination ('-' for stdout)")
    common.add_argument("--precision", type=int, help="significant digits (default 12)")

    mc = argparse.ArgumentParser(add_help=False)
    mc.add_argument("--samples", type=int, help="Monte Carlo samples per scan point")
    mc.add_argument("--seed", type=int, help=f"Monte Carlo seed (default ${SEED_ENV} or 0)")
    mc.add_argument("--workers", type=int, help="threads for Monte Carlo chunks")

    absolute = argparse.ArgumentParser(add_help=False)
    absolute.add_argument("--absolute", action="store_true",
                          help="multiply rates by |C|^2 from the [coupling] section")

    cascade = argparse.ArgumentParser(add_help=False)
    cascade.add_argument("--cascade", help="built-in cascade: 1-1, 1-2, 1-3 or 2-2")
    cascade.add_argument("--N", help="complexes in the beam (rational, e.g. 9 or 9/2)")
    cascade.add_argument("--points-per-stage", type=int, dest="points_per_stage",
                         help="scan points per dissociation step, endpoints included")

    parser = _Parser(prog="molscatter", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("intensity", parents=[common, absolute],
                       help="photon rate for an ensemble and weight sets")
    p.add_argument("document")
    p.set_defaults(func=cmd_intensity)

    p = sub.add_parser("scan", parents=[common, mc, absolute, cascade],
                       help="plateau curve along a dissociation cascade")
    p.add_argument("document", nargs="?")
    p.add_argument("--reverse", action="store_true", help="association order")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser(
        "minimum", parents=[common],
        help="tube spacings giving a diffraction minimum",
        description="Spacings x = delta/lambda in [0, 1) with tube A on a probe antinode, "
                    "solving cos(2 pi x) = -alpha (standing) or exp(2 pi i x) = -1 (traveling). "
                    "Integer periods may be added.",
    )
    p.add_argument("--alpha", required=True, help="<N_A>/<N_B>, rational allowed (e.g. 1/3)")
    p.add_argument("--probe", default="standing", choices=[k.value for k in ModeKind])
    p.set_defaults(func=cmd_minimum)

    p = sub.add_parser("pattern", parents=[common, absolute],
                       help="angular distribution over a detection-angle grid")
    p.add_argument("document")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("export-cascade", help="write a built-in cascade as an editable run document")
    p.add_argument("cascade")
    p.add_argument("--N")
    p.add_argument("--points-per-stage", type=int, dest="points_per_stage")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_export_cascade)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _note(f"molscatter: {exc}")
        return exc.code
    except CascadeError as exc:
        _note(f"molscatter: {exc}")
        return EXIT_VALIDATION
    except GeometryError as exc:
        _note(f"molscatter: {exc}")
        return EXIT_GEOMETRY
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        _note(f"molscatter: {exc}")
        return EXIT_VALIDATION
    except OSError as exc:
        _note(f"molscatter: {exc}")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
