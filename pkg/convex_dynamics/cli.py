"""Command line front end: convexdyn <command> [flags].

Every command writes a JSON report (and its artifacts) under the output
directory and exits 0 when all of its assertions pass, 1 when one fails and
2 on usage or input errors.
"""
import io
import os
import csv
import sys
import logging
import argparse

import numpy as np
import humanfriendly

from convex_dynamics import utils
from convex_dynamics import netpbm
from convex_dynamics import omega
from convex_dynamics import regions
from convex_dynamics import halftone
from convex_dynamics import dynamics
from convex_dynamics import classical
from convex_dynamics import counterexample
from convex_dynamics import polytope as geometry
from convex_dynamics.config import Config
from convex_dynamics.logs import RunLogCollector
from convex_dynamics.report import RunReport
from convex_dynamics.stats import FieldStats, NormStats

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2

CONSTANTS = {'golden': classical.GOLDEN, 'silver': classical.SILVER}
CATCH_DISTANCE = 0.05
IDENTITY_TOLERANCE = 1e-9
# Relative growth of the sup error after the split accepted as a plateau
PLATEAU_TOLERANCE = 0.05


def parse_constant(value):
    """Parse a number or one of the named irrational constants."""
    if value.strip().lower() in CONSTANTS:
        return CONSTANTS[value.strip().lower()]
    try:
        return float(value)
    except ValueError:
        raise argparse.ArgumentTypeError("Invalid number %r, expected a float or one of %s" % (value, sorted(CONSTANTS)))


def _argument_type(parse):
    def convert(value):
        try:
            return parse(value)
        except ValueError as error:
            raise argparse.ArgumentTypeError(str(error))
    return convert


def _output_path(config, name):
    return os.path.join(config.output_dir, name)


def _points(values, polytope, name):
    if values is None:
        return None
    if len(values) != polytope.dim:
        raise geometry.DimensionError("%s has %d coordinates, %r needs %d" % (name, len(values), polytope, polytope.dim))
    return np.array(values, dtype=float)


def cmd_halftone(args, config, report):
    """Halftone a P5/P6 image and record error field statistics."""
    pixels = netpbm.read_image(args.input)
    polytope = geometry.resolve(args.polytope or config.polytope)
    img = halftone.raster_from_pixels(pixels, polytope)
    scheme = halftone.resolve_scheme(args.scheme) if args.scheme != 'simple' else 'simple'

    output, errors = halftone.halftone(img, polytope, scheme, strict=config.strict)
    out_path = args.out or _output_path(config, 'halftone.pgm' if polytope.dim == 1 else 'halftone.ppm')
    netpbm.write_image(out_path, halftone.render(output))
    report.artifact(out_path)

    field = FieldStats(errors)
    report.metric('error_field', field.to_dict())
    report.metric('average_fidelity', halftone.average_fidelity(img, output))
    report.check('finite_error', np.all(np.isfinite(errors)), error_field='error_field')

    if args.scaling:
        result = halftone.scaling_experiment(img, polytope, scheme, args.scaling, anchors=args.anchors,
                                             rng=utils.make_rng(config.seed), output=output)
        report.metric('scaling', result.to_dict())
        if result.degenerate:
            report.check('linear_scaling', True, detail='all window errors vanish', scaling='scaling')
        else:
            report.check('linear_scaling', result.slope <= args.max_slope,
                         detail={'slope': result.slope, 'max_slope': args.max_slope}, scaling='scaling')
            if result.stderr is not None:
                report.check('excludes_quadratic', result.excludes(2.0), scaling='scaling')


def cmd_orbit(args, config, report):
    """Seeded random orbits: boundedness plateau and convergence of averages."""
    polytope = geometry.resolve(args.polytope or config.polytope)
    steps = config.steps
    burn_in = args.burn_in if args.burn_in is not None else steps // 10
    split = args.split if args.split is not None else steps // 2
    if not 0 <= burn_in < split < steps:
        raise ValueError("Expected 0 <= burn-in < split < steps, got %d, %d, %d" % (burn_in, split, steps))
    ns = [n for n in args.log_ns or [10 ** power for power in range(2, 10)] if n <= steps]

    rng = utils.make_rng(config.seed)
    summary = NormStats(name='sup_error')
    runs = []
    for run in range(args.runs):
        trace = dynamics.run_orbit(polytope, dynamics.random_gammas(polytope, steps, rng), strict=config.strict)
        early, late = dynamics.plateau(trace, burn_in, split)
        sup = dynamics.sup_error(trace)
        gaps = dynamics.average_gaps(trace, ns) if ns else np.zeros(0)
        bounds = [2.0 * sup / n for n in ns]
        runs.append({'run': run, 'sup_error': sup, 'sup_early': early, 'sup_late': late,
                     'ns': ns, 'average_gaps': gaps, 'gap_bounds': bounds,
                     'conjugacy_residual': dynamics.conjugacy_residual(polytope, trace)})
        summary.update(sup)

        report.check('plateau_run_%d' % run, late - early <= args.plateau_tolerance * early,
                     detail={'burn_in': burn_in, 'split': split, 'tolerance': args.plateau_tolerance}, runs='runs')
        report.check('average_gap_run_%d' % run, all(gap <= bound for gap, bound in zip(gaps, bounds)), runs='runs')

        if run == 0 and args.trace:
            trace_path = _output_path(config, 'orbit-trace.csv')
            trace.to_csv(trace_path)
            report.artifact(trace_path)

    report.metric('polytope', {'name': polytope.name, 'vertices': polytope.vertices})
    report.metric('runs', runs)
    report.metric('sup_error', summary.to_dict())


def _demands(args, config, polytope):
    if args.demands:
        with io.open(args.demands, 'r', encoding='utf-8') as demands_file:
            rows = [row for row in csv.reader(demands_file) if row and not row[0].startswith('#')]
        try:
            return np.array([[float(value) for value in row] for row in rows])
        except ValueError:
            raise ValueError("Invalid demand file %s, expected rows of numbers" % args.demands)

    steps = config.steps
    if args.synthetic == 'barycenter':
        return np.tile(polytope.centroid, (steps, 1))
    if args.synthetic == 'vertices':
        return polytope.vertices[np.arange(steps) % len(polytope)]
    return dynamics.random_gammas(polytope, steps, utils.make_rng(config.seed))


def cmd_schedule(args, config, report):
    """Chairman assignment: vertex stream and running sup ||eps||."""
    polytope = geometry.resolve(args.polytope or config.polytope)
    demands = _demands(args, config, polytope)
    result = dynamics.schedule(polytope, demands, norms=args.norms, strict=config.strict)

    schedule_path = _output_path(config, 'schedule.csv')
    with io.open(schedule_path, 'w', newline='', encoding='utf-8') as schedule_file:
        writer = csv.writer(schedule_file)
        writer.writerow(['k', 'vid'] + ['sup_%s' % norm for norm in args.norms])
        for k, vid in enumerate(result.assignments):
            writer.writerow([k, int(vid)] + [repr(float(result.running_sup[norm][k])) for norm in args.norms])
    report.artifact(schedule_path)

    count = len(result.assignments)
    sups = {norm: float(result.running_sup[norm][-1]) if count else 0.0 for norm in args.norms}
    report.metric('steps', count)
    report.metric('sup_error', sups)
    report.metric('assignment_counts', np.bincount(result.assignments, minlength=len(polytope)) if count else [])
    if count:
        gap = dynamics.average_gap(result.trace, count)
        sup = dynamics.sup_error(result.trace)
        report.metric('average_gap', gap)
        report.check('average_gap', gap <= 2.0 * sup / count, average_gap='average_gap', sup_error='sup_error')


def _region_polytopes(args, config):
    names = args.shared or [args.polytope or config.polytope]
    return [geometry.resolve(name) for name in names]


def cmd_region(args, config, report):
    """Build and verify invariant regions."""
    polytopes = _region_polytopes(args, config)
    polytope = polytopes[0]
    sampling = {'boundary_samples': args.boundary_samples, 'gamma_samples': args.gamma_samples, 'workers': args.workers}
    region = None

    if args.q_infinity or args.shared:
        theta = np.radians(args.theta) if args.theta is not None else None
        rng_factory = lambda: utils.make_rng(config.seed)  # noqa: E731
        region, verdicts = omega.shared_region(polytopes, rho=args.rho, theta=theta, rng_factory=rng_factory, **sampling)
        report.metric('omega', {'marked': len(region.omega.marked), 'theta': region.omega.theta, 'rho': region.rho})
        report.metric('verdicts', [verdict.to_dict() for verdict in verdicts])
        report.check('convex_boundary', region.check_convex(), omega='omega')
        for polytope_, verdict in zip(polytopes, verdicts):
            report.check('invariant_%s' % polytope_.name, verdict.passed, verdicts='verdicts')

    elif args.find_min_t:
        result = regions.find_min_t(polytope, resolution=args.resolution, exact=args.exact, seed=config.seed, **sampling)
        report.metric('min_t', result.to_dict())
        report.check('invariant_at_T', result.verdict.passed, min_t='min_t')
        if result.below is not None:
            report.check('fails_below_T', not result.below.passed, min_t='min_t')
        region = (regions.interval_region(polytope, result.t)[0] if polytope.dim == 1
                  else regions.polygon_region(polytope, result.t))

    else:
        if polytope.dim == 1:
            region, verdict = regions.interval_region(polytope, args.t)
        else:
            region = regions.polygon_region(polytope, args.t)
            if args.exact:
                verdict = regions.exact_invariance(region, polytope)
            else:
                verdict = regions.verify_invariance(region, polytope, rng=utils.make_rng(config.seed), **sampling)
        verdict = regions.RegionVerdict(passed=verdict.passed, margin=verdict.margin, samples=verdict.samples,
                                        method=verdict.method, witness=verdict.witness, t=args.t)
        report.metric('verdict', verdict.to_dict())
        report.check('invariant', verdict.passed == (not args.expect_fail), verdict='verdict')

    if region.dim == 2:
        region_path = _output_path(config, 'region.txt')
        with io.open(region_path, 'w', encoding='utf-8') as region_file:
            region_file.write(region.to_text())
        report.artifact(region_path)

    if args.absorb is not None:
        x0 = _points(args.x0, polytope, '--x0')
        if x0 is None:
            x0 = np.full(polytope.dim, 1000.0 / np.sqrt(polytope.dim))
        absorption = regions.absorption_test(region, polytope, args.absorb, x0, max_steps=args.max_steps,
                                             rng=utils.make_rng(config.seed))
        report.metric('absorption', absorption.to_dict())
        report.check('absorbed', absorption.stayed, absorption='absorption')


def cmd_sturmian(args, config, report):
    """Constant-input rotation on [0, 1]: Sturmian word and its statistics."""
    gamma, x0, n = args.gamma, args.x0, args.n
    sequence = classical.sturmian(gamma, x0, n, strict=config.strict)
    stats = classical.sturmian_stats(sequence, max_window=args.max_window)

    bits_path = _output_path(config, 'sturmian.txt')
    with io.open(bits_path, 'w', encoding='utf-8') as bits_file:
        bits_file.write(u'%s\n' % sequence.to_string())
    report.artifact(bits_path)
    if n <= 80:
        print(sequence.to_string())

    report.metric('stats', stats.to_dict())
    report.metric('conjugacy_residual', classical.rotation_conjugacy_residual(gamma))
    low, high = classical.absorbing_interval(gamma)
    if low <= x0 <= high:
        frequency = classical.visit_frequency(gamma, x0, n)
        report.metric('visit_frequency', frequency)
        report.check('frequency', abs(stats.frequency - gamma) <= 2.0 / n, stats='stats')
        report.check('ergodic_average', abs(frequency - gamma) <= 2.0 / n, visit_frequency='visit_frequency')
        report.check('balanced', stats.balance_defect <= 1, stats='stats')
    report.check('rotation_conjugacy', report.metrics['conjugacy_residual'] <= 1e-12, conjugacy_residual='conjugacy_residual')

    if 0 < gamma < 1:
        absorption = classical.absorbing_interval_check(gamma, [x0], horizon=args.horizon)
        report.metric('absorption', absorption.to_dict())
        report.check('absorbing_interval', absorption.passed, absorption='absorption')


def cmd_pursuit(args, config, report):
    """Predator-prey pursuit with the greedy strategy."""
    polytope = geometry.resolve(args.polytope or config.polytope)
    steps = args.steps or config.steps
    if args.gamma is not None:
        gammas = np.tile(_points(args.gamma, polytope, '--gamma'), (steps, 1))
    else:
        gammas = dynamics.random_gammas(polytope, steps, utils.make_rng(config.seed))
    p0 = _points(args.p0, polytope, '--p0')
    q0 = _points(args.q0, polytope, '--q0')
    p0 = polytope.vertices[0] if p0 is None else p0
    q0 = polytope.vertices[-1] if q0 is None else q0

    trace = classical.pursuit(polytope, gammas, p0, q0, strict=config.strict)
    trace_path = _output_path(config, 'pursuit.csv')
    trace.to_csv(trace_path)
    report.artifact(trace_path)

    report.metric('final_distance', float(trace.distances[-1]))
    report.metric('caught_by', trace.caught_by(args.catch_distance))
    report.metric('max_eps_norm', float(trace.eps_norms.max()))
    report.metric('identity_residual', trace.identity_residual())
    report.check('caught', trace.distances[-1] < args.catch_distance, final_distance='final_distance')
    report.check('pursuit_identity', trace.identity_residual() <= IDENTITY_TOLERANCE, identity_residual='identity_residual')


def cmd_counterexample(args, config, report):
    """Sweep the face translations of the octahedral polytope for failures (a) and (b)."""
    hex_shifts = args.hex_sweep or args.sweep
    face_shifts = args.face_sweep or args.sweep
    result = counterexample.sweep(hex_shifts, face_shifts, cut=args.cut, workers=args.workers)

    table_path = _output_path(config, 'counterexample.txt')
    with io.open(table_path, 'w', encoding='utf-8') as table_file:
        table_file.write(result.to_text())
    report.artifact(table_path)

    record = result.to_dict()
    report.metric('grid_points', record['grid_points'])
    report.metric('modes', record['modes'])
    report.metric('passing', [[check.hex_shift, check.face_shift] for check in result.passing])
    if args.details:
        report.metric('checks', record['checks'])
    report.check('no_invariant_translation', not result.passing, passing='passing')


COMMANDS = {
    'halftone': cmd_halftone,
    'orbit': cmd_orbit,
    'schedule': cmd_schedule,
    'region': cmd_region,
    'sturmian': cmd_sturmian,
    'pursuit': cmd_pursuit,
    'counterexample': cmd_counterexample,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="Configuration file with a [convexdyn] section")
    common.add_argument('--seed', type=int, help="Seed of every random generator (64-bit)")
    common.add_argument('--strict', action='store_true', default=None, help="Check inputs and invariants inline")
    common.add_argument('--output-dir', help="Directory for reports and artifacts")
    common.add_argument('--report', help="Report path, <output-dir>/<command>.json by default")
    common.add_argument('--verbose', '-v', action='count', default=0, help="More console logging (repeatable)")

    parser = argparse.ArgumentParser(prog='convexdyn', description="Greedy vertex-quantization dynamics on polytopes")
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True
    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument('--boundary-samples', type=int, default=regions.DEFAULT_BOUNDARY_SAMPLES)
    sampling.add_argument('--gamma-samples', type=int, default=regions.DEFAULT_GAMMA_SAMPLES)
    sampling.add_argument('--workers', type=int, help="Thread pool size of the sampling sweeps")
    floats = _argument_type(utils.parse_float_list)

    halftone_parser = commands.add_parser('halftone', parents=[common], help="Error diffusion halftoning")
    halftone_parser.add_argument('--in', dest='input', required=True, help="P5 or P6 input image")
    halftone_parser.add_argument('--out', help="Output image path")
    halftone_parser.add_argument('--polytope', help="Output alphabet: preset or vertex file")
    halftone_parser.add_argument('--scheme', default='simple', help="simple, fs3, uniform12, jjn12 or a scheme file")
    halftone_parser.add_argument('--scaling', type=_argument_type(utils.parse_int_list), help="Window sizes, e.g. 8,16,32,64")
    halftone_parser.add_argument('--anchors', type=int, default=64, help="Random windows per size")
    halftone_parser.add_argument('--max-slope', type=float, default=1.2, help="Largest accepted log-log slope")

    orbit_parser = commands.add_parser('orbit', parents=[common], help="Seeded random orbits")
    orbit_parser.add_argument('--polytope', help="Preset or vertex file")
    orbit_parser.add_argument('--steps', type=int, help="Steps per run, overrides the configuration")
    orbit_parser.add_argument('--runs', type=int, default=5)
    orbit_parser.add_argument('--burn-in', type=int)
    orbit_parser.add_argument('--split', type=int)
    orbit_parser.add_argument('--log-ns', type=_argument_type(utils.parse_int_list), help="Prefix lengths of the average gap check")
    orbit_parser.add_argument('--trace', action='store_true', help="Write the first run as CSV")
    orbit_parser.add_argument('--plateau-tolerance', type=float, default=PLATEAU_TOLERANCE,
                              help="Accepted relative growth of the sup error after the split")

    schedule_parser = commands.add_parser('schedule', parents=[common], help="Chairman assignment stream")
    schedule_parser.add_argument('--polytope', help="Preset or vertex file, simplex3 for three parties")
    schedule_parser.add_argument('--steps', type=int, help="Synthetic demand count, overrides the configuration")
    schedule_parser.add_argument('--demands', help="CSV file of demand rows")
    schedule_parser.add_argument('--synthetic', choices=('random', 'barycenter', 'vertices'), default='random')
    schedule_parser.add_argument('--norms', type=lambda value: value.split(','), default=['l2'], help="Comma list of l1, l2, linf")

    region_parser = commands.add_parser('region', parents=[common, sampling], help="Invariant regions")
    region_parser.add_argument('--polytope', help="Preset or vertex file")
    region_parser.add_argument('--t', type=float, default=1.0, help="Outward translation of the faces")
    region_parser.add_argument('--exact', action='store_true', help="Decide invariance by linear programming")
    region_parser.add_argument('--expect-fail', action='store_true', help="Assert the region is not invariant")
    region_parser.add_argument('--find-min-t', action='store_true')
    region_parser.add_argument('--resolution', type=float, default=1e-3)
    region_parser.add_argument('--q-infinity', action='store_true', help="Build rho * Q_inf instead of Q_t")
    region_parser.add_argument('--shared', type=lambda value: value.split(','), help="Comma list of polytopes sharing one region")
    region_parser.add_argument('--rho', type=float, help="Scale of Q_inf, searched by doubling when omitted")
    region_parser.add_argument('--theta', type=float, help="Half-angle of the removed arcs, in degrees")
    region_parser.add_argument('--absorb', type=float, metavar='MARGIN', help="Run the absorption test with P shrunk by MARGIN")
    region_parser.add_argument('--x0', type=floats, help="Start of the absorption orbit")
    region_parser.add_argument('--max-steps', type=int, default=10 ** 5)

    sturmian_parser = commands.add_parser('sturmian', parents=[common], help="Sturmian sequences")
    sturmian_parser.add_argument('--gamma', type=parse_constant, required=True, help="Rotation number, or golden / silver")
    sturmian_parser.add_argument('--x0', type=float, default=0.0)
    sturmian_parser.add_argument('--n', type=int, default=1000)
    sturmian_parser.add_argument('--max-window', type=int, default=classical.DEFAULT_MAX_WINDOW)
    sturmian_parser.add_argument('--horizon', type=int, default=1000)

    pursuit_parser = commands.add_parser('pursuit', parents=[common], help="Predator-prey pursuit")
    pursuit_parser.add_argument('--polytope', help="Preset or vertex file")
    pursuit_parser.add_argument('--steps', type=int, help="Pursuit length, overrides the configuration")
    pursuit_parser.add_argument('--gamma', type=floats, help="Constant prey target, random points of P by default")
    pursuit_parser.add_argument('--p0', type=floats, help="Predator start, the first vertex by default")
    pursuit_parser.add_argument('--q0', type=floats, help="Prey start, the last vertex by default")
    pursuit_parser.add_argument('--catch-distance', type=float, default=CATCH_DISTANCE)

    counter_parser = commands.add_parser('counterexample', parents=[common], help="Octahedral 3-D counterexample")
    counter_parser.add_argument('--sweep', type=_argument_type(utils.parse_range), default=utils.parse_range('0:2:0.05'),
                                help="start:stop:step of both face translations")
    counter_parser.add_argument('--hex-sweep', type=_argument_type(utils.parse_range), help="Hexagonal face translations")
    counter_parser.add_argument('--face-sweep', type=_argument_type(utils.parse_range), help="Cube face translations")
    counter_parser.add_argument('--cut', type=float, default=geometry.OCTA_DEFAULT_CUT)
    counter_parser.add_argument('--details', action='store_true', help="Keep every grid point in the report")
    counter_parser.add_argument('--workers', type=int)
    return parser


def configure_console(verbosity):
    levels = {0: logging.WARNING, 1: logging.INFO}
    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(levels.get(verbosity, logging.DEBUG))
    handler.setFormatter(logging.Formatter('%(levelname)s %(name)s: %(message)s'))
    package_logger = logging.getLogger('convex_dynamics')
    package_logger.addHandler(handler)
    package_logger.setLevel(logging.DEBUG)
    return handler


def load_config(args):
    """Build the run configuration from the command line flags, the config file and the environment."""
    overrides = {}
    if args.seed is not None:
        overrides['seed'] = args.seed
    if args.strict:
        overrides['strict'] = True
    if args.output_dir:
        overrides['output_dir'] = args.output_dir
    if getattr(args, 'steps', None):
        overrides['steps'] = args.steps
    return Config(config_path=args.config, **overrides)


def _arguments(args):
    """Command values folded into the config hash."""
    skipped = ('config', 'seed', 'strict', 'output_dir', 'report', 'verbose', 'handler', 'workers')
    return {name: value for name, value in sorted(vars(args).items()) if name not in skipped}


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = configure_console(args.verbose)
    collector = None
    timer = humanfriendly.Timer()
    try:
        config = load_config(args)
        if not os.path.isdir(config.output_dir):
            os.makedirs(config.output_dir)

        collector = RunLogCollector(log_path=config.log_path)
        collector.start()
        collector.update('%s seed=%d' % (args.command, config.seed))

        report = RunReport(args.command, config, arguments=_arguments(args))
        COMMANDS[args.command](args, config, report)
        report_path = args.report or _output_path(config, '%s.json' % args.command)
        report.write(report_path)

        log.info("%s finished in %s", args.command, humanfriendly.format_timespan(timer.elapsed_time))
        failed = [assertion['name'] for assertion in report.assertions if not assertion['pass']]
        print("%s: %s, %d assertions, report %s (%s)" % (args.command, 'FAIL %s' % ', '.join(failed) if failed else 'ok',
                                                          len(report.assertions), report_path,
                                                          humanfriendly.format_timespan(timer.elapsed_time)))
        return report.exit_code

    except (ValueError, RuntimeError, EnvironmentError) as error:
        log.debug("Command %s failed", args.command, exc_info=True)
        sys.stderr.write("convexdyn %s: error: %s\n" % (args.command, error))
        return EXIT_USAGE

    finally:
        if collector:
            collector.stop()
        logging.getLogger('convex_dynamics').removeHandler(handler)


if __name__ == '__main__':
    sys.exit(main())
