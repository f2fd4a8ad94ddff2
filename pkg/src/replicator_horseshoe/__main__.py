import argparse
import logging
import sys

from . import cli as _cli
from .errors import ConfigError
from .meanclass import FAMILIES
from .parallel import set_progress


def _real(text: str) -> float:
    try:
        return _cli.parse_real(text)
    except ValueError as err:
        raise argparse.ArgumentTypeError(str(err))


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default='config.yml', help='location of the config file')
    common.add_argument('--a', type=_real, help='selection intensity a')
    common.add_argument('--b', type=_real, help='equilibrium b, decimal or p/q')
    common.add_argument('--format', choices=['csv', 'json'], default='csv', help='output format')
    common.add_argument('--out', help='write the document here instead of stdout')
    common.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='overrides logging.level of the config')
    common.add_argument('--progress', action=argparse.BooleanOptionalAction, help='show progress bars on stderr')
    common.add_argument('--cache', help='sqlite file caching horseshoe certificates')

    parser = argparse.ArgumentParser(prog='replicator_horseshoe',
                                     description='Dynamics of the replicator map x -> x / (x + (1-x) e^{a(x-b)})')
    commands = parser.add_subparsers(dest='command', required=True)

    def command(name: str, help: str) -> argparse.ArgumentParser:
        return commands.add_parser(name, parents=[common], help=help)

    sub = command('iterate', 'orbit segment x0, f(x0), ..., f^n(x0)')
    sub.add_argument('--x0', type=_real, required=True)
    sub.add_argument('--n', type=int, required=True)
    command('fixed-points', 'fixed points 0, b, 1 with multipliers')
    command('critical-points', 'turning points of f and of the conjugate map g')
    sub = command('orbits', 'periodic orbits of least period n')
    sub.add_argument('--n', type=int, required=True)
    sub.add_argument('--grid', type=int, help='search grid size, default grid_per_period * n')
    sub.add_argument('--family', choices=FAMILIES, default='replicator')
    command('period2', 'the period-2 orbit past the period-doubling threshold')
    for name, help in (('attractors', 'attractors of the two critical orbits'),
                       ('bifurcation', 'attractor points over a grid of a')):
        sub = command(name, help)
        sub.add_argument('--transient', type=int)
        sub.add_argument('--max-period', type=int)
        sub.add_argument('--samples', type=int)
        if name == 'bifurcation':
            sub.add_argument('--a-lo', type=_real, required=True)
            sub.add_argument('--a-hi', type=_real, required=True)
            sub.add_argument('--steps', type=int, required=True)
    sub = command('lyapunov', 'Lyapunov exponent along the orbit of x0')
    sub.add_argument('--x0', type=_real, required=True)
    sub.add_argument('--n', type=int)
    sub.add_argument('--transient', type=int)
    command('certify', 'horseshoe certificate')
    sub = command('cylinders', 'cylinder intervals of the horseshoe')
    sub.add_argument('--depth', type=int)
    sub = command('itinerary', 'periodic point of K with a given cyclic itinerary')
    sub.add_argument('--word', required=True)
    sub = command('code', 'itinerary of y under g')
    sub.add_argument('--y', type=_real, required=True)
    sub.add_argument('--n', type=int, required=True)
    for name, help in (('mean-check', 'orbit means of a class-M family'),
                       ('cohomology', 'residual of H(f(x)) - H(x) - (x - b)')):
        sub = command(name, help)
        sub.add_argument('--family', choices=FAMILIES, default='replicator')
        sub.add_argument('--grid', type=int)
        if name == 'mean-check':
            sub.add_argument('--n', type=int, required=True)
    sub = command('min-a', 'smallest certified a for b')
    sub.add_argument('--tol', type=_real, default=1e-6)
    sub = command('census', 'periodic points of g^n in K against the cyclic word counts')
    sub.add_argument('--n', type=int, required=True)
    return parser


def main():
    args = _build_parser().parse_args()
    try:
        settings = _cli.load_config(args.config)
    except ConfigError as err:
        sys.exit(f"error: {err.diagnostic()}")

    level = args.log_level or settings['logging'].get('level', 'WARNING')
    logging.basicConfig(level=level, stream=sys.stderr,
                        format='%(asctime)s - %(levelname)s - %(name)s - %(message)s')
    set_progress(args.progress if args.progress is not None else settings.get('progress'))

    config = {key: value for key, value in vars(args).items()
              if key not in ('config', 'log_level', 'progress')}
    config['settings'] = settings
    sys.exit(_cli.run(config))


if __name__ == '__main__':
    main()
