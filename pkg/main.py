import argparse
import os
import sys
import logging
from typing import Dict, List, Optional

from data_store import DataStore, deep_merge
from experiments import ExperimentConfig, ExperimentRunner
from helpers import AQVError, IntegrationError, ValidationError, generate_error_line

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

DEFAULT_OUT_DIR = "out"
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(out_dir: str):
    """Log to stderr and to aqv.log in the output directory"""
    os.makedirs(out_dir, exist_ok=True)
    level = getattr(logging, os.getenv('AQV_LOG_LEVEL', 'INFO').upper(), logging.INFO)
    logging.basicConfig(
        level=level,
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(os.path.join(out_dir, 'aqv.log')),
            logging.StreamHandler()
        ],
        force=True,
    )


class CommandLineParser(argparse.ArgumentParser):
    """Parse failures print a single `error:` line and exit with the validation code"""

    def error(self, message):
        self.exit(EXIT_VALIDATION, generate_error_line(ValidationError(message)) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = CommandLineParser(add_help=False)
    common.add_argument('--config', help='JSON file overlaid on the packaged defaults')
    common.add_argument('--out', help='output directory (falls back to $AQV_OUT_DIR, then ./out)')
    common.add_argument('--lambda0-nm', type=float, dest='lambda0_nm')
    common.add_argument('--d-over-lambda0', type=float, dest='d_over_lambda0')
    common.add_argument('--design', choices=['resonant', 'geometric'])
    common.add_argument('--na', type=float)
    common.add_argument('--nodes-theta', type=int, dest='nodes_theta')
    common.add_argument('--nodes-phi', type=int, dest='nodes_phi')
    common.add_argument('--taper', choices=['linear', 'hold'])

    parser = CommandLineParser(
        prog='aqv',
        description='Spontaneously generated coherence in anisotropic quantum vacuum: '
                    'emitter dynamics, metasurface design and far-field estimates',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    steady = commands.add_parser('steady-state', parents=[common], help='long-time state of the emitter')
    evolve = commands.add_parser('evolve', parents=[common], help='RK4 trajectory against the closed form')
    for sub in (steady, evolve):
        sub.add_argument('--gamma1', type=float)
        sub.add_argument('--gamma2', type=float)
        sub.add_argument('--kappa12', type=complex, help='complex rate, e.g. 0.2j')
    evolve.add_argument('--t-end', type=float, dest='t_end')
    evolve.add_argument('--dt', type=float)

    design = commands.add_parser('design', parents=[common], help='metasurface layout and supercell table')
    design.add_argument('--svg', action='store_true', help='also render layout.svg')

    fig8 = commands.add_parser('fig8', parents=[common], help='decay rate and coherence against NA')
    fig8.add_argument('--svg', action='store_true', help='also render fig8.svg')

    snell = commands.add_parser('snell', parents=[common], help='generalized reflection law for one supercell')
    snell.add_argument('--theta-i', type=float, default=0.0, dest='theta_i')
    snell.add_argument('--phase-gradient', type=float, dest='phase_gradient',
                       help='rad/nm; defaults to -2pi over the configured period')

    commands.add_parser('table2', parents=[common], help='supercell characteristics only')

    dressed = commands.add_parser('dressed', parents=[common], help='atom-photon state after emission')
    dressed.add_argument('--im-gxx', type=float, dest='im_gxx')
    dressed.add_argument('--im-gyy', type=float, dest='im_gyy')
    dressed.add_argument('--d01', type=float)
    dressed.add_argument('--d02', type=float)
    dressed.add_argument('--green', dest='green_file', help='JSON record of the Green sample')

    return parser


def flag_overrides(args: argparse.Namespace) -> Dict:
    """Nested config keys set on the command line"""
    overrides: Dict = {}
    if args.lambda0_nm is not None:
        overrides['lambda0_nm'] = args.lambda0_nm
    if args.d_over_lambda0 is not None:
        overrides['d_over_lambda0'] = args.d_over_lambda0
    if args.design is not None:
        overrides.setdefault('design', {})['design_kind'] = args.design
    if getattr(args, 'green_file', None) is not None:
        overrides.setdefault('dressed', {})['green_file'] = args.green_file
    for key in ('na', 'nodes_theta', 'nodes_phi', 'taper'):
        value = getattr(args, key)
        if value is not None:
            overrides.setdefault('farfield', {})[key] = value
    return overrides


def resolve_out_dir(args: argparse.Namespace, config: Dict) -> str:
    return args.out or config.get('out_dir') or os.getenv('AQV_OUT_DIR') or DEFAULT_OUT_DIR


def run_command(runner: ExperimentRunner, args: argparse.Namespace):
    if args.command == 'steady-state':
        return runner.cmd_steady_state(args.gamma1, args.gamma2, args.kappa12)
    if args.command == 'evolve':
        return runner.cmd_evolve(args.gamma1, args.gamma2, args.kappa12, args.t_end, args.dt)
    if args.command == 'design':
        return runner.cmd_design(svg=args.svg)
    if args.command == 'fig8':
        return runner.cmd_fig8(svg=args.svg)
    if args.command == 'snell':
        return runner.cmd_snell(args.theta_i, args.phase_gradient)
    if args.command == 'table2':
        return runner.cmd_table2()
    if args.command == 'dressed':
        return runner.cmd_dressed(args.im_gxx, args.im_gyy, args.d01, args.d02)
    raise ValidationError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_VALIDATION

    try:
        bootstrap = DataStore()
        config = deep_merge(bootstrap.load_config(args.config), flag_overrides(args))
        out_dir = resolve_out_dir(args, config)
        config['out_dir'] = out_dir
        setup_logging(out_dir)

        experiment = ExperimentConfig.from_mapping(config)
        runner = ExperimentRunner(experiment, DataStore(out_dir))
        logger.info(f"Running {args.command} into {out_dir}")
        result = run_command(runner, args)
    except ValidationError as e:
        logger.warning(f"{args.command} rejected its input: {e}")
        print(generate_error_line(e), file=sys.stderr)
        return EXIT_VALIDATION
    except (IntegrationError, FloatingPointError) as e:
        logger.error(f"{args.command} failed numerically: {e}")
        print(generate_error_line(e), file=sys.stderr)
        return EXIT_NUMERICAL
    except AQVError as e:
        logger.error(f"{args.command} failed: {e}")
        print(generate_error_line(e), file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as e:
        logger.error(f"{args.command} could not access {e.filename or 'a file'}: {e.strerror or e}")
        print(generate_error_line(e), file=sys.stderr)
        return EXIT_VALIDATION

    sys.stdout.write(result.report)
    for path in result.files:
        logger.info(f"Artifact: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
