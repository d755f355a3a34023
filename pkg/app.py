import argparse
import logging
import os
import sys
from typing import Dict, List, Optional, Tuple

import pandas as pd
from dotenv import load_dotenv

from agents.coordinator_agent import EXIT_USAGE, CoordinatorAgent
from utils.analysis_settings import ANALYSIS_SETTINGS, SettingsManager
from utils.artifacts import dumps
from utils.errors import ConfigurationError
from utils.presets import EIGENFUNCTION_PRESETS

logger = logging.getLogger(__name__)


def parse_family(text: str) -> Tuple[int, int]:
    try:
        m, n = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"family must look like '2,3', got {text!r}") from None
    return m, n


def _setting_help(key: str) -> str:
    for group in ANALYSIS_SETTINGS.values():
        if key in group["parameters"]:
            spec = group["parameters"][key]
            return f"{spec['description']} (default {spec['default']})"
    return ""


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    output = common.add_mutually_exclusive_group()
    output.add_argument("--json", dest="output_format", action="store_const", const="json", help="JSON report on stdout")
    output.add_argument("--table", dest="output_format", action="store_const", const="table", help="tabular report")
    common.add_argument("--out", dest="output_path", help="artifact path (figure or mesh)")
    common.add_argument("--resolution", type=int, help=_setting_help("resolution"))
    common.add_argument("--max-refinements", type=int, help=_setting_help("max_refinements"))
    common.add_argument("--zero-tol", type=float, help=_setting_help("zero_tol"))
    common.add_argument("--derivative-tol", type=float, help=_setting_help("derivative_tol"))
    common.add_argument("--residual-tol", type=float, help=_setting_help("residual_tol"))
    common.add_argument("--seed", type=int, help=_setting_help("seed"))
    common.add_argument("--j01", type=float, help=_setting_help("j01"))

    target = argparse.ArgumentParser(add_help=False)
    target.add_argument("--family", type=parse_family, help="mode pair of the family, e.g. 2,3")
    target.add_argument("--beta", type=float)
    target.add_argument("--theta", type=float)
    target.add_argument("--spec", help="JSON eigenfunction spec")
    target.add_argument("--preset", choices=sorted(EIGENFUNCTION_PRESETS))

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--beta-samples", type=int, help=_setting_help("beta_samples"))
    sweep.add_argument("--theta-samples", type=int, help=_setting_help("theta_samples"))
    sweep.add_argument("--include-bifurcation", action="store_true", default=None,
                       help="add the exact theta_beta points to the sweep")

    parser = argparse.ArgumentParser(prog="moebius-nodal",
                                     description="Spectrum and nodal analysis of the flat Möbius strip M_1")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="Dirichlet eigenvalue clusters")
    p.add_argument("--lambda-max", type=float, default=65.0)
    p.add_argument("--a", type=float, default=1.0)

    p = sub.add_parser("screen", parents=[common], help="Courant-sharp screening")
    p.add_argument("--lambda-max", type=float, default=65.0)

    sub.add_parser("nodal", parents=[common, target], help="nodal domains and orientability")
    sub.add_parser("critical", parents=[common, target], help="critical zeros and their orders")

    p = sub.add_parser("bifurcation", parents=[common], help="y_beta, m_beta, theta_beta")
    p.add_argument("--family", type=parse_family, default=(2, 3))
    p.add_argument("--beta", type=float)
    p.add_argument("--sweep", type=int)

    p = sub.add_parser("euler", parents=[common, target, sweep], help="Euler-type ledger")
    p.add_argument("--sweep", action="store_true")

    sub.add_parser("render", parents=[common, target], help="SVG nodal figure")

    p = sub.add_parser("mesh", parents=[common, target], help="OBJ mesh of the embedded strip")
    p.add_argument("--with-nodal", action="store_true")
    p.add_argument("--R", type=float, help=_setting_help("R"))

    p = sub.add_parser("stern", parents=[common], help="Stern-type eigenfunction with two nodal domains")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.01)

    sub.add_parser("reproduce-theorem", parents=[common, sweep], help="full Courant-sharp reproduction")
    return parser


def _overrides(args: argparse.Namespace) -> Dict:
    values = {k: v for k, v in vars(args).items() if k != "command"}
    known = set(SettingsManager().parameters) | {"output_format", "output_path", "include_bifurcation"}
    overrides = {k: v for k, v in values.items() if k in known and v is not None}
    overrides["extra"] = {k: v for k, v in values.items() if k not in known and v is not None}
    return overrides


def _render_text(report, indent: str = "") -> List[str]:
    lines = []
    if isinstance(report, dict):
        for key, value in report.items():
            if isinstance(value, (dict, list)) and value and not all(isinstance(v, (int, float, str)) for v in value):
                lines.append(f"{indent}{key}:")
                lines += _render_text(value, indent + "  ")
            else:
                lines.append(f"{indent}{key}: {value}")
    elif isinstance(report, list):
        for item in report:
            lines += _render_text(item, indent + "- ") if isinstance(item, (dict, list)) else [f"{indent}- {item}"]
    return lines


def emit(result: Dict, output_format: str) -> None:
    report = result.get('report')
    if report is None:
        report = {k: v for k, v in result.items() if k != 'status'}
    if output_format == "json":
        print(dumps(report))
    elif output_format == "table" and isinstance(result.get('frame'), pd.DataFrame):
        print(result['frame'].to_string(index=False))
    else:
        print("\n".join(_render_text(report)))


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    logging.basicConfig(
        level=os.environ.get("MOEBIUS_LOG_LEVEL", "WARNING").upper(),
        stream=sys.stderr,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        config = SettingsManager().build_config(args.command, _overrides(args))
    except ConfigurationError as e:
        for problem in e.problems or [str(e)]:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_USAGE

    logger.debug("running %s with %s", config.subcommand, config)
    code, result = CoordinatorAgent().run_subcommand(config)
    emit(result, config.output_format)
    if result.get('status') == 'error':
        print(f"error: {result.get('message')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
