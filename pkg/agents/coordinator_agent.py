import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from agents.bifurcation_agent import FAMILY_12, FAMILY_23, BifurcationAgent
from agents.critical_agent import CriticalAgent
from agents.euler_agent import EulerAgent
from agents.nodal_agent import NodalAgent
from agents.render_agent import EmbeddingParams, RenderAgent
from agents.screening_agent import ScreeningAgent
from agents.spectrum_agent import SpectrumAgent
from utils.analysis_settings import RunConfig
from utils.assistant import Assistant
from utils.eigenfunction import EigenfunctionSpec, FamilyParams, family_to_spec, load_spec, stern_spec
from utils.errors import ConfigurationError, MoebiusError
from utils.presets import get_preset

EXIT_PASS = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# lambda * pi / j01^2 for the first label of each cluster from 9 to 65, four decimals
FABER_KRAHN_TABLE = {
    9: 4.8891, 13: 7.0620, 17: 9.2349, 25: 13.5807, 29: 15.7536, 37: 20.0995,
    41: 22.2724, 45: 24.4453, 49: 26.6182, 53: 28.7911, 61: 33.1370, 65: 35.3099,
}
EXPECTED_SURVIVORS = (1, 2, 7)
SUBCOMMANDS = ("spectrum", "screen", "nodal", "critical", "bifurcation", "euler", "render", "mesh", "stern",
               "reproduce-theorem")


class StageFailure(Exception):
    """A reproduction stage whose result disagrees with the expected value."""


class CoordinatorAgent(Assistant):
    def __init__(self):
        super().__init__(
            name="Coordinator",
            description="Runs the analysis subcommands and the Courant-sharp reproduction pipeline",
            instructions="Dispatch subcommands, collect stage verdicts and map failures to exit codes"
        )

    # agents configured from the run

    def _nodal(self, config: RunConfig) -> NodalAgent:
        return NodalAgent(zero_tol=config.zero_tol, max_refinements=config.max_refinements)

    def _critical(self, config: RunConfig) -> CriticalAgent:
        return CriticalAgent(derivative_tol=config.derivative_tol, residual_tol=config.residual_tol,
                             bisection_iterations=config.bisection_iterations,
                             newton_iterations=config.newton_iterations, polish_steps=config.polish_steps)

    def _euler(self, config: RunConfig) -> EulerAgent:
        return EulerAgent(resolution=config.resolution, nodal=self._nodal(config),
                          critical=self._critical(config), bifurcation_margin=config.bifurcation_margin)

    # reproduction pipeline

    def run_reproduce_theorem(self, config: RunConfig) -> Tuple[int, Dict]:
        stages: List[Dict] = []
        context: Dict = {}
        steps: List[Tuple[str, Callable[[RunConfig, Dict], Dict]]] = [
            ("spectrum", self._stage_spectrum),
            ("screening", self._stage_screening),
            ("sin3x", self._stage_sin3x),
            ("family_23_sweep", self._stage_family_sweep),
            ("random_properties", self._stage_random),
            ("second_eigenvalue", self._stage_second),
        ]
        failed = False
        for name, step in steps:
            if failed:
                stages.append({"name": name, "status": "SKIPPED"})
                continue
            try:
                detail = step(config, context)
                stages.append({"name": name, "status": "PASS", **detail})
            except (StageFailure, MoebiusError) as e:
                self.logger.error("stage %s failed: %s", name, e)
                stages.append({"name": name, "status": "FAIL", "reason": str(e), "error_type": type(e).__name__})
                failed = True

        report = {"stages": stages, "status": "FAIL" if failed else "PASS"}
        if not failed:
            excluded = context["excluded"]
            report["courant_sharp"] = [k for k in context["survivors"] if k not in excluded]
            report["excluded"] = {str(k): reason for k, reason in excluded.items()}
        return (EXIT_FAILURE if failed else EXIT_PASS), report

    def _stage_spectrum(self, config: RunConfig, context: Dict) -> Dict:
        spectrum = SpectrumAgent()
        table = spectrum.enumerate_spectrum(1.0, 65.0)
        mismatches = spectrum.matches_reference(table)
        if mismatches:
            raise StageFailure("; ".join(mismatches))
        context["table"] = table
        return {"clusters": len(table.clusters), "last_label": table.last_label}

    def _stage_screening(self, config: RunConfig, context: Dict) -> Dict:
        report = ScreeningAgent(j01=config.j01).screen(context["table"])
        for k, expected in FABER_KRAHN_TABLE.items():
            label = SpectrumAgent().first_label_of(context["table"], k)
            if abs(report.fk_ratios[label] - expected) > 5e-5:
                raise StageFailure(f"Faber-Krahn ratio for lambda={k} (label {label}) is "
                                   f"{report.fk_ratios[label]:.6f}, expected {expected}")
        if report.survivors != EXPECTED_SURVIVORS:
            raise StageFailure(f"survivors {list(report.survivors)}, expected {list(EXPECTED_SURVIVORS)}")
        context["survivors"] = report.survivors
        context["excluded"] = {}
        return {"survivors": list(report.survivors), "weyl_cutoff": report.weyl_cutoff}

    def _stage_sin3x(self, config: RunConfig, context: Dict) -> Dict:
        _, domains = self._nodal(config).resolve_nodal_domains(get_preset("sin3"), config.resolution)
        if domains.count != 2:
            raise StageFailure(f"sin(3x) has {domains.count} nodal domains, expected 2")
        return {"count": domains.count, "non_orientable": len(domains.non_orientable)}

    def family_23_points(self, config: RunConfig) -> List[Tuple[float, float, int]]:
        """(beta, theta, expected count) for the decomposed, boundary-beta and interior [2,3] cases."""
        points = [(math.pi / 6, 0.0, 6), (math.pi / 6, math.pi / 2, 6)]
        for beta in (0.0, math.pi / 3):
            points += [(beta, theta, 4) for theta in (0.2, math.pi / 4, 1.2)]
        euler = self._euler(config)
        for beta, theta in euler.sweep_points(FAMILY_23, config.beta_samples, config.theta_samples,
                                              config.include_bifurcation):
            points.append((beta, theta, 3))
        return points

    def _stage_family_sweep(self, config: RunConfig, context: Dict) -> Dict:
        nodal = self._nodal(config)
        largest = 0
        points = self.family_23_points(config)
        for beta, theta, expected in points:
            spec = family_to_spec(FamilyParams(FAMILY_23, beta, theta))
            _, domains = nodal.resolve_nodal_domains(spec, config.resolution)
            if domains.count != expected:
                raise StageFailure(f"[2,3] at beta={beta:.6f}, theta={theta:.6f}: {domains.count} domains, expected {expected}")
            largest = max(largest, domains.count)
        if largest >= 7:
            raise StageFailure(f"[2,3] eigenfunction with {largest} domains; lambda_7 would be Courant-sharp")
        context["excluded"][7] = f"every eigenfunction of lambda_7 has at most {largest} nodal domains"
        return {"points": len(points), "max_count": largest}

    def _stage_random(self, config: RunConfig, context: Dict) -> Dict:
        rng = np.random.default_rng(config.seed)
        critical = self._critical(config)
        nodal = self._nodal(config)
        resolution = max(config.resolution // 2, 64)
        draws = []
        for _ in range(config.random_samples):
            beta = float(rng.uniform(0.0, math.pi / 3))
            theta = float(rng.uniform(0.0, math.pi / 2))
            params = FamilyParams(FAMILY_23, beta, theta)
            if critical.find_interior_critical_zeros(params):
                raise StageFailure(f"interior critical zero at beta={beta:.6f}, theta={theta:.6f}")
            spec = family_to_spec(params)
            grid = nodal.sample_grid(spec, resolution, resolution)
            if not nodal.no_enclosed_loop_check(spec, grid, beta):
                raise StageFailure(f"enclosed nodal loop at beta={beta:.6f}, theta={theta:.6f}")
            draws.append([round(beta, 12), round(theta, 12)])
        return {"seed": config.seed, "draws": draws}

    def _stage_second(self, config: RunConfig, context: Dict) -> Dict:
        spec = family_to_spec(FamilyParams(FAMILY_12, 0.9, 1.2))
        _, domains = self._nodal(config).resolve_nodal_domains(spec, config.resolution)
        if domains.count != 2:
            raise StageFailure(f"[1,2] eigenfunction has {domains.count} domains, expected 2")
        return {"count": domains.count}

    # subcommands

    def _target(self, config: RunConfig) -> Tuple[EigenfunctionSpec, Optional[FamilyParams]]:
        extra = config.extra
        if extra.get("preset"):
            return get_preset(extra["preset"]), None
        if extra.get("spec"):
            return load_spec(extra["spec"]), None
        if extra.get("family"):
            params = FamilyParams(tuple(extra["family"]), extra.get("beta") or 0.0, extra.get("theta") or 0.0)
            return family_to_spec(params), params
        raise ConfigurationError("one of --family, --spec or --preset is required", ["missing eigenfunction"])

    def _label_of(self, spec: EigenfunctionSpec) -> Optional[int]:
        if spec.eigenvalue != int(spec.eigenvalue):
            return None
        spectrum = SpectrumAgent()
        table = spectrum.enumerate_spectrum(1.0, float(spec.eigenvalue))
        return spectrum.first_label_of(table, spec.eigenvalue)

    def run_subcommand(self, config: RunConfig) -> Tuple[int, Dict]:
        command = config.subcommand
        if command not in SUBCOMMANDS:
            return EXIT_USAGE, {'status': 'error', 'message': f"unknown subcommand {command!r}",
                                'error_type': 'ConfigurationError'}
        try:
            result = self._dispatch(config)
        except ConfigurationError as e:
            return EXIT_USAGE, self._failure(e)
        except MoebiusError as e:
            return EXIT_FAILURE, self._failure(e)
        if result.get('status') == 'error':
            code = EXIT_USAGE if result.get('error_type') == 'ConfigurationError' else EXIT_FAILURE
            return code, result
        return EXIT_PASS, result

    def _dispatch(self, config: RunConfig) -> Dict:
        extra = config.extra
        command = config.subcommand
        if command == "reproduce-theorem":
            code, report = self.run_reproduce_theorem(config)
            if code == EXIT_PASS:
                return {'status': 'success', 'report': report}
            return {'status': 'error', 'report': report, 'message': "reproduction failed",
                    'error_type': StageFailure.__name__}
        if command == "spectrum":
            return SpectrumAgent().run_spectrum(extra.get("a", 1.0), extra.get("lambda_max", 65.0))
        if command == "screen":
            return ScreeningAgent(j01=config.j01).run_screen(extra.get("lambda_max", 65.0))
        if command == "bifurcation":
            family = tuple(extra.get("family") or FAMILY_23)
            if extra.get("beta") is None and not extra.get("sweep"):
                raise ConfigurationError("bifurcation needs --beta or --sweep", ["missing --beta"])
            return BifurcationAgent(config.y_beta_iterations, config.polish_steps).run_bifurcation(
                family, extra.get("beta"), extra.get("sweep"))
        if command == "mesh":
            params = EmbeddingParams(config.R, 1.0, config.u_samples, config.v_samples)
            spec = self._target(config)[0] if extra.get("with_nodal") else None
            return RenderAgent(resolution=config.resolution).run_mesh(params, spec, config.output_path)
        if command == "euler" and extra.get("sweep"):
            family = tuple(extra.get("family") or FAMILY_23)
            return self._euler(config).run_euler(sweep_family=family, beta_samples=config.beta_samples,
                                                 theta_samples=config.theta_samples,
                                                 include_bifurcation=config.include_bifurcation)
        if command == "stern":
            return self._run_stern(config)

        spec, params = self._target(config)
        if command == "nodal":
            result = self._nodal(config).run_nodal(spec, config.resolution, self._label_of(spec))
            return {k: v for k, v in result.items() if k in ('status', 'report', 'message', 'error_type')}
        if command == "critical":
            return self._critical(config).run_critical(params if params is not None else spec)
        if command == "euler":
            return self._euler(config).run_euler(spec=spec, params=params)
        return RenderAgent(resolution=config.resolution).run_render(spec, config.output_path)

    def _run_stern(self, config: RunConfig) -> Dict:
        extra = config.extra
        spec = stern_spec(int(extra.get("r", 2)), float(extra.get("epsilon", 0.01)))
        result = self._euler(config).run_euler(spec=spec)
        if result['status'] != 'success':
            return result
        report = {"r": int(extra.get("r", 2)), "epsilon": float(extra.get("epsilon", 0.01)),
                  "count": result['ledger'].k, "ledger": result['report']}
        if config.output_path:
            rendered = RenderAgent(resolution=config.resolution).run_render(spec, config.output_path)
            if rendered['status'] != 'success':
                return rendered
            report["figure"] = str(rendered['path'])
        return {'status': 'success', 'report': report}
