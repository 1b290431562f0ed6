import logging
import math
import os
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from models import (ConeField, ConvergenceReport, ExperimentConfig, HyperbolicBranch, MapSystem, Point,
                    PreconditionError, Rectangle, ReferenceMeasure, TestFunctionFamily,
                    VariableTimeHorseshoe, fourier_family)
from utils import branches as branch_ops
from utils import catalog, horseshoe, measures, pesin, report, serialization

SUMMARY_FILE = "summary.json"
LOG_FILE = "varhorse.log"


class ExperimentRunner:
    """
    Drives the pipeline for one experiment config: rectangles, branch sets,
    horseshoes, refinements and measure sweeps, and writes every artifact.
    The console handler is installed once per process; the log file follows
    the latest output directory.
    """
    _lock = threading.Lock()
    _file_handler: Optional[logging.FileHandler] = None

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.out)
        self.logger = self._configure_logging(self.out)
        self.system = catalog.build_map(config.map_name, config.map_parameters)
        self.family = self._family()
        self._reference: Optional[ReferenceMeasure] = None

    @classmethod
    def _configure_logging(cls, out: Path) -> logging.Logger:
        with cls._lock:
            out.mkdir(parents=True, exist_ok=True)
            log_file = os.path.abspath(out / LOG_FILE)
            log_format = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
            for name in ("ExperimentRunner", "utils"):
                logger = logging.getLogger(name)
                logger.setLevel(logging.DEBUG)
                # Only add the console handler once
                if not any(type(h) is logging.StreamHandler for h in logger.handlers):
                    console_handler = logging.StreamHandler()
                    console_handler.setLevel(logging.INFO)
                    console_handler.setFormatter(log_format)
                    logger.addHandler(console_handler)
            # One log file at a time: the latest output directory
            previous = cls._file_handler
            if previous is None or previous.baseFilename != log_file:
                file_handler = logging.FileHandler(log_file, mode='a', encoding='utf-8')
                file_handler.setFormatter(log_format)
                for name in ("ExperimentRunner", "utils"):
                    if previous is not None:
                        logging.getLogger(name).removeHandler(previous)
                    logging.getLogger(name).addHandler(file_handler)
                if previous is not None:
                    previous.close()
                cls._file_handler = file_handler
            return logging.getLogger("ExperimentRunner")

    # --- inputs ---------------------------------------------------------------

    def _family(self) -> TestFunctionFamily:
        settings = self.config.family
        if "modes" in settings:
            return fourier_family(modes=settings["modes"])
        return fourier_family(int(settings.get("k_max", 1)))

    @property
    def reference(self) -> ReferenceMeasure:
        """Reference integrals; long-orbit estimates are reused from ``reference.path`` when present."""
        if self._reference is None:
            settings = self.config.reference
            path = settings.get("path")
            if settings.get("provenance") == "long-orbit" and path and Path(path).exists():
                self._reference = serialization.load_reference(path)
                self.logger.info(f"Loaded reference measure from {path}")
            else:
                self._reference = catalog.build_reference(self.system, self.family, settings)
                if settings.get("provenance") == "long-orbit":
                    target = path or str(self.out / "reference.json")
                    serialization.save_reference(target, self._reference)
                    self.logger.info(f"Saved long-orbit reference to {target}")
            self._reference.check_family(self.family.count)
        return self._reference

    def _stage_rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, index])

    # --- stage construction ---------------------------------------------------

    def rectangle_for(self, system: MapSystem, rho: float, s: int, index: int = 1) -> Rectangle:
        """The fixture shrinks its rectangle with the stage; other maps scale the chart with delta."""
        if system.name == "affine_fixture":
            return catalog.fixture_rectangle(system, index)
        params = self.config.rectangle
        center = params.get("center") or (0.0, 0.0)
        cert = pesin.pesin_certificate(system, Point.of(center, system.space), int(params["horizon"]),
                                       float(params["chi"]))
        if not cert.in_pesin_set(float(params["ell0"])):
            raise PreconditionError(f"rectangle center has ell = {cert.ell:.3f} above ell0 = {params['ell0']}")
        h = float(params["h"])
        delta = branch_ops.delta_modulus(self.family, rho, s)
        chart_radius = min(pesin.CHART_RADIUS, delta / (2.2 * h))
        return pesin.build_rectangle(cert, h, system.space, chart_radius)

    def seeds_for(self, system: MapSystem, rect: Rectangle, index: int) -> List[Point]:
        budgets = self.config.budgets
        if system.name == "affine_fixture":
            marked = [p for p in catalog.fixture_seeds(system) if rect.in_core(rect.to_chart(p.array))]
            periodic = catalog.fixture_periodic_seeds(system, rect, budgets["seed_word_length"])
            return marked + [p for p in periodic if p not in marked]
        return branch_ops.seed_points(system, rect, self._stage_rng(index), budgets["seeds"], budgets["m_max"])

    def branch_set(self, system: MapSystem, rect: Rectangle, rho: float, s: int,
                   index: int = 1) -> List[HyperbolicBranch]:
        params = self.config.rectangle
        landing = None
        if not system.piecewise_affine:
            landing = {"horizon": params["horizon"], "chi": params["chi"], "ell0": params["ell0"]}
        return branch_ops.build_branch_set(
            system, rect, ConeField(rect, float(params["gamma"])), self.family, self.reference, rho, s,
            2, self.config.budgets, self.seeds_for(system, rect, index), self.config.threads, landing,
            int(params.get("samples", 33)))

    def build_horseshoe(self, rho: float, s: int, index: int = 1) -> VariableTimeHorseshoe:
        system = self.system
        rect = self.rectangle_for(system, rho, s, index)
        branches = self.branch_set(system, rect, rho, s, index)
        return horseshoe.build(system, branches, rect)

    def _build_stage(self, index: int, rho: float, s: int):
        self.logger.info(f"Stage {index}: building horseshoe at rho={rho}, s={s}")
        hs = self.build_horseshoe(rho, s, index)
        serialization.write_branches(self.out / f"branches_stage{index}.json", hs.branches,
                                     self._branch_parameters(hs, rho, s))
        depth = horseshoe.effective_depth(hs, self.config.budgets["refine_depth"])
        refinement = horseshoe.refine(hs, depth, self.config.budgets["refine_cap"], self.config.threads)
        serialization.write_refinement_csv(self.out / f"refinement_stage{index}.csv", refinement)
        return hs, refinement

    def _branch_parameters(self, hs: VariableTimeHorseshoe, rho: float, s: int) -> Dict[str, Any]:
        return {
            "rho": rho,
            "s": s,
            "delta": branch_ops.delta_modulus(self.family, rho, s),
            "gamma": float(self.config.rectangle["gamma"]),
            "map": hs.system.describe(),
            "contraction": hs.contraction,
        }

    # --- commands -------------------------------------------------------------

    def run(self) -> Tuple[int, ConvergenceReport]:
        """Full convergence experiment; exit status 0 iff every stage passed."""
        self.logger.info(f"Running '{self.config.map_name}' over {len(self.config.schedule)} stages "
                         f"(seed {self.config.seed}, threads {self.config.threads})")
        result = measures.convergence_experiment(self.reference, self.family, self.config.schedule,
                                                 self.config.budgets, self._build_stage, self.config.threads)
        for stage in result.stages:
            serialization.write_measures_csv(self.out / f"measures_stage{stage.index}.csv", stage.measures)
        serialization.write_json(self.out / SUMMARY_FILE, self.summary(result))
        status = 0 if result.passed else 1
        if status:
            self.logger.warning("Some stages failed; see the summary")
        return status, result

    def summary(self, result: ConvergenceReport) -> Dict[str, Any]:
        distances = [d for d in result.distances if not math.isnan(d)]
        return {
            "config": self.config.to_dict(),
            "map": self.system.describe(),
            "reference": self.reference.to_dict(),
            "seed": self.config.seed,
            "threads": self.config.threads,
            "horizon_policy": "L = max(T(rho, s), 10 P)",
            "stages": result.table(),
            "passed": result.passed,
            "d_n_decreasing": all(a > b for a, b in zip(distances, distances[1:])),
        }

    def certify_branch(self, rho: float, s: int, z: Optional[Sequence[float]] = None,
                       m: Optional[int] = None, index: int = 1) -> HyperbolicBranch:
        """Certify one branch: at (z, m) when given, else the first certifiable seed return."""
        system = self.system
        rect = self.rectangle_for(system, rho, s, index)
        cones = ConeField(rect, float(self.config.rectangle["gamma"]))
        if z is not None:
            point = Point.of(z, system.space)
            times = [m] if m is not None else [t for _, t in branch_ops.detect_returns(
                system, rect, [point], self.config.budgets["n_min"], self.config.budgets["m_max"])]
            candidates = [(point, t) for t in times]
        else:
            seeds = [p for p in self.seeds_for(system, rect, index) if rect.in_core(rect.to_chart(p.array))]
            candidates = branch_ops.detect_returns(system, rect, seeds, self.config.budgets["n_min"],
                                                   self.config.budgets["m_max"], self.config.threads)
        last_error: Optional[Exception] = None
        for point, t in candidates:
            try:
                branch = branch_ops.certify_branch(system, rect, cones, point, t, self.family, self.reference,
                                                   rho, s, int(self.config.rectangle.get("samples", 33)))
            except PreconditionError:
                raise
            except Exception as e:
                last_error = e
                self.logger.debug(f"Candidate {point.coordinates} m={t}: {e}")
                continue
            serialization.write_branches(self.out / "branch.json", [branch],
                                         {"rho": rho, "s": s, "map": system.describe()})
            return branch
        if last_error is not None:
            raise last_error
        raise PreconditionError("no seed returns to the rectangle core")

    def refine(self, depth: int, rho: float, s: int, index: int = 1):
        if depth < 1:
            raise PreconditionError("refinement depth must be >= 1")
        hs = self.build_horseshoe(rho, s, index)
        refinement = horseshoe.refine(hs, depth, self.config.budgets["refine_cap"], self.config.threads)
        serialization.write_refinement_csv(self.out / "refinement.csv", refinement)
        return refinement

    def measure_sweep(self, max_word_len: int, rho: float, s: int, index: int = 1):
        if max_word_len < 1:
            raise PreconditionError("max word length must be >= 1")
        hs = self.build_horseshoe(rho, s, index)
        results = measures.measure_sweep(hs, self.family, self.reference, rho, s, max_word_len,
                                         self.config.threads)
        rows = measures.sweep_rows(results)
        serialization.write_measures_csv(self.out / "measures.csv", rows)
        return rows

    @staticmethod
    def report(directory: str, first: int = 1, last: int = 10 ** 9) -> pd.DataFrame:
        return report.report_table(directory, first, last)

    @staticmethod
    def worst_measures(directory: str, top_n: int = 25) -> pd.DataFrame:
        return report.worst_measures(directory, top_n)


def threads_from_env(default: int = 1) -> int:
    """VARHORSE_THREADS, when set, supplies the worker count."""
    value = os.getenv("VARHORSE_THREADS")
    if value is None or value == "":
        return default
    try:
        threads = int(value)
    except ValueError:
        raise PreconditionError(f"VARHORSE_THREADS must be an integer, got '{value}'")
    if threads < 1:
        raise PreconditionError("VARHORSE_THREADS must be >= 1")
    return threads
