"""Report assembly for each batch subcommand.

Every ``run_*`` function returns a plain dictionary section with a boolean
``passed`` entry; :func:`make_report` wraps sections with the input echo,
configuration, certification scope and overall verdict.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Optional

import numpy as np

from . import oracle
from .contraction import ContractionSpec, check_inverse, validate
from .errors import IllConditionedError, InvalidInputError
from .io import A_W_CONVENTION, SCHEMA_VERSION, content_hash, encode_matrix, model_to_dict, spec_to_dict
from .koopman import block_triangularity_defect, build, compactness_probe
from .linearizer import (EmbeddingModel, default_degree, export_linear_hopf, linearize,
                         semiconjugacy_residuals, verify_injectivity, verify_semiconjugacy)
from .potential import (PotentialModel, build_automorphic_potential, build_potential_approx,
                        check_psh, pull_back_potential)
from .sampling import annulus_points, sphere_points
from .spectral import detect_resonances, monomial_eigenvalues, root_decomposition, triangularize


@dataclass
class RunConfig:
    degree: Optional[int] = None
    degree_cap: int = 8
    strategy: str = "auto"
    tol_res: float = 1e-8
    tol_cluster: float = 1e-8
    tol_root: float = 1e-9
    tol_indep: float = 1e-10
    prune_threshold: float = 1e-5
    samples: int = 256
    radii: tuple[float, ...] = (0.1, 0.05, 0.025)
    r_K: float = 1.0
    r_U: float = 0.1
    pairs: int = 10_000
    automorphy_samples: int = 4096
    pullback_samples: int = 2048
    oracle_points: int = 100
    seed: int = 0
    verbose: bool = False

    def __post_init__(self):
        if self.degree is not None and int(self.degree) < 1:
            raise InvalidInputError("degree must be >= 1")
        for name in ("tol_res", "tol_cluster", "tol_root", "tol_indep", "prune_threshold"):
            if not float(getattr(self, name)) > 0:
                raise InvalidInputError(f"{name} must be > 0")
        for name in ("samples", "pairs", "automorphy_samples", "pullback_samples", "oracle_points"):
            if int(getattr(self, name)) < 1:
                raise InvalidInputError(f"{name} must be >= 1")
        self.radii = tuple(float(r) for r in self.radii)
        if not self.radii or min(self.radii) <= 0:
            raise InvalidInputError("radii must be positive")
        if not 0 < self.r_U < self.r_K:
            raise InvalidInputError("need 0 < r_U < r_K")
        if self.strategy not in ("auto", "closure", "root-prune"):
            raise InvalidInputError(f"unknown strategy {self.strategy!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        clean = {}
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in names:
                raise InvalidInputError(f"config: unknown key {k!r}")
            clean[key] = v
        if clean.get("degree") == "auto":
            clean["degree"] = None
        return cls(**clean)

    def resolve_degree(self, spec: ContractionSpec) -> int:
        return int(self.degree) if self.degree is not None else default_degree(spec, self.degree_cap)


def _c(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def run_validate(spec: ContractionSpec, cfg: RunConfig) -> dict:
    diag = validate(spec, r_K=cfg.r_K, r_U=cfg.r_U, samples=cfg.samples, seed=cfg.seed)
    inv = check_inverse(spec, seed=cfg.seed)
    return {
        "sigma_max": diag.sigma_max,
        "sigma_min": diag.sigma_min,
        "n_enter": diag.n_enter,
        "verdict": diag.verdict,
        "sampled_sphere_radius": diag.r_K,
        "target_ball_radius": diag.r_U,
        "guard_radius": diag.r_guard,
        "max_steps": diag.n_max,
        "orbit_samples": diag.samples,
        "scope": diag.scope,
        "inverse": {"mode": inv.mode, "jet_residual": inv.jet_residual,
                    "point_residual": inv.point_residual, "tolerance": 1e-10,
                    "message": inv.message, "passed": inv.passed},
        "passed": bool(diag.is_contraction and inv.passed),
    }


def run_operator(spec: ContractionSpec, cfg: RunConfig, dump: bool = True) -> dict:
    d = cfg.resolve_degree(spec)
    T = build(spec, d)
    probe = compactness_probe(T)
    defect = block_triangularity_defect(T)
    out = {
        "degree": d,
        "size": T.size,
        "block_triangularity_defect": defect,
        "block_triangularity_tolerance": 0.0,
        "tail_block_norms": probe.block_norms,
        "decay_rate": probe.rate,
        "decay_fit_residual": probe.fit_residual,
        "passed": bool(defect == 0.0),
    }
    if dump:
        out["monomials"] = [list(e) for e in T.basis.exponents]
        out["matrix"] = encode_matrix(T.matrix)
    return out


def run_spectrum(spec: ContractionSpec, cfg: RunConfig) -> dict:
    d = cfg.resolve_degree(spec)
    T = build(spec, d)
    mono = monomial_eigenvalues(spec.linear_part, d)
    tri = triangularize(T)
    diag = np.diag(tri.Tt)
    ident = float(max(abs(diag[k] - v) for k, (_, v) in enumerate(mono)))
    res = detect_resonances(spec.linear_part, d, cfg.tol_res)
    out: dict[str, Any] = {
        "degree": d,
        "monomial_eigenvalues": [{"exponents": list(e), "value": _c(v)} for e, v in mono],
        "spectrum_identity_defect": ident,
        "spectrum_identity_tolerance": 1e-8,
        "resonances": [{"source": list(r.source), "target": list(r.target),
                        "relative_defect": r.relative_defect, "class": r.classification,
                        "within_tol_res": r.within_tol} for r in res],
        "tol_res": cfg.tol_res,
    }
    try:
        dec = root_decomposition(T, cfg.tol_cluster, cfg.tol_root, cfg.tol_indep)
        out["root_spaces"] = {
            "tol_cluster": cfg.tol_cluster,
            "invariance_residual": dec.invariance_residual,
            "clusters": [{"value": _c(c.value), "multiplicity": c.multiplicity,
                          "exponents": [list(e) for e in c.exponents],
                          "jordan_chain_lengths": sorted(
                              (ch.shape[1] for ch in c.jordan_chains(cfg.tol_root)), reverse=True),
                          "min_singular_value": c.min_singular} for c in dec.clusters],
        }
    except IllConditionedError as exc:
        out["root_spaces"] = {"error": str(exc)}
    out["passed"] = bool(ident <= 1e-8)
    return out


def run_linearize(spec: ContractionSpec, cfg: RunConfig) -> tuple[dict, EmbeddingModel]:
    d = cfg.resolve_degree(spec)
    kw = {}
    if cfg.strategy in ("auto", "root-prune"):
        kw = {"prune_threshold": cfg.prune_threshold, "tol_cluster": cfg.tol_cluster}
    model = linearize(spec, cfg.strategy, d, **kw)
    eig = np.linalg.eigvals(model.A_W)
    smin = float(np.linalg.svd(model.linear_block(), compute_uv=False).min())
    jet_tol = 1e-10 * max(1.0, float(np.linalg.norm(model.B)))
    section = {
        "strategy": model.strategy,
        "degree": model.d,
        "N": model.N,
        "A_W_eigenvalues": [_c(v) for v in eig],
        "linear_part_min_singular_value": smin,
        "linear_part_tolerance": 1e-10,
        "jet_residual": model.jet_residual,
        "jet_residual_tolerance": jet_tol,
        "passed": bool(smin > 1e-10 and np.abs(eig).max() < 1.0 and model.jet_residual <= jet_tol),
    }
    return section, model


def run_verify(model: EmbeddingModel, spec: ContractionSpec, cfg: RunConfig) -> dict:
    if model.n != spec.n:
        raise InvalidInputError(f"model has n={model.n} but the contraction has n={spec.n}")
    semi = verify_semiconjugacy(model, spec, cfg.radii, cfg.samples, cfg.seed)
    inj = verify_injectivity(model, spec, (cfg.r_U, cfg.r_K), cfg.pairs, cfg.seed)
    eig = np.linalg.eigvals(model.A_W)
    inside = bool(np.abs(eig).max() < 1.0)
    return {
        "semiconjugacy": asdict(semi),
        "injectivity": asdict(inj),
        "A_W_eigenvalues": [_c(v) for v in eig],
        "spectrum_inside_unit_disk": inside,
        "passed": bool(semi.passed and inj.passed and inside),
    }


def _potential_params(pot) -> dict:
    if isinstance(pot, PotentialModel):
        return {"kind": "diagonal", "c": pot.c, "beta": pot.beta,
                "S": encode_matrix(pot.S), "eigenvalues": [_c(v) for v in pot.eigenvalues]}
    return {"kind": "flow", "c": pot.c, "q": pot.q, "q_min": pot.q_min,
            "log_B": encode_matrix(pot.L), "lyapunov_metric": encode_matrix(pot.H)}


def run_potential(model: EmbeddingModel, spec: ContractionSpec, cfg: RunConfig) -> dict:
    lin = export_linear_hopf(model)
    pot = build_automorphic_potential(lin, seed=cfg.seed)
    w = sphere_points(lin.N, cfg.automorphy_samples, 1.0, cfg.seed)
    phi = np.asarray(pot(w))
    auto = float(np.max(np.abs(pot(w @ lin.B.T) - pot.c * phi) / (pot.c * phi)))
    deck = float(np.max(np.abs(pot(w @ np.linalg.inv(lin.B).T) - phi / pot.c) / (phi / pot.c)))
    psh = check_psh(pot, cfg.samples, seed=cfg.seed)
    # truncated models are only accurate near the origin; shrink the annulus there
    semi = verify_semiconjugacy(model, spec, cfg.radii, cfg.samples, cfg.seed)
    exact = max(semi.residuals) <= semi.tolerance
    annulus = (cfg.r_U, cfg.r_K) if exact else (0.5 * max(cfg.radii), max(cfg.radii))
    pull = pull_back_potential(pot, model, spec, annulus, cfg.pullback_samples, cfg.seed,
                               exact=bool(exact))
    out = {
        "linear_model": {"N": lin.N, "eigenvalues": [_c(v) for v in lin.eigenvalues],
                         "diagonalizable": lin.diagonalizable,
                         "eigenvector_condition": lin.condition,
                         "deck_convention": lin.deck_convention},
        "potential": _potential_params(pot),
        "automorphy": {"max_relative_defect": auto, "inverse_deck_defect": deck,
                       "samples": cfg.automorphy_samples, "tolerance": 1e-11,
                       "passed": bool(auto <= 1e-11 and deck <= 1e-9)},
        "psh": asdict(psh),
        "pullback": {**asdict(pull), "annulus": annulus},
    }
    if not lin.diagonalizable:
        _, rep = build_potential_approx(lin, seed=cfg.seed)
        out["epsilon_perturbation"] = asdict(rep)
    out["passed"] = bool(out["automorphy"]["passed"] and psh.passed and pull.passed)
    return out


def oracle_points(spec: ContractionSpec, cfg: RunConfig) -> np.ndarray:
    return annulus_points(spec.n, cfg.oracle_points, cfg.r_U, cfg.r_K, cfg.seed + 101)


def run_oracle(model: EmbeddingModel, spec: ContractionSpec, cfg: RunConfig,
               points: Optional[np.ndarray] = None, factor: float = 2.0,
               floor_rtol: float = 1e-13) -> dict:
    """Compare the verifier's residuals with the brute-force ones point by point.

    Two residuals agree when their ratio is within ``factor``, or when both
    sit below the round-off floor ``floor_rtol * max(1, |Psi|)``.
    """
    pts = oracle_points(spec, cfg) if points is None else np.atleast_2d(points)
    sd, md = spec_to_dict(spec), model_to_dict(model)
    main = semiconjugacy_residuals(model, spec, pts)
    brute = np.array(oracle.residual_table(sd, md, [list(p) for p in pts]))
    scale = max(1.0, float(np.abs(model.psi(pts)).max()))
    floor = floor_rtol * scale
    hi, lo = np.maximum(main, brute), np.minimum(main, brute)
    agree = (hi <= floor) | (hi <= factor * lo)
    return {
        "points": len(pts),
        "verifier_residuals": main,
        "oracle_residuals": brute,
        "max_verifier_residual": float(main.max()),
        "max_oracle_residual": float(brute.max()),
        "agreement_factor": factor,
        "roundoff_floor": floor,
        "disagreements": int(np.sum(~agree)),
        "passed": bool(agree.all()),
    }


def scope_block(cfg: RunConfig) -> dict:
    return {
        "contraction": f"orbits sampled from the sphere |z| = {cfg.r_K:g}; global injectivity "
                       "and proper discontinuity assumed, not proven",
        "semiconjugacy": f"sampled spheres |z| = {list(cfg.radii)}, full polynomial map, "
                         "exact modulo degree > d",
        "injectivity": f"{cfg.pairs} sampled pairs in the annulus {cfg.r_U:g} <= |z| <= {cfg.r_K:g}; "
                       "a sampling witness, not a proof",
        "potential": "automorphy sampled on the unit sphere; plurisubharmonicity by finite "
                     "differences at sampled points",
        "A_W_convention": A_W_CONVENTION,
    }


def make_report(command: str, spec: ContractionSpec, cfg: RunConfig, sections: dict,
                model_dict: Optional[dict] = None) -> dict:
    sd = spec_to_dict(spec)
    report: dict[str, Any] = {
        "tool": {"name": "hopflin", "schema_version": SCHEMA_VERSION},
        "command": command,
        "input": {"contraction": sd, "sha256": content_hash(sd)},
        "config": asdict(cfg),
        "scope_of_certification": scope_block(cfg),
        "sections": sections,
        "verdict": {"sections": {k: bool(v.get("passed", True)) for k, v in sections.items()}},
    }
    report["verdict"]["passed"] = all(report["verdict"]["sections"].values())
    if model_dict is not None:
        report["model"] = model_dict
        report["input"]["model_sha256"] = content_hash(model_dict)
    return report


def run_pipeline(spec: ContractionSpec, cfg: Optional[RunConfig] = None) -> tuple[dict, EmbeddingModel]:
    """Validate, analyse, linearize, verify, build the potential and cross-check."""
    cfg = cfg or RunConfig()
    sections = {"validate": run_validate(spec, cfg),
                "operator": run_operator(spec, cfg, dump=False),
                "spectrum": run_spectrum(spec, cfg)}
    lin, model = run_linearize(spec, cfg)
    sections["linearize"] = lin
    sections["verify"] = run_verify(model, spec, cfg)
    sections["potential"] = run_potential(model, spec, cfg)
    sections["oracle"] = run_oracle(model, spec, cfg)
    return make_report("pipeline", spec, cfg, sections, model_to_dict(model)), model
