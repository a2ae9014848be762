"""Command-line front end: JSON job in, JSON report out.

Exit codes: 0 every verdict passed, 2 some verdict failed, 3 invalid input,
4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import numpy as np

from . import __version__
from . import corpus as corpus_mod
from .contraction import OperatorTuple, commutator_residuals, defect_operator, pureness_residuals, spectral_safety
from .dilation import (build_WT, canonical_dilation, minimal_support, span_angles,
                       transfer_identity_residual, wandering_checks, wandering_subspace)
from .errors import ConvergenceError, InputError, KContractError, NotRowContraction
from .realization import (TransferFunction, build_W_from_quadruple, check_conditions, da_multiplier_check,
                          isometry_identity_residual, jc_identity_residual, pointwise_check, sample_ball,
                          verify_kinner)
from .series import builtin_kernel, essential_normality_diagnostic, nevanlinna_sign_check

COMMANDS = ("check_kernel", "analyze_tuple", "dilate", "wandering", "realize", "corpus")

DEFAULT_TOLERANCES = {
    "series_tol": 1e-14,
    "reciprocal_tol": 1e-12,
    "iso_tol": 1e-8,
    "iso_abort_tol": 1e-6,
    "pure_tol": 1e-8,
    "exact_tol": 1e-10,
    "check_tol": 1e-8,
    "mem_tol": 1e-8,
    "angle_tol": 1e-6,
    "psd_tol": 1e-8,
    "coeff_tol": 1e-10,
}
# truncation allowance: kappa times the pureness residual at the truncation degree
KAPPA = 10.0
SHIFT_BAND = 3
POINT_RADIUS = 0.5
POINT_COUNT = 20
# keeps |<z_i, z_j>| <= 0.64 so the kernel series converges well inside the horizon
MULTIPLIER_RADIUS = 0.8

_NUM = {"type": "number"}
_COMPLEX = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}

JOB_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["commands"],
    "properties": {
        "kernel": {
            "type": "object",
            "additionalProperties": False,
            "required": ["family"],
            "properties": {
                "family": {"enum": ["drury_arveson", "da", "power", "dirichlet", "explicit"]},
                "nu": {"type": ["number", "string"]},
                "a": {"type": "array", "items": {"type": ["number", "string"]}, "minItems": 2},
                "max_degree": {"type": "integer", "minimum": 1},
            },
        },
        "tuple": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "inline": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["matrices"],
                    "properties": {
                        "matrices": {"type": "array", "minItems": 1,
                                     "items": {"type": "array", "items": {"type": "array", "items": _COMPLEX}}},
                        "comm_tol": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                "corpus": {"enum": sorted(corpus_mod.TUPLES)},
                "random": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["class"],
                    "properties": {
                        "class": {"enum": sorted(corpus_mod.RANDOM_CLASSES)},
                        "seed": {"type": "integer"},
                        "size": {"type": "integer", "minimum": 1},
                        "scale": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                        "d": {"type": "integer", "minimum": 1},
                    },
                },
            },
        },
        "N": {"type": "integer", "minimum": 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
        "commands": {"type": "array", "items": {"enum": list(COMMANDS)}, "minItems": 1},
        "seed": {"type": "integer"},
        "multiplier_check": {"type": "boolean"},
        "multiplier_strict": {"type": "boolean"},
        "multiplier_points": {"type": "integer", "minimum": 1},
        "multiplier_sets": {"type": "integer", "minimum": 1},
        "corpus": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kernels": {"type": "array", "items": {"enum": sorted(corpus_mod.KERNELS)}},
                "tuples": {"type": "array", "items": {"enum": sorted(corpus_mod.TUPLES)}},
                "entries": {"type": "array", "items": {"type": "string"}},
                "failure_fixture": {"type": "boolean"},
            },
        },
        "perturbation": {
            "type": "object",
            "additionalProperties": False,
            "required": ["target", "amount"],
            "properties": {
                "target": {"enum": ["B", "C", "D"]},
                "row": {"type": "integer", "minimum": 0},
                "col": {"type": "integer", "minimum": 0},
                "amount": {"type": "number"},
            },
        },
    },
}


# ---------------------------------------------------------------------------
# report helpers

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


class Checks:
    """Residuals paired with their tolerance and truncation allowance."""

    def __init__(self, tail: float = 0.0):
        self.tail = tail
        self.items = {}

    def add(self, name: str, value: float, tol: float, allowance: float = 0.0, upper: bool = True,
            note: str | None = None):
        value = float(value)
        ok = value <= tol + allowance if upper else value >= -(tol + allowance)
        entry = {"value": value, "tolerance": tol, "allowance": allowance, "pass": bool(ok)}
        if note:
            entry["note"] = note
        self.items[name] = entry

    def flag(self, name: str, ok: bool, **info):
        self.items[name] = {"pass": bool(ok), **info}

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.items.values())

    def to_json(self) -> dict:
        return {"checks": self.items, "pass": self.passed}


def _error_section(exc: Exception) -> dict:
    return {"pass": False, "error": type(exc).__name__, "message": str(exc),
            "exit_code": getattr(exc, "exit_code", 2)}


# ---------------------------------------------------------------------------
# job interpretation

class Job:
    def __init__(self, raw: dict, tol_scale: float = 1.0, horizon: int | None = None):
        jsonschema.validate(raw, JOB_SCHEMA)
        self.raw = raw
        self.tol = {k: v * tol_scale for k, v in {**DEFAULT_TOLERANCES, **raw.get("tolerances", {})}.items()}
        self.tol_scale = tol_scale
        seed_env = os.environ.get("KCONTRACT_SEED")
        self.seed = int(seed_env) if seed_env not in (None, "") else int(raw.get("seed", 0))
        self.horizon_override = horizon
        self._tuple = None
        self._tuple_N = None

    @property
    def commands(self) -> list:
        return list(self.raw["commands"])

    def tuple(self) -> OperatorTuple:
        if self._tuple is None:
            src = self.raw.get("tuple")
            if src is None:
                raise InputError("this command needs a 'tuple' section")
            if "inline" in src:
                mats = [[[complex(*v) if isinstance(v, list) else complex(v) for v in row] for row in m]
                        for m in src["inline"]["matrices"]]
                self._tuple = OperatorTuple(np.array(mats, dtype=complex), src["inline"].get("comm_tol", 1e-10))
            elif "corpus" in src:
                self._tuple, self._tuple_N = corpus_mod.corpus_tuple(src["corpus"])
            else:
                spec = dict(src["random"])
                cls = spec.pop("class")
                seed = self.seed if "KCONTRACT_SEED" in os.environ else spec.pop("seed", self.seed)
                spec.pop("seed", None)
                if cls != "diagonalizable":
                    spec.pop("d", None)
                self._tuple = corpus_mod.random_tuple(cls, seed, **spec)
        return self._tuple

    @property
    def N(self) -> int:
        if self.horizon_override is not None:
            return self.horizon_override
        if "N" in self.raw:
            return int(self.raw["N"])
        self.tuple()
        if self._tuple_N is not None:
            return self._tuple_N
        raise InputError("truncation degree N is required")

    def kernel(self, series_horizon: bool = True):
        ks = self.raw.get("kernel")
        if ks is None:
            raise InputError("this command needs a 'kernel' section")
        if "max_degree" in ks:
            deg = ks["max_degree"]
        elif series_horizon:
            deg = max(corpus_mod.KERNEL_HORIZON, self.N + 5)
        else:
            deg = self.N if ("N" in self.raw or self.horizon_override) else corpus_mod.KERNEL_HORIZON
        return builtin_kernel(ks["family"], deg, nu=ks.get("nu"), a=ks.get("a"))


# ---------------------------------------------------------------------------
# commands

def cmd_check_kernel(job: Job) -> dict:
    k = job.kernel(series_horizon=False)
    delta = [k.a[0] * k.c[0] - 1] + [sum(k.a[j] * k.c[n - j] for j in range(n + 1)) for n in range(1, k.max_degree + 1)]
    resid = max(abs(float(v)) for v in delta)
    checks = Checks()
    if k.exact:
        checks.flag("reciprocal_identity", all(v == 0 for v in delta), mode="exact", max_residual=resid)
    else:
        scale = max(float(np.max(np.abs(k.a_float))) * float(np.max(np.abs(k.c_float))), 1.0)
        checks.add("reciprocal_identity", resid / scale, job.tol["reciprocal_tol"])
    checks.flag("ratios_finite_positive", 0 < k.ratio_inf <= k.ratio_sup < np.inf,
                ratio_inf=k.ratio_inf, ratio_sup=k.ratio_sup)
    ess = essential_normality_diagnostic(k) if k.max_degree >= 2 else np.zeros(0)
    return {
        "kernel": k.to_json(),
        "c": [str(v) if k.exact else float(v) for v in k.c],
        "r_estimate": k.r_estimate,
        "horizon": k.max_degree,
        "horizon_limited": True,
        "sign_check": nevanlinna_sign_check(k).to_json(),
        "essential_normality": {"values": ess, "last": float(ess[-1]) if ess.size else None,
                                "horizon": k.max_degree},
        **checks.to_json(),
    }


def cmd_analyze_tuple(job: Job) -> dict:
    T = job.tuple()
    k = job.kernel()
    comm = commutator_residuals(T.T)
    safety = spectral_safety(T, k, samples=64)
    checks = Checks()
    checks.add("commutativity", comm.max(initial=0.0), T.comm_tol)
    defect = defect_operator(T, k, series_tol=job.tol["series_tol"])
    pure = pureness_residuals(T, k, defect)
    checks.flag("k_contraction", defect.is_contraction, min_eig=defect.min_eig, pos_tol=defect.pos_tol)
    checks.flag("pure", pure.is_pure(job.tol["pure_tol"]), final_residual=float(pure.residuals[-1]),
                tolerance=job.tol["pure_tol"], horizon=pure.horizon)
    return {
        "tuple": T.to_json(),
        "commutator_residuals": comm,
        "spectral_safety": safety.to_json(),
        "defect": defect.to_json(),
        "pureness": {**pure.to_json(job.tol["pure_tol"]), "residual_head": pure.residuals[:12]},
        **checks.to_json(),
    }


def _pack(job: Job, T=None, kernel=None, N=None):
    T = job.tuple() if T is None else T
    k = job.kernel() if kernel is None else kernel
    N = job.N if N is None else N
    return canonical_dilation(T, k, N, series_tol=job.tol["series_tol"], iso_tol=job.tol["iso_abort_tol"],
                              mem_tol=job.tol["mem_tol"], pure_tol=job.tol["pure_tol"])


def dilation_checks(pack, tol: dict, seed: int) -> dict:
    tau = pack.truncation_tail
    allow = KAPPA * tau
    dg = pack.diagnostics
    c = Checks(tau)
    c.add("isometry", dg["isometry_residual"], tol["iso_tol"], allow)
    c.add("intertwining_band", max(dg["intertwining_residuals_band"], default=0.0), tol["exact_tol"])
    theory = max(dg["intertwining_theoretical"], default=0.0)
    c.add("intertwining_full", max(dg["intertwining_residuals"], default=0.0), tol["iso_tol"],
          max(theory * (1 + 1e-6), allow), note="top-degree loss; theoretical value in intertwining_theoretical")
    if "isometry_residual_N_plus_2" in dg:
        c.add("isometry_nonincreasing", dg["isometry_residual_N_plus_2"] - dg["isometry_residual"], 1e-13)
        c.add("intertwining_nonincreasing",
              max(dg["intertwining_residuals_N_plus_2"], default=0.0) - max(dg["intertwining_residuals"], default=0.0),
              1e-13)
    c.flag("deltaT_lower_bound", dg["deltaT_bound_ok"], min_eig=dg["deltaT_min_eig"], bound=dg["deltaT_lower_bound"])
    c.add("deltaT_series_vs_dilation", dg["deltaT_J_discrepancy"], tol["check_tol"], allow)
    c.add("ttilde_contraction", dg["ttilde_min_gap"], tol["exact_tol"], upper=False)
    c.add("ttilde_projection_identity", dg["ttilde_projection_residual"], tol["check_tol"], allow)
    c.add("julia_unitarity", dg["julia_unitarity_residual"], tol["exact_tol"])
    c.add("defect_star_equals_C", dg["defect_star_residual"], tol["exact_tol"])
    c.add("ttilde_defect_intertwining", dg["ttilde_intertwining_residual"], tol["exact_tol"])
    rng = np.random.default_rng(seed)
    pts = sample_ball(pack.T.d, 8, POINT_RADIUS, rng)
    c.add("transfer_identity", transfer_identity_residual(pack, pts, rng), tol["check_tol"], allow)
    support = minimal_support(pack.J, pack.space)
    c.flag("minimal", support.shape[1] == pack.space.coeff_dim, support_dim=support.shape[1],
           defect_dim=pack.space.coeff_dim)
    # re-factor the defect with the Hermitian square root
    C_alt = pack.defect.basis @ pack.C
    c.add("jc_identity", jc_identity_residual(pack.T, pack.C, C_alt, pack.kernel, pack.N), tol["exact_tol"])
    return {"report": pack.report(), **c.to_json()}


def cmd_dilate(job: Job) -> dict:
    return dilation_checks(_pack(job), job.tol, job.seed)


def wandering_section(pack, tol: dict) -> dict:
    tau = pack.truncation_tail
    allow = KAPPA * tau
    wand = wandering_subspace(pack)
    wt = build_WT(pack)
    c = Checks(tau)
    c.flag("dimension_matches", wand.dim == wt.W.source_dim, wandering_dim=wand.dim, tildeD_dim=wt.W.source_dim)
    chk = wandering_checks(pack, wand)
    c.add("decomposition", chk["decomposition_residual"], tol["check_tol"], allow)
    c.add("kernel_equation", chk["kernel_equation_residual"], tol["check_tol"], allow)
    c.add("norm_identity", chk["norm_identity_relative_error"], tol["check_tol"], allow)
    ang = span_angles(wt.W, wand, pack.space)
    c.add("span_angles", ang.max(initial=0.0), tol["angle_tol"], float(np.sqrt(allow)))
    gram = pack.space.gram_matrix(wt.W.columns(pack.space))
    c.add("WT_isometric", float(np.linalg.norm(gram - np.eye(gram.shape[0]), 2)) if gram.size else 0.0,
          tol["check_tol"], allow)
    return {"wandering_dim": wand.dim, "invariant_dim": wand.invariant_dim, "WT": wt.W.to_json(), **c.to_json()}, wt


def cmd_wandering(job: Job) -> dict:
    section, _ = wandering_section(_pack(job), job.tol)
    return section


def _perturb(q, spec: dict):
    M = getattr(q, spec["target"]).copy()
    i, j = spec.get("row", 0), spec.get("col", 0)
    if i >= M.shape[0] or j >= M.shape[1]:
        raise InputError(f"perturbation index ({i}, {j}) outside {spec['target']} of shape {M.shape}")
    M[i, j] += spec["amount"]
    return q.replace(**{spec["target"]: M})


def realize_section(pack, tol: dict, seed: int, perturbation: dict | None = None,
                    multiplier: dict | None = None) -> dict:
    tau = pack.truncation_tail
    allow = KAPPA * tau
    wt = build_WT(pack)
    q = wt.quadruple if perturbation is None else _perturb(wt.quadruple, perturbation)
    c = Checks(tau)
    cond = check_conditions(q, pack.kernel, pack.N, defect_op=pack.defect.defect_op,
                            tol=tol["check_tol"], mem_tol=tol["mem_tol"])
    for key in ("K1", "K2", "K3", "K4"):
        c.add(key, cond["residuals"][key], cond["tolerances"][key])
    W2 = build_W_from_quadruple(q, pack.kernel, pack.N)
    c.add("round_trip_coefficients", float(np.max(np.abs(W2.coeffs - wt.W.coeffs), initial=0.0)), tol["coeff_tol"])
    rng = np.random.default_rng(seed)
    pts = sample_ball(pack.T.d, POINT_COUNT, POINT_RADIUS, rng)
    c.add("pointwise_transfer", pointwise_check(q, W2, pack.kernel, pts), tol["check_tol"], allow)
    kin = verify_kinner(wt.W, pack.kernel, pack.N + SHIFT_BAND, tol=tol["check_tol"])
    c.add("kinner_isometry", kin["isometry_residual"], tol["check_tol"], allow)
    # a shift by z^alpha pairs the missing tail with coefficients |alpha| degrees lower
    shifted_allow = KAPPA * float(pack.pureness.residuals[max(pack.N - SHIFT_BAND, 0)])
    c.add("kinner_orthogonality", kin["orthogonality_residual"], tol["check_tol"], shifted_allow)
    c.add("isometry_identity", isometry_identity_residual(q, W2, pack.kernel, rng), tol["check_tol"], allow)
    out = {"quadruple": q.to_json(), "conditions": cond, "kinner": kin, "point_radius": POINT_RADIUS,
           "point_count": POINT_COUNT}
    if multiplier:
        mins = []
        try:
            for s in range(multiplier["sets"]):
                prng = np.random.default_rng([seed, s])
                pts = sample_ball(pack.T.d, multiplier["points"], MULTIPLIER_RADIUS, prng)
                mins.append(da_multiplier_check(TransferFunction(q, pack.kernel), pack.kernel, pts,
                                                strict=multiplier["strict"]))
            c.add("multiplier_positivity", min(mins), tol["psd_tol"], upper=False)
        except NotRowContraction as exc:
            c.flag("multiplier_positivity", False, error="NotRowContraction", message=str(exc))
        out["multiplier"] = {"min_eigs": mins, "radius": MULTIPLIER_RADIUS, **multiplier}
    out.update(c.to_json())
    return out


def _multiplier_opts(job: Job):
    if not job.raw.get("multiplier_check", False):
        return None
    return {"points": job.raw.get("multiplier_points", 10), "sets": job.raw.get("multiplier_sets", 1),
            "strict": job.raw.get("multiplier_strict", True)}


def cmd_realize(job: Job) -> dict:
    return realize_section(_pack(job), job.tol, job.seed, job.raw.get("perturbation"), _multiplier_opts(job))


def run_entry(name: str, T, kernel, N: int, tol: dict, seed: int, perturbation=None) -> dict:
    """Dilation, wandering and realization checks for one tuple; errors become failed sections."""
    out = {"name": name, "N": N, "kernel": kernel.name}
    try:
        pack = canonical_dilation(T, kernel, N, series_tol=tol["series_tol"], iso_tol=tol["iso_abort_tol"],
                                  mem_tol=tol["mem_tol"], pure_tol=tol["pure_tol"])
        out["dilate"] = dilation_checks(pack, tol, seed)
        out["wandering"], _ = wandering_section(pack, tol)
        out["wandering"].pop("WT")
        out["realize"] = realize_section(pack, tol, seed, perturbation)
        out["realize"].pop("quadruple")
        out["pass"] = all(out[k]["pass"] for k in ("dilate", "wandering", "realize"))
    except KContractError as exc:
        out.update(_error_section(exc))
    return out


def cmd_corpus(job: Job, threads: int = 1) -> dict:
    sel = job.raw.get("corpus", {})
    if "entries" in sel:
        items = sorted((corpus_mod.entry(n) for n in sel["entries"]), key=lambda e: e.name)
    else:
        items = corpus_mod.entries(sel.get("kernels"), sel.get("tuples"))
    tasks = []
    for e in items:
        N = job.horizon_override or e.N
        tasks.append((e.name, e.T, e.kernel(N), N, None))
    if sel.get("failure_fixture", False):
        e = corpus_mod.entry("da_lambda_0.5")
        tasks.append(("fixture_perturbed_quadruple", e.T, e.kernel(), e.N,
                      {"target": "D", "row": 0, "col": 0, "amount": 0.1}))

    def work(t):
        return run_entry(t[0], t[1], t[2], t[3], job.tol, job.seed, t[4])

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(work, tasks))
    results.sort(key=lambda r: r["name"])
    return {
        "entries": results,
        "count": len(results),
        "failed": [r["name"] for r in results if not r["pass"]],
        "pass": all(r["pass"] for r in results),
    }


def run_job(raw: dict, threads: int = 1, tol_scale: float = 1.0, horizon: int | None = None) -> tuple[dict, int]:
    """Execute a job; returns ``(report, exit_code)``."""
    report = {"tool": "kcontract", "version": __version__, "generated_at": None, "sections": {}}
    try:
        job = Job(raw, tol_scale, horizon)
    except jsonschema.ValidationError as exc:
        report["error"] = {"error": "SchemaError", "message": exc.message, "exit_code": 3}
        report.update({"exit_code": 3, "pass": False})
        return report, 3
    report.update({"seed": job.seed, "tol_scale": tol_scale, "tolerances": job.tol})
    handlers = {
        "check_kernel": cmd_check_kernel,
        "analyze_tuple": cmd_analyze_tuple,
        "dilate": cmd_dilate,
        "wandering": cmd_wandering,
        "realize": cmd_realize,
        "corpus": lambda j: cmd_corpus(j, threads),
    }
    codes = []
    for name in job.commands:
        try:
            section = handlers[name](job)
            codes.append(0 if section["pass"] else 2)
        except InputError as exc:
            section = _error_section(exc)
            codes.append(3)
        except ConvergenceError as exc:
            section = _error_section(exc)
            codes.append(4)
        except KContractError as exc:
            section = _error_section(exc)
            codes.append(2)
        report["sections"][name] = section
    if "N" in raw or horizon is not None:
        try:
            report["N"] = job.N
        except KContractError:
            pass
    worst = max(codes, default=0)
    # input errors dominate convergence errors, which dominate verdict failures
    code = 3 if 3 in codes else 4 if 4 in codes else worst
    report["exit_code"] = code
    report["pass"] = code == 0
    return _jsonable(report), code


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=True)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="kcontract", description=__doc__.splitlines()[0])
    parser.add_argument("--job", required=True, help="path to the JSON job file ('-' for stdin)")
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for corpus runs")
    parser.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    parser.add_argument("--horizon", type=int, help="override the truncation degree N")
    args = parser.parse_args(argv)
    try:
        text = sys.stdin.read() if args.job == "-" else open(args.job, encoding="utf-8").read()
        raw = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"kcontract: cannot read job: {exc}", file=sys.stderr)
        return 3
    if args.tol_scale <= 0 or args.threads < 1 or (args.horizon is not None and args.horizon < 1):
        print("kcontract: --tol-scale must be positive, --threads and --horizon at least 1", file=sys.stderr)
        return 3
    report, code = run_job(raw, args.threads, args.tol_scale, args.horizon)
    report["generated_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    text = dumps_report(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
