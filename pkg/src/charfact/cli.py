"""Command-line front end: JSON instances in, JSON certificates out.

Exit codes: 0 pass, 1 mathematical failure, 2 input error.
"""

import argparse
import json
import math
import platform
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy
from scipy.stats import unitary_group

from . import __version__, matkit
from .charfun import char_fun, is_purely_contractive, multi_analytic_residual, verify_lemma_identities
from .constrained import (
    COMMUTE_TOL,
    SERIES_L1_CAP,
    _require_commuting,
    invariance_residual,
    sample_points,
    series_bound,
    series_vs_point,
    verify_constrained_factorization,
)
from .errors import (
    CharfactError,
    DimensionMismatch,
    NotAContraction,
    NotCommuting,
    NotPurelyContractive,
    OutsideBall,
    SamplingRestriction,
)
from .factorize import EQ2_TOL, K1_TOL, UNITARY_TOL, converse_build, verify_factorization
from .fock import EMPTY, format_word
from .matkit import operator_norm
from .rowcon import (
    RowOperator,
    UpperTriangularPair,
    assemble_T,
    commutator_norm,
    defects,
    extract_L,
    is_row_contraction,
    random_commuting_pair,
    random_pair,
    random_row_contraction,
    split_T,
)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
LEMMA_TOL = 1e-10
NORM_SLACK = 1e-10
ROUND_TRIP_TOL = 1e-8
PURITY_MARGIN = 1e-10


class InputError(ValueError):
    """Malformed or inconsistent instance data."""


# -- canonical JSON ------------------------------------------------------------

def _num(x):
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def dumps(obj, indent=0):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj) or _is_complex_pair(obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _is_complex_pair(obj):
    return all(isinstance(v, (list, tuple)) and len(v) == 2 and not isinstance(v[0], (list, tuple))
               for v in obj)


def encode_matrix(M):
    M = np.asarray(M, dtype=complex)
    return [[[float(x.real), float(x.imag)] for x in row] for row in M]


def decode_matrix(data, name="matrix"):
    """Rows of ``[re, im]`` pairs (plain numbers are read as real)."""
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise InputError(f"{name}: expected a list of rows")
    if data and len({len(r) for r in data}) != 1:
        raise InputError(f"{name}: ragged rows")
    cols = len(data[0]) if data else 0
    out = np.zeros((len(data), cols), dtype=complex)
    for i, row in enumerate(data):
        for j, x in enumerate(row):
            if isinstance(x, (int, float)) and not isinstance(x, bool):
                out[i, j] = x
            elif (isinstance(x, list) and len(x) == 2
                  and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in x)):
                out[i, j] = complex(x[0], x[1])
            else:
                raise InputError(f"{name}[{i}][{j}]: expected a number or [re, im]")
    return out


def decode_tuple(data, n, dim, name):
    if not isinstance(data, list) or len(data) != n:
        raise InputError(f"{name}: expected {n} matrices")
    blocks = [decode_matrix(m, f"{name}[{j}]") for j, m in enumerate(data)]
    for j, b in enumerate(blocks):
        if b.shape != (dim, dim):
            raise InputError(f"{name}[{j}] has shape {b.shape}, expected {(dim, dim)}")
    return RowOperator(np.stack(blocks))


def encode_tuple(T):
    return [encode_matrix(b) for b in T.blocks]


# -- instance files ------------------------------------------------------------

@dataclass
class Instance:
    n: int
    spaces: dict
    A: RowOperator = None
    B: RowOperator = None
    T: RowOperator = None
    L: np.ndarray = None
    w: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def pair(self, tol=None):
        if self.A is None or self.B is None or self.L is None:
            raise InputError("instance needs A, B and L")
        try:
            return UpperTriangularPair(self.A, self.B, self.L, tol)
        except DimensionMismatch as e:
            raise InputError(str(e)) from e

    def tuple(self):
        """``T`` if given, else the assembled tuple from ``A, B, L``."""
        if self.T is not None:
            return self.T
        return assemble_T(self.pair())

    @property
    def seed(self):
        return self.meta.get("seed") if isinstance(self.meta, dict) else None


def parse_instance(doc):
    if not isinstance(doc, dict):
        raise InputError("instance must be a JSON object")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InputError("'n' must be a positive integer")
    spaces = doc.get("spaces")
    if not isinstance(spaces, dict) or not all(
            isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in spaces.values()):
        raise InputError("'spaces' must map names to dimensions")
    inst = Instance(n=n, spaces=dict(spaces), meta=doc.get("meta") or {})
    if "h1" in spaces or "h2" in spaces:
        if set(spaces) != {"h1", "h2"}:
            raise InputError("'spaces' needs both h1 and h2")
        h1, h2 = spaces["h1"], spaces["h2"]
        if "A" in doc:
            inst.A = decode_tuple(doc["A"], n, h1, "A")
        if "B" in doc:
            inst.B = decode_tuple(doc["B"], n, h2, "B")
        if "T" in doc:
            inst.T = decode_tuple(doc["T"], n, h1 + h2, "T")
    elif set(spaces) == {"h"}:
        if "T" not in doc:
            raise InputError("instance with a single space needs 'T'")
        inst.T = decode_tuple(doc["T"], n, spaces["h"], "T")
    else:
        raise InputError("'spaces' must be {h} or {h1, h2}")
    if "L" in doc:
        inst.L = decode_matrix(doc["L"], "L")
    if "w" in doc:
        inst.w = decode_matrix(doc["w"], "w")
    if inst.T is None and inst.A is None:
        raise InputError("instance carries no operators")
    return inst


def load_instance(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from e
    return parse_instance(doc)


def instance_doc(n, *, T=None, A=None, B=None, L=None, w=None, meta=None):
    doc = {"n": n, "meta": meta or {}}
    if T is not None and A is None:
        doc["spaces"] = {"h": T.dim_out}
    else:
        doc["spaces"] = {"h1": A.dim_out, "h2": B.dim_out}
    for name, op in (("A", A), ("B", B), ("T", T)):
        if op is not None:
            doc[name] = encode_tuple(op)
    for name, M in (("L", L), ("w", w)):
        if M is not None:
            doc[name] = encode_matrix(M)
    return doc


# -- certificates --------------------------------------------------------------

def versions():
    return {"charfact": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def certificate(theorem, residuals, tolerances, k=None, seed=None, **extra):
    """``pass`` is true iff every toleranced residual is within its tolerance."""
    residuals = {name: float(v) for name, v in residuals.items()}
    ok = all(residuals[name] <= tol for name, tol in tolerances.items())
    doc = {"theorem": theorem, "residuals": residuals, "tolerances": dict(tolerances),
           "pass": ok, "k": k, "seed": seed, "versions": versions()}
    doc.update(extra)
    return doc


def recompute_pass(cert):
    return all(cert["residuals"][name] <= tol for name, tol in cert["tolerances"].items())


def _emit(doc, args, text_lines=()):
    payload = dumps(doc) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    if args.format == "json":
        sys.stdout.write(payload)
    else:
        for line in text_lines:
            print(line)
        if "residuals" in doc:
            for name in sorted(doc["residuals"]):
                tol = doc["tolerances"].get(name)
                mark = "" if tol is None else ("  ok" if doc["residuals"][name] <= tol else "  FAIL")
                print(f"  {name:28s} {doc['residuals'][name]:.3e}{mark}")
        if "pass" in doc:
            print("PASS" if doc["pass"] else "FAIL")


def _exit_code(doc):
    return EXIT_PASS if doc["pass"] else EXIT_FAIL


# -- subcommands ---------------------------------------------------------------

def cmd_check(args):
    inst = load_instance(args.instance)
    T = inst.tuple()
    norm = operator_norm(T.row)
    report = {"n": T.n, "dim": T.dim_out, "row_norm": norm, "row_contraction": is_row_contraction(T),
              "commutator_norm": commutator_norm(T)}
    lines = [f"n {T.n}, dim {T.dim_out}", f"norm {round(norm, 12)}",
             f"commutator norm {report['commutator_norm']:.3e}"]
    if report["row_contraction"]:
        dd = defects(T, args.rank_tol)
        report["rank_D_T"], report["rank_D_Tstar"] = dd.rank_right, dd.rank_left
        lines.append(f"defect ranks: D_T {dd.rank_right}, D_T* {dd.rank_left}")
    else:
        lines.append("not a row contraction")
    _emit(report, args, lines)
    return EXIT_PASS if report["row_contraction"] else EXIT_FAIL


def cmd_charfun(args):
    inst = load_instance(args.instance)
    T = inst.tuple()
    theta = char_fun(T, args.trunc, args.rank_tol)
    r1, r2 = verify_lemma_identities(T, args.trunc, args.rank_tol)
    residuals = {
        "lemma_identity_1": r1,
        "lemma_identity_2": r2,
        "multi_analytic": multi_analytic_residual(theta),
        "norm_excess": max(0.0, theta.norm() - 1),
    }
    tolerances = {name: LEMMA_TOL for name in residuals}
    extra = {"dims": {"D_T": theta.dom_dim, "D_Tstar": theta.cod_dim}}
    if theta.dom_dim * theta.cod_dim == 0:
        extra["coefficients"] = {}
        extra["note"] = "trivial defect"
    else:
        extra["coefficients"] = {format_word(w): encode_matrix(c) for w, c in theta.coeffs.items()}
    doc = certificate("3.1", residuals, tolerances, k=args.trunc, seed=inst.seed, **extra)
    _emit(doc, args, [f"characteristic function, k = {args.trunc}, "
                      f"dims {theta.dom_dim} -> {theta.cod_dim}", extra.get("note", "")])
    return _exit_code(doc)


def factorize_doc(pair, k, tol, seed=None, T=None, cert=None):
    cert = cert or verify_factorization(pair, k, tol, T=T)
    residuals = {"factorization": cert.residual, **cert.residuals}
    tolerances = {"factorization": tol, "sigma_unitarity": UNITARY_TOL,
                  "sigma_star_unitarity": UNITARY_TOL, "julia_halmos_unitarity": UNITARY_TOL,
                  "sigma_identity": EQ2_TOL, "sigma_star_identity": EQ2_TOL}
    dims = {"D_A": pair.defects_A.rank_right, "D_Astar": pair.defects_A.rank_left,
            "D_B": pair.defects_B.rank_right, "D_Bstar": pair.defects_B.rank_left,
            "D_T": cert.lhs.dom_dim, "D_Tstar": cert.lhs.cod_dim}
    extra = {"dims": dims}
    if 0 in dims.values():
        extra["note"] = "zero-dimensional blocks: " + ", ".join(sorted(n for n, d in dims.items() if d == 0))
    return certificate("3.2", residuals, tolerances, k=k, seed=seed, **extra)


def cmd_factorize(args):
    inst = load_instance(args.instance)
    pair = inst.pair(args.rank_tol)
    try:
        doc = factorize_doc(pair, args.trunc, args.tol, inst.seed, T=inst.T)
    except DimensionMismatch as e:
        raise InputError(str(e)) from e
    _emit(doc, args, [f"factorization, k = {args.trunc}", doc.get("note", "")])
    return _exit_code(doc)


CONVERSE_TOLS = {"K1": K1_TOL, "fprime_dim": 0, "fstarprime_dim": 0, "U_unitarity": UNITARY_TOL,
                 "V_unitarity": UNITARY_TOL, "well_defined_N": LEMMA_TOL, "well_defined_M": LEMMA_TOL}


def converse_doc(A, B, w, k, tol, rank_tol=None, seed=None):
    dA, dB = defects(A, rank_tol), defects(B, rank_tol)
    f, fs = w.shape[1] - dA.rank_left, w.shape[0] - dB.rank_right
    if f < 0 or fs < 0:
        raise InputError(f"w of shape {w.shape} does not fit D_A* ({dA.rank_left}) and D_B ({dB.rank_right})")
    tolerances = {"coincidence": tol, **CONVERSE_TOLS}
    try:
        cert = converse_build(A, B, w, f, fs, k, tol, rank_tol)
    except NotPurelyContractive as e:
        residuals = {"fprime_dim": e.fprime_dim, "fstarprime_dim": e.fstarprime_dim,
                     "vacuum_norm": e.vacuum_norm}
        return certificate("3.3", residuals, {"fprime_dim": 0, "fstarprime_dim": 0,
                                              "vacuum_norm": 1 - PURITY_MARGIN},
                           k=k, seed=seed, error=f"NotPurelyContractive: {e}")
    residuals = {"coincidence": cert.coincidence_residual, "fprime_dim": cert.fprime_dim,
                 "fstarprime_dim": cert.fstarprime_dim, **cert.residuals}
    return certificate("3.3", residuals, tolerances, k=k, seed=seed, dims={"F": f, "F_star": fs})


def cmd_converse(args):
    inst = load_instance(args.instance)
    if inst.A is None or inst.B is None or inst.w is None:
        raise InputError("converse needs A, B and w")
    doc = converse_doc(inst.A, inst.B, inst.w, args.trunc, args.tol, args.rank_tol, inst.seed)
    _emit(doc, args, [f"converse, k = {args.trunc}", doc.get("error", "")])
    return _exit_code(doc)


def _load_points(path, n):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from e
    if not isinstance(data, list):
        raise InputError("points file must hold a list of points")
    pts = decode_matrix(data, "points") if data else np.zeros((0, n), dtype=complex)
    if pts.shape[1] != n:
        raise InputError(f"points have {pts.shape[1]} coordinates, expected {n}")
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms >= 1):
        raise OutsideBall(f"point {int(np.argmax(norms))} has norm {norms.max():.6g}, not < 1")
    return pts


def _parse_grid(spec):
    """``COUNT`` or ``COUNT:MAX_NORM``."""
    try:
        parts = spec.split(":")
        count = int(parts[0])
        radius = float(parts[1]) if len(parts) > 1 else 0.95
    except (ValueError, IndexError) as e:
        raise InputError(f"bad grid spec {spec!r}") from e
    if count < 0 or not 0 <= radius < 1:
        raise InputError(f"bad grid spec {spec!r}")
    return count, radius


def constrained_doc(T, k, tol, points, pair=None, series_count=5, rank_tol=None, seed=None):
    _require_commuting(T)
    theta = char_fun(T, k, rank_tol)
    residuals, tolerances = {}, {}
    n = T.n
    series = [series_vs_point(T, z, k, rank_tol, theta=theta)
              for z in sample_points(n, series_count, l1_cap=SERIES_L1_CAP)]
    residuals["series_vs_point"] = max(series, default=0.0)
    tolerances["series_vs_point"] = series_bound(k)
    residuals["invariance"] = invariance_residual(theta.assembled, n, k, theta.dom_dim, theta.cod_dim)
    tolerances["invariance"] = LEMMA_TOL
    if pair is not None:
        cert = verify_constrained_factorization(pair, points, tol)
        residuals["factorization"] = cert.max_residual
        tolerances["factorization"] = tol
        for name in ("commutator_A", "commutator_B"):
            residuals[name] = cert.residuals[name]
            tolerances[name] = COMMUTE_TOL
        residuals["point_norm_excess"] = max(0.0, cert.residuals["max_point_norm"] - 1)
        tolerances["point_norm_excess"] = NORM_SLACK
    return certificate("4.x", residuals, tolerances, k=k, seed=seed, points=len(points))


def cmd_constrained(args):
    inst = load_instance(args.instance)
    T = inst.tuple()
    pair = inst.pair(args.rank_tol) if inst.L is not None and inst.A is not None else None
    if args.points:
        points = _load_points(args.points, T.n)
    else:
        count, radius = _parse_grid(args.grid)
        points = sample_points(T.n, count, max_norm=radius)
    doc = constrained_doc(T, args.trunc, args.tol, points, pair, rank_tol=args.rank_tol, seed=inst.seed)
    _emit(doc, args, [f"constrained, k = {args.trunc}, {len(points)} points"])
    return _exit_code(doc)


def cmd_generate(args):
    rng = np.random.default_rng(args.seed)
    n, d1, d2 = args.n, args.dims[0], args.dims[-1]
    meta = {"seed": args.seed, "kind": args.kind}
    if args.kind == "tuple":
        doc = instance_doc(n, T=random_row_contraction(rng, n, d1), meta=meta)
    elif args.kind == "pair":
        p = random_pair(rng, n, d1, d2)
        doc = instance_doc(n, A=p.A, B=p.B, L=p.L, meta=meta)
    elif args.kind == "commuting":
        p = random_commuting_pair(rng, n, d1, d2)
        doc = instance_doc(n, A=p.A, B=p.B, L=p.L, meta=meta)
    else:
        p = random_pair(rng, n, d1, d2)
        doc = instance_doc(n, A=p.A, B=p.B, w=random_generic_w(rng, p.A, p.B), meta=meta)
    payload = dumps(doc) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return EXIT_PASS


# -- selftest ------------------------------------------------------------------

def random_generic_w(rng, A, B, rank_tol=None):
    """Haar unitary on ``D_{A*} (+) F -> D_B (+) F_*`` sized so ``F' = F_*' = 0`` generically."""
    ra_s, rb = defects(A, rank_tol).rank_left, defects(B, rank_tol).rank_right
    f = int(rng.integers(max(0, rb - ra_s), rb + 1))
    size = ra_s + f
    if size == 0:
        return np.zeros((0, 0), dtype=complex)
    return unitary_group.rvs(size, random_state=rng) if size > 1 else np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))


def selftest_instance(seed, max_n, max_dim, k, tol, rank_tol=None):
    """All theorem checks on one seeded instance; returns a certificate per theorem."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, max_n + 1))
    d1, d2 = (int(x) for x in rng.integers(1, max_dim + 1, size=2))
    pair = random_pair(rng, n, d1, d2, tol=rank_tol)
    T = assemble_T(pair)
    certs = {}

    A, B, X = split_T(T, d1)
    L_back = extract_L(A, B, X, rank_tol)
    certs["2.1"] = certificate("2.1", {"extract_L": operator_norm(L_back - pair.L)},
                               {"extract_L": ROUND_TRIP_TOL}, k=k, seed=seed)

    fac_cert = verify_factorization(pair, k, tol, T=T)
    fac = factorize_doc(pair, k, tol, seed, cert=fac_cert)
    certs["2.2"] = certificate("2.2", {name: fac["residuals"][name] for name in (
        "sigma_unitarity", "sigma_star_unitarity", "sigma_identity", "sigma_star_identity")},
        {name: fac["tolerances"][name] for name in (
            "sigma_unitarity", "sigma_star_unitarity", "sigma_identity", "sigma_star_identity")},
        k=k, seed=seed)
    certs["3.2"] = fac

    r1, r2 = verify_lemma_identities(T, k, rank_tol)
    theta = fac_cert.lhs
    vac = operator_norm(theta.coeffs[EMPTY]) if theta.coeffs[EMPTY].size else 0.0
    certs["3.1"] = certificate(
        "3.1", {"lemma_identity_1": r1, "lemma_identity_2": r2,
                "norm_excess": max(0.0, theta.norm() - 1), "vacuum_norm": vac},
        {"lemma_identity_1": LEMMA_TOL, "lemma_identity_2": LEMMA_TOL,
         "norm_excess": NORM_SLACK, "vacuum_norm": 1 - PURITY_MARGIN}, k=k, seed=seed)

    w = random_generic_w(rng, pair.A, pair.B, rank_tol)
    certs["3.3"] = converse_doc(pair.A, pair.B, w, k, tol, rank_tol, seed)

    cpair = random_commuting_pair(rng, n, d1, d2, tol=rank_tol)
    certs["4.x"] = constrained_doc(assemble_T(cpair), k, tol, sample_points(n, 5), cpair,
                                   series_count=3, rank_tol=rank_tol, seed=seed)
    meta = {"n": n, "h1": d1, "h2": d2}
    return seed, meta, certs


def _selftest_job(job):
    seed, max_n, max_dim, k, tol = job
    try:
        return selftest_instance(seed, max_n, max_dim, k, tol)
    except CharfactError as e:
        return seed, {"error": f"{type(e).__name__}: {e}"}, {}


def _read_seeds(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e}") from e
    try:
        data = json.loads(text)
        seeds = data if isinstance(data, list) else [data]
    except json.JSONDecodeError:
        seeds = text.replace(",", " ").split()
    try:
        return [int(s) for s in seeds]
    except (TypeError, ValueError) as e:
        raise InputError(f"{path}: seeds must be integers") from e


def _histogram(values):
    """Counts per decade of the residual, as ``{"1e-16": 3, ...}``."""
    counts = {}
    for v in values:
        key = "0" if v <= 0 else f"1e{math.floor(math.log10(v)):+d}"
        counts[key] = counts.get(key, 0) + 1
    return counts


def cmd_selftest(args):
    seeds = _read_seeds(args.seeds) if args.seeds else [args.seed + i for i in range(max(args.count, 0))]
    if not seeds:
        print("warning: nothing run (count 0)", file=sys.stderr)
        _emit({"instances": [], "pass": True, "failing_seeds": []}, args, ["nothing run"])
        return EXIT_PASS
    jobs = [(s, args.max_n, args.max_dim, args.trunc, args.tol) for s in seeds]
    start = time.perf_counter()
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_selftest_job, jobs))
    else:
        results = [_selftest_job(j) for j in jobs]
    elapsed = time.perf_counter() - start
    results.sort(key=lambda r: r[0])

    failing, instances, by_name = [], [], {}
    for seed, meta, certs in results:
        ok = bool(certs) and all(c["pass"] for c in certs.values())
        if not ok:
            failing.append(seed)
        instances.append({"seed": seed, "meta": meta, "pass": ok, "certificates": certs})
        for thm, c in certs.items():
            for name, v in c["residuals"].items():
                by_name.setdefault(f"{thm}:{name}", []).append(v)
    doc = {"instances": instances, "pass": not failing, "failing_seeds": failing,
           "histograms": {name: _histogram(v) for name, v in by_name.items()},
           "k": args.trunc, "versions": versions()}
    lines = [f"{len(seeds)} instances, k = {args.trunc}, {elapsed:.1f} s"]
    for name in sorted(by_name):
        hist = " ".join(f"{b}:{c}" for b, c in sorted(doc["histograms"][name].items()))
        lines.append(f"  {name:36s} max {max(by_name[name]):.2e}  {hist}")
    if failing:
        lines.append("failing seeds: " + " ".join(str(s) for s in failing))
    _emit(doc, args, lines)
    if failing and args.format == "json":
        print("failing seeds: " + " ".join(str(s) for s in failing), file=sys.stderr)
    return EXIT_PASS if not failing else EXIT_FAIL


# -- entry point ---------------------------------------------------------------

TEXT_DEFAULT = {"check": "text", "selftest": "text"}


def build_parser():
    p = argparse.ArgumentParser(prog="charfact", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--trunc", type=int, default=4, help="Fock truncation length k (default 4)")
    common.add_argument("--tol", type=float, default=1e-8, help="residual tolerance (default 1e-8)")
    common.add_argument("--out", help="also write the JSON document here")
    # resolved per command in main: parents share action objects, so set_defaults would leak
    common.add_argument("--format", choices=("json", "text"), default=None)
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, text in (("check", cmd_check, "row contraction report"),
                           ("charfun", cmd_charfun, "characteristic function coefficients"),
                           ("factorize", cmd_factorize, "certify the upper-triangular factorization"),
                           ("converse", cmd_converse, "rebuild a tuple from a unitary coupling w")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("instance")
        s.set_defaults(func=fn)

    s = sub.add_parser("constrained", parents=[common], help="commuting case on the unit ball")
    s.add_argument("instance")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--points", help="JSON list of points, coordinates as [re, im]")
    g.add_argument("--grid", default="20", help="COUNT[:MAX_NORM] Halton points (default 20)")
    s.set_defaults(func=cmd_constrained)

    s = sub.add_parser("selftest", parents=[common], help="run every suite on seeded instances")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--count", type=int, default=10)
    s.add_argument("--max-n", type=int, default=3)
    s.add_argument("--max-dim", type=int, default=3)
    s.add_argument("--seeds", help="file of seeds to replay instead of --seed/--count")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_selftest)

    s = sub.add_parser("generate", help="write a seeded random instance")
    s.add_argument("kind", choices=("tuple", "pair", "commuting", "converse"))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--dims", type=int, nargs="+", default=[2, 2], help="h1 [h2] (or h for a tuple)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_generate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args.rank_tol = matkit.resolve_tol(None)
    if getattr(args, "format", "json") is None:
        args.format = TEXT_DEFAULT.get(args.command, "json")
    if getattr(args, "trunc", 1) < 1:
        print("error: --trunc must be >= 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, DimensionMismatch, OutsideBall, SamplingRestriction) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except NotCommuting as e:
        print(f"not commuting: commutator norm {e.commutator_norm:.6g}", file=sys.stderr)
        return EXIT_FAIL
    except NotAContraction as e:
        print(f"not a row contraction: {e}", file=sys.stderr)
        return EXIT_FAIL
    except CharfactError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
