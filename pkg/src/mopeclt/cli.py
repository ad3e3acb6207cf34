"""Command-line front end.

Subcommands: ``variance``, ``converge``, ``verify``, ``dump-matrix`` and
``oracle``.  Each reads a JSON run configuration (``--config``) and writes
CSV/JSON files into ``--out``.  Exit codes: 0 success, 1 check failure,
2 usage or configuration error.

Configuration fields::

    family      family spec, e.g. {"family": "hermite", "params": {"a": [1, -1]}}
    path        {"kind": "ray", "nu": [...]} | {"kind": "step_line"}
                | {"kind": "hermite_example"} | {"m": .., "nu": .., "steps": [..]}
    nu          direction for the limit symbol (defaults to the path direction)
    f           polynomial coefficients, lowest degree first
    n           strictly increasing list of ensemble sizes
    m_max       highest cumulant order
    matrix      dump-matrix: {"kind": "J"|"Tc"|"T_symbol"|"toeplitz"|"f_of_J",
                "n_scale": .., "rows": [i0, i1], "cols": [j0, j1]}
    oracle      {"multiplicities": [..], "m_max": 3, "lambdas": [..], "r": 20}
    tolerances  overrides of the default tolerances
    outputs     file name overrides, e.g. {"converge_csv": "sweep.csv"}

``MOPE_THREADS`` caps the BLAS thread pools; it is applied before numpy is
imported, so it only takes effect for a fresh process.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile

from .errors import MopeError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

OUTPUT_NAMES = {
    "variance_json": "variance.json",
    "laurent_csv": "laurent.csv",
    "converge_csv": "converge.csv",
    "verify_json": "verify.json",
    "matrix_csv": "matrix.csv",
    "oracle_json": "oracle.json",
}

ORACLE_TOLERANCES = {"oracle_cumulants": 1e-9, "oracle_mgf": 1e-9}

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "BLIS_NUM_THREADS")


class ConfigError(Exception):
    """Invalid run configuration; reported with exit code 2."""


# plumbing


def _apply_thread_cap():
    raw = os.environ.get("MOPE_THREADS")
    if raw is None:
        return
    try:
        k = int(raw)
    except ValueError:
        raise ConfigError(f"MOPE_THREADS must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ConfigError(f"MOPE_THREADS must be a positive integer, got {raw!r}")
    for var in _THREAD_VARS:
        os.environ.setdefault(var, str(k))


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _line_of(text, key):
    """Line of the first occurrence of ``"key"`` in the config text, if any."""
    idx = text.find(f'"{key}"')
    return None if idx < 0 else text.count("\n", 0, idx) + 1


class Config:
    """Parsed JSON configuration with field-level diagnostics."""

    def __init__(self, data, text="", source="<config>"):
        if not isinstance(data, dict):
            raise ConfigError(f"{source}: top level must be a JSON object")
        self.data = data
        self.text = text
        self.source = source

    @classmethod
    def load(cls, path):
        if path is None:
            return cls({}, "", "<none>")
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: malformed JSON: {exc.msg}") from None
        return cls(data, text, path)

    def error(self, field, message):
        key = field.split(".")[-1]
        line = _line_of(self.text, key)
        where = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{where}: field '{field}': {message}")

    def require(self, field):
        if field not in self.data:
            raise self.error(field, "is required for this command")
        return self.data[field]

    def get(self, field, default=None):
        return self.data.get(field, default)


def _output(cfg, out_dir, key):
    names = cfg.get("outputs", {}) or {}
    if not isinstance(names, dict):
        raise cfg.error("outputs", "must be an object")
    unknown = set(names) - set(OUTPUT_NAMES)
    if unknown:
        raise cfg.error("outputs", f"unknown keys {sorted(unknown)}")
    return os.path.join(out_dir, names.get(key, OUTPUT_NAMES[key]))


# field parsers


def _family(cfg):
    from .families import FamilySpec

    obj = cfg.require("family")
    try:
        return FamilySpec.from_json(obj)
    except (MopeError, TypeError, ValueError) as exc:
        raise cfg.error("family", str(exc)) from None


def _f(cfg):
    f = cfg.require("f")
    if isinstance(f, (int, float)) and not isinstance(f, bool):
        f = [f]
    if not isinstance(f, list) or not f or not all(_is_number(c) for c in f):
        raise cfg.error("f", "must be a non-empty list of numbers (lowest degree first)")
    return [float(c) for c in f]


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _n_list(cfg):
    ns = cfg.require("n")
    if isinstance(ns, int) and not isinstance(ns, bool):
        ns = [ns]
    if not isinstance(ns, list) or not ns or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in ns):
        raise cfg.error("n", "must be a list of positive integers")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise cfg.error("n", "must be strictly increasing")
    return ns


def _int_field(cfg, field, default, lo=1):
    v = cfg.get(field, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < lo:
        raise cfg.error(field, f"must be an integer >= {lo}")
    return v


def _vector(cfg, field, value, m):
    if not isinstance(value, list) or len(value) != m or not all(_is_number(v) and v >= 0 for v in value):
        raise cfg.error(field, f"must be a list of {m} non-negative numbers")
    total = sum(value)
    if total <= 0:
        raise cfg.error(field, "must have positive sum")
    return [v / total for v in value]


def _path(cfg, m, length):
    from .lattice_path import LatticePath, hermite_example_path, ray_path, step_line

    obj = cfg.get("path", {"kind": "step_line"})
    if not isinstance(obj, dict):
        raise cfg.error("path", "must be an object")
    kind = obj.get("kind")
    try:
        if kind is None:
            path = LatticePath.from_json(obj)
            path.validate()
        elif kind == "ray":
            path = ray_path(_vector(cfg, "path.nu", obj.get("nu"), m), length)
        elif kind == "step_line":
            path = step_line(m, length)
        elif kind == "hermite_example":
            if m != 2:
                raise cfg.error("path.kind", "hermite_example needs m = 2")
            path = hermite_example_path(length)
        else:
            raise cfg.error("path.kind", f"unknown kind {kind!r}")
    except (MopeError, TypeError, ValueError) as exc:
        raise cfg.error("path", str(exc)) from None
    if path.m != m:
        raise cfg.error("path", f"path dimension {path.m} differs from family m={m}")
    if len(path) < length:
        raise cfg.error("path.steps", f"explicit path has {len(path)} steps, {length} needed")
    return path


def _nu(cfg, path, m):
    if "nu" in cfg.data:
        return _vector(cfg, "nu", cfg.data["nu"], m)
    return list(path.nu)


def _tolerances(cfg, defaults):
    over = cfg.get("tolerances", {}) or {}
    if not isinstance(over, dict):
        raise cfg.error("tolerances", "must be an object")
    for k, v in over.items():
        if k not in defaults:
            raise cfg.error("tolerances", f"unknown tolerance {k!r}; known: {sorted(defaults)}")
        if not _is_number(v) or v < 0:
            raise cfg.error(f"tolerances.{k}", "must be a non-negative number")
    out = dict(defaults)
    out.update(over)
    return out


def _symbol(cfg, spec, nu):
    from .families import nevai_limits

    try:
        return nevai_limits(spec, nu)
    except (MopeError, ValueError) as exc:
        raise cfg.error("family", str(exc)) from None


# commands


def cmd_variance(cfg, out_dir):
    from .errors import CertificationError
    from .symbol import compose_laurent, laurent_series, limiting_variance

    spec = _family(cfg)
    f = _f(cfg)
    if "nu" in cfg.data:
        nu = _vector(cfg, "nu", cfg.data["nu"], spec.m)
    else:
        nu = list(_path(cfg, spec.m, 1).nu)
    sym = _symbol(cfg, spec, nu)
    d = len(f) - 1
    w = laurent_series(f, sym, max(d, 1))
    var = float(limiting_variance(w))
    report = {
        "variance": var,
        "nu": nu,
        "symbol": sym.to_json(),
        "f": f,
        "laurent": w.to_json(),
    }
    try:
        q = compose_laurent(f, sym, max(d, 1))
        report["variance_quadrature"] = float(limiting_variance(q))
    except CertificationError as exc:
        report["variance_quadrature"] = None
        report["quadrature_note"] = str(exc)
    atomic_write(_output(cfg, out_dir, "variance_json"), _json_text(report))
    atomic_write(
        _output(cfg, out_dir, "laurent_csv"),
        _csv_text(["ell", "f_ell"], [(ell, float(v)) for ell, v in w.items()]),
    )
    print(f"variance {var!r}")
    return EXIT_OK


def cmd_converge(cfg, out_dir):
    from .cumulants import linear_statistic_cumulants, rows_needed
    from .errors import WindowExhaustedError
    from .symbol import laurent_series, limiting_variance

    spec = _family(cfg)
    f = _f(cfg)
    ns = _n_list(cfg)
    m_max = _int_field(cfg, "m_max", 4)
    d = len(f) - 1
    length = rows_needed(ns[-1], m_max, d) + 4
    path = _path(cfg, spec.m, length)
    nu = _nu(cfg, path, spec.m)
    sym = _symbol(cfg, spec, nu)
    sigma2 = float(limiting_variance(laurent_series(f, sym, max(d, 1))))
    rows = []
    for n in ns:
        try:
            rep = linear_statistic_cumulants(spec.with_n_scale(n), path, f, n, m_max)
        except WindowExhaustedError as exc:
            raise ConfigError(f"window exhausted at n={n}: {exc}") from None
        for m in range(1, m_max + 1):
            c = float(rep.values[m])
            ref = None if m == 1 else (sigma2 if m == 2 else 0.0)
            gap = None if ref is None else abs(c - ref)
            rows.append((n, m, c, ref, gap))
    atomic_write(_output(cfg, out_dir, "converge_csv"), _csv_text(["n", "m", "C_m", "reference", "gap"], rows))
    for n, m, c, ref, gap in rows:
        if m >= 2:
            print(f"n={n} m={m} C_m={c:.12g} gap={gap:.3e}")
    return EXIT_OK


def cmd_verify(cfg, out_dir, suite):
    from . import verify

    if suite not in verify.SUITES:
        raise ConfigError(f"unknown suite {suite!r}; expected one of {', '.join(verify.SUITES)}")
    tol = _tolerances(cfg, verify.DEFAULT_TOLERANCES)
    results = verify.run_suite(suite, tol)
    report = {"suite": suite, "passed": True, "suites": {}}
    for name, checks in results.items():
        ok = all(c.passed for c in checks)
        report["suites"][name] = {"passed": ok, "checks": [c.to_json() for c in checks]}
        report["passed"] &= ok
        worst = min(checks, key=lambda c: c.margin)
        print(f"{'PASS' if ok else 'FAIL'} {name}: {len(checks)} checks, smallest margin {worst.margin:.3e} ({worst.name})")
        for c in checks:
            if not c.passed:
                print(f"  FAIL {c.name}: value {c.value:.3e} > tolerance {c.tolerance:.3e}")
    atomic_write(_output(cfg, out_dir, "verify_json"), _json_text(report))
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _window(cfg, field, value):
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in value)
        or value[1] < value[0]
    ):
        raise cfg.error(field, "must be [first, last] with 0 <= first <= last")
    return value


def cmd_dump_matrix(cfg, out_dir):
    from .banded import dump_csv, polynomial, split
    from .recurrence import build_J, build_T_symbol, build_Tc, toeplitz_matrix
    from .symbol import laurent_series

    spec = _family(cfg)
    mat = cfg.require("matrix")
    if not isinstance(mat, dict):
        raise cfg.error("matrix", "must be an object")
    kind = mat.get("kind", "J")
    i0, i1 = _window(cfg, "matrix.rows", mat.get("rows", [0, 9]))
    j0, j1 = _window(cfg, "matrix.cols", mat.get("cols", [i0, i1]))
    part = mat.get("part", "full")
    if part not in ("full", "minus", "plus"):
        raise cfg.error("matrix.part", "must be 'full', 'minus' or 'plus'")
    n_scale = mat.get("n_scale", spec.n_scale)
    if not isinstance(n_scale, int) or isinstance(n_scale, bool) or n_scale < 1:
        raise cfg.error("matrix.n_scale", "must be a positive integer")
    spec = spec.with_n_scale(n_scale)
    f = _f(cfg) if kind in ("T_symbol", "toeplitz", "f_of_J") else [0.0, 1.0]
    d = len(f) - 1
    rows = max(i1, j1) + 2 * max(d, 1) + 2
    path = _path(cfg, spec.m, rows + 2 * d + 4)
    try:
        if kind == "J":
            B = build_J(spec, path, rows)
        elif kind == "f_of_J":
            B = polynomial(f, build_J(spec, path, rows + d))
        elif kind in ("Tc", "T_symbol", "toeplitz"):
            sym = _symbol(cfg, spec, _nu(cfg, path, spec.m))
            if kind == "Tc":
                B = build_Tc(sym, path, rows)
            elif kind == "T_symbol":
                B = build_T_symbol(f, sym, path, rows)
            else:
                B = toeplitz_matrix(laurent_series(f, sym, rows), rows)
        else:
            raise cfg.error("matrix.kind", f"unknown kind {kind!r}")
        if part != "full":
            B = getattr(split(B), part)
        text = dump_csv(B, i0, i1, j0, j1)
    except MopeError as exc:
        raise cfg.error("matrix", str(exc)) from None
    atomic_write(_output(cfg, out_dir, "matrix_csv"), text)
    print(f"wrote {kind} rows {i0}..{i1} cols {j0}..{j1}")
    return EXIT_OK


def cmd_oracle(cfg, out_dir):
    import numpy as np

    from .cumulants import cumulant, mgf_determinant
    from .banded import polynomial
    from .lattice_path import ray_path
    from .oracle import enumerate_mope, exact_cumulants, family_ensemble, mgf_expectation
    from .recurrence import build_J

    spec = _family(cfg)
    if spec.family not in ("charlier", "krawtchouk"):
        raise cfg.error("family.family", "the oracle needs a discrete family (charlier or krawtchouk)")
    opts = cfg.get("oracle", {}) or {}
    if not isinstance(opts, dict):
        raise cfg.error("oracle", "must be an object")
    mult = opts.get("multiplicities", [1] * spec.m)
    if not isinstance(mult, list) or len(mult) != spec.m or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in mult):
        raise cfg.error("oracle.multiplicities", f"must be a list of {spec.m} non-negative integers")
    n = sum(mult)
    if n < 1:
        raise cfg.error("oracle.multiplicities", "must contain at least one particle")
    m_max = opts.get("m_max", 3)
    r = opts.get("r", 20)
    for field, v in (("oracle.m_max", m_max), ("oracle.r", r)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise cfg.error(field, "must be a positive integer")
    lambdas = opts.get("lambdas", [0.1, -0.1, 0.05, -0.05])
    if not isinstance(lambdas, list) or not all(_is_number(v) for v in lambdas):
        raise cfg.error("oracle.lambdas", "must be a list of numbers")
    f = _f(cfg) if "f" in cfg.data else [0.0, 1.0]
    tol = _tolerances(cfg, ORACLE_TOLERANCES)
    d = len(f) - 1
    rows = n + r * max(d, 1) + 2
    path = _path(cfg, spec.m, rows + 2)
    if tuple(path.k(n)) != tuple(mult):
        path = ray_path(np.asarray(mult, dtype=float) / n, rows + 2)
        if tuple(path.k(n)) != tuple(mult):
            raise cfg.error("path", f"path does not pass through multiplicities {mult}")
    try:
        dist = enumerate_mope(family_ensemble(spec, mult))
        enum = exact_cumulants(dist, f, m_max)
        J = build_J(spec, path, rows)
        B = polynomial(f, J)
        trace = {m: float(cumulant(B, n, m)) for m in range(1, m_max + 1)}
        mgf = []
        for lam in lambdas:
            det = float(mgf_determinant(J, f, lam, n, r))
            ref = float(mgf_expectation(dist, f, lam, r, product=True))
            mgf.append({"lambda": float(lam), "determinant": det, "enumerated": ref, "gap": abs(det - ref)})
    except MopeError as exc:
        raise cfg.error("family", str(exc)) from None
    cum_gap = max(abs(trace[m] - enum.values[m]) for m in trace)
    mgf_gap = max((row["gap"] for row in mgf), default=0.0)
    passed = cum_gap <= tol["oracle_cumulants"] and mgf_gap <= tol["oracle_mgf"]
    report = {
        "family": spec.to_json(),
        "multiplicities": mult,
        "f": f,
        "configurations": len(dist.configs),
        "min_probability": float(dist.metadata["min_probability"]),
        "truncation": {k: dist.metadata[k] for k in ("x_max", "tail_bound") if k in dist.metadata},
        "enumeration": enum.to_json(),
        "trace_formula": {str(k): v for k, v in trace.items()},
        "cumulant_gap": cum_gap,
        "mgf": mgf,
        "mgf_gap": mgf_gap,
        "tolerances": tol,
        "passed": passed,
    }
    atomic_write(_output(cfg, out_dir, "oracle_json"), _json_text(report))
    for m in trace:
        print(f"C_{m}: enumeration {enum.values[m]!r} trace {trace[m]!r}")
    print(f"{'PASS' if passed else 'FAIL'} cumulant gap {cum_gap:.3e}, mgf gap {mgf_gap:.3e}")
    return EXIT_OK if passed else EXIT_FAIL


# entry point


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory (default: current)")
    parser = argparse.ArgumentParser(prog="mopeclt", description="CLT numerics for multiple orthogonal polynomial ensembles")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("variance", parents=[common], help="limiting variance and Laurent window")
    sub.add_parser("converge", parents=[common], help="finite-n cumulant sweep")
    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("suite", help="identities | conjugation | bch | oracle | all")
    sub.add_parser("dump-matrix", parents=[common], help="write a matrix window as CSV")
    sub.add_parser("oracle", parents=[common], help="exact enumeration vs trace formula")
    return parser


_NEEDS_CONFIG = {"variance", "converge", "dump-matrix", "oracle"}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        _apply_thread_cap()
        if args.command in _NEEDS_CONFIG and args.config is None:
            raise ConfigError(f"{args.command} needs --config FILE")
        cfg = Config.load(args.config)
        if args.command == "variance":
            return cmd_variance(cfg, args.out)
        if args.command == "converge":
            return cmd_converge(cfg, args.out)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.suite)
        if args.command == "dump-matrix":
            return cmd_dump_matrix(cfg, args.out)
        return cmd_oracle(cfg, args.out)
    except ConfigError as exc:
        print(f"mopeclt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MopeError as exc:
        print(f"mopeclt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
