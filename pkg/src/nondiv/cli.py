"""Command-line front end.

Every command reads an optional JSON config (``--config``; ``"schema": 1``)
whose keys may be overridden by flags, runs one library operation and
writes a JSON report.  Exit status: 0 pass, 1 property violation, 2 bad
input (reported as ``source:line: message``).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import textio
from .exact_lattice import LatticeModule
from .fuzz import fuzz_submodularity, random_sl
from .git_instability import (WeightedVector, contract_ratio, flag_cocharacter, generic_perturbation,
                              invariant_vanish_test, stability_certificate, torus_instability,
                              zero_weight_monomials)
from .goodness import GoodnessParams, cgood_check, orbit_norm_function, polynomial_function
from .matrix_groups import Cocharacter, check_group_element
from .nondivergence import delta, hypothesis_level, km_escape_experiment, stable_subspaces
from .parabolic import (Embedding, StandardParabolic, boundary_classify,
                        embedding_compatibility_check, horospherical_decompose,
                        reduce_to_siegel, relative_compatibility_check)
from .prop42 import prop42_verify, xi_chain
from .textio import ConfigError, config_error

PASS, VIOLATION, CONFIG_ERROR = 0, 1, 2

_MISSING = object()


class Settings:
    """Config keys with command-line overrides and line-anchored errors."""

    def __init__(self, cfg: dict, overrides: dict):
        self.cfg = cfg
        self.values = {k: v for k, v in cfg.items() if not k.startswith("__")}
        self.values.update({k: v for k, v in overrides.items() if v is not None})

    def get(self, key, default=_MISSING):
        if key in self.values:
            return self.values[key]
        if default is _MISSING:
            raise config_error(self.cfg, key, f"missing required key {key!r}")
        return default

    def convert(self, key, fn, default=_MISSING):
        val = self.get(key, default)
        if val is default and default is not _MISSING:
            return default
        try:
            return fn(val)
        except (ValueError, TypeError, KeyError, ZeroDivisionError) as exc:
            raise config_error(self.cfg, key, f"bad value for {key!r}: {exc}") from None

    def error(self, key, message) -> ConfigError:
        return config_error(self.cfg, key, message)


def _composition(val, n: int) -> StandardParabolic:
    if val is None:
        return StandardParabolic.borel(n)
    if isinstance(val, str):
        val = [int(x) for x in val.split(",") if x.strip()]
    P = StandardParabolic(tuple(int(x) for x in val))
    if P.N != n:
        raise ValueError(f"composition sums to {P.N}, matrix has size {n}")
    return P


def _int_list(val) -> list[int]:
    if isinstance(val, str):
        return [int(x) for x in val.split(",") if x.strip()]
    return [int(x) for x in val]


def _group_element(s: Settings, key: str = "g", file_key: str = "matrix") -> np.ndarray:
    if s.get(file_key, None) is not None:
        g = textio.read_matrices(s.get(file_key))[0]
    else:
        g = s.convert(key, lambda v: textio.matrix_from_json(v, key))
    try:
        return check_group_element(g)
    except ValueError as exc:
        raise s.error(key, str(exc)) from None


def _subgroup(s: Settings):
    return s.convert("H", textio.subgroup_from_json)


# commands -------------------------------------------------------------------

def cmd_decompose(s: Settings):
    g = _group_element(s)
    P = s.convert("composition", lambda v: _composition(v, g.shape[0]), None) or \
        StandardParabolic.borel(g.shape[0])
    c = horospherical_decompose(g, P)
    return c.to_json(), PASS


def cmd_relative_check(s: Settings):
    g = _group_element(s)
    P = s.convert("composition", lambda v: _composition(v, g.shape[0]), None) or \
        StandardParabolic.borel(g.shape[0])
    I = s.convert("I", _int_list, [])
    r = relative_compatibility_check(g, P, I, tol=float(s.get("tol", 1e-8)))
    return r.to_json(), PASS if r.passed else VIOLATION


def cmd_siegel_reduce(s: Settings):
    g = _group_element(s)
    gamma, coords, S = reduce_to_siegel(g)
    return {"gamma": gamma, "reduced": gamma @ np.asarray(g, dtype=float),
            "coords": coords.to_json(),
            "siegel_set": {"t": S.t, "bound_U": S.bound_U, "bound_M": S.bound_M}}, PASS


def cmd_boundary_classify(s: Settings):
    if s.get("trajectory_file", None) is not None:
        traj = textio.read_matrices(s.get("trajectory_file"))
    else:
        traj = s.convert("trajectory", lambda v: [textio.matrix_from_json(m, "trajectory") for m in v])
    n = traj[0].shape[0]
    P = s.convert("composition", lambda v: _composition(v, n), None) or StandardParabolic.borel(n)
    r = boundary_classify(traj, P, threshold=float(s.get("threshold", 1e3)))
    return r.to_json(), PASS


def cmd_delta(s: Settings):
    H = _subgroup(s)
    g = _group_element(s)
    d = delta(g, H)
    h = hypothesis_level(g, H)
    return {"delta": d.value, "certified": d.certified, "minimizer": d.minimizer,
            "hypothesis_level": h.value}, PASS


def cmd_stable_subspaces(s: Settings):
    H = _subgroup(s)
    st = stable_subspaces(H, max_height=int(s.get("max_height", 3)))
    return {"modules": [m for m in st.modules], "infinite_families": st.infinite_families,
            "certified": st.certified}, PASS


def cmd_cgood_check(s: Settings):
    params = s.convert("C", lambda _: GoodnessParams(float(s.get("C")), float(s.get("alpha"))))
    fn = s.get("function")
    if not isinstance(fn, dict):
        raise s.error("function", "function must be an object")
    if "polynomial" in fn:
        f = s.convert("function", lambda v: polynomial_function([float(c) for c in v["polynomial"]]))
        window = s.convert("window", lambda v: [tuple(map(float, v))])
    else:
        H = s.convert("function", lambda v: textio.subgroup_from_json(v["H"]))
        g = s.convert("function", lambda v: textio.matrix_from_json(v["g"], "g"))
        gamma = s.convert("function", lambda v: textio.matrix_from_json(v["gamma"], "gamma")
                          if v.get("gamma") is not None else None)
        W = s.convert("function", lambda v: textio.module_from_json(v["W"], H.n))
        f = orbit_norm_function(g, gamma, W, H)
        window = H.window
    r = cgood_check(f, window, params, n_balls=int(s.get("n_balls", 1000)),
                    n_eps=int(s.get("n_eps", 16)), rng_seed=int(s.get("seed", 0)),
                    n_points=int(s.get("points", 1024)), threads=int(s.get("threads", 1)))
    return r.to_json(), VIOLATION if r.violations else PASS


def cmd_prop42_verify(s: Settings):
    H = _subgroup(s)
    g = _group_element(s)
    params = s.convert("C", lambda _: GoodnessParams(float(s.get("C")), float(s.get("alpha"))))
    eta = s.get("eta", None)
    eta = hypothesis_level(g, H).value if eta is None else s.convert("eta", textio.parse_entry)
    r = prop42_verify(g, H, eta, int(s.get("height", 10)), params, Z0=int(s.get("Z0", 1)),
                      grid_resolution=int(s.get("grid", 1000)))
    return r.to_json(), VIOLATION if r.outcome == "fail" else PASS


def cmd_xi_chain(s: Settings):
    W = s.convert("W", textio.module_from_json)
    Xi = s.convert("Xi", lambda v: [textio.matrix_from_json(X, "Xi entry") for X in v])
    g = s.convert("g", lambda v: textio.matrix_from_json(v, "g"), None)
    Z0 = s.get("Z0", None)
    try:
        c = xi_chain(W, Xi, g=g, Z0=None if Z0 is None else int(Z0))
    except ValueError as exc:
        raise s.error("Xi", str(exc)) from None
    return c.to_json(), PASS if c.holds else VIOLATION


def cmd_km_escape(s: Settings):
    H = _subgroup(s)
    g = _group_element(s)
    gamma = s.convert("gamma", lambda v: textio.matrix_from_json(v, "gamma"), None)
    r = km_escape_experiment(H, g, gamma, samples=int(s.get("samples", 10_000)),
                             threshold=float(s.get("threshold", 0.1)), seed=int(s.get("seed", 0)),
                             threads=int(s.get("threads", 1)))
    csv = s.get("csv", None)
    if csv:
        Path(csv).write_text(r.histogram_csv())
    return r.to_json(), PASS


def cmd_fuzz_submodularity(s: Settings):
    r = fuzz_submodularity(int(s.get("n")), pairs=int(s.get("pairs", 10_000)),
                           seed=int(s.get("seed", 0)), threads=int(s.get("threads", 1)))
    return r.to_json(), PASS if r.passed else VIOLATION


def _weighted_vector(s: Settings) -> WeightedVector:
    n = int(s.get("n"))

    def parse(v):
        parts = v if isinstance(v, list) else [v]
        return WeightedVector(tuple(textio.vector_from_json(p, n) for p in parts))

    return s.convert("vector", parse)


def cmd_instability(s: Settings):
    v = _weighted_vector(s)
    if v.is_zero:
        raise s.error("vector", "zero vector")
    b = torus_instability(v)
    out = {"unstable": b is not None}
    if b is not None:
        out["cocharacter"] = list(b.weights)
        out["contraction_at_1e3"] = contract_ratio(v, b, 1e3)
    else:
        cert = stability_certificate(v)
        out["hull_certificate"] = {"weights": [list(w) for w, _ in cert.coefficients],
                                   "coefficients": [c for _, c in cert.coefficients],
                                   "level": cert.level}
    deg = s.get("max_degree", None)
    if deg is not None:
        gens = zero_weight_monomials(v.coordinate_weights(), int(deg))
        out["invariants_vanish"] = invariant_vanish_test(v, gens)
        out["agrees"] = out["invariants_vanish"] == out["unstable"]
    return out, VIOLATION if out.get("agrees") is False else PASS


def cmd_flag_cochar(s: Settings):
    mats = s.convert("matrices", lambda v: [textio.matrix_from_json(X, "matrices entry") for X in v])
    try:
        b = flag_cocharacter(mats)
    except ValueError as exc:
        raise s.error("matrices", str(exc)) from None
    out = {"cocharacter": list(b.weights)}
    if s.get("perturb", False):
        out["generic"] = list(generic_perturbation(b).weights)
    return out, PASS


def cmd_embed_check(s: Settings):
    m, N = int(s.get("m")), int(s.get("N"))
    conj = s.convert("conj", lambda v: np.asarray(textio.matrix_from_json(v, "conj"), dtype=float), None)
    emb = s.convert("N", lambda _: Embedding(m, N, offset=int(s.get("offset", 0)),
                                             copies=int(s.get("copies", 1)), conj=conj))
    a = s.convert("cocharacter", lambda v: Cocharacter.parse(v) if isinstance(v, str)
                  else Cocharacter(tuple(v)))
    tol = float(s.get("tol", 1e-8))
    seed, samples = int(s.get("seed", 0)), int(s.get("samples", 100))
    worst, rows = 0.0, []
    for i in range(samples):
        g = random_sl(m, np.random.default_rng([seed, i, 2]))
        r = embedding_compatibility_check(g, emb, a, tol)
        worst = max(worst, r.max_deviation)
    return {"samples": samples, "max_deviation": worst, "tolerance": tol,
            "passed": worst < tol}, PASS if worst < tol else VIOLATION


COMMANDS = {
    "decompose": (cmd_decompose, "horospherical coordinates of g for a standard parabolic"),
    "relative-check": (cmd_relative_check, "compare coordinates for P and P_I"),
    "siegel-reduce": (cmd_siegel_reduce, "move g into a standard Siegel set"),
    "boundary-classify": (cmd_boundary_classify, "classify a trajectory's boundary limit"),
    "delta": (cmd_delta, "nondivergence function over H-stable subspaces"),
    "stable-subspaces": (cmd_stable_subspaces, "list the H-stable rational subspaces"),
    "cgood-check": (cmd_cgood_check, "empirical (C, alpha)-goodness search"),
    "prop42-verify": (cmd_prop42_verify, "enumerate primitive W and check the sup bound"),
    "xi-chain": (cmd_xi_chain, "build a xi-chain and check the telescoping inequality"),
    "km-escape": (cmd_km_escape, "shortest-vector escape experiment"),
    "fuzz-submodularity": (cmd_fuzz_submodularity, "random exact submodularity checks"),
    "instability": (cmd_instability, "torus instability via LP with hull certificate"),
    "flag-cochar": (cmd_flag_cochar, "cocharacter contracting a unipotent radical"),
    "embed-check": (cmd_embed_check, "coordinate compatibility under a block embedding"),
}

# flags shared by most commands, mapped to config keys
_FLAGS = [
    ("--seed", int, "seed"), ("--threads", int, "threads"), ("--samples", int, "samples"),
    ("--n", int, "n"), ("--pairs", int, "pairs"), ("--matrix", str, "matrix"),
    ("--composition", str, "composition"), ("--I", str, "I"), ("--threshold", float, "threshold"),
    ("--trajectory", str, "trajectory_file"), ("--height", int, "height"), ("--grid", int, "grid"),
    ("--csv", str, "csv"), ("--tol", float, "tol"), ("--n-balls", int, "n_balls"),
]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nondiv", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="write the report here instead of stdout")
        for flag, typ, dest in _FLAGS:
            sp.add_argument(flag, type=typ, dest=dest, default=None)
    return p


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    overrides = {dest: getattr(args, dest) for _, _, dest in _FLAGS}
    try:
        cfg = textio.load_config(args.config) if args.config else {"__source__": "<args>"}
        report, code = fn(Settings(cfg, overrides))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except (ValueError, KeyError, TypeError) as exc:
        src = args.config or "<args>"
        print(f"error: {src}:1: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    text = textio.dumps({"command": args.command, **report})
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
